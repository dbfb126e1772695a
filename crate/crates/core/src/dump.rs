//! JSON layout of symbol dumps, the hand-off between forward and recovery runs.
//!
//! A coefficient is stored as `[[e_1, .., e_k], re, im]`. Floats are written in
//! the shortest decimal form that parses back to the same `f64`, so reading a
//! dump reproduces every coefficient bit for bit.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::{Jet, JetDomain, JetMatrix};
use crate::symbols::{SymbolMatrix, SymbolSequence};

pub const SYMBOLS_SCHEMA: &str = "stokes-dtn/symbols/v1";

/// `(multi-index, real part, imaginary part)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficient(pub Vec<u8>, pub f64, pub f64);

/// A jet: its trunc order and nonzero coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JetRecord {
    pub order: i32,
    pub terms: Vec<Coefficient>,
}

impl JetRecord {
    pub fn from_jet(j: &Jet) -> JetRecord {
        JetRecord {
            order: j.order(),
            terms: j
                .terms()
                .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
                .map(|(e, c)| Coefficient(e.to_vec(), c.re, c.im))
                .collect(),
        }
    }

    /// Rebuilds the jet in `domain`, truncated to the recorded order.
    pub fn to_jet(&self, domain: &JetDomain) -> Result<Jet> {
        if self.order > domain.order() {
            return Err(Error::Io(format!(
                "jet of order {} does not fit a domain of order {}",
                self.order,
                domain.order()
            )));
        }
        let j = domain.with_order(self.order).from_terms(
            self.terms
                .iter()
                .map(|Coefficient(e, re, im)| (e.clone(), Complex64::new(*re, *im))),
        )?;
        Ok(j)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolRecord {
    pub degree: i32,
    pub trustworthy_order: i32,
    /// Row-major `(n+1) x (n+1)` entries.
    pub entries: Vec<JetRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionRecord {
    /// Base cotangent direction `xi_0`, unit length in the metric at the origin.
    pub xi: Vec<f64>,
    /// `q_1, q_0, ..., q_{1-D}`.
    pub symbols: Vec<SymbolRecord>,
}

/// Symbols of one forward run.
///
/// Symbol jets live in the variables `(x_1..x_n, xi_1..xi_{n-1})` around
/// `(0, xi)`; `mu` lives in `x_1..x_n` around the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolDump {
    pub schema: String,
    pub n: usize,
    pub depth: usize,
    pub jet_order: usize,
    pub mu: JetRecord,
    pub directions: Vec<DirectionRecord>,
}

impl SymbolDump {
    pub fn new(n: usize, depth: usize, jet_order: usize, mu: &Jet, seqs: &[SymbolSequence]) -> SymbolDump {
        SymbolDump {
            schema: SYMBOLS_SCHEMA.to_string(),
            n,
            depth,
            jet_order,
            mu: JetRecord::from_jet(mu),
            directions: seqs
                .iter()
                .map(|s| DirectionRecord {
                    xi: s.direction.clone(),
                    symbols: s
                        .symbols
                        .iter()
                        .map(|q| SymbolRecord {
                            degree: q.degree,
                            trustworthy_order: q.trustworthy_order(),
                            entries: q.entries.entries().iter().map(JetRecord::from_jet).collect(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn x_domain(&self) -> JetDomain {
        JetDomain::origin(self.n, self.jet_order)
    }

    pub fn mu(&self) -> Result<Jet> {
        self.mu.to_jet(&self.x_domain())
    }

    /// Rebuilds the symbol sequences.
    pub fn sequences(&self) -> Result<Vec<SymbolSequence>> {
        self.check()?;
        let dim = self.n + 1;
        self.directions
            .iter()
            .map(|d| {
                let mut base = vec![0.0; self.n];
                base.extend_from_slice(&d.xi);
                let domain = JetDomain::new(base, self.jet_order);
                let symbols = d
                    .symbols
                    .iter()
                    .map(|s| {
                        let jets = s
                            .entries
                            .iter()
                            .map(|e| e.to_jet(&domain))
                            .collect::<Result<Vec<_>>>()?;
                        let mut it = jets.into_iter();
                        let entries = JetMatrix::from_fn(dim, dim, |_, _| it.next().expect("checked size"));
                        Ok(SymbolMatrix {
                            entries,
                            degree: s.degree,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let residual_order_achieved = symbols
                    .iter()
                    .map(SymbolMatrix::trustworthy_order)
                    .min()
                    .unwrap_or(-1);
                Ok(SymbolSequence {
                    direction: d.xi.clone(),
                    depth: self.depth,
                    symbols,
                    residual_order_achieved,
                })
            })
            .collect()
    }

    fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Io(format!("malformed symbol dump: {m}")));
        if self.schema != SYMBOLS_SCHEMA {
            return bad(format!("schema \"{}\", expected \"{SYMBOLS_SCHEMA}\"", self.schema));
        }
        if self.n < 2 {
            return bad(format!("n = {}", self.n));
        }
        let dim = self.n + 1;
        for d in &self.directions {
            if d.xi.len() != self.n - 1 {
                return bad(format!("direction {:?} has wrong length", d.xi));
            }
            if d.symbols.len() != self.depth + 1 {
                return bad(format!("{} symbols for depth {}", d.symbols.len(), self.depth));
            }
            for (i, s) in d.symbols.iter().enumerate() {
                if s.degree != 1 - i as i32 || s.entries.len() != dim * dim {
                    return bad(format!("symbol {i} has degree {} and {} entries", s.degree, s.entries.len()));
                }
                let nvars = 2 * self.n - 1;
                if s.entries.iter().flat_map(|e| &e.terms).any(|c| c.0.len() != nvars) {
                    return bad(format!("symbol q_{} has multi-indices of the wrong length", s.degree));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<SymbolDump> {
        let d: SymbolDump = serde_json::from_str(text)?;
        d.check()?;
        Ok(d)
    }

    pub fn read(path: &Path) -> Result<SymbolDump> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        SymbolDump::from_json(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_json()?)
    }
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
