use num_complex::Complex64;

use super::{Jet, JetDomain};
use crate::error::{Error, Result};

/// Jet coefficients on the full hypercube `0..=order` in every variable.
///
/// Plain row-major storage with no truncation tables; used as an
/// independent reference for the graded jet arithmetic.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseJet {
    nvars: usize,
    order: usize,
    data: Vec<Complex64>,
}

impl DenseJet {
    pub fn zeros(nvars: usize, order: usize) -> DenseJet {
        DenseJet {
            nvars,
            order,
            data: vec![Complex64::new(0.0, 0.0); (order + 1).pow(nvars as u32)],
        }
    }

    pub fn from_jet(jet: &Jet) -> DenseJet {
        let order = jet.order().max(0) as usize;
        let mut out = DenseJet::zeros(jet.nvars(), order);
        for (e, c) in jet.terms() {
            let idx = out.flat(e);
            out.data[idx] = c;
        }
        out
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn flat(&self, exps: &[u8]) -> usize {
        exps.iter()
            .fold(0, |acc, &e| acc * (self.order + 1) + e as usize)
    }

    fn unflat(&self, mut idx: usize) -> Vec<u8> {
        let mut e = vec![0u8; self.nvars];
        for v in (0..self.nvars).rev() {
            e[v] = (idx % (self.order + 1)) as u8;
            idx /= self.order + 1;
        }
        e
    }

    pub fn get(&self, exps: &[u8]) -> Complex64 {
        if exps.iter().any(|&e| e as usize > self.order) {
            return Complex64::new(0.0, 0.0);
        }
        self.data[self.flat(exps)]
    }

    pub fn set(&mut self, exps: &[u8], value: Complex64) {
        let idx = self.flat(exps);
        self.data[idx] = value;
    }

    /// Zeroes every entry of total degree above the order.
    pub fn truncate_total_degree(&mut self) {
        for i in 0..self.data.len() {
            let deg: usize = self.unflat(i).iter().map(|&e| e as usize).sum();
            if deg > self.order {
                self.data[i] = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn add(&self, other: &DenseJet) -> DenseJet {
        assert_eq!((self.nvars, self.order), (other.nvars, other.order));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    /// Full hypercube convolution, then truncation to total degree `order`.
    pub fn convolve(&self, other: &DenseJet) -> DenseJet {
        assert_eq!((self.nvars, self.order), (other.nvars, other.order));
        let mut out = DenseJet::zeros(self.nvars, self.order);
        for i in 0..self.data.len() {
            if self.data[i] == Complex64::new(0.0, 0.0) {
                continue;
            }
            let ei = self.unflat(i);
            for j in 0..other.data.len() {
                let ej = other.unflat(j);
                let sum: Vec<u8> = ei.iter().zip(&ej).map(|(a, b)| a + b).collect();
                if sum.iter().any(|&e| e as usize > self.order) {
                    continue;
                }
                let k = out.flat(&sum);
                out.data[k] += self.data[i] * other.data[j];
            }
        }
        out.truncate_total_degree();
        out
    }

    /// Back to a graded jet in `domain` (entries above the domain order must vanish).
    pub fn to_jet(&self, domain: &JetDomain) -> Result<Jet> {
        if domain.nvars() != self.nvars {
            return Err(Error::Incompatible("dense jet variable count".into()));
        }
        let terms = (0..self.data.len())
            .filter(|&i| self.data[i] != Complex64::new(0.0, 0.0))
            .map(|i| (self.unflat(i), self.data[i]));
        domain.from_terms(terms)
    }

    pub fn max_diff(&self, other: &DenseJet) -> f64 {
        let order = self.order.min(other.order);
        let mut worst: f64 = 0.0;
        for i in 0..self.data.len() {
            let e = self.unflat(i);
            if e.iter().map(|&x| x as usize).sum::<usize>() > order {
                continue;
            }
            worst = worst.max((self.data[i] - other.get(&e)).norm());
        }
        worst
    }
}
