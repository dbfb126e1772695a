//! Scenario configuration and deterministic generation of metrics, viscosities
//! and test fields.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundaryNormalMetric;
use crate::jets::{Jet, JetDomain, JetMatrix};

pub const CONFIG_SCHEMA: &str = "stokes-dtn/config/v1";

/// One Taylor coefficient: `value * x^exponents` (exponents over `x_1..x_n`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub exponents: Vec<u8>,
    pub value: f64,
}

/// One coefficient of the inverse metric entry `g^{row,col}` (0-based, tangential).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricTerm {
    pub row: usize,
    pub col: usize,
    pub exponents: Vec<u8>,
    pub value: f64,
}

/// Tangential block `g^{ab}` of the inverse metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSource {
    /// `g^{ab} = delta^{ab}`.
    Flat,
    /// `g^{ab} = a(x) delta^{ab}` with `a` given by its Taylor terms.
    Conformal { factor: Vec<Term> },
    /// `g^{aa} = 1 + random jet`, off-diagonal zero.
    Diagonal {
        amplitude: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// `g^{ab} = delta^{ab} + P^{ab}` with `P` a random symmetric jet.
    Random {
        amplitude: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// Explicit coefficients; entries below the diagonal are mirrored.
    Table { terms: Vec<MetricTerm> },
}

/// Viscosity `mu`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MuSource {
    Constant { value: f64 },
    Table { terms: Vec<Term> },
    /// `mu = 1 + random jet` with every coefficient bounded by `amplitude < 1`.
    Random {
        amplitude: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
}

impl Default for MuSource {
    fn default() -> Self {
        MuSource::Constant { value: 1.0 }
    }
}

/// Cotangent directions sampled for recovery.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionSet {
    /// `e_a` and `e_a + e_b` (a < b): exactly `n(n-1)/2` directions.
    #[default]
    Minimal,
    /// The minimal set plus extra seeded directions, `count` in total.
    Oversampled(usize),
}

/// Either `"auto"` or an explicit jet order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum JetOrder {
    #[default]
    Auto,
    Fixed(usize),
}

impl Serialize for JetOrder {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            JetOrder::Auto => s.serialize_str("auto"),
            JetOrder::Fixed(k) => s.serialize_u64(*k as u64),
        }
    }
}

impl<'de> Deserialize<'de> for JetOrder {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(usize),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(k) => Ok(JetOrder::Fixed(k)),
            Raw::Text(s) if s == "auto" => Ok(JetOrder::Auto),
            Raw::Text(s) => Err(serde::de::Error::custom(format!(
                "jet_order must be \"auto\" or an integer, got \"{s}\""
            ))),
        }
    }
}

/// Pass/fail thresholds; all relative to `max(1, |reference|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub transformation: f64,
    pub residual: f64,
    pub homogeneity: f64,
    pub recovery: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            transformation: 1e-10,
            residual: 1e-9,
            homogeneity: 1e-10,
            recovery: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    /// Directory for dumps and reports.
    pub dir: Option<PathBuf>,
    /// Symbol dump read by `recover` (defaults to `<dir>/symbols.json`).
    pub symbols: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_schema")]
    pub schema: String,
    pub n: usize,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default)]
    pub jet_order: JetOrder,
    /// Tangential order requested for the deepest recovered derivative (used by `auto`).
    #[serde(default)]
    pub tangential_order: usize,
    #[serde(default)]
    pub seed: u64,
    pub metric: MetricSource,
    #[serde(default)]
    pub mu: MuSource,
    #[serde(default)]
    pub directions: DirectionSet,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputPaths,
}

fn default_schema() -> String {
    CONFIG_SCHEMA.to_string()
}

fn default_depth() -> usize {
    1
}

/// Jet order needed to reach normal order `depth` with `tangential` orders of
/// tangential derivatives left over.
///
/// Normal order `r` comes back with `K - r` trustworthy tangential orders, and
/// the forward recursion wants two orders of headroom.
pub fn required_jet_order(depth: usize, tangential: usize) -> usize {
    depth + 2 + tangential
}

/// Smallest explicit jet order accepted for a run of the given depth.
pub fn minimum_jet_order(depth: usize) -> usize {
    depth + 2
}

impl ScenarioConfig {
    pub fn flat(n: usize, depth: usize) -> ScenarioConfig {
        ScenarioConfig {
            schema: default_schema(),
            n,
            depth,
            jet_order: JetOrder::Auto,
            tangential_order: 0,
            seed: 0,
            metric: MetricSource::Flat,
            mu: MuSource::default(),
            directions: DirectionSet::Minimal,
            tolerances: Tolerances::default(),
            output: OutputPaths::default(),
        }
    }

    /// Random metric and viscosity of moderate amplitude.
    pub fn random(n: usize, depth: usize, seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            seed,
            metric: MetricSource::Random {
                amplitude: 0.2,
                seed: None,
            },
            mu: MuSource::Random {
                amplitude: 0.2,
                seed: None,
            },
            ..ScenarioConfig::flat(n, depth)
        }
    }

    /// The jet order actually used.
    pub fn jet_order(&self) -> usize {
        match self.jet_order {
            JetOrder::Fixed(k) => k,
            JetOrder::Auto => required_jet_order(self.depth, self.tangential_order),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: String| {
            Err(Error::Config {
                field: field.into(),
                message,
            })
        };
        if self.schema != CONFIG_SCHEMA {
            return bad("schema", format!("expected \"{CONFIG_SCHEMA}\", got \"{}\"", self.schema));
        }
        if self.n < 2 {
            return bad("n", format!("n >= 2 required, got {}", self.n));
        }
        if self.n > 6 {
            return bad("n", format!("n <= 6 supported, got {}", self.n));
        }
        if let JetOrder::Fixed(k) = self.jet_order {
            let need = minimum_jet_order(self.depth);
            if k < need {
                return bad(
                    "jet_order",
                    format!("depth {} needs jet order K >= {need}, got {k}", self.depth),
                );
            }
        }
        if self.jet_order() > 40 {
            return bad("jet_order", format!("jet order {} too large", self.jet_order()));
        }
        let check_terms = |field: &str, terms: &[Term]| -> Result<()> {
            for t in terms {
                if t.exponents.len() != self.n {
                    return bad(
                        field,
                        format!("exponents {:?} must have n = {} entries", t.exponents, self.n),
                    );
                }
            }
            Ok(())
        };
        match &self.metric {
            MetricSource::Flat => {}
            MetricSource::Conformal { factor } => check_terms("metric.factor", factor)?,
            MetricSource::Diagonal { amplitude, .. } | MetricSource::Random { amplitude, .. } => {
                if !(0.0..0.5).contains(amplitude) {
                    return bad("metric.amplitude", format!("must lie in [0, 0.5), got {amplitude}"));
                }
            }
            MetricSource::Table { terms } => {
                for t in terms {
                    if t.row >= self.n - 1 || t.col >= self.n - 1 {
                        return bad(
                            "metric.terms",
                            format!("entry ({}, {}) outside the tangential block", t.row, t.col),
                        );
                    }
                    if t.exponents.len() != self.n {
                        return bad(
                            "metric.terms",
                            format!("exponents {:?} must have n = {} entries", t.exponents, self.n),
                        );
                    }
                }
            }
        }
        match &self.mu {
            MuSource::Constant { value } => {
                if !(*value > 0.0) {
                    return bad("mu.value", format!("viscosity must be positive, got {value}"));
                }
            }
            MuSource::Table { terms } => check_terms("mu.terms", terms)?,
            MuSource::Random { amplitude, .. } => {
                if !(0.0..1.0).contains(amplitude) {
                    return bad("mu.amplitude", format!("must lie in [0, 1), got {amplitude}"));
                }
            }
        }
        if let DirectionSet::Oversampled(count) = self.directions {
            let minimal = self.n * (self.n - 1) / 2;
            if count < minimal {
                return bad(
                    "directions",
                    format!("oversampled count {count} below the minimal {minimal}"),
                );
            }
        }
        let tol = &self.tolerances;
        for (name, v) in [
            ("tolerances.transformation", tol.transformation),
            ("tolerances.residual", tol.residual),
            ("tolerances.homogeneity", tol.homogeneity),
            ("tolerances.recovery", tol.recovery),
        ] {
            if !(v > 0.0) {
                return bad(name, format!("must be positive, got {v}"));
            }
        }
        Ok(())
    }

    /// Domain of the metric jets: `x_1..x_n` at the origin.
    pub fn domain(&self) -> JetDomain {
        JetDomain::origin(self.n, self.jet_order())
    }
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| Error::Config {
        field: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Independent random streams derived from the scenario seed.
#[derive(Clone, Copy, Debug)]
pub enum Stream {
    Metric,
    Mu,
    Velocity,
    Potential,
    Directions,
}

pub fn rng(seed: u64, stream: Stream, entry: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(((stream as u64) << 32) | entry);
    r
}

/// Random jet: `constant + sum_{|e|>=1} c_e x^e` with `c_e` uniform in `[-amp, amp]`.
///
/// Coefficients are drawn in graded order, so raising the domain order keeps
/// every lower-order coefficient unchanged.
pub fn random_jet(domain: &JetDomain, rng: &mut ChaCha8Rng, constant: f64, amp: f64) -> Jet {
    domain.from_fn(|e| {
        let c = rng.random_range(-1.0..=1.0) * amp;
        if e.iter().all(|&x| x == 0) {
            Complex64::new(constant, 0.0)
        } else {
            Complex64::new(c, 0.0)
        }
    })
}

fn terms_jet(domain: &JetDomain, terms: &[Term]) -> Result<Jet> {
    domain.from_terms(terms.iter().map(|t| (t.exponents.clone(), t.value)))
}

pub fn generate_metric(cfg: &ScenarioConfig) -> Result<BoundaryNormalMetric> {
    let domain = cfg.domain();
    let m = cfg.n - 1;
    let identity = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    let tangential = match &cfg.metric {
        MetricSource::Flat => JetMatrix::identity(&domain, m),
        MetricSource::Conformal { factor } => {
            let a = terms_jet(&domain, factor)?;
            JetMatrix::scalar(&a, m)
        }
        MetricSource::Diagonal { amplitude, seed } => {
            let seed = seed.unwrap_or(cfg.seed);
            JetMatrix::from_fn(m, m, |i, j| {
                if i == j {
                    let mut r = rng(seed, Stream::Metric, i as u64);
                    let base = 1.0 + r.random_range(-1.0..=1.0) * amplitude;
                    random_jet(&domain, &mut r, base, *amplitude)
                } else {
                    domain.zero()
                }
            })
        }
        MetricSource::Random { amplitude, seed } => {
            let seed = seed.unwrap_or(cfg.seed);
            // Base values: delta + P0 with ||P0||_F <= amplitude < 1/2.
            let mut base = vec![0.0; m * m];
            let mut r = rng(seed, Stream::Metric, u32::MAX as u64);
            for i in 0..m {
                for j in i..m {
                    let v = r.random_range(-1.0..=1.0);
                    base[i * m + j] = v;
                    base[j * m + i] = v;
                }
            }
            let frob = base.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
            JetMatrix::from_fn(m, m, |i, j| {
                let (a, b) = if i <= j { (i, j) } else { (j, i) };
                let mut r = rng(seed, Stream::Metric, (a * m + b) as u64);
                let b0 = identity(a, b) + amplitude * base[a * m + b] / frob;
                random_jet(&domain, &mut r, b0, *amplitude)
            })
        }
        MetricSource::Table { terms } => {
            let mut t = JetMatrix::zeros(&domain, m, m);
            for term in terms {
                let single = domain.from_terms([(term.exponents.clone(), term.value)])?;
                let (a, b) = (term.row, term.col);
                *t.get_mut(a, b) += &single;
                if a != b {
                    *t.get_mut(b, a) += &single;
                }
            }
            t
        }
    };
    let mu = generate_mu(cfg, &domain)?;
    BoundaryNormalMetric::new(tangential, mu)
}

pub fn generate_mu(cfg: &ScenarioConfig, domain: &JetDomain) -> Result<Jet> {
    match &cfg.mu {
        MuSource::Constant { value } => Ok(domain.constant(*value)),
        MuSource::Table { terms } => terms_jet(domain, terms),
        MuSource::Random { amplitude, seed } => {
            let mut r = rng(seed.unwrap_or(cfg.seed), Stream::Mu, 0);
            let base = 1.0 + r.random_range(0.0..=1.0) * amplitude;
            Ok(random_jet(domain, &mut r, base, *amplitude))
        }
    }
}

/// Random transformed unknowns `(w, f)` for the transformation check.
pub fn generate_fields(cfg: &ScenarioConfig, domain: &JetDomain) -> (Vec<Jet>, Jet) {
    let w = (0..cfg.n)
        .map(|j| {
            let mut r = rng(cfg.seed, Stream::Velocity, j as u64);
            let base = r.random_range(-1.0..=1.0);
            random_jet(domain, &mut r, base, 1.0)
        })
        .collect();
    let mut r = rng(cfg.seed, Stream::Potential, 0);
    let f = random_jet(domain, &mut r, 0.5, 1.0);
    (w, f)
}
