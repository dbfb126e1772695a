//! Boundary recovery of the metric from the symbol sequences.
//!
//! Order 0 comes from `q_1^2 = g^{ab} xi_a xi_b`. For `r >= 1` the symbols of
//! a reference extension (known normal derivatives below `r`, zero from `r`
//! on) are subtracted, which leaves a trace difference
//!
//! `tr q_{1-r} - tr q~_{1-r} = -k_r(xi, xi) / (2|xi|)^{r+1}`,
//! `k_r = (n+3) h_r g - (n+2r-1) d_n^r g`, `h_r = g_{ab} d_n^r g^{ab}`.
//!
//! When `n^2+n-2r-2 = 0` the trace does not see `d_n^r g` and the whole matrix
//! `q_{2-r}` is fitted against its linear response to `d_n^r g` instead.
//! All fits run in the algebra of tangential jets, so every recovered tensor
//! carries its tangential derivatives.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dump::JetRecord;
use crate::error::{Error, Result};
use crate::geometry::{BoundaryNormalMetric, Geometry};
use crate::jets::{rel_diff, Jet, JetDomain, JetMatrix};
use crate::stokes::assemble;
use crate::scenario::{rng, DirectionSet, Stream};
use crate::symbols::{
    homogeneity_defect, normalize_direction, run_recursion, ForwardRun, SymbolSequence, SymbolSpace,
};

/// Raw sampling directions: `e_a`, then `(e_a + e_b)/sqrt 2` for `a < b`.
pub fn minimal_directions(m: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for a in 0..m {
        let mut v = vec![0.0; m];
        v[a] = 1.0;
        out.push(v);
    }
    for a in 0..m {
        for b in a + 1..m {
            let mut v = vec![0.0; m];
            v[a] = std::f64::consts::FRAC_1_SQRT_2;
            v[b] = std::f64::consts::FRAC_1_SQRT_2;
            out.push(v);
        }
    }
    out
}

/// Raw directions for a direction set; oversampled extras are seeded unit
/// vectors drawn uniformly on the sphere.
pub fn sample_directions(set: DirectionSet, m: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = minimal_directions(m);
    if let DirectionSet::Oversampled(count) = set {
        let mut r = rng(seed, Stream::Directions, 0);
        while out.len() < count {
            let v: Vec<f64> = (0..m).map(|_| r.random_range(-1.0..=1.0)).collect();
            let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if len > 0.1 && len <= 1.0 {
                out.push(v.iter().map(|x| x / len).collect());
            }
        }
    }
    out
}

/// Symbol sequences of `metric` along each raw direction, normalized with the
/// metric at the origin.
pub fn forward_symbols(metric: &BoundaryNormalMetric, raw: &[Vec<f64>], depth: usize) -> Result<Vec<SymbolSequence>> {
    let dirs = raw
        .iter()
        .map(|d| normalize_direction(metric, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(forward_runs(metric, &dirs, depth)?
        .into_iter()
        .map(|r| r.sequence)
        .collect())
}

/// Number of independent entries of a symmetric `m x m` tensor.
pub fn symmetric_count(m: usize) -> usize {
    m * (m + 1) / 2
}

fn symmetric_pairs(m: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..m {
        for b in a..m {
            out.push((a, b));
        }
    }
    out
}

/// Values `k(xi, xi)` sampled at directions, as tangential jets.
#[derive(Clone, Debug)]
pub struct QuadraticFormSample {
    pub directions: Vec<Vec<f64>>,
    pub values: Vec<Jet>,
}

/// A fitted symmetric tensor and how well it reproduces the samples.
#[derive(Clone, Debug)]
pub struct QuadraticFit {
    pub tensor: JetMatrix,
    /// Largest coefficientwise misfit relative to `max(1, |value|)`.
    pub misfit: f64,
}

/// Least-squares fit of the symmetric `k` with `k^{ab} xi_a xi_b = value` at
/// every sampled direction, coefficient by coefficient.
pub fn extract_quadratic_form(sample: &QuadraticFormSample) -> Result<QuadraticFit> {
    let dirs = &sample.directions;
    if dirs.is_empty() || dirs.len() != sample.values.len() {
        return Err(Error::RankDeficient("no samples".into()));
    }
    let m = dirs[0].len();
    let pairs = symmetric_pairs(m);
    let p = pairs.len();
    if dirs.len() < p {
        return Err(Error::RankDeficient(format!(
            "{} directions for {p} unknowns",
            dirs.len()
        )));
    }
    let design = DMatrix::from_fn(dirs.len(), p, |d, k| {
        let (a, b) = pairs[k];
        let w = dirs[d][a] * dirs[d][b];
        if a == b {
            w
        } else {
            2.0 * w
        }
    });
    let svd = design.clone().svd(true, true);
    let sv = &svd.singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > 1e-10 * smax) {
        return Err(Error::RankDeficient(format!(
            "singular values {smin:e} .. {smax:e}"
        )));
    }
    let pinv = svd
        .pseudo_inverse(1e-12 * smax)
        .map_err(|e| Error::RankDeficient(e.to_string()))?;
    let coeff = |row: &[f64]| -> Jet {
        let mut acc = sample.values[0].scale(row[0]);
        for (v, &w) in sample.values.iter().zip(row).skip(1) {
            acc += v.scale(w);
        }
        acc
    };
    let fitted: Vec<Jet> = (0..p)
        .map(|k| {
            let row: Vec<f64> = (0..dirs.len()).map(|d| pinv[(k, d)]).collect();
            coeff(&row)
        })
        .collect();
    let mut misfit: f64 = 0.0;
    for (d, value) in sample.values.iter().enumerate() {
        let row: Vec<f64> = (0..p).map(|k| design[(d, k)]).collect();
        let mut model = fitted[0].scale(row[0]);
        for (f, &w) in fitted.iter().zip(&row).skip(1) {
            model += f.scale(w);
        }
        misfit = misfit.max(rel_diff(&model, value));
    }
    let zero = sample.values[0].domain().zero();
    let mut tensor = JetMatrix::from_fn(m, m, |_, _| zero.clone());
    for (k, &(a, b)) in pairs.iter().enumerate() {
        tensor.set(a, b, fitted[k].clone());
        tensor.set(b, a, fitted[k].clone());
    }
    Ok(QuadraticFit { tensor, misfit })
}

/// How an order was recovered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Square of the principal symbol.
    PrincipalSymbol,
    /// Trace difference of `q_{1-r}` with the closed-form constants.
    Trace,
    /// Linear response of the whole matrix `q_{2-r}`.
    ResponseFit,
}

/// Closed-form constants of the trace relation at normal order `r >= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceConstants {
    /// Coefficient of `h_r g` in `k_r`: `n + 3`.
    pub a: f64,
    /// Coefficient of `d_n^r g` in `k_r`: `n + 2r - 1`.
    pub c: f64,
    /// `k_r^{ab} g_{ab} = denominator * h_r`: `n^2 + n - 2r - 2`.
    pub denominator: f64,
}

impl TraceConstants {
    pub fn new(n: usize, r: usize) -> TraceConstants {
        let (n, r) = (n as f64, r as f64);
        let a = n + 3.0;
        let c = n + 2.0 * r - 1.0;
        TraceConstants {
            a,
            c,
            denominator: a * (n - 1.0) - c,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.denominator == 0.0
    }
}

/// Constants of the published trace relations, reported for comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PublishedConstants {
    /// `n^2 + n - 4`, denominator at normal order 1.
    pub first_order_denominator: i64,
    /// `n^2 + 3n - 6`, denominator stated for normal orders `>= 2`.
    pub higher_order_denominator: i64,
    /// `(n+3, n+1)` at order 1.
    pub first_order: (i64, i64),
    /// `(n+5, n+1)` stated for orders `>= 2`.
    pub higher_order: (i64, i64),
}

impl PublishedConstants {
    pub fn new(n: usize) -> PublishedConstants {
        let n = n as i64;
        PublishedConstants {
            first_order_denominator: n * n + n - 4,
            higher_order_denominator: n * n + 3 * n - 6,
            first_order: (n + 3, n + 1),
            higher_order: (n + 5, n + 1),
        }
    }
}

/// One recovered normal order.
#[derive(Clone, Debug)]
pub struct RecoveredOrder {
    pub order: usize,
    pub method: Method,
    /// `d_n^r g^{ab}` on the boundary, as jets in `x'`.
    pub tensor: JetMatrix,
    pub trustworthy_order: i32,
    pub constants: Option<TraceConstants>,
    pub misfit: f64,
    /// Largest imaginary coefficient before taking the real part.
    pub max_imag: f64,
    /// Largest `|T^{ab} - T^{ba}|` before symmetrization.
    pub asymmetry: f64,
    /// Euler defect of the trace differences at degree `1 - r`.
    pub homogeneity_defect: Option<f64>,
    /// Coefficientwise difference between trace and response-fit results.
    pub cross_check: Option<f64>,
}

/// Inputs shared by every order.
pub struct RecoveryInput<'a> {
    pub n: usize,
    pub depth: usize,
    pub x_domain: JetDomain,
    pub mu: Jet,
    pub sequences: &'a [SymbolSequence],
}

/// Tangential domain `x_1..x_{n-1}` at the origin.
pub fn boundary_domain(n: usize, order: usize) -> JetDomain {
    JetDomain::origin(n - 1, order)
}

fn symbol_space(input: &RecoveryInput, seq: &SymbolSequence) -> Result<SymbolSpace> {
    SymbolSpace::new(&input.x_domain, &seq.direction)
}

/// Restriction of a symbol jet to `x_n = 0, xi = xi_0`.
fn on_boundary(space: &SymbolSpace, j: &Jet, boundary: &JetDomain) -> Result<Jet> {
    space.boundary_value(j, boundary)
}

/// `g^{ab}` on the boundary from the scalar part of `q_1`.
pub fn recover_metric_0(input: &RecoveryInput, boundary: &JetDomain) -> Result<RecoveredOrder> {
    let mut values = Vec::new();
    let mut dirs = Vec::new();
    for seq in input.sequences {
        let space = symbol_space(input, seq)?;
        let s = on_boundary(&space, seq.q(1).get(0, 0), boundary)?;
        values.push(&s * &s);
        dirs.push(seq.direction.clone());
    }
    let fit = extract_quadratic_form(&QuadraticFormSample {
        directions: dirs,
        values,
    })?;
    finish(0, Method::PrincipalSymbol, fit.tensor, fit.misfit, None, None, None)
}

fn finish(
    order: usize,
    method: Method,
    raw: JetMatrix,
    misfit: f64,
    constants: Option<TraceConstants>,
    homogeneity: Option<f64>,
    cross_check: Option<f64>,
) -> Result<RecoveredOrder> {
    let m = raw.rows();
    let mut asymmetry: f64 = 0.0;
    for a in 0..m {
        for b in 0..m {
            asymmetry = asymmetry.max((raw.get(a, b) - raw.get(b, a)).max_norm());
        }
    }
    let max_imag = raw.max_imag();
    let tensor = JetMatrix::from_fn(m, m, |a, b| {
        (raw.get(a, b) + raw.get(b, a)).scale(0.5).real_part()
    });
    Ok(RecoveredOrder {
        order,
        method,
        trustworthy_order: tensor.order(),
        tensor,
        constants,
        misfit,
        max_imag,
        asymmetry,
        homogeneity_defect: homogeneity,
        cross_check,
    })
}

/// Metric whose normal derivatives of order `< known.len()` on the boundary
/// are `known` and whose higher normal derivatives vanish.
pub fn reference_extension(known: &[JetMatrix], mu: &Jet) -> Result<BoundaryNormalMetric> {
    let domain = mu.domain();
    let n = domain.nvars();
    let m = n - 1;
    let k = domain.order();
    let order = known
        .iter()
        .enumerate()
        .map(|(s, t)| t.order() + s as i32)
        .fold(k, i32::min);
    if order < 0 {
        return Err(Error::OrderExhausted {
            what: "reference extension".into(),
            needed: 0,
            have: order,
        });
    }
    let target = domain.with_order(order);
    let tangential = JetMatrix::from_fn(m, m, |a, b| {
        let terms = known.iter().enumerate().flat_map(|(s, t)| {
            let fact: f64 = (1..=s).map(|v| v as f64).product();
            t.get(a, b).terms().map(move |(e, c)| {
                let mut full = e.to_vec();
                full.push(s as u8);
                (full, c / fact)
            })
        });
        target.from_terms(terms.collect::<Vec<_>>()).expect("matching variable count")
    });
    BoundaryNormalMetric::new(tangential, mu.truncate(order))
}

/// Forward symbols of `metric` to `depth` at each direction (in parallel).
pub fn forward_runs(metric: &BoundaryNormalMetric, directions: &[Vec<f64>], depth: usize) -> Result<Vec<ForwardRun>> {
    let geo = Geometry::new(metric)?;
    let mats = assemble(&geo)?;
    directions
        .par_iter()
        .map(|d| run_recursion(metric, &mats, d, depth))
        .collect()
}

/// `sqrt(g^{ab}(x') xi_a xi_b)` on the boundary.
fn boundary_norm(g0: &JetMatrix, xi: &[f64]) -> Result<Jet> {
    let m = xi.len();
    let mut q = g0.get(0, 0).scale(xi[0] * xi[0]);
    for a in 0..m {
        for b in 0..m {
            if a + b > 0 {
                q += g0.get(a, b).scale(xi[a] * xi[b]);
            }
        }
    }
    q.sqrt()
}

fn lower_boundary_metric(g0: &JetMatrix) -> Result<JetMatrix> {
    g0.inverse()
}

fn contract(k: &JetMatrix, g_lower: &JetMatrix) -> Jet {
    let m = k.rows();
    let mut acc = k.get(0, 0) * g_lower.get(0, 0);
    for a in 0..m {
        for b in 0..m {
            if a + b > 0 {
                acc += k.get(a, b) * g_lower.get(a, b);
            }
        }
    }
    acc
}

/// `d_n^r g^{ab}` from the trace of `q_{1-r}` (`r >= 1`).
pub fn recover_by_trace(
    input: &RecoveryInput,
    known: &[JetMatrix],
    reference: &[ForwardRun],
    boundary: &JetDomain,
) -> Result<RecoveredOrder> {
    let r = known.len();
    let consts = TraceConstants::new(input.n, r);
    if consts.is_degenerate() {
        return Err(Error::RankDeficient(format!(
            "trace of q_{} does not determine normal order {r} when n = {}",
            1 - r as i32,
            input.n
        )));
    }
    let degree = 1 - r as i32;
    let g0 = &known[0];
    let mut values = Vec::new();
    let mut dirs = Vec::new();
    let mut homogeneity: f64 = 0.0;
    for (seq, refrun) in input.sequences.iter().zip(reference) {
        let space = symbol_space(input, seq)?;
        let diff = seq.q(degree).trace() - refrun.sequence.q(degree).trace();
        homogeneity = homogeneity.max(homogeneity_defect(&diff, degree, &space));
        let d = on_boundary(&space, &diff, boundary)?;
        let norm = boundary_norm(g0, &seq.direction)?;
        let factor = norm.scale(2.0).powi(r as u32 + 1);
        values.push(-(&factor * &d));
        dirs.push(seq.direction.clone());
    }
    let fit = extract_quadratic_form(&QuadraticFormSample {
        directions: dirs,
        values,
    })?;
    let k = fit.tensor;
    let g_lower = lower_boundary_metric(g0)?;
    let h = contract(&k, &g_lower).scale(1.0 / consts.denominator);
    let m = input.n - 1;
    let tensor = JetMatrix::from_fn(m, m, |a, b| {
        (&(&h * g0.get(a, b)).scale(consts.a) - k.get(a, b)).scale(1.0 / consts.c)
    });
    finish(r, Method::Trace, tensor, fit.misfit, Some(consts), Some(homogeneity), None)
}

/// `d_n^r g^{ab}` (`r >= 2`) from the linear response of the whole matrix `q_{2-r}`.
pub fn recover_by_response(
    input: &RecoveryInput,
    known: &[JetMatrix],
    reference: &[ForwardRun],
    boundary: &JetDomain,
) -> Result<RecoveredOrder> {
    let r = known.len();
    if r < 2 {
        return Err(Error::RankDeficient("response fit needs normal order >= 2".into()));
    }
    let degree = 2 - r as i32;
    let m = input.n - 1;
    let pairs = symmetric_pairs(m);
    let directions: Vec<Vec<f64>> = input.sequences.iter().map(|s| s.direction.clone()).collect();
    let base = reference_extension(known, &input.mu)?;
    let fact: f64 = (1..=r).map(|v| v as f64).product();
    // Response to a constant unit perturbation of each symmetric entry.
    let responses: Vec<Vec<ForwardRun>> = pairs
        .iter()
        .map(|&(a, b)| {
            let domain = base.domain().with_order(base.order());
            let mut e = vec![0u8; input.n];
            e[input.n - 1] = r as u8;
            let bump = domain.from_terms([(e, 1.0 / fact)])?;
            let mut t = base.tangential();
            *t.get_mut(a, b) += &bump;
            if a != b {
                *t.get_mut(b, a) += &bump;
            }
            let perturbed = BoundaryNormalMetric::new(t, input.mu.truncate(base.order()))?;
            forward_runs(&perturbed, &directions, (1 - degree) as usize)
        })
        .collect::<Result<_>>()?;

    // Normal equations sum conj(L_E) L_F H_F = sum conj(L_E) delta over directions and entries.
    let p = pairs.len();
    let zero = boundary.zero();
    let mut normal = JetMatrix::from_fn(p, p, |_, _| zero.clone());
    let mut rhs = vec![zero.clone(); p];
    for (d, seq) in input.sequences.iter().enumerate() {
        let space = symbol_space(input, seq)?;
        let q_ref = &reference[d].sequence.q(degree).entries;
        let delta = &seq.q(degree).entries - q_ref;
        let lin: Vec<JetMatrix> = responses
            .iter()
            .map(|runs| &runs[d].sequence.q(degree).entries - q_ref)
            .collect();
        for idx in 0..delta.entries().len() {
            let dv = on_boundary(&space, &delta.entries()[idx], boundary)?;
            let lv: Vec<Jet> = lin
                .iter()
                .map(|l| on_boundary(&space, &l.entries()[idx], boundary))
                .collect::<Result<_>>()?;
            for e in 0..p {
                let ce = lv[e].conj();
                rhs[e] += &ce * &dv;
                for f in 0..p {
                    *normal.get_mut(e, f) += &ce * &lv[f];
                }
            }
        }
    }
    let inv = normal.inverse().map_err(|_| {
        Error::RankDeficient(format!("q_{degree} does not respond to normal order {r}"))
    })?;
    let h = inv.apply(&rhs);
    let mut tensor = JetMatrix::from_fn(m, m, |_, _| zero.clone());
    for (k, &(a, b)) in pairs.iter().enumerate() {
        tensor.set(a, b, h[k].clone());
        tensor.set(b, a, h[k].clone());
    }
    let mut misfit: f64 = 0.0;
    for (d, seq) in input.sequences.iter().enumerate() {
        let space = symbol_space(input, seq)?;
        let q_ref = &reference[d].sequence.q(degree).entries;
        let delta = &seq.q(degree).entries - q_ref;
        for idx in 0..delta.entries().len() {
            let dv = on_boundary(&space, &delta.entries()[idx], boundary)?;
            let mut model = zero.clone();
            for (k, runs) in responses.iter().enumerate() {
                let l = &runs[d].sequence.q(degree).entries.entries()[idx] - &q_ref.entries()[idx];
                model += &h[k] * &on_boundary(&space, &l, boundary)?;
            }
            misfit = misfit.max(rel_diff(&model, &dv));
        }
    }
    finish(r, Method::ResponseFit, tensor, misfit, None, None, None)
}

/// All recovered orders `0..=depth`.
#[derive(Clone, Debug)]
pub struct RecoveryResult {
    pub n: usize,
    pub depth: usize,
    pub jet_order: usize,
    pub orders: Vec<RecoveredOrder>,
}

/// Recovers `d_n^r g^{ab}` on the boundary for `r = 0..=depth`.
pub fn run_recovery(input: &RecoveryInput) -> Result<RecoveryResult> {
    let n = input.n;
    let k = input.x_domain.order().max(0) as usize;
    if input.sequences.iter().any(|s| s.depth < input.depth) {
        return Err(Error::OrderExhausted {
            what: format!("recovery to normal order {}", input.depth),
            needed: input.depth as i32,
            have: input.sequences.iter().map(|s| s.depth as i32).min().unwrap_or(0),
        });
    }
    let boundary = boundary_domain(n, k);
    let mut orders = vec![recover_metric_0(input, &boundary)?];
    let directions: Vec<Vec<f64>> = input.sequences.iter().map(|s| s.direction.clone()).collect();
    for r in 1..=input.depth {
        let known: Vec<JetMatrix> = orders.iter().map(|o| o.tensor.clone()).collect();
        let reference = reference_extension(&known, &input.mu)?;
        let runs = forward_runs(&reference, &directions, r)?;
        let consts = TraceConstants::new(n, r);
        let recovered = if consts.is_degenerate() {
            recover_by_response(input, &known, &runs, &boundary)?
        } else {
            let mut by_trace = recover_by_trace(input, &known, &runs, &boundary)?;
            if r >= 2 {
                let by_fit = recover_by_response(input, &known, &runs, &boundary)?;
                by_trace.cross_check = Some(
                    by_trace
                        .tensor
                        .entries()
                        .iter()
                        .zip(by_fit.tensor.entries())
                        .map(|(a, b)| rel_diff(b, a))
                        .fold(0.0, f64::max),
                );
            }
            by_trace
        };
        orders.push(recovered);
    }
    Ok(RecoveryResult {
        n,
        depth: input.depth,
        jet_order: k,
        orders,
    })
}

/// `d_n^r g^{ab}` of a metric restricted to the boundary.
pub fn boundary_derivative(metric: &BoundaryNormalMetric, r: usize, boundary: &JetDomain) -> Result<JetMatrix> {
    let n = metric.n();
    let mut e = vec![0u8; n];
    e[n - 1] = r as u8;
    let keep: Vec<usize> = (0..n - 1).collect();
    let g = metric.g_upper();
    let mut out = JetMatrix::zeros(boundary, n - 1, n - 1);
    for a in 0..n - 1 {
        for b in 0..n - 1 {
            out.set(a, b, g.get(a, b).partial_multi(&e).restrict(boundary, &keep)?);
        }
    }
    Ok(out)
}

/// Coefficientwise error of a recovered tensor against the truth, through the
/// recovered order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub absolute: f64,
    pub relative: f64,
}

pub fn compare(recovered: &JetMatrix, truth: &JetMatrix) -> ErrorSummary {
    let mut absolute: f64 = 0.0;
    let mut relative: f64 = 0.0;
    for (a, t) in recovered.entries().iter().zip(truth.entries()) {
        absolute = absolute.max(crate::jets::max_diff(a, t));
        relative = relative.max(rel_diff(a, t));
    }
    ErrorSummary { absolute, relative }
}


pub const REPORT_SCHEMA: &str = "stokes-dtn/report/v1";

/// Trace constants used at one normal order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UsedConstants {
    pub order: usize,
    pub method: Method,
    pub a: f64,
    pub c: f64,
    pub denominator: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub published: PublishedConstants,
    pub used: Vec<UsedConstants>,
}

/// One named pass/fail diagnostic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Check {
        Check {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub order: usize,
    pub method: Method,
    pub trustworthy_order: i32,
    /// Row-major `(n-1) x (n-1)` entries of `d_n^r g^{ab}` in `x'`.
    pub tensor: Vec<JetRecord>,
    pub misfit: f64,
    pub max_imag: f64,
    pub asymmetry: f64,
    pub homogeneity_defect: Option<f64>,
    pub cross_check: Option<f64>,
    pub error: Option<ErrorSummary>,
}

/// Thresholds applied to the recovery diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReportTolerances {
    pub recovery: f64,
    pub homogeneity: f64,
    /// Fit misfit, asymmetry and imaginary parts.
    pub fit: f64,
}

/// Recovered boundary jets with diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub schema: String,
    pub n: usize,
    pub depth: usize,
    pub jet_order: usize,
    pub directions: usize,
    pub constants: ConstantsReport,
    pub orders: Vec<OrderReport>,
    pub checks: Vec<Check>,
}

impl RecoveryReport {
    /// Builds the report; `truth` holds `d_n^r g^{ab}` on the boundary for each order when known.
    pub fn new(
        result: &RecoveryResult,
        directions: usize,
        truth: Option<&[JetMatrix]>,
        tol: ReportTolerances,
    ) -> RecoveryReport {
        let mut checks = Vec::new();
        let mut used = Vec::new();
        let mut orders = Vec::new();
        for o in &result.orders {
            let r = o.order;
            if r >= 1 {
                let k = TraceConstants::new(result.n, r);
                used.push(UsedConstants {
                    order: r,
                    method: o.method,
                    a: k.a,
                    c: k.c,
                    denominator: k.denominator,
                });
            }
            let error = truth.and_then(|t| t.get(r)).map(|t| compare(&o.tensor, t));
            checks.push(Check::at_most(format!("order {r} fit misfit"), o.misfit, tol.fit));
            checks.push(Check::at_most(format!("order {r} asymmetry"), o.asymmetry, tol.fit));
            checks.push(Check::at_most(format!("order {r} imaginary part"), o.max_imag, tol.fit));
            if let Some(h) = o.homogeneity_defect {
                checks.push(Check::at_most(format!("order {r} trace homogeneity"), h, tol.homogeneity));
            }
            if let Some(x) = o.cross_check {
                checks.push(Check::at_most(format!("order {r} trace vs response fit"), x, tol.recovery));
            }
            if let Some(e) = error {
                checks.push(Check::at_most(format!("order {r} error vs truth"), e.relative, tol.recovery));
            }
            if r == 0 {
                let m = o.tensor.rows();
                let base: Vec<f64> = o.tensor.entries().iter().map(|j| j.value().re).collect();
                let pd = DMatrix::from_row_slice(m, m, &base)
                    .symmetric_eigenvalues()
                    .min();
                checks.push(Check {
                    name: "order 0 positive definite".into(),
                    value: pd,
                    tolerance: 0.0,
                    passed: pd > 0.0,
                });
            }
            orders.push(OrderReport {
                order: r,
                method: o.method,
                trustworthy_order: o.trustworthy_order,
                tensor: o.tensor.entries().iter().map(JetRecord::from_jet).collect(),
                misfit: o.misfit,
                max_imag: o.max_imag,
                asymmetry: o.asymmetry,
                homogeneity_defect: o.homogeneity_defect,
                cross_check: o.cross_check,
                error,
            });
        }
        RecoveryReport {
            schema: REPORT_SCHEMA.to_string(),
            n: result.n,
            depth: result.depth,
            jet_order: result.jet_order,
            directions,
            constants: ConstantsReport {
                published: PublishedConstants::new(result.n),
                used,
            },
            orders,
            checks,
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Plain-text table: one row per order and tensor entry.
    pub fn table(&self) -> String {
        let m = self.n - 1;
        let mut out = format!(
            "n = {}, depth = {}, jet order = {}, directions = {}\n",
            self.n, self.depth, self.jet_order, self.directions
        );
        out += &format!(
            "{:>5}  {:>5}  {:>14}  {:>24}  {:>10}  {:>10}  {:>5}  {}\n",
            "order", "entry", "method", "value at origin", "abs err", "rel err", "trust", "terms"
        );
        for o in &self.orders {
            for a in 0..m {
                for b in a..m {
                    let rec = &o.tensor[a * m + b];
                    let value = rec
                        .terms
                        .iter()
                        .find(|c| c.0.iter().all(|&e| e == 0))
                        .map_or(0.0, |c| c.1);
                    let (abs, rel) = o
                        .error
                        .map_or(("-".to_string(), "-".to_string()), |e| {
                            (format!("{:.2e}", e.absolute), format!("{:.2e}", e.relative))
                        });
                    out += &format!(
                        "{:>5}  {:>5}  {:>14}  {:>24.16e}  {:>10}  {:>10}  {:>5}  {}\n",
                        o.order,
                        format!("{}{}", a + 1, b + 1),
                        format!("{:?}", o.method),
                        value,
                        abs,
                        rel,
                        o.trustworthy_order,
                        rec.terms.len()
                    );
                }
            }
        }
        let p = &self.constants.published;
        out += &format!(
            "published denominators: n^2+n-4 = {}, n^2+3n-6 = {}\n",
            p.first_order_denominator, p.higher_order_denominator
        );
        for u in &self.constants.used {
            out += &format!(
                "order {}: a = {}, c = {}, denominator = {} ({:?})\n",
                u.order, u.a, u.c, u.denominator, u.method
            );
        }
        for c in &self.checks {
            out += &format!(
                "{} {}: {:.3e} (tolerance {:.1e})\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.tolerance
            );
        }
        out
    }
}
