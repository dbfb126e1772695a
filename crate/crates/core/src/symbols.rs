//! Full symbol of the factorization `d_n^2 + B d_n + C = (d_n + B - Q)(d_n + Q)`
//! modulo smoothing operators.
//!
//! Symbols are jets in the joint variables `(x_1..x_n, xi_1..xi_{n-1})` around
//! `(0, xi_0)`: variable `a < n` is `x_{a+1}`, variable `n + a` is `xi_{a+1}`.
//! The recursion produces `q_1, q_0, q_{-1}, ...` where `q_j` is homogeneous
//! of degree `j` in `xi`.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::BoundaryNormalMetric;
use crate::jets::{Jet, JetDomain, JetMatrix};
use crate::stokes::{OpMatrix, SystemMatrices};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Joint `(x, xi)` jet algebra for one cotangent direction.
#[derive(Clone, Debug)]
pub struct SymbolSpace {
    n: usize,
    direction: Vec<f64>,
    x_domain: JetDomain,
    domain: JetDomain,
}

impl SymbolSpace {
    /// `x_domain` must be the metric's domain (origin, `n` variables).
    pub fn new(x_domain: &JetDomain, direction: &[f64]) -> Result<SymbolSpace> {
        let n = x_domain.nvars();
        if direction.len() + 1 != n {
            return Err(Error::DegenerateDirection(format!(
                "direction has {} components, expected {}",
                direction.len(),
                n - 1
            )));
        }
        if direction.iter().all(|&v| v == 0.0) || direction.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateDirection(format!("{direction:?}")));
        }
        let mut base = x_domain.base().to_vec();
        base.extend_from_slice(direction);
        let layout = x_domain.space().max_order();
        Ok(SymbolSpace {
            n,
            direction: direction.to_vec(),
            x_domain: x_domain.clone(),
            domain: JetDomain::new(base, layout).with_order(x_domain.order()),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn domain(&self) -> &JetDomain {
        &self.domain
    }

    pub fn x_domain(&self) -> &JetDomain {
        &self.x_domain
    }

    pub fn xi_var(&self, a: usize) -> usize {
        self.n + a
    }

    /// `xi_a` as a jet (value `xi_0[a]` at the base point).
    pub fn xi(&self, a: usize) -> Jet {
        self.domain.variable(self.xi_var(a))
    }

    /// An `x`-jet viewed as a symbol independent of `xi`.
    pub fn lift(&self, j: &Jet) -> Result<Jet> {
        let map: Vec<usize> = (0..self.n).collect();
        j.embed(&self.domain, &map)
    }

    pub fn lift_matrix(&self, m: &JetMatrix) -> Result<JetMatrix> {
        let mut out = JetMatrix::zeros(&self.domain, m.rows(), m.cols());
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                out.set(i, j, self.lift(m.get(i, j))?);
            }
        }
        Ok(out)
    }

    /// Derivative multi-index over all joint variables for `d_xi^J` (`xi = true`)
    /// or `d_{x'}^J`, with `J` over the tangential indices.
    fn joint_index(&self, tangential: &[u8], xi: bool) -> Vec<u8> {
        let mut e = vec![0u8; 2 * self.n - 1];
        for (a, &v) in tangential.iter().enumerate() {
            e[if xi { self.n + a } else { a }] = v;
        }
        e
    }

    /// Restriction of a symbol to `x_n = 0, xi = xi_0`: a jet in `x'`.
    pub fn boundary_value(&self, j: &Jet, boundary: &JetDomain) -> Result<Jet> {
        let keep: Vec<usize> = (0..self.n - 1).collect();
        j.restrict(boundary, &keep)
    }
}

/// `xi / |xi|_g` with the metric frozen at the base point.
pub fn normalize_direction(metric: &BoundaryNormalMetric, raw: &[f64]) -> Result<Vec<f64>> {
    let m = metric.n() - 1;
    if raw.len() != m {
        return Err(Error::DegenerateDirection(format!(
            "direction has {} components, expected {m}",
            raw.len()
        )));
    }
    let g = metric.g_upper();
    let mut q = 0.0;
    for a in 0..m {
        for b in 0..m {
            q += g.get(a, b).value().re * raw[a] * raw[b];
        }
    }
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::DegenerateDirection(format!("{raw:?} has metric norm {q}")));
    }
    Ok(raw.iter().map(|v| v / q.sqrt()).collect())
}

/// Square matrix symbol homogeneous of a fixed degree in `xi`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolMatrix {
    pub entries: JetMatrix,
    pub degree: i32,
}

impl SymbolMatrix {
    pub fn dim(&self) -> usize {
        self.entries.rows()
    }

    /// Order through which every entry is exact.
    pub fn trustworthy_order(&self) -> i32 {
        self.entries.order()
    }

    pub fn get(&self, i: usize, j: usize) -> &Jet {
        self.entries.get(i, j)
    }

    pub fn trace(&self) -> Jet {
        self.entries.trace()
    }

    /// Largest coefficientwise defect of `sum_a xi_a d_{xi_a} F = degree F`.
    pub fn homogeneity_defect(&self, space: &SymbolSpace) -> f64 {
        self.entries
            .entries()
            .iter()
            .map(|e| homogeneity_defect(e, self.degree, space))
            .fold(0.0, f64::max)
    }
}

/// Euler operator `sum_a xi_a d_{xi_a}`.
pub fn euler(f: &Jet, space: &SymbolSpace) -> Jet {
    let mut acc: Option<Jet> = None;
    for a in 0..space.n - 1 {
        let t = &space.xi(a) * &f.partial(space.xi_var(a));
        acc = Some(match acc {
            None => t,
            Some(s) => s + t,
        });
    }
    acc.expect("n >= 2")
}

/// Coefficientwise `|E f - d f| / max(1, |d f|)` through the order of `E f`.
pub fn homogeneity_defect(f: &Jet, degree: i32, space: &SymbolSpace) -> f64 {
    let lhs = euler(f, space);
    crate::jets::rel_diff(&lhs, &f.scale(degree as f64))
}

/// Symbols of `B` and of the degree-2, 1 and 0 parts of `C`.
#[derive(Clone, Debug)]
pub struct OperatorSymbols {
    pub b: SymbolMatrix,
    pub c2: SymbolMatrix,
    pub c1: SymbolMatrix,
    pub c0: SymbolMatrix,
}

impl OperatorSymbols {
    /// `c_d` for `d` in `2, 1, 0`; zero matrix symbol otherwise.
    pub fn c(&self, degree: i32) -> Option<&SymbolMatrix> {
        match degree {
            2 => Some(&self.c2),
            1 => Some(&self.c1),
            0 => Some(&self.c0),
            _ => None,
        }
    }
}

/// Replaces every tangential `d_a` by `i xi_a` and groups terms by order.
pub fn symbolize(mats: &SystemMatrices, space: &SymbolSpace) -> Result<OperatorSymbols> {
    let dim = mats.n + 1;
    let domain = space.domain();
    let mut parts: Vec<JetMatrix> = (0..3).map(|_| JetMatrix::zeros(domain, dim, dim)).collect();
    for c in [&mats.c2, &mats.c1, &mats.c0] {
        add_symbol_terms(c, space, &mut parts)?;
    }
    let mut b_parts: Vec<JetMatrix> = (0..3).map(|_| JetMatrix::zeros(domain, dim, dim)).collect();
    add_symbol_terms(&mats.b, space, &mut b_parts)?;
    if b_parts[1].max_norm() != 0.0 || b_parts[2].max_norm() != 0.0 {
        return Err(Error::Incompatible("B must be a multiplication operator".into()));
    }
    let mut parts = parts.into_iter();
    let c0 = parts.next().expect("three parts");
    let c1 = parts.next().expect("three parts");
    let c2 = parts.next().expect("three parts");
    Ok(OperatorSymbols {
        b: SymbolMatrix {
            entries: b_parts.swap_remove(0),
            degree: 0,
        },
        c2: SymbolMatrix { entries: c2, degree: 2 },
        c1: SymbolMatrix { entries: c1, degree: 1 },
        c0: SymbolMatrix { entries: c0, degree: 0 },
    })
}

fn add_symbol_terms(op: &OpMatrix, space: &SymbolSpace, parts: &mut [JetMatrix]) -> Result<()> {
    let n = space.n();
    for r in 0..op.dim() {
        for c in 0..op.dim() {
            for (deriv, coeff) in op.get(r, c).terms() {
                if deriv[n - 1] != 0 {
                    return Err(Error::Incompatible(
                        "normal derivative inside a tangential operator".into(),
                    ));
                }
                let order: usize = deriv.iter().map(|&e| e as usize).sum();
                if order > 2 {
                    return Err(Error::Incompatible(format!(
                        "derivative of order {order} in a second-order operator"
                    )));
                }
                let mut term = space.lift(coeff)?;
                for (a, &e) in deriv[..n - 1].iter().enumerate() {
                    for _ in 0..e {
                        term = &term * &space.xi(a);
                    }
                }
                let factor = I.powi(order as i32);
                *parts[order].get_mut(r, c) += term.scale(factor);
            }
        }
    }
    Ok(())
}

/// `q_1 = sqrt(g^{ab} xi_a xi_b) I` with its full `(x, xi)` dependence.
pub fn principal_symbol(metric: &BoundaryNormalMetric, space: &SymbolSpace) -> Result<SymbolMatrix> {
    let norm = xi_norm(metric, space)?;
    Ok(SymbolMatrix {
        entries: JetMatrix::scalar(&norm, metric.n() + 1),
        degree: 1,
    })
}

/// `|xi|_g = sqrt(g^{ab}(x) xi_a xi_b)`.
pub fn xi_norm(metric: &BoundaryNormalMetric, space: &SymbolSpace) -> Result<Jet> {
    let m = metric.n() - 1;
    let g = metric.g_upper();
    let mut quad = space.domain().zero();
    for a in 0..m {
        for b in 0..m {
            let gab = space.lift(g.get(a, b))?;
            quad += &(&gab * &space.xi(a)) * &space.xi(b);
        }
    }
    quad.sqrt().map_err(|e| Error::DegenerateDirection(format!("|xi|^2 not positive: {e}")))
}

/// Scalar multiples of the identity are kept as scalars so products with
/// `q_1` and its derivatives cost a scaling rather than a matrix product.
#[derive(Clone, Debug)]
enum Block {
    Scalar(Jet),
    Full(JetMatrix),
}

impl Block {
    fn partial_multi(&self, e: &[u8]) -> Block {
        match self {
            Block::Scalar(s) => Block::Scalar(s.partial_multi(e)),
            Block::Full(m) => Block::Full(m.partial_multi(e)),
        }
    }

    fn mul(&self, other: &Block) -> Block {
        match (self, other) {
            (Block::Scalar(a), Block::Scalar(b)) => Block::Scalar(a * b),
            (Block::Scalar(a), Block::Full(m)) | (Block::Full(m), Block::Scalar(a)) => {
                Block::Full(m.scale(a))
            }
            (Block::Full(a), Block::Full(b)) => Block::Full(a * b),
        }
    }

    fn into_matrix(self, dim: usize) -> JetMatrix {
        match self {
            Block::Scalar(s) => JetMatrix::scalar(&s, dim),
            Block::Full(m) => m,
        }
    }
}

/// The pieces the recursion works from, plus a derivative cache.
pub struct Recursion<'a> {
    space: &'a SymbolSpace,
    ops: &'a OperatorSymbols,
    dim: usize,
    /// `|xi|_g`, the scalar part of `q_1`.
    norm: Jet,
    /// `q_1, q_0, q_{-1}, ...`
    q: Vec<Block>,
    cache: HashMap<(usize, Vec<u8>), Block>,
}

impl<'a> Recursion<'a> {
    pub fn new(metric: &BoundaryNormalMetric, space: &'a SymbolSpace, ops: &'a OperatorSymbols) -> Result<Self> {
        let norm = xi_norm(metric, space)?;
        Ok(Recursion {
            space,
            ops,
            dim: metric.n() + 1,
            q: vec![Block::Scalar(norm.clone())],
            norm,
            cache: HashMap::new(),
        })
    }

    /// Number of computed symbols.
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// `q_degree` as a full matrix.
    pub fn symbol(&self, degree: i32) -> SymbolMatrix {
        SymbolMatrix {
            entries: self.q[(1 - degree) as usize].clone().into_matrix(self.dim),
            degree,
        }
    }

    fn slot(degree: i32) -> usize {
        (1 - degree) as usize
    }

    fn deriv(&mut self, degree: i32, e: Vec<u8>) -> Block {
        let slot = Self::slot(degree);
        if e.iter().all(|&v| v == 0) {
            return self.q[slot].clone();
        }
        self.cache
            .entry((slot, e.clone()))
            .or_insert_with(|| self.q[slot].partial_multi(&e))
            .clone()
    }

    fn xi_deriv(&mut self, degree: i32, tangential: &[u8]) -> Block {
        let e = self.space.joint_index(tangential, true);
        self.deriv(degree, e)
    }

    fn x_deriv(&mut self, degree: i32, tangential: &[u8]) -> Block {
        let e = self.space.joint_index(tangential, false);
        self.deriv(degree, e)
    }

    fn normal_deriv(&mut self, degree: i32) -> Block {
        let mut e = vec![0u8; 2 * self.space.n() - 1];
        e[self.space.n() - 1] = 1;
        self.deriv(degree, e)
    }

    fn b_times(&self, degree: i32) -> JetMatrix {
        let q = &self.q[Self::slot(degree)];
        Block::Full(self.ops.b.entries.clone()).mul(q).into_matrix(self.dim)
    }

    fn unit(&self, a: usize) -> Vec<u8> {
        let mut e = vec![0u8; self.space.n() - 1];
        e[a] = 1;
        e
    }

    /// `E_1 = i sum_a d_{xi_a} q_1 d_{x_a} q_1 + b q_1 + d_n q_1 - c_1`.
    pub fn e1(&mut self) -> SymbolMatrix {
        let m = self.space.n() - 1;
        let mut acc = &self.b_times(1) + &self.normal_deriv(1).into_matrix(self.dim);
        acc = &acc - &self.ops.c1.entries;
        for a in 0..m {
            let u = self.unit(a);
            let t = self.xi_deriv(1, &u).mul(&self.x_deriv(1, &u)).into_matrix(self.dim);
            acc = &acc + &t.scale_by(I);
        }
        SymbolMatrix { entries: acc, degree: 1 }
    }

    /// `E_0 = i sum_a (d_{xi_a} q_1 d_{x_a} q_0 + d_{xi_a} q_0 d_{x_a} q_1)
    ///  + 1/2 sum_{ab} d_{xi_a} d_{xi_b} q_1 d_{x_a} d_{x_b} q_1 - q_0^2 + b q_0 + d_n q_0 - c_0`.
    pub fn e0(&mut self) -> SymbolMatrix {
        assert!(self.q.len() >= 2, "E_0 needs q_0");
        let m = self.space.n() - 1;
        let dim = self.dim;
        let q0 = self.q[1].clone();
        let mut acc = &self.b_times(0) + &self.normal_deriv(0).into_matrix(dim);
        acc = &acc - &self.ops.c0.entries;
        acc = &acc - &q0.mul(&q0).into_matrix(dim);
        for a in 0..m {
            let u = self.unit(a);
            let t1 = self.xi_deriv(1, &u).mul(&self.x_deriv(0, &u));
            let t2 = self.xi_deriv(0, &u).mul(&self.x_deriv(1, &u));
            let t = &t1.into_matrix(dim) + &t2.into_matrix(dim);
            acc = &acc + &t.scale_by(I);
        }
        for a in 0..m {
            for b in 0..m {
                let mut e = self.unit(a);
                e[b] += 1;
                let t = self.xi_deriv(1, &e).mul(&self.x_deriv(1, &e)).into_matrix(dim);
                acc = &acc + &t.scale_by(0.5);
            }
        }
        SymbolMatrix { entries: acc, degree: 0 }
    }

    /// Generic `E_{-m} = b q_{-m} + d_n q_{-m} - c_{-m}
    ///  - sum_{-m <= j,k <= 1, |J| = j+k+m} (-i)^{|J|}/J! d_xi^J q_j d_{x'}^J q_k`.
    ///
    /// Valid for every `m >= -1`; needs `q_1 .. q_{-m}`.
    pub fn e_generic(&mut self, m: i32) -> SymbolMatrix {
        assert!(m >= -1 && self.q.len() as i32 >= m + 2, "E_{{-m}} needs q_1..q_{{-m}}");
        let dim = self.dim;
        let tangential = self.space.n() - 1;
        let mut acc = &self.b_times(-m) + &self.normal_deriv(-m).into_matrix(dim);
        if let Some(c) = self.ops.c(-m) {
            acc = &acc - &c.entries;
        }
        for j in -m..=1 {
            for k in -m..=1 {
                let s = j + k + m;
                if s < 0 {
                    continue;
                }
                for jj in multi_indices(tangential, s as usize) {
                    let coeff = (-I).powi(s) / factorial_of(&jj);
                    let t = self.xi_deriv(j, &jj).mul(&self.x_deriv(k, &jj));
                    acc = &acc - &t.into_matrix(dim).scale_by(coeff);
                }
            }
        }
        SymbolMatrix {
            entries: acc,
            degree: -m,
        }
    }

    /// `q = E / (2 |xi|)`, the solution of `q_1 q + q q_1 = E`.
    pub fn next_symbol(&self, e: &SymbolMatrix) -> Result<SymbolMatrix> {
        let half_inv = self.norm.scale(2.0).recip()?;
        Ok(SymbolMatrix {
            entries: e.entries.scale(&half_inv),
            degree: e.degree - 1,
        })
    }

    /// Appends `q_{-m-1}` computed from `E_{-m}` (display forms for `m = -1, 0`).
    pub fn step(&mut self) -> Result<SymbolMatrix> {
        let m = self.q.len() as i32 - 2;
        let e = match m {
            -1 => self.e1(),
            0 => self.e0(),
            _ => self.e_generic(m),
        };
        let q = self.next_symbol(&e)?;
        if q.trustworthy_order() < 0 {
            return Err(Error::OrderExhausted {
                what: format!("symbol q_{}", q.degree),
                needed: self.space.domain().order() + 1 - q.trustworthy_order(),
                have: self.space.domain().order(),
            });
        }
        self.q.push(Block::Full(q.entries.clone()));
        Ok(q)
    }
}

/// All multi-indices of length `len` and total degree `degree`.
pub fn multi_indices(len: usize, degree: usize) -> Vec<Vec<u8>> {
    fn go(len: usize, degree: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if cur.len() + 1 == len {
            cur.push(degree as u8);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for d in (0..=degree).rev() {
            cur.push(d as u8);
            go(len, degree - d, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if len == 0 {
        if degree == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    go(len, degree, &mut Vec::with_capacity(len), &mut out);
    out
}

fn factorial_of(e: &[u8]) -> f64 {
    e.iter()
        .map(|&k| (1..=k as u32).map(f64::from).product::<f64>())
        .product()
}

/// `q_1, q_0, ..., q_{1-D}` for one direction.
#[derive(Clone, Debug)]
pub struct SymbolSequence {
    pub direction: Vec<f64>,
    pub depth: usize,
    pub symbols: Vec<SymbolMatrix>,
    /// Smallest trustworthy order among the symbols.
    pub residual_order_achieved: i32,
}

impl SymbolSequence {
    /// `q_degree`, for `1 - depth <= degree <= 1`.
    pub fn q(&self, degree: i32) -> &SymbolMatrix {
        &self.symbols[(1 - degree) as usize]
    }

    pub fn trustworthy_orders(&self) -> Vec<i32> {
        self.symbols.iter().map(SymbolMatrix::trustworthy_order).collect()
    }
}

/// Forward run for one direction: assembles, symbolizes and recurses.
pub struct ForwardRun {
    pub space: SymbolSpace,
    pub operator: OperatorSymbols,
    pub sequence: SymbolSequence,
}

/// Symbols `q_1 .. q_{1-depth}` of `metric` in the (already normalized) direction.
pub fn run_recursion(
    metric: &BoundaryNormalMetric,
    mats: &SystemMatrices,
    direction: &[f64],
    depth: usize,
) -> Result<ForwardRun> {
    let k = metric.order();
    let need = depth as i32 + 1;
    if k < need {
        return Err(Error::OrderExhausted {
            what: format!("symbol recursion to depth {depth}"),
            needed: need,
            have: k,
        });
    }
    let space = SymbolSpace::new(&metric.domain(), direction)?;
    let operator = symbolize(mats, &space)?;
    let mut symbols = vec![principal_symbol(metric, &space)?];
    {
        let mut rec = Recursion::new(metric, &space, &operator)?;
        for _ in 0..depth {
            symbols.push(rec.step()?);
        }
    }
    let residual_order_achieved = symbols
        .iter()
        .map(SymbolMatrix::trustworthy_order)
        .min()
        .unwrap_or(-1);
    Ok(ForwardRun {
        sequence: SymbolSequence {
            direction: direction.to_vec(),
            depth,
            symbols,
            residual_order_achieved,
        },
        space,
        operator,
    })
}

/// Degree-`d` part of the full symbol equation for one degree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DegreeResidual {
    pub degree: i32,
    pub absolute: f64,
    /// Coefficientwise, relative to the largest summand coefficient (at least 1).
    pub relative: f64,
    /// Order through which the residual was evaluated (`-1`: nothing to check).
    pub order: i32,
}

struct Accumulator {
    acc: Option<JetMatrix>,
    mags: Vec<Vec<f64>>,
}

impl Accumulator {
    fn new(dim: usize) -> Self {
        Accumulator {
            acc: None,
            mags: vec![Vec::new(); dim * dim],
        }
    }

    fn add(&mut self, term: JetMatrix) {
        for (slot, e) in self.mags.iter_mut().zip(term.entries()) {
            let c = e.coeffs();
            if slot.len() < c.len() {
                slot.resize(c.len(), 0.0);
            }
            for (m, v) in slot.iter_mut().zip(c) {
                *m = m.max(v.norm());
            }
        }
        self.acc = Some(match self.acc.take() {
            None => term,
            Some(a) => &a + &term,
        });
    }

    fn finish(self, degree: i32) -> DegreeResidual {
        let acc = self.acc.expect("at least one summand");
        let order = acc.order();
        let mut absolute: f64 = 0.0;
        let mut relative: f64 = 0.0;
        for (e, mags) in acc.entries().iter().zip(&self.mags) {
            for (i, c) in e.coeffs().iter().enumerate() {
                let v = c.norm();
                absolute = absolute.max(v);
                relative = relative.max(v / mags.get(i).copied().unwrap_or(0.0).max(1.0));
            }
        }
        DegreeResidual {
            degree,
            absolute,
            relative,
            order,
        }
    }
}

/// Degree-`d` parts of
/// `sum_J (-i)^|J|/J! d_xi^J q d_{x'}^J q - b q - d_n q + c`
/// for `d = 2, 1, ..., 2 - D`: the degrees whose every contribution is available
/// from `q_1 .. q_{1-D}`.
///
/// Written as a direct enumeration over all symbol pairs, independent of the
/// grouping used by the recursion.
pub fn full_symbol_residual(
    seq: &SymbolSequence,
    ops: &OperatorSymbols,
    space: &SymbolSpace,
) -> Vec<DegreeResidual> {
    let dim = seq.symbols[0].dim();
    let n = space.n();
    let lowest = 1 - seq.depth as i32;
    let mut out = Vec::new();
    for d in ((lowest + 1)..=2).rev() {
        let mut acc = Accumulator::new(dim);
        for q_j in &seq.symbols {
            for q_k in &seq.symbols {
                let s = q_j.degree + q_k.degree - d;
                if s < 0 {
                    continue;
                }
                for jj in multi_indices(n - 1, s as usize) {
                    let coeff = (-I).powi(s) / factorial_of(&jj);
                    let a = q_j.entries.partial_multi(&space.joint_index(&jj, true));
                    let b = q_k.entries.partial_multi(&space.joint_index(&jj, false));
                    acc.add((&a * &b).scale_by(coeff));
                }
            }
        }
        if d <= 1 {
            let q_d = &seq.q(d).entries;
            acc.add((&ops.b.entries * q_d).scale_by(-1.0));
            acc.add(q_d.partial(n - 1).scale_by(-1.0));
        }
        if let Some(c) = ops.c(d) {
            acc.add(c.entries.clone());
        }
        out.push(acc.finish(d));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Geometry;
    use crate::jets::max_diff;
    use crate::stokes::assemble;

    fn flat_run(n: usize, order: usize, depth: usize) -> ForwardRun {
        let d = JetDomain::origin(n, order);
        let m = BoundaryNormalMetric::flat(d.constant(1.0)).unwrap();
        let mats = assemble(&Geometry::new(&m).unwrap()).unwrap();
        let mut dir = vec![0.0; n - 1];
        dir[0] = 1.0;
        run_recursion(&m, &mats, &dir, depth).unwrap()
    }

    #[test]
    fn multi_index_enumeration() {
        assert_eq!(multi_indices(2, 2), vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(multi_indices(1, 3), vec![vec![3]]);
        assert_eq!(multi_indices(3, 0), vec![vec![0, 0, 0]]);
        assert_eq!(multi_indices(3, 2).len(), 6);
    }

    #[test]
    fn flat_symbolization() {
        let run = flat_run(2, 4, 0);
        let ops = &run.operator;
        let xi = run.space.xi(0);
        let c2 = &ops.c2.entries;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { -(&xi * &xi) } else { run.space.domain().zero() };
                assert_eq!(max_diff(c2.get(i, j), &want), 0.0);
            }
        }
        assert_eq!(ops.c1.get(2, 0), &xi.scale(I));
        assert!(ops.c1.get(2, 1).is_zero());
        assert_eq!(ops.b.get(2, 1).value(), Complex64::new(1.0, 0.0));
        assert!(ops.c0.entries.max_norm() == 0.0);
    }

    #[test]
    fn flat_e1_matches_hand_computation() {
        let run = flat_run(2, 4, 1);
        let d = JetDomain::origin(2, 4);
        let m = BoundaryNormalMetric::flat(d.constant(1.0)).unwrap();
        let mut rec = Recursion::new(&m, &run.space, &run.operator).unwrap();
        let e1 = rec.e1();
        // |xi| = xi_1 near xi_0 = 1
        let xi = run.space.xi(0);
        assert!(max_diff(e1.get(2, 0), &xi.scale(-I)) < 1e-15);
        assert!(max_diff(e1.get(2, 1), &xi) < 1e-15);
        assert!(e1.get(0, 0).max_norm() < 1e-15);
    }

    #[test]
    fn step_with_twice_norm_gives_identity() {
        let run = flat_run(3, 3, 0);
        let d = JetDomain::origin(3, 3);
        let m = BoundaryNormalMetric::flat(d.constant(1.0)).unwrap();
        let rec = Recursion::new(&m, &run.space, &run.operator).unwrap();
        let norm = xi_norm(&m, &run.space).unwrap();
        let e = SymbolMatrix {
            entries: JetMatrix::scalar(&norm.scale(2.0), 4),
            degree: 1,
        };
        let q = rec.next_symbol(&e).unwrap();
        let id = JetMatrix::identity(run.space.domain(), 4);
        assert!(q.entries.max_diff(&id) < 1e-14);
    }

    #[test]
    fn depth_zero_is_principal_only() {
        let run = flat_run(2, 3, 0);
        assert_eq!(run.sequence.symbols.len(), 1);
        assert_eq!(run.sequence.q(1).get(0, 0).value(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn insufficient_order_is_reported() {
        let d = JetDomain::origin(2, 3);
        let m = BoundaryNormalMetric::flat(d.constant(1.0)).unwrap();
        let mats = assemble(&Geometry::new(&m).unwrap()).unwrap();
        let err = run_recursion(&m, &mats, &[1.0], 3).err().unwrap();
        assert!(matches!(err, Error::OrderExhausted { needed: 4, have: 3, .. }), "{err}");
    }
}
