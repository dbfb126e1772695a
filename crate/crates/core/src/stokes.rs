//! The transformed Stokes system.
//!
//! With `u = mu^{-1/2} w + mu^{-1} grad f - f grad mu^{-1}` and
//! `p = div(mu^{1/2} w) + 2 Lap f`, the Stokes pair `(div sigma(u,p), div u)`
//! becomes `L U = A (U'' + B U' + C U)` for `U = (w, f)`, where `'` is the
//! normal derivative and `C = C2 + C1 + C0` contains tangential derivatives only.
//!
//! [`assemble`] builds `A, B, C2, C1, C0` from closed-form entries;
//! [`verify_transformation`] checks them against strain, stress and their
//! divergences computed directly from covariant derivatives.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::jets::{max_diff, rel_diff, Jet, JetDomain, JetMatrix};

/// Linear differential operator `sum_e a_e d^e` with jet coefficients.
///
/// Keys are derivative multi-indices over the `n` coordinates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiffOp {
    terms: BTreeMap<Vec<u8>, Jet>,
}

impl DiffOp {
    pub fn zero() -> DiffOp {
        DiffOp::default()
    }

    /// Multiplication by `a`.
    pub fn multiply(a: Jet) -> DiffOp {
        let n = a.nvars();
        let mut op = DiffOp::zero();
        op.add_term(vec![0; n], a);
        op
    }

    pub fn add_term(&mut self, deriv: Vec<u8>, coeff: Jet) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.get_mut(&deriv) {
            Some(existing) => *existing += &coeff,
            None => {
                self.terms.insert(deriv, coeff);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u8], &Jet)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), v))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(Jet::is_zero)
    }

    /// Highest derivative order present.
    pub fn differential_order(&self) -> usize {
        self.terms
            .keys()
            .map(|k| k.iter().map(|&e| e as usize).sum())
            .max()
            .unwrap_or(0)
    }

    /// Coefficient of the pure multiplication part (zero derivative index).
    pub fn multiplication_part(&self, domain: &JetDomain) -> Jet {
        self.terms
            .get(&vec![0u8; domain.nvars()])
            .cloned()
            .unwrap_or_else(|| domain.zero())
    }

    pub fn apply(&self, f: &Jet) -> Jet {
        let mut acc: Option<Jet> = None;
        for (deriv, coeff) in &self.terms {
            let term = coeff * &f.partial_multi(deriv);
            acc = Some(match acc {
                None => term,
                Some(a) => a + term,
            });
        }
        acc.unwrap_or_else(|| f.domain().zero())
    }
}

/// Square matrix of differential operators.
#[derive(Clone, Debug, PartialEq)]
pub struct OpMatrix {
    dim: usize,
    entries: Vec<DiffOp>,
}

impl OpMatrix {
    pub fn zeros(dim: usize) -> OpMatrix {
        OpMatrix {
            dim,
            entries: vec![DiffOp::zero(); dim * dim],
        }
    }

    /// Multiplication matrix built from jets.
    pub fn from_jets(m: &JetMatrix) -> OpMatrix {
        let mut out = OpMatrix::zeros(m.rows());
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                *out.get_mut(i, j) = DiffOp::multiply(m.get(i, j).clone());
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &DiffOp {
        &self.entries[i * self.dim + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut DiffOp {
        &mut self.entries[i * self.dim + j]
    }

    /// Multiplication coefficients as a jet matrix.
    pub fn multiplication_part(&self, domain: &JetDomain) -> JetMatrix {
        JetMatrix::from_fn(self.dim, self.dim, |i, j| {
            self.get(i, j).multiplication_part(domain)
        })
    }

    pub fn apply(&self, u: &[Jet]) -> Vec<Jet> {
        (0..self.dim)
            .map(|i| {
                let mut acc = self.get(i, 0).apply(&u[0]);
                for (j, uj) in u.iter().enumerate().skip(1) {
                    acc += self.get(i, j).apply(uj);
                }
                acc
            })
            .collect()
    }
}

/// `A^{-1} L = I d_n^2 + B d_n + C2 + C1 + C0`.
#[derive(Clone, Debug)]
pub struct SystemMatrices {
    pub n: usize,
    pub a: OpMatrix,
    pub b: OpMatrix,
    pub c2: OpMatrix,
    pub c1: OpMatrix,
    pub c0: OpMatrix,
}

/// Transformed unknowns `(w, f)` and the physical `(u, p)` they produce.
#[derive(Clone, Debug)]
pub struct FluidState {
    pub w: Vec<Jet>,
    pub f: Jet,
    pub u: Vec<Jet>,
    pub p: Jet,
}

/// Strain tensor in mixed and contravariant form.
#[derive(Clone, Debug)]
pub struct Strain {
    /// `(Su)^j_k = nabla^j u_k + nabla_k u^j`
    pub mixed: JetMatrix,
    /// `(Su)^{jk} = nabla^j u^k + nabla^k u^j`
    pub upper: JetMatrix,
}

/// Stress tensor `sigma = mu S u - p g` in mixed and contravariant form.
#[derive(Clone, Debug)]
pub struct Stress {
    pub mixed: JetMatrix,
    pub upper: JetMatrix,
}

pub fn strain(geo: &Geometry, u: &[Jet]) -> Strain {
    let n = geo.n();
    let cov = geo.covariant_derivative(u); // cov[j][l] = nabla_l u^j
    let gu = geo.g_upper();
    let gl = geo.g_lower();
    // nabla^j u^k = g^{jl} nabla_l u^k
    let raised = gu * &cov.transpose(); // raised[j][k] = g^{jl} cov[k][l]
    let upper = JetMatrix::from_fn(n, n, |j, k| raised.get(j, k) + raised.get(k, j));
    // nabla^j u_k = raised[j][m] g_{mk}
    let first = &raised * gl;
    let mixed = JetMatrix::from_fn(n, n, |j, k| first.get(j, k) + cov.get(j, k));
    Strain { mixed, upper }
}

pub fn stress(geo: &Geometry, u: &[Jet], p: &Jet) -> Stress {
    let n = geo.n();
    let s = strain(geo, u);
    let mu = geo.metric().mu();
    let gu = geo.g_upper();
    let upper = JetMatrix::from_fn(n, n, |j, k| mu * s.upper.get(j, k) - p * gu.get(j, k));
    let mixed = JetMatrix::from_fn(n, n, |j, k| {
        let v = mu * s.mixed.get(j, k);
        if j == k {
            v - p
        } else {
            v
        }
    });
    Stress { mixed, upper }
}

/// `(div sigma)^j = nabla_k sigma^{jk}`.
pub fn div_stress(geo: &Geometry, u: &[Jet], p: &Jet) -> Result<Vec<Jet>> {
    let have = geo.metric().order().min(p.order());
    if have < 2 {
        return Err(Error::OrderExhausted {
            what: "divergence of stress".into(),
            needed: 2,
            have,
        });
    }
    let n = geo.n();
    let sigma = stress(geo, u, p).upper;
    let g = geo.christoffel();
    Ok((0..n)
        .map(|j| {
            let mut acc = sigma.get(j, 0).partial(0);
            for k in 1..n {
                acc += sigma.get(j, k).partial(k);
            }
            for k in 0..n {
                for l in 0..n {
                    acc += g.get(j, k, l) * sigma.get(l, k);
                }
                acc += &g.contracted(k) * sigma.get(j, k);
            }
            acc
        })
        .collect())
}

/// Physical velocity and pressure from the transformed unknowns.
pub fn transform(geo: &Geometry, w: &[Jet], f: &Jet) -> Result<FluidState> {
    let mu = geo.metric().mu();
    let mu_inv = mu.recip()?;
    let mu_half = mu.sqrt()?;
    let mu_neg_half = mu_half.recip()?;
    let grad_f = geo.gradient(f);
    let grad_mu_inv = geo.gradient(&mu_inv);
    let u: Vec<Jet> = (0..geo.n())
        .map(|j| &mu_neg_half * &w[j] + &mu_inv * &grad_f[j] - f * &grad_mu_inv[j])
        .collect();
    let scaled: Vec<Jet> = w.iter().map(|wj| &mu_half * wj).collect();
    let p = geo.divergence(&scaled) + geo.laplace_beltrami(f)?.scale(2.0);
    Ok(FluidState {
        w: w.to_vec(),
        f: f.clone(),
        u,
        p,
    })
}

/// Assembles `A, B, C2, C1, C0` in boundary normal coordinates (needs order >= 3).
pub fn assemble(geo: &Geometry) -> Result<SystemMatrices> {
    let m = geo.metric();
    let have = m.order();
    if have < 3 {
        return Err(Error::OrderExhausted {
            what: "system assembly".into(),
            needed: 3,
            have,
        });
    }
    let n = m.n();
    let nn = n - 1;
    let dim = n + 1;
    let domain = m.domain();
    let gu = geo.g_upper();
    let g = geo.christoffel();
    let ric = &geo.ricci()?.upper;

    let mu = m.mu();
    let s = mu.sqrt()?;
    let s_inv = s.recip()?;
    let mu_inv = mu.recip()?;
    let grad_s = geo.gradient(&s);
    let hess_mu_inv = geo.scalar_hessian(&mu_inv)?.mixed; // nabla^j nabla_k mu^{-1}
    let hess_mu_inv_up = &hess_mu_inv * gu; // nabla^j nabla^l mu^{-1}
    let hess_s = geo.scalar_hessian(&s)?.mixed;
    let t = hess_mu_inv.scale(mu);
    let div_t = geo.divergence_mixed(&t);
    let lap_s = geo.laplace_beltrami(&s)?;
    let lap_mu_inv = geo.laplace_beltrami(&mu_inv)?;

    let deriv = |v: usize| -> Vec<u8> {
        let mut e = vec![0u8; n];
        e[v] += 1;
        e
    };
    let deriv2 = |a: usize, b: usize| -> Vec<u8> {
        let mut e = vec![0u8; n];
        e[a] += 1;
        e[b] += 1;
        e
    };

    // A
    let mut a_mat = OpMatrix::zeros(dim);
    for j in 0..n {
        *a_mat.get_mut(j, j) = DiffOp::multiply(s.clone());
    }
    *a_mat.get_mut(n, n) = DiffOp::multiply(mu_inv.clone());

    // B
    let mut trace_gamma_n = g.get(0, 0, nn).clone();
    for a in 1..nn {
        trace_gamma_n += g.get(a, a, nn);
    }
    let mut b = JetMatrix::zeros(&domain, dim, dim);
    for i in 0..dim {
        b.set(i, i, trace_gamma_n.clone());
    }
    for j in 0..n {
        for k in 0..n {
            let mut e = g.get(j, k, nn).scale(2.0);
            if k == nn {
                e -= (&s_inv * &grad_s[j]).scale(2.0);
            }
            *b.get_mut(j, k) += e;
        }
        let top_right = (&s_inv * &(ric.get(j, nn) - &(mu * hess_mu_inv_up.get(j, nn)))).scale(2.0);
        *b.get_mut(j, n) += top_right;
    }
    *b.get_mut(n, nn) += s.clone();
    let b_mat = OpMatrix::from_jets(&b);

    // C2
    let mut c2 = OpMatrix::zeros(dim);
    for i in 0..dim {
        let op = c2.get_mut(i, i);
        for a in 0..nn {
            for bb in 0..nn {
                op.add_term(deriv2(a, bb), gu.get(a, bb).clone());
            }
        }
    }

    // C1
    let mut c1 = OpMatrix::zeros(dim);
    for bb in 0..nn {
        let mut coeff = domain.zero();
        for a in 0..nn {
            coeff += gu.get(a, bb).partial(a);
            for c in 0..nn {
                coeff += gu.get(a, bb) * g.get(c, a, c);
            }
        }
        for i in 0..dim {
            c1.get_mut(i, i).add_term(deriv(bb), coeff.clone());
        }
    }
    for j in 0..n {
        for k in 0..n {
            let op = c1.get_mut(j, k);
            for bb in 0..nn {
                let mut coeff = domain.zero();
                for a in 0..nn {
                    coeff += gu.get(a, bb) * g.get(j, k, a);
                }
                op.add_term(deriv(bb), coeff.scale(2.0));
            }
            if k < nn {
                op.add_term(deriv(k), (&s_inv * &grad_s[j]).scale(-2.0));
            }
        }
        let op = c1.get_mut(j, n);
        for a in 0..nn {
            let coeff = (&s_inv * &(ric.get(j, a) - &(mu * hess_mu_inv_up.get(j, a)))).scale(2.0);
            op.add_term(deriv(a), coeff);
        }
    }
    for k in 0..nn {
        c1.get_mut(n, k).add_term(deriv(k), s.clone());
    }

    // C0
    let mut c0 = JetMatrix::zeros(&domain, dim, dim);
    let s_lap = -(&s_inv * &lap_s);
    for j in 0..n {
        for k in 0..n {
            let mut e = if j == k { s_lap.clone() } else { domain.zero() };
            for mm in 0..n {
                for l in 0..n {
                    let gml = gu.get(mm, l);
                    if !gml.is_zero() {
                        e += gml * &g.get(j, mm, l).partial(k);
                    }
                }
            }
            e -= (&s_inv * &(&grad_s[j] * &g.contracted(k))).scale(2.0);
            e -= (&s_inv * hess_s.get(j, k)).scale(2.0);
            c0.set(j, k, e);
        }
        c0.set(j, n, (&s_inv * &div_t[j]).scale(-2.0));
    }
    let s_neg_half_grad: Vec<Jet> = (0..n).map(|k| s_inv.partial(k)).collect();
    for k in 0..n {
        c0.set(n, k, &s * &g.contracted(k) + mu * &s_neg_half_grad[k]);
    }
    c0.set(n, n, -(mu * &lap_mu_inv));
    let c0_mat = OpMatrix::from_jets(&c0);

    Ok(SystemMatrices {
        n,
        a: a_mat,
        b: b_mat,
        c2,
        c1,
        c0: c0_mat,
    })
}

/// `A (U'' + B U' + C U)` for `U = (w, f)`.
pub fn apply_lg(mats: &SystemMatrices, w: &[Jet], f: &Jet) -> Vec<Jet> {
    let n = mats.n;
    let nn = n - 1;
    let mut u: Vec<Jet> = w.to_vec();
    u.push(f.clone());
    let du: Vec<Jet> = u.iter().map(|x| x.partial(nn)).collect();
    let ddu: Vec<Jet> = du.iter().map(|x| x.partial(nn)).collect();
    let bu = mats.b.apply(&du);
    let c2u = mats.c2.apply(&u);
    let c1u = mats.c1.apply(&u);
    let c0u = mats.c0.apply(&u);
    let inner: Vec<Jet> = (0..=n)
        .map(|i| &ddu[i] + &bu[i] + &c2u[i] + &c1u[i] + &c0u[i])
        .collect();
    mats.a.apply(&inner)
}

/// The Stokes pair `(div sigma(u,p), div u)` computed from first principles.
pub fn stokes_pair(geo: &Geometry, state: &FluidState) -> Result<Vec<Jet>> {
    let mut out = div_stress(geo, &state.u, &state.p)?;
    out.push(geo.divergence(&state.u));
    Ok(out)
}

/// Outcome of [`verify_transformation`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransformationResidual {
    /// Max coefficient difference between the two routes.
    pub absolute: f64,
    /// Largest coefficientwise difference relative to `max(1, |reference coefficient|)`.
    pub relative: f64,
    /// Jet order through which the comparison was made.
    pub order: i32,
}

/// Compares `apply_lg(assemble(m))` with the Stokes pair of `transform(m, w, f)`.
pub fn verify_transformation(
    geo: &Geometry,
    mats: &SystemMatrices,
    w: &[Jet],
    f: &Jet,
) -> Result<TransformationResidual> {
    let have = geo.metric().order().min(f.order());
    if have < 4 {
        return Err(Error::OrderExhausted {
            what: "transformation check".into(),
            needed: 4,
            have,
        });
    }
    let lhs = apply_lg(mats, w, f);
    let state = transform(geo, w, f)?;
    let rhs = stokes_pair(geo, &state)?;
    let mut absolute: f64 = 0.0;
    let mut relative: f64 = 0.0;
    let mut order = i32::MAX;
    for (l, r) in lhs.iter().zip(&rhs) {
        order = order.min(l.order().min(r.order()));
        absolute = absolute.max(max_diff(l, r));
        relative = relative.max(rel_diff(l, r));
    }
    Ok(TransformationResidual {
        absolute,
        relative,
        order,
    })
}

/// Which assembled matrix a [`Mutation`] perturbs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MutationTarget {
    B,
    C1,
    C0,
}

/// Fault injection: adds `amount` to one entry of `B` or `C0`, or `amount * d_1`
/// to one entry of `C1`. Used to show the verification is not vacuous.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mutation {
    pub target: MutationTarget,
    pub row: usize,
    pub col: usize,
    pub amount: f64,
}

impl Mutation {
    pub const DEFAULT_AMOUNT: f64 = 1e-3;

    pub fn apply(&self, mats: &mut SystemMatrices, domain: &JetDomain) -> Result<()> {
        let dim = mats.n + 1;
        if self.row >= dim || self.col >= dim {
            return Err(Error::Config {
                field: "mutate".into(),
                message: format!("entry ({}, {}) outside a {dim}x{dim} matrix", self.row, self.col),
            });
        }
        let bump = domain.constant(self.amount);
        match self.target {
            MutationTarget::B => mats.b.get_mut(self.row, self.col).add_term(vec![0; mats.n], bump),
            MutationTarget::C0 => mats.c0.get_mut(self.row, self.col).add_term(vec![0; mats.n], bump),
            MutationTarget::C1 => {
                let mut e = vec![0; mats.n];
                e[0] = 1;
                mats.c1.get_mut(self.row, self.col).add_term(e, bump)
            }
        }
        Ok(())
    }
}

impl FromStr for Mutation {
    type Err = Error;

    /// Parses `B:row,col`, `C1:row,col` or `C0:row,col` (0-based), optionally
    /// followed by `@amount`.
    fn from_str(s: &str) -> Result<Mutation> {
        let bad = |msg: &str| Error::Config {
            field: "mutate".into(),
            message: format!("{msg} in `{s}` (expected e.g. C0:1,2 or B:0,0@1e-3)"),
        };
        let (entry, amount) = match s.split_once('@') {
            Some((a, b)) => (a, b.trim().parse::<f64>().map_err(|_| bad("bad amount"))?),
            None => (s, Mutation::DEFAULT_AMOUNT),
        };
        let (name, idx) = entry.split_once(':').ok_or_else(|| bad("missing `:`"))?;
        let target = match name.trim().to_ascii_uppercase().as_str() {
            "B" => MutationTarget::B,
            "C1" => MutationTarget::C1,
            "C0" => MutationTarget::C0,
            _ => return Err(bad("unknown matrix")),
        };
        let (r, c) = idx.split_once(',').ok_or_else(|| bad("missing `,`"))?;
        let row = r.trim().parse().map_err(|_| bad("bad row"))?;
        let col = c.trim().parse().map_err(|_| bad("bad column"))?;
        Ok(Mutation {
            target,
            row,
            col,
            amount,
        })
    }
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.target {
            MutationTarget::B => "B",
            MutationTarget::C1 => "C1",
            MutationTarget::C0 => "C0",
        };
        write!(f, "{name}:{},{}@{}", self.row, self.col, self.amount)
    }
}

/// Every single-entry mutation of `B`, `C1` and `C0` for dimension `n`.
pub fn all_mutations(n: usize) -> Vec<Mutation> {
    let dim = n + 1;
    let mut out = Vec::new();
    for target in [MutationTarget::B, MutationTarget::C1, MutationTarget::C0] {
        for row in 0..dim {
            for col in 0..dim {
                out.push(Mutation {
                    target,
                    row,
                    col,
                    amount: Mutation::DEFAULT_AMOUNT,
                });
            }
        }
    }
    out
}
