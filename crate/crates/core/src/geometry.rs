//! Riemannian geometry in boundary normal coordinates.
//!
//! Coordinates are `x_1, ..., x_n` (indices `0..n` here) with `x_n` the
//! distance to the boundary, so the metric has the block form
//! `g = g_{ab} dx_a dx_b + dx_n^2`. All quantities are jets in `x` around
//! the boundary point at the origin.

use once_cell::sync::OnceCell;

use crate::error::{Error, Result};
use crate::jets::{Jet, JetDomain, JetMatrix};

/// Inverse metric `g^{jk}` and viscosity `mu` in boundary normal coordinates.
#[derive(Clone, Debug)]
pub struct BoundaryNormalMetric {
    n: usize,
    g_upper: JetMatrix,
    mu: Jet,
}

impl BoundaryNormalMetric {
    /// Builds the metric from its tangential block `g^{ab}` ((n-1)x(n-1) jets in
    /// the `n` coordinates) and the viscosity jet.
    pub fn new(tangential: JetMatrix, mu: Jet) -> Result<BoundaryNormalMetric> {
        let n = tangential.rows() + 1;
        if n < 2 || tangential.cols() + 1 != n {
            return Err(Error::InvalidMetric(format!(
                "tangential block must be square with n >= 2, got {}x{}",
                tangential.rows(),
                tangential.cols()
            )));
        }
        let domain = mu.domain();
        if domain.nvars() != n {
            return Err(Error::InvalidMetric(format!(
                "jets must live in {n} coordinates, found {}",
                domain.nvars()
            )));
        }
        for e in tangential.entries() {
            e.check_compatible(&mu)?;
            if e.max_imag() > 0.0 {
                return Err(Error::InvalidMetric("metric coefficients must be real".into()));
            }
        }
        for a in 0..n - 1 {
            for b in 0..a {
                let asym = (tangential.get(a, b) - tangential.get(b, a)).max_norm();
                if asym > 1e-14 * (1.0 + tangential.get(a, b).max_norm()) {
                    return Err(Error::InvalidMetric(format!(
                        "g^{{{a}{b}}} and g^{{{b}{a}}} differ by {asym:e}"
                    )));
                }
            }
        }
        let base: Vec<Vec<f64>> = (0..n - 1)
            .map(|a| (0..n - 1).map(|b| tangential.get(a, b).value().re).collect())
            .collect();
        if !is_positive_definite(&base) {
            return Err(Error::InvalidMetric(
                "tangential metric is not positive definite at the base point".into(),
            ));
        }
        let mu0 = mu.value();
        if !(mu0.re > 0.0) || mu0.im != 0.0 || mu.max_imag() > 0.0 {
            return Err(Error::InvalidMetric(format!(
                "viscosity must be real and positive at the base point, got {mu0}"
            )));
        }
        let g_upper = JetMatrix::from_fn(n, n, |j, k| {
            if j < n - 1 && k < n - 1 {
                tangential.get(j, k).clone()
            } else if j == k {
                domain.constant(1.0)
            } else {
                domain.zero()
            }
        });
        Ok(BoundaryNormalMetric { n, g_upper, mu })
    }

    /// Euclidean metric with the given viscosity.
    pub fn flat(mu: Jet) -> Result<BoundaryNormalMetric> {
        let n = mu.nvars();
        let d = mu.domain();
        BoundaryNormalMetric::new(JetMatrix::identity(&d, n - 1), mu)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Index of the normal coordinate.
    pub fn normal(&self) -> usize {
        self.n - 1
    }

    pub fn g_upper(&self) -> &JetMatrix {
        &self.g_upper
    }

    pub fn tangential(&self) -> JetMatrix {
        JetMatrix::from_fn(self.n - 1, self.n - 1, |a, b| self.g_upper.get(a, b).clone())
    }

    pub fn mu(&self) -> &Jet {
        &self.mu
    }

    pub fn domain(&self) -> JetDomain {
        self.mu.domain()
    }

    /// Smallest trunc order among metric and viscosity jets.
    pub fn order(&self) -> i32 {
        self.g_upper.order().min(self.mu.order())
    }

    pub fn with_mu(&self, mu: Jet) -> Result<BoundaryNormalMetric> {
        BoundaryNormalMetric::new(self.tangential(), mu)
    }
}

fn is_positive_definite(m: &[Vec<f64>]) -> bool {
    let n = m.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return false;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    true
}

/// `g_{jk}` as the jet inverse of `g^{jk}`.
pub fn lower_metric(m: &BoundaryNormalMetric) -> Result<JetMatrix> {
    m.g_upper.inverse()
}

/// Christoffel symbols `Gamma^j_{kl}` of the Levi-Civita connection.
#[derive(Clone, Debug)]
pub struct Christoffel {
    n: usize,
    data: Vec<Jet>,
}

impl Christoffel {
    pub fn get(&self, j: usize, k: usize, l: usize) -> &Jet {
        &self.data[(j * self.n + k) * self.n + l]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Contraction `Gamma^k_{kl}`.
    pub fn contracted(&self, l: usize) -> Jet {
        let mut acc = self.get(0, 0, l).clone();
        for k in 1..self.n {
            acc += self.get(k, k, l);
        }
        acc
    }
}

/// Ricci tensor with both index positions.
#[derive(Clone, Debug)]
pub struct Ricci {
    pub lower: JetMatrix,
    pub upper: JetMatrix,
}

/// Hessian of a scalar: `lower[l][k] = nabla_l nabla_k f`, `mixed[j][k] = nabla^j nabla_k f`.
#[derive(Clone, Debug)]
pub struct Hessian {
    pub lower: JetMatrix,
    pub mixed: JetMatrix,
}

/// A metric together with its lowered form and connection, computed once.
#[derive(Debug)]
pub struct Geometry {
    metric: BoundaryNormalMetric,
    g_lower: JetMatrix,
    gamma: Christoffel,
    ricci: OnceCell<Ricci>,
}

impl Geometry {
    pub fn new(metric: &BoundaryNormalMetric) -> Result<Geometry> {
        let g_lower = lower_metric(metric)?;
        let gamma = christoffel_from(metric, &g_lower);
        Ok(Geometry {
            metric: metric.clone(),
            g_lower,
            gamma,
            ricci: OnceCell::new(),
        })
    }

    pub fn metric(&self) -> &BoundaryNormalMetric {
        &self.metric
    }

    pub fn n(&self) -> usize {
        self.metric.n
    }

    pub fn g_upper(&self) -> &JetMatrix {
        &self.metric.g_upper
    }

    pub fn g_lower(&self) -> &JetMatrix {
        &self.g_lower
    }

    pub fn christoffel(&self) -> &Christoffel {
        &self.gamma
    }

    fn require_order(&self, what: &str, needed: i32) -> Result<()> {
        let have = self.metric.order();
        if have < needed {
            return Err(Error::OrderExhausted {
                what: what.into(),
                needed,
                have,
            });
        }
        Ok(())
    }

    /// Ricci tensor from the Christoffel symbols; needs jet order at least 2.
    pub fn ricci(&self) -> Result<&Ricci> {
        self.require_order("Ricci tensor", 2)?;
        Ok(self.ricci.get_or_init(|| self.compute_ricci()))
    }

    fn compute_ricci(&self) -> Ricci {
        let n = self.n();
        let g = &self.gamma;
        let lower = JetMatrix::from_fn(n, n, |k, l| {
            let mut acc = g.get(0, k, l).partial(0) - g.get(0, 0, l).partial(k);
            for j in 1..n {
                acc += g.get(j, k, l).partial(j);
                acc -= g.get(j, j, l).partial(k);
            }
            for j in 0..n {
                for m in 0..n {
                    acc += g.get(j, j, m) * g.get(m, k, l);
                    acc -= g.get(j, k, m) * g.get(m, j, l);
                }
            }
            acc
        });
        let gu = self.g_upper();
        let upper = &(gu * &lower) * gu;
        Ricci { lower, upper }
    }

    /// `Ric(w)^j = g^{jk} R_{kl} w^l`.
    pub fn ricci_apply(&self, w: &[Jet]) -> Result<Vec<Jet>> {
        let r = self.ricci()?;
        let rw = r.lower.apply(w);
        Ok(self.g_upper().apply(&rw))
    }

    /// `nabla^j f = g^{jk} d_k f`.
    pub fn gradient(&self, f: &Jet) -> Vec<Jet> {
        let df: Vec<Jet> = (0..self.n()).map(|k| f.partial(k)).collect();
        self.g_upper().apply(&df)
    }

    /// Lowers a vector: `w_k = g_{kl} w^l`.
    pub fn lower(&self, w: &[Jet]) -> Vec<Jet> {
        self.g_lower.apply(w)
    }

    /// Laplace-Beltrami operator written in boundary normal coordinates.
    pub fn laplace_beltrami(&self, f: &Jet) -> Result<Jet> {
        self.require_order("Laplace-Beltrami", 2)?;
        let n = self.n();
        let nn = n - 1;
        let gu = self.g_upper();
        let g = &self.gamma;
        let fn_ = f.partial(nn);
        let mut out = fn_.partial(nn);
        let mut trace_gamma = g.get(0, 0, nn).clone();
        for a in 1..nn {
            trace_gamma += g.get(a, a, nn);
        }
        out += &trace_gamma * &fn_;
        for b in 0..nn {
            let fb = f.partial(b);
            let mut first = gu.get(0, b).partial(0);
            for a in 0..nn {
                if a > 0 {
                    first += gu.get(a, b).partial(a);
                }
                out += gu.get(a, b) * &fb.partial(a);
                for c in 0..nn {
                    first += gu.get(a, b) * g.get(c, c, a);
                }
            }
            out += &first * &fb;
        }
        Ok(out)
    }

    /// `div w = d_k w^k + Gamma^k_{kl} w^l`.
    pub fn divergence(&self, w: &[Jet]) -> Jet {
        let n = self.n();
        let mut out = w[0].partial(0);
        for k in 1..n {
            out += w[k].partial(k);
        }
        for l in 0..n {
            out += &self.gamma.contracted(l) * &w[l];
        }
        out
    }

    /// `nabla_l nabla_k f = d_l d_k f - Gamma^m_{lk} d_m f` and its raised form.
    pub fn scalar_hessian(&self, f: &Jet) -> Result<Hessian> {
        self.require_order("scalar Hessian", 2)?;
        let n = self.n();
        let df: Vec<Jet> = (0..n).map(|k| f.partial(k)).collect();
        let lower = JetMatrix::from_fn(n, n, |l, k| {
            let mut acc = df[k].partial(l);
            for m in 0..n {
                acc -= self.gamma.get(m, l, k) * &df[m];
            }
            acc
        });
        let mixed = self.g_upper() * &lower;
        Ok(Hessian { lower, mixed })
    }

    /// `out[j][k] = nabla_k w^j = d_k w^j + Gamma^j_{kl} w^l`.
    pub fn covariant_derivative(&self, w: &[Jet]) -> JetMatrix {
        let n = self.n();
        JetMatrix::from_fn(n, n, |j, k| {
            let mut acc = w[j].partial(k);
            for l in 0..n {
                acc += self.gamma.get(j, k, l) * &w[l];
            }
            acc
        })
    }

    /// `V^j = nabla^k T^j_k` for a mixed (1,1) tensor `t[j][k] = T^j_k`.
    pub fn divergence_mixed(&self, t: &JetMatrix) -> Vec<Jet> {
        let n = self.n();
        let gu = self.g_upper();
        let g = &self.gamma;
        (0..n)
            .map(|j| {
                let mut acc = self.metric.domain().zero();
                for k in 0..n {
                    for l in 0..n {
                        let gkl = gu.get(k, l);
                        if gkl.is_zero() {
                            continue;
                        }
                        // nabla_l T^j_k
                        let mut d = t.get(j, k).partial(l);
                        for m in 0..n {
                            d += g.get(j, l, m) * t.get(m, k);
                            d -= g.get(m, l, k) * t.get(j, m);
                        }
                        acc += gkl * &d;
                    }
                }
                acc
            })
            .collect()
    }
}

fn christoffel_from(m: &BoundaryNormalMetric, g_lower: &JetMatrix) -> Christoffel {
    let n = m.n;
    // dg[(m * n + k) * n + l] = d_m g_{kl}
    let mut dg = Vec::with_capacity(n * n * n);
    for v in 0..n {
        for k in 0..n {
            for l in 0..n {
                dg.push(g_lower.get(k, l).partial(v));
            }
        }
    }
    let d = |v: usize, k: usize, l: usize| &dg[(v * n + k) * n + l];
    let first_kind: Vec<Jet> = {
        let mut out = Vec::with_capacity(n * n * n);
        for mm in 0..n {
            for k in 0..n {
                for l in 0..n {
                    out.push((d(l, k, mm) + d(k, l, mm) - d(mm, k, l)).scale(0.5));
                }
            }
        }
        out
    };
    let gu = &m.g_upper;
    let mut data = Vec::with_capacity(n * n * n);
    for j in 0..n {
        for k in 0..n {
            for l in 0..n {
                let mut acc: Option<Jet> = None;
                for mm in 0..n {
                    let g = gu.get(j, mm);
                    let term = if g.is_zero() {
                        g.domain().with_order(g.order().min(first_kind[0].order())).zero()
                    } else {
                        g * &first_kind[(mm * n + k) * n + l]
                    };
                    acc = Some(match acc {
                        None => term,
                        Some(a) => a + term,
                    });
                }
                data.push(acc.expect("n >= 1"));
            }
        }
    }
    Christoffel { n, data }
}

/// Christoffel symbols of `m`.
pub fn christoffel(m: &BoundaryNormalMetric) -> Result<Christoffel> {
    let g_lower = lower_metric(m)?;
    Ok(christoffel_from(m, &g_lower))
}

/// Ricci tensor of `m` (order K-2).
pub fn ricci(m: &BoundaryNormalMetric) -> Result<Ricci> {
    Ok(Geometry::new(m)?.ricci()?.clone())
}

pub fn laplace_beltrami(m: &BoundaryNormalMetric, f: &Jet) -> Result<Jet> {
    Geometry::new(m)?.laplace_beltrami(f)
}

pub fn divergence(m: &BoundaryNormalMetric, w: &[Jet]) -> Result<Jet> {
    Ok(Geometry::new(m)?.divergence(w))
}

pub fn scalar_hessian(m: &BoundaryNormalMetric, f: &Jet) -> Result<Hessian> {
    Geometry::new(m)?.scalar_hessian(f)
}

pub fn covariant_derivative_vector(m: &BoundaryNormalMetric, w: &[Jet]) -> Result<JetMatrix> {
    Ok(Geometry::new(m)?.covariant_derivative(w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(n: usize, order: usize) -> BoundaryNormalMetric {
        let d = JetDomain::origin(n, order);
        BoundaryNormalMetric::flat(d.constant(1.0)).unwrap()
    }

    #[test]
    fn boundary_normal_form() {
        let m = flat(3, 3);
        assert_eq!(m.g_upper().get(2, 2).value().re, 1.0);
        assert!(m.g_upper().get(0, 2).is_zero());
        assert_eq!(lower_metric(&m).unwrap(), JetMatrix::identity(&m.domain(), 3));
    }

    #[test]
    fn rejects_invalid_metrics() {
        let d = JetDomain::origin(2, 3);
        let neg = JetMatrix::from_fn(1, 1, |_, _| d.constant(-1.0));
        assert!(BoundaryNormalMetric::new(neg, d.constant(1.0)).is_err());
        let id = JetMatrix::identity(&d, 1);
        assert!(BoundaryNormalMetric::new(id.clone(), d.constant(0.0)).is_err());
        assert!(BoundaryNormalMetric::new(id, d.constant(-2.0)).is_err());
    }

    #[test]
    fn diagonal_lowering_is_geometric_series() {
        let d = JetDomain::origin(2, 2);
        let t = JetMatrix::from_fn(1, 1, |_, _| d.offset(1).add_constant(1.0));
        let m = BoundaryNormalMetric::new(t, d.constant(1.0)).unwrap();
        let gl = lower_metric(&m).unwrap();
        let g11 = gl.get(0, 0);
        assert_eq!(g11.coeff(&[0, 0]).re, 1.0);
        assert_eq!(g11.coeff(&[0, 1]).re, -1.0);
        assert_eq!(g11.coeff(&[0, 2]).re, 1.0);
        assert_eq!(gl.get(1, 1).value().re, 1.0);
    }

    #[test]
    fn flat_connection_and_curvature_vanish() {
        let m = flat(3, 4);
        let geo = Geometry::new(&m).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    assert!(geo.christoffel().get(j, k, l).is_zero());
                }
            }
        }
        assert_eq!(geo.ricci().unwrap().lower.max_norm(), 0.0);
    }

    #[test]
    fn christoffel_of_linear_tangential_metric() {
        // g_11 = 1 + 2 x_2, so g^11 = 1/(1 + 2 x_2) and Gamma^1_{12}(0) = 1.
        let d = JetDomain::origin(2, 3);
        let g11 = (d.offset(1) * 2.0).add_constant(1.0).recip().unwrap();
        let m = BoundaryNormalMetric::new(JetMatrix::from_fn(1, 1, |_, _| g11.clone()), d.constant(1.0)).unwrap();
        let gamma = christoffel(&m).unwrap();
        assert!((gamma.get(0, 0, 1).value().re - 1.0).abs() < 1e-15);
        assert!((gamma.get(0, 1, 0).value().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn flat_laplacian_and_divergence() {
        let m = flat(2, 4);
        let geo = Geometry::new(&m).unwrap();
        let d = m.domain();
        let x1 = d.offset(0);
        let x2 = d.offset(1);
        assert_eq!(geo.laplace_beltrami(&(&x1 * &x1)).unwrap().value().re, 2.0);
        assert!(geo.laplace_beltrami(&(&x1 * &x2)).unwrap().is_zero());
        assert_eq!(geo.divergence(&[x1.clone(), d.zero()]).value().re, 1.0);
        assert!(geo.divergence(&[d.constant(3.0), d.constant(-1.0)]).is_zero());
        let cov = geo.covariant_derivative(&[x1, x2]);
        assert_eq!(cov.max_diff(&JetMatrix::identity(&d, 2)), 0.0);
    }

    #[test]
    fn insufficient_order_is_reported() {
        let m = flat(2, 1);
        let geo = Geometry::new(&m).unwrap();
        assert!(matches!(geo.ricci(), Err(Error::OrderExhausted { .. })));
        assert!(geo.laplace_beltrami(&m.domain().constant(1.0)).is_err());
    }
}
