//! Truncated multivariate Taylor series ("jets") with complex coefficients.
//!
//! A [`Jet`] is the Taylor expansion of a function of `nvars` variables
//! around a base point, truncated at a total degree called its trunc order.
//! Every coefficient of total degree up to the trunc order is exact; nothing
//! above it is known. Products keep the smaller order of their factors and
//! each partial derivative costs one order, so the order attached to a
//! result is always the order it can be trusted to.
//!
//! A trunc order of `-1` marks a jet with no trustworthy coefficients (for
//! example a derivative of an order-0 jet).

mod dense;
mod matrix;
mod space;

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use num_complex::Complex64;

pub use dense::DenseJet;
pub use matrix::JetMatrix;
pub use space::JetSpace;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// The algebra a jet lives in: variables, base point and default trunc order.
///
/// Convenience constructor for jets that must be mutually compatible.
#[derive(Clone, Debug)]
pub struct JetDomain {
    space: Arc<JetSpace>,
    base: Arc<[f64]>,
    order: i32,
}

impl JetDomain {
    pub fn new(base: Vec<f64>, order: usize) -> JetDomain {
        let space = JetSpace::get(base.len(), order);
        JetDomain {
            space,
            base: base.into(),
            order: order as i32,
        }
    }

    /// Domain at the origin of `nvars` variables.
    pub fn origin(nvars: usize, order: usize) -> JetDomain {
        JetDomain::new(vec![0.0; nvars], order)
    }

    pub fn nvars(&self) -> usize {
        self.space.nvars()
    }

    pub fn order(&self) -> i32 {
        self.order
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    /// Same variables and base point, lower default order.
    pub fn with_order(&self, order: i32) -> JetDomain {
        JetDomain {
            space: self.space.clone(),
            base: self.base.clone(),
            order: order.min(self.space.max_order() as i32),
        }
    }

    pub fn zero(&self) -> Jet {
        Jet::zeros(self.space.clone(), self.base.clone(), self.order)
    }

    pub fn constant(&self, value: impl Into<Complex64>) -> Jet {
        let mut j = self.zero();
        if self.order >= 0 {
            j.coeffs[0] = value.into();
        }
        j
    }

    /// The coordinate function of variable `var`, i.e. `base[var] + t_var`.
    pub fn variable(&self, var: usize) -> Jet {
        let mut j = self.offset(var);
        if self.order >= 0 {
            j.coeffs[0] = Complex64::new(self.base[var], 0.0);
        }
        j
    }

    /// The offset `t_var = y_var - base[var]`.
    pub fn offset(&self, var: usize) -> Jet {
        let mut j = self.zero();
        if self.order >= 1 {
            let mut e = vec![0u8; self.nvars()];
            e[var] = 1;
            let idx = self.space.index_of(&e).expect("degree-1 monomial");
            j.coeffs[idx] = Complex64::new(1.0, 0.0);
        }
        j
    }

    /// Jet from explicit `(multi-index, coefficient)` terms.
    ///
    /// Terms above the domain order are dropped; repeated indices accumulate.
    pub fn from_terms<I, C>(&self, terms: I) -> Result<Jet>
    where
        I: IntoIterator<Item = (Vec<u8>, C)>,
        C: Into<Complex64>,
    {
        let mut j = self.zero();
        for (e, c) in terms {
            if e.len() != self.nvars() {
                return Err(Error::Incompatible(format!(
                    "multi-index {:?} has {} entries, expected {}",
                    e,
                    e.len(),
                    self.nvars()
                )));
            }
            let deg: i32 = e.iter().map(|&x| x as i32).sum();
            if deg > j.order {
                continue;
            }
            let idx = self.space.index_of(&e).expect("index within order");
            j.coeffs[idx] += c.into();
        }
        Ok(j)
    }

    /// Builds a jet coefficient by coefficient from a function of the multi-index.
    pub fn from_fn(&self, mut f: impl FnMut(&[u8]) -> Complex64) -> Jet {
        let mut j = self.zero();
        for i in 0..j.coeffs.len() {
            j.coeffs[i] = f(self.space.exponents(i));
        }
        j
    }

    pub fn is_compatible(&self, jet: &Jet) -> bool {
        Arc::ptr_eq(&self.space, &jet.space) && same_base(&self.base, &jet.base)
    }
}

fn same_base(a: &Arc<[f64]>, b: &Arc<[f64]>) -> bool {
    Arc::ptr_eq(a, b) || a[..] == b[..]
}

/// Truncated Taylor expansion with complex coefficients.
#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    base: Arc<[f64]>,
    order: i32,
    coeffs: Vec<Complex64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet(order={}, ", self.order)?;
        f.debug_map().entries(self.terms()).finish()?;
        write!(f, ")")
    }
}

impl Jet {
    fn zeros(space: Arc<JetSpace>, base: Arc<[f64]>, order: i32) -> Jet {
        let order = order.clamp(-1, space.max_order() as i32);
        let len = space.count(order);
        Jet {
            space,
            base,
            order,
            coeffs: vec![ZERO; len],
        }
    }

    fn like(&self, order: i32) -> Jet {
        Jet::zeros(self.space.clone(), self.base.clone(), order)
    }

    pub fn domain(&self) -> JetDomain {
        JetDomain {
            space: self.space.clone(),
            base: self.base.clone(),
            order: self.order,
        }
    }

    pub fn nvars(&self) -> usize {
        self.space.nvars()
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    /// Trunc order; `-1` when nothing is known.
    pub fn order(&self) -> i32 {
        self.order
    }

    pub fn is_exhausted(&self) -> bool {
        self.order < 0
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    /// Coefficient of the monomial with exponents `exps`; zero when absent.
    pub fn coeff(&self, exps: &[u8]) -> Complex64 {
        match self.space.index_of(exps) {
            Some(i) if i < self.coeffs.len() => self.coeffs[i],
            _ => ZERO,
        }
    }

    /// Constant term (value at the base point).
    pub fn value(&self) -> Complex64 {
        self.coeffs.first().copied().unwrap_or(ZERO)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Nonzero terms as `(multi-index, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (&[u8], Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != ZERO)
            .map(move |(i, c)| (self.space.exponents(i), *c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }

    pub fn max_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest imaginary part among the coefficients.
    pub fn max_imag(&self) -> f64 {
        self.coeffs.iter().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    pub fn real_part(&self) -> Jet {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            c.im = 0.0;
        }
        out
    }

    /// Coefficientwise complex conjugate (the conjugate function for real variables).
    pub fn conj(&self) -> Jet {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c = c.conj();
        }
        out
    }

    pub fn check_compatible(&self, other: &Jet) -> Result<()> {
        if !Arc::ptr_eq(&self.space, &other.space) {
            return Err(Error::Incompatible(format!(
                "jet algebras differ ({} vars order {} vs {} vars order {})",
                self.space.nvars(),
                self.space.max_order(),
                other.space.nvars(),
                other.space.max_order()
            )));
        }
        if !same_base(&self.base, &other.base) {
            return Err(Error::Incompatible(format!(
                "base points differ: {:?} vs {:?}",
                self.base, other.base
            )));
        }
        Ok(())
    }

    fn expect_compatible(&self, other: &Jet) {
        if let Err(e) = self.check_compatible(other) {
            panic!("{e}");
        }
    }

    /// Drops every coefficient above `order` (never raises the order).
    pub fn truncate(&self, order: i32) -> Jet {
        let order = order.clamp(-1, self.order);
        let mut out = self.like(order);
        let n = out.coeffs.len();
        out.coeffs.copy_from_slice(&self.coeffs[..n]);
        out
    }

    pub fn try_add(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        Ok(self.add_unchecked(other, 1.0))
    }

    pub fn try_sub(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        Ok(self.add_unchecked(other, -1.0))
    }

    fn add_unchecked(&self, other: &Jet, sign: f64) -> Jet {
        let order = self.order.min(other.order);
        let mut out = self.like(order);
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            *c = self.coeffs[i] + other.coeffs[i] * sign;
        }
        out
    }

    pub fn try_mul(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Jet) -> Jet {
        let order = self.order.min(other.order);
        let mut out = self.like(order);
        if order < 0 {
            return out;
        }
        let space = &*self.space;
        let len = out.coeffs.len();
        let (a, b) = (&self.coeffs, &other.coeffs);
        for i in 0..len {
            let ai = a[i];
            if ai == ZERO {
                continue;
            }
            let limit = space.count(order - space.degree(i) as i32) as u32;
            for &(j, k) in space.products(i) {
                if j >= limit {
                    break;
                }
                let bj = b[j as usize];
                if bj != ZERO {
                    out.coeffs[k as usize] += ai * bj;
                }
            }
        }
        out
    }

    pub fn scale(&self, s: impl Into<Complex64>) -> Jet {
        let s = s.into();
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= s;
        }
        out
    }

    pub fn add_constant(&self, s: impl Into<Complex64>) -> Jet {
        let mut out = self.clone();
        if let Some(c) = out.coeffs.first_mut() {
            *c += s.into();
        }
        out
    }

    /// Formal partial derivative in variable `var`; the result has order one less.
    pub fn partial(&self, var: usize) -> Jet {
        assert!(var < self.nvars(), "variable {var} out of range");
        let mut out = self.like(self.order - 1);
        let len = out.coeffs.len() as u32;
        for &(src, dst, e) in self.space.partial_table(var) {
            if dst >= len {
                continue;
            }
            if (src as usize) < self.coeffs.len() {
                out.coeffs[dst as usize] += self.coeffs[src as usize] * e as f64;
            }
        }
        out
    }

    /// Repeated partial derivative with exponents `exps`.
    pub fn partial_multi(&self, exps: &[u8]) -> Jet {
        let mut out = self.clone();
        for (v, &e) in exps.iter().enumerate() {
            for _ in 0..e {
                out = out.partial(v);
            }
        }
        out
    }

    /// Evaluates `sum c_J (y - base)^J` at the real point `y`.
    pub fn eval(&self, point: &[f64]) -> Complex64 {
        assert_eq!(point.len(), self.nvars());
        let offs: Vec<f64> = point.iter().zip(self.base.iter()).map(|(p, b)| p - b).collect();
        let mut acc = ZERO;
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c == ZERO {
                continue;
            }
            let e = self.space.exponents(i);
            let mut m = 1.0;
            for (o, &k) in offs.iter().zip(e) {
                m *= o.powi(k as i32);
            }
            acc += c * m;
        }
        acc
    }

    /// `sum_k series[k] * self^k` for a jet with zero constant term.
    fn compose_nilpotent(&self, series: &[Complex64]) -> Jet {
        debug_assert!(self.value() == ZERO);
        let mut acc = self.like(self.order);
        if let Some(last) = series.last() {
            acc = acc.add_constant(*last);
        }
        for c in series.iter().rev().skip(1) {
            acc = acc.mul_unchecked(self).add_constant(*c);
        }
        acc
    }

    /// Multiplicative inverse through the trunc order.
    pub fn recip(&self) -> Result<Jet> {
        let a0 = self.value();
        if self.order < 0 {
            return Err(Error::OrderExhausted {
                what: "reciprocal".into(),
                needed: 0,
                have: self.order,
            });
        }
        if a0 == ZERO || !a0.is_finite() {
            return Err(Error::Singular(format!("reciprocal of jet with constant term {a0}")));
        }
        let inv0 = a0.inv();
        let mut t = self.scale(inv0);
        t.coeffs[0] = ZERO;
        let series: Vec<Complex64> = (0..=self.order)
            .map(|k| Complex64::new(if k % 2 == 0 { 1.0 } else { -1.0 }, 0.0))
            .collect();
        Ok(t.compose_nilpotent(&series).scale(inv0))
    }

    /// Square root with positive real constant term.
    pub fn sqrt(&self) -> Result<Jet> {
        let a0 = self.value();
        if self.order < 0 {
            return Err(Error::OrderExhausted {
                what: "square root".into(),
                needed: 0,
                have: self.order,
            });
        }
        if !(a0.re > 0.0) || a0.im.abs() > 1e-14 * a0.re {
            return Err(Error::Singular(format!(
                "square root needs a positive constant term, got {a0}"
            )));
        }
        self.powf(0.5)
    }

    /// Real power `self^p` on the principal branch; the constant term must be nonzero.
    pub fn powf(&self, p: f64) -> Result<Jet> {
        let a0 = self.value();
        if self.order < 0 {
            return Err(Error::OrderExhausted {
                what: "power".into(),
                needed: 0,
                have: self.order,
            });
        }
        if a0 == ZERO || !a0.is_finite() {
            return Err(Error::Singular(format!("power {p} of jet with constant term {a0}")));
        }
        let lead = if a0.im == 0.0 && a0.re > 0.0 {
            Complex64::new(a0.re.powf(p), 0.0)
        } else {
            a0.powf(p)
        };
        let mut t = self.scale(a0.inv());
        t.coeffs[0] = ZERO;
        let mut series = Vec::with_capacity(self.order as usize + 1);
        let mut binom = 1.0;
        for k in 0..=self.order {
            series.push(Complex64::new(binom, 0.0));
            binom *= (p - k as f64) / (k as f64 + 1.0);
        }
        Ok(t.compose_nilpotent(&series).scale(lead))
    }

    /// Integer power by repeated multiplication.
    pub fn powi(&self, k: u32) -> Jet {
        let mut acc = self.domain().constant(1.0);
        for _ in 0..k {
            acc = acc.mul_unchecked(self);
        }
        acc
    }

    /// Maps this jet into another algebra: variable `i` becomes `var_map[i]`.
    ///
    /// The target base point must agree with ours on the mapped variables.
    pub fn embed(&self, target: &JetDomain, var_map: &[usize]) -> Result<Jet> {
        if var_map.len() != self.nvars() {
            return Err(Error::Incompatible("embedding map has wrong length".into()));
        }
        for (i, &v) in var_map.iter().enumerate() {
            if (target.base[v] - self.base[i]).abs() > 0.0 {
                return Err(Error::Incompatible(format!(
                    "embedding moves base coordinate {i}: {} -> {}",
                    self.base[i], target.base[v]
                )));
            }
        }
        let order = self.order.min(target.space.max_order() as i32);
        let mut out = Jet::zeros(target.space.clone(), target.base.clone(), order);
        let mut e = vec![0u8; target.nvars()];
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c == ZERO || self.space.degree(i) as i32 > order {
                continue;
            }
            e.iter_mut().for_each(|x| *x = 0);
            for (k, &x) in self.space.exponents(i).iter().enumerate() {
                e[var_map[k]] = x;
            }
            let idx = target.space.index_of(&e).expect("monomial within order");
            out.coeffs[idx] = *c;
        }
        Ok(out)
    }

    /// Restricts to the variables `keep` (target variable `i` is our variable
    /// `keep[i]`), evaluating every other variable at its base value.
    pub fn restrict(&self, target: &JetDomain, keep: &[usize]) -> Result<Jet> {
        if keep.len() != target.nvars() {
            return Err(Error::Incompatible("restriction map has wrong length".into()));
        }
        for (i, &v) in keep.iter().enumerate() {
            if (target.base[i] - self.base[v]).abs() > 0.0 {
                return Err(Error::Incompatible(
                    "restriction moves a base coordinate".into(),
                ));
            }
        }
        let order = self.order.min(target.space.max_order() as i32);
        let mut out = Jet::zeros(target.space.clone(), target.base.clone(), order);
        let mut e = vec![0u8; target.nvars()];
        'outer: for (i, c) in self.coeffs.iter().enumerate() {
            if *c == ZERO || self.space.degree(i) as i32 > order {
                continue;
            }
            let src = self.space.exponents(i);
            let mut kept = 0u32;
            for (k, &v) in keep.iter().enumerate() {
                e[k] = src[v];
                kept += src[v] as u32;
            }
            let total: u32 = src.iter().map(|&x| x as u32).sum();
            if kept != total {
                continue 'outer;
            }
            let idx = target.space.index_of(&e).expect("monomial within order");
            out.coeffs[idx] = *c;
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> DenseJet {
        DenseJet::from_jet(self)
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Jet) -> bool {
        Arc::ptr_eq(&self.space, &other.space)
            && same_base(&self.base, &other.base)
            && self.order == other.order
            && self.coeffs == other.coeffs
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                self.expect_compatible(rhs);
                $body(self, rhs)
            }
        }
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, |a: &Jet, b: &Jet| a.add_unchecked(b, 1.0));
binop!(Sub, sub, |a: &Jet, b: &Jet| a.add_unchecked(b, -1.0));
binop!(Mul, mul, |a: &Jet, b: &Jet| a.mul_unchecked(b));

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<Complex64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: Complex64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<Complex64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: Complex64) -> Jet {
        self.scale(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        self.expect_compatible(rhs);
        if rhs.order < self.order {
            *self = self.truncate(rhs.order);
        }
        for (c, r) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *c += r;
        }
    }
}

impl AddAssign<Jet> for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self += &rhs;
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        self.expect_compatible(rhs);
        if rhs.order < self.order {
            *self = self.truncate(rhs.order);
        }
        for (c, r) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *c -= r;
        }
    }
}

impl SubAssign<Jet> for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self -= &rhs;
    }
}

/// Max-norm of `a - b` over the coefficients both jets know.
pub fn max_diff(a: &Jet, b: &Jet) -> f64 {
    (a - b).max_norm()
}

/// Largest coefficientwise `|a_e - r_e| / max(1, |r_e|)` over the coefficients
/// both jets know, with `reference` as `r`.
pub fn rel_diff(a: &Jet, reference: &Jet) -> f64 {
    a.check_compatible(reference).expect("compatible jets");
    let order = a.order.min(reference.order);
    let count = a.space.count(order);
    a.coeffs[..count]
        .iter()
        .zip(&reference.coeffs[..count])
        .map(|(x, r)| (x - r).norm() / r.norm().max(1.0))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn cancellation_and_identity() {
        let d = JetDomain::origin(2, 3);
        let x1 = d.offset(0);
        let a = x1.add_constant(1.0);
        let b = (-&x1).add_constant(2.0);
        let s = &a + &b;
        assert_eq!(s, d.constant(3.0));
        assert_eq!(&a + &d.zero(), a);
        assert_eq!(&a * &d.constant(1.0), a);
    }

    #[test]
    fn difference_of_squares() {
        let d = JetDomain::origin(1, 2);
        let x = d.offset(0);
        let p = &x.add_constant(1.0) * &(-&x).add_constant(1.0);
        assert_eq!(p.coeff(&[0]), c(1.0));
        assert_eq!(p.coeff(&[1]), c(0.0));
        assert_eq!(p.coeff(&[2]), c(-1.0));
    }

    #[test]
    fn reciprocal_geometric_series() {
        let d = JetDomain::origin(1, 3);
        let r = d.offset(0).add_constant(1.0).recip().unwrap();
        for (k, want) in [1.0, -1.0, 1.0, -1.0].iter().enumerate() {
            assert_eq!(r.coeff(&[k as u8]), c(*want));
        }
        assert_eq!(d.constant(2.0).recip().unwrap().value(), c(0.5));
    }

    #[test]
    fn sqrt_binomial_series() {
        let d = JetDomain::origin(1, 2);
        let s = (d.offset(0) * 2.0).add_constant(1.0).sqrt().unwrap();
        assert!((s.coeff(&[0]) - c(1.0)).norm() < 1e-15);
        assert!((s.coeff(&[1]) - c(1.0)).norm() < 1e-15);
        assert!((s.coeff(&[2]) - c(-0.5)).norm() < 1e-15);
        assert_eq!(d.constant(4.0).sqrt().unwrap().value(), c(2.0));
    }

    #[test]
    fn singular_inputs_rejected() {
        let d = JetDomain::origin(2, 3);
        assert!(matches!(d.offset(0).recip(), Err(Error::Singular(_))));
        assert!(matches!(d.constant(-1.0).sqrt(), Err(Error::Singular(_))));
        assert!(matches!(d.zero().sqrt(), Err(Error::Singular(_))));
    }

    #[test]
    fn partial_derivatives() {
        let d = JetDomain::origin(2, 4);
        let x1 = d.offset(0);
        let sq = &x1 * &x1;
        let p = sq.partial(0);
        assert_eq!(p.order(), 3);
        assert_eq!(p.coeff(&[1, 0]), c(2.0));
        assert!(d.constant(5.0).partial(1).is_zero());
        let exhausted = d.with_order(0).constant(1.0).partial(0);
        assert_eq!(exhausted.order(), -1);
        assert!(exhausted.coeffs().is_empty());
    }

    #[test]
    fn incompatible_jets_are_rejected() {
        let a = JetDomain::origin(2, 3).constant(1.0);
        let b = JetDomain::new(vec![0.0, 1.0], 3).constant(1.0);
        let c3 = JetDomain::origin(3, 3).constant(1.0);
        assert!(a.try_add(&b).is_err());
        assert!(a.try_mul(&c3).is_err());
    }

    #[test]
    fn order_is_min_of_inputs() {
        let d = JetDomain::origin(2, 5);
        let a = d.variable(0);
        let b = d.with_order(3).variable(1);
        assert_eq!((&a * &b).order(), 3);
        assert_eq!((&a + &b).order(), 3);
        assert_eq!(a.partial(0).order(), 4);
    }

    #[test]
    fn embed_and_restrict() {
        let small = JetDomain::origin(2, 3);
        let big = JetDomain::new(vec![0.0, 0.0, 0.7], 3);
        let f = (&small.offset(0) * &small.offset(1)).add_constant(2.0);
        let g = f.embed(&big, &[0, 1]).unwrap();
        assert_eq!(g.coeff(&[1, 1, 0]), c(1.0));
        let back = g.restrict(&small, &[0, 1]).unwrap();
        assert_eq!(back, f);
        let line = JetDomain::origin(1, 3);
        let r = g.restrict(&line, &[0]).unwrap();
        assert_eq!(r.coeff(&[0]), c(2.0));
        assert_eq!(r.coeff(&[1]), c(0.0));
    }
}
