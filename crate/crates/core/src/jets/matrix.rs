use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use super::{Jet, JetDomain};
use crate::error::{Error, Result};

/// Dense row-major matrix of jets.
#[derive(Clone, Debug, PartialEq)]
pub struct JetMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Jet>,
}

impl JetMatrix {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Jet) -> JetMatrix {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        JetMatrix { rows, cols, data }
    }

    pub fn zeros(domain: &JetDomain, rows: usize, cols: usize) -> JetMatrix {
        JetMatrix::from_fn(rows, cols, |_, _| domain.zero())
    }

    pub fn identity(domain: &JetDomain, n: usize) -> JetMatrix {
        JetMatrix::from_fn(n, n, |i, j| {
            if i == j {
                domain.constant(1.0)
            } else {
                domain.zero()
            }
        })
    }

    /// `s * I`.
    pub fn scalar(s: &Jet, n: usize) -> JetMatrix {
        let zero = s.domain().zero();
        JetMatrix::from_fn(n, n, |i, j| if i == j { s.clone() } else { zero.clone() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Jet {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Jet) {
        self.data[i * self.cols + j] = value;
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut Jet {
        &mut self.data[i * self.cols + j]
    }

    pub fn entries(&self) -> &[Jet] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> JetMatrix {
        JetMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn scale(&self, s: &Jet) -> JetMatrix {
        self.map(|e| s * e)
    }

    pub fn scale_by(&self, s: impl Into<Complex64> + Copy) -> JetMatrix {
        self.map(|e| e.scale(s))
    }

    pub fn partial(&self, var: usize) -> JetMatrix {
        self.map(|e| e.partial(var))
    }

    pub fn partial_multi(&self, exps: &[u8]) -> JetMatrix {
        self.map(|e| e.partial_multi(exps))
    }

    pub fn transpose(&self) -> JetMatrix {
        JetMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn trace(&self) -> Jet {
        assert_eq!(self.rows, self.cols);
        let mut acc = self.get(0, 0).clone();
        for i in 1..self.rows {
            acc += self.get(i, i);
        }
        acc
    }

    /// Smallest trunc order among the entries.
    pub fn order(&self) -> i32 {
        self.data.iter().map(Jet::order).min().unwrap_or(-1)
    }

    pub fn max_norm(&self) -> f64 {
        self.data.iter().map(Jet::max_norm).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(Jet::max_imag).fold(0.0, f64::max)
    }

    pub fn truncate(&self, order: i32) -> JetMatrix {
        self.map(|e| e.truncate(order))
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Jet]) -> Vec<Jet> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut acc: Option<Jet> = None;
                for (j, vj) in v.iter().enumerate() {
                    let a = self.get(i, j);
                    let term = if a.is_zero() || vj.is_zero() {
                        a.domain().with_order(a.order().min(vj.order())).zero()
                    } else {
                        a * vj
                    };
                    acc = Some(match acc {
                        None => term,
                        Some(s) => s + term,
                    });
                }
                acc.expect("non-empty row")
            })
            .collect()
    }

    fn mul_matrix(&self, other: &JetMatrix) -> JetMatrix {
        assert_eq!(self.cols, other.rows, "matrix shapes");
        JetMatrix::from_fn(self.rows, other.cols, |i, j| {
            let mut acc: Option<Jet> = None;
            for k in 0..self.cols {
                let a = self.get(i, k);
                let b = other.get(k, j);
                let term = if a.is_zero() || b.is_zero() {
                    a.domain().with_order(a.order().min(b.order())).zero()
                } else {
                    a * b
                };
                acc = Some(match acc {
                    None => term,
                    Some(s) => s + term,
                });
            }
            acc.expect("non-empty product")
        })
    }

    /// Inverse by Gauss-Jordan elimination, pivoting on base-point magnitudes.
    pub fn inverse(&self) -> Result<JetMatrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let domain = self.get(0, 0).domain();
        let mut a = self.clone();
        let mut inv = JetMatrix::identity(&domain, n);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&r, &s| {
                    a.get(r, col)
                        .value()
                        .norm()
                        .total_cmp(&a.get(s, col).value().norm())
                })
                .expect("non-empty");
            if a.get(pivot, col).value().norm() == 0.0 {
                return Err(Error::Singular("matrix singular at base point".into()));
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                    inv.data.swap(pivot * n + j, col * n + j);
                }
            }
            let p = a.get(col, col).recip()?;
            for j in 0..n {
                let v = a.get(col, j) * &p;
                a.set(col, j, v);
                let w = inv.get(col, j) * &p;
                inv.set(col, j, w);
            }
            for r in 0..n {
                if r == col || a.get(r, col).is_zero() {
                    continue;
                }
                let factor = a.get(r, col).clone();
                for j in 0..n {
                    let v = a.get(r, j) - &(&factor * a.get(col, j));
                    a.set(r, j, v);
                    let w = inv.get(r, j) - &(&factor * inv.get(col, j));
                    inv.set(r, j, w);
                }
            }
        }
        Ok(inv)
    }

    /// Determinant by cofactor expansion (small matrices only).
    pub fn determinant(&self) -> Jet {
        assert_eq!(self.rows, self.cols);
        match self.rows {
            1 => self.get(0, 0).clone(),
            n => {
                let mut acc = self.get(0, 0).domain().zero();
                for j in 0..n {
                    let minor = JetMatrix::from_fn(n - 1, n - 1, |r, c| {
                        self.get(r + 1, if c < j { c } else { c + 1 }).clone()
                    });
                    let term = self.get(0, j) * &minor.determinant();
                    if j % 2 == 0 {
                        acc += term;
                    } else {
                        acc -= term;
                    }
                }
                acc
            }
        }
    }

    pub fn max_diff(&self, other: &JetMatrix) -> f64 {
        (self - other).max_norm()
    }
}

impl Add<&JetMatrix> for &JetMatrix {
    type Output = JetMatrix;
    fn add(self, rhs: &JetMatrix) -> JetMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        JetMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j) + rhs.get(i, j))
    }
}

impl Sub<&JetMatrix> for &JetMatrix {
    type Output = JetMatrix;
    fn sub(self, rhs: &JetMatrix) -> JetMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        JetMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j) - rhs.get(i, j))
    }
}

impl Mul<&JetMatrix> for &JetMatrix {
    type Output = JetMatrix;
    fn mul(self, rhs: &JetMatrix) -> JetMatrix {
        self.mul_matrix(rhs)
    }
}

impl Add for JetMatrix {
    type Output = JetMatrix;
    fn add(self, rhs: JetMatrix) -> JetMatrix {
        &self + &rhs
    }
}

impl Sub for JetMatrix {
    type Output = JetMatrix;
    fn sub(self, rhs: JetMatrix) -> JetMatrix {
        &self - &rhs
    }
}

impl Mul for JetMatrix {
    type Output = JetMatrix;
    fn mul(self, rhs: JetMatrix) -> JetMatrix {
        &self * &rhs
    }
}
