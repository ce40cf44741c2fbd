//! Truncated Taylor numbers used to differentiate coefficient expressions.
//!
//! [`Jet2`] carries a value, gradient and Hessian with respect to the chart
//! coordinates; [`Jet1`] carries value and gradient only. Both implement
//! [`Real`], so expression evaluation and the small dense solvers in
//! [`crate::linalg`] work on plain `f64` and on jets alike.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic needed by expression evaluation and jet linear algebra.
pub trait Real:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// A constant with the same shape (number of variables) as `self`.
    fn lift(&self, c: f64) -> Self;
    /// The zeroth-order part.
    fn value(&self) -> f64;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn powi(&self, k: i32) -> Self;
    fn scale(&self, c: f64) -> Self {
        self.clone() * self.lift(c)
    }
}

impl Real for f64 {
    fn lift(&self, c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn powi(&self, k: i32) -> Self {
        f64::powi(*self, k)
    }
    fn scale(&self, c: f64) -> Self {
        self * c
    }
}

/// Value, first derivatives, and second derivatives of a scalar at a point.
///
/// The Hessian is stored row-major and is symmetric exactly: every update
/// computes the upper triangle and mirrors it.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl Jet2 {
    pub fn constant(n: usize, c: f64) -> Self {
        Jet2 {
            value: c,
            grad: vec![0.0; n],
            hess: vec![0.0; n * n],
        }
    }

    /// The coordinate function `x_i` evaluated at `value`.
    pub fn variable(n: usize, i: usize, value: f64) -> Self {
        let mut j = Jet2::constant(n, value);
        j.grad[i] = 1.0;
        j
    }

    /// Seeds all coordinates of the point `p`.
    pub fn coordinates(p: &[f64]) -> Vec<Jet2> {
        let n = p.len();
        p.iter()
            .enumerate()
            .map(|(i, &v)| Jet2::variable(n, i, v))
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn hess_at(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim() + j]
    }

    /// `∂_i` of this jet, which is known to first order.
    pub fn partial(&self, i: usize) -> Jet1 {
        let n = self.dim();
        Jet1 {
            value: self.grad[i],
            grad: self.hess[i * n..(i + 1) * n].to_vec(),
        }
    }

    pub fn truncate(&self) -> Jet1 {
        Jet1 {
            value: self.value,
            grad: self.grad.clone(),
        }
    }

    /// Applies a scalar function given its value and first two derivatives
    /// at `self.value`.
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Jet2 {
        let n = self.dim();
        let grad: Vec<f64> = self.grad.iter().map(|g| f1 * g).collect();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f1 * self.hess[i * n + j] + f2 * self.grad[i] * self.grad[j];
                hess[i * n + j] = v;
                hess[j * n + i] = v;
            }
        }
        Jet2 {
            value: f0,
            grad,
            hess,
        }
    }

    fn recip(&self) -> Jet2 {
        let v = self.value;
        self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }
}

fn combine_dims(a: usize, b: usize) -> usize {
    assert_eq!(a, b, "jet dimension mismatch");
    a
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(mut self, rhs: Jet2) -> Jet2 {
        combine_dims(self.dim(), rhs.dim());
        self.value += rhs.value;
        self.grad.iter_mut().zip(&rhs.grad).for_each(|(a, b)| *a += b);
        self.hess.iter_mut().zip(&rhs.hess).for_each(|(a, b)| *a += b);
        self
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(mut self, rhs: Jet2) -> Jet2 {
        combine_dims(self.dim(), rhs.dim());
        self.value -= rhs.value;
        self.grad.iter_mut().zip(&rhs.grad).for_each(|(a, b)| *a -= b);
        self.hess.iter_mut().zip(&rhs.hess).for_each(|(a, b)| *a -= b);
        self
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: Jet2) -> Jet2 {
        let n = combine_dims(self.dim(), rhs.dim());
        let (a, b) = (&self, &rhs);
        let grad: Vec<f64> = (0..n)
            .map(|i| a.value * b.grad[i] + b.value * a.grad[i])
            .collect();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = a.value * b.hess[i * n + j]
                    + b.value * a.hess[i * n + j]
                    + a.grad[i] * b.grad[j]
                    + a.grad[j] * b.grad[i];
                hess[i * n + j] = v;
                hess[j * n + i] = v;
            }
        }
        Jet2 {
            value: a.value * b.value,
            grad,
            hess,
        }
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, rhs: Jet2) -> Jet2 {
        self * rhs.recip()
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(mut self) -> Jet2 {
        self.value = -self.value;
        self.grad.iter_mut().for_each(|g| *g = -*g);
        self.hess.iter_mut().for_each(|h| *h = -*h);
        self
    }
}

impl Real for Jet2 {
    fn lift(&self, c: f64) -> Self {
        Jet2::constant(self.dim(), c)
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }
    fn ln(&self) -> Self {
        let v = self.value;
        self.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
    }
    fn sin(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }
    fn sqrt(&self) -> Self {
        let r = self.value.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * self.value))
    }
    fn powi(&self, k: i32) -> Self {
        let v = self.value;
        let (f0, f1, f2) = power_derivatives(v, k);
        self.chain(f0, f1, f2)
    }
    fn scale(&self, c: f64) -> Self {
        Jet2 {
            value: self.value * c,
            grad: self.grad.iter().map(|g| g * c).collect(),
            hess: self.hess.iter().map(|h| h * c).collect(),
        }
    }
}

/// `v^k` and its first two derivatives, avoiding `0 * inf` at `v = 0`.
fn power_derivatives(v: f64, k: i32) -> (f64, f64, f64) {
    match k {
        0 => (1.0, 0.0, 0.0),
        1 => (v, 1.0, 0.0),
        _ => {
            let kf = k as f64;
            (v.powi(k), kf * v.powi(k - 1), kf * (kf - 1.0) * v.powi(k - 2))
        }
    }
}

/// Value and gradient of a scalar at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet1 {
    pub value: f64,
    pub grad: Vec<f64>,
}

impl Jet1 {
    pub fn constant(n: usize, c: f64) -> Self {
        Jet1 {
            value: c,
            grad: vec![0.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    fn chain(&self, f0: f64, f1: f64) -> Jet1 {
        Jet1 {
            value: f0,
            grad: self.grad.iter().map(|g| f1 * g).collect(),
        }
    }
}

impl Add for Jet1 {
    type Output = Jet1;
    fn add(mut self, rhs: Jet1) -> Jet1 {
        combine_dims(self.dim(), rhs.dim());
        self.value += rhs.value;
        self.grad.iter_mut().zip(&rhs.grad).for_each(|(a, b)| *a += b);
        self
    }
}

impl Sub for Jet1 {
    type Output = Jet1;
    fn sub(mut self, rhs: Jet1) -> Jet1 {
        combine_dims(self.dim(), rhs.dim());
        self.value -= rhs.value;
        self.grad.iter_mut().zip(&rhs.grad).for_each(|(a, b)| *a -= b);
        self
    }
}

impl Mul for Jet1 {
    type Output = Jet1;
    fn mul(self, rhs: Jet1) -> Jet1 {
        combine_dims(self.dim(), rhs.dim());
        let grad = self
            .grad
            .iter()
            .zip(&rhs.grad)
            .map(|(a, b)| self.value * b + rhs.value * a)
            .collect();
        Jet1 {
            value: self.value * rhs.value,
            grad,
        }
    }
}

impl Div for Jet1 {
    type Output = Jet1;
    fn div(self, rhs: Jet1) -> Jet1 {
        let v = rhs.value;
        self * rhs.chain(1.0 / v, -1.0 / (v * v))
    }
}

impl Neg for Jet1 {
    type Output = Jet1;
    fn neg(mut self) -> Jet1 {
        self.value = -self.value;
        self.grad.iter_mut().for_each(|g| *g = -*g);
        self
    }
}

impl Real for Jet1 {
    fn lift(&self, c: f64) -> Self {
        Jet1::constant(self.dim(), c)
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e, e)
    }
    fn ln(&self) -> Self {
        self.chain(self.value.ln(), 1.0 / self.value)
    }
    fn sin(&self) -> Self {
        self.chain(self.value.sin(), self.value.cos())
    }
    fn cos(&self) -> Self {
        self.chain(self.value.cos(), -self.value.sin())
    }
    fn sqrt(&self) -> Self {
        let r = self.value.sqrt();
        self.chain(r, 0.5 / r)
    }
    fn powi(&self, k: i32) -> Self {
        let (f0, f1, _) = power_derivatives(self.value, k);
        self.chain(f0, f1)
    }
    fn scale(&self, c: f64) -> Self {
        Jet1 {
            value: self.value * c,
            grad: self.grad.iter().map(|g| g * c).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_second_order() {
        let x = Jet2::coordinates(&[2.0, 3.0]);
        let f = x[0].clone() * x[1].clone();
        assert_eq!(f.value, 6.0);
        assert_eq!(f.grad, vec![3.0, 2.0]);
        assert_eq!(f.hess, vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn quotient_and_sqrt() {
        let x = Jet2::coordinates(&[4.0]);
        let f = x[0].sqrt();
        assert!((f.value - 2.0).abs() < 1e-15);
        assert!((f.grad[0] - 0.25).abs() < 1e-15);
        assert!((f.hess[0] + 1.0 / 32.0).abs() < 1e-15);
        let g = x[0].lift(1.0) / x[0].clone();
        assert!((g.hess[0] - 2.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn partial_drops_one_order() {
        let x = Jet2::coordinates(&[1.0, 2.0]);
        let f = x[0].powi(3) * x[1].clone();
        let d0 = f.partial(0);
        assert_eq!(d0.value, 6.0);
        assert_eq!(d0.grad, vec![12.0, 3.0]);
    }

    #[test]
    fn powi_at_zero_is_finite() {
        let x = Jet2::coordinates(&[0.0]);
        let f = x[0].powi(1);
        assert_eq!(f.hess[0], 0.0);
        let g = x[0].powi(2);
        assert_eq!(g.hess[0], 2.0);
    }
}
