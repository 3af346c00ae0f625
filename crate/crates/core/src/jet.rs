//! Truncated Taylor series ("jets") in one variable.
//!
//! A jet stores normalized Taylor coefficients `f_k = f^{(k)}(t0) / k!`.
//! All derivatives of the cumulant generating function are produced by jet
//! arithmetic, so no finite differences are taken on the model side.

use std::ops::{Add, Mul, Neg, Sub};

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Jet<T> {
    pub coeffs: Vec<T>,
}

impl<T: Scalar> Jet<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "jet must have at least one coefficient");
        Jet { coeffs }
    }

    pub fn constant(c: T, len: usize) -> Self {
        let mut coeffs = vec![T::zero(); len];
        coeffs[0] = c;
        Jet { coeffs }
    }

    pub fn zero(len: usize) -> Self {
        Jet {
            coeffs: vec![T::zero(); len],
        }
    }

    /// Jet of `t0 + tau`.
    pub fn variable(t0: T, len: usize) -> Self {
        let mut j = Self::constant(t0, len);
        if len > 1 {
            j.coeffs[1] = T::one();
        }
        j
    }

    /// Jet from plain derivatives `f^{(k)}(t0)`.
    pub fn from_derivatives(derivs: &[T]) -> Self {
        let coeffs = derivs
            .iter()
            .enumerate()
            .map(|(k, d)| d.clone() * recip_factorial::<T>(k))
            .collect();
        Jet { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn value(&self) -> &T {
        &self.coeffs[0]
    }

    /// `f^{(k)}(t0)`.
    pub fn derivative_at(&self, k: usize) -> T {
        let mut v = self.coeffs[k].clone();
        for i in 2..=k {
            v = v.scale_i64(i as i64);
        }
        v
    }

    pub fn truncate(&self, len: usize) -> Self {
        Jet {
            coeffs: self.coeffs[..len.min(self.len())].to_vec(),
        }
    }

    pub fn scale(&self, c: &T) -> Self {
        Jet {
            coeffs: self.coeffs.iter().map(|x| x.clone() * c.clone()).collect(),
        }
    }

    /// d/dt; the result is one coefficient shorter.
    pub fn diff(&self) -> Self {
        if self.len() == 1 {
            return Jet::zero(1);
        }
        Jet {
            coeffs: (1..self.len())
                .map(|k| self.coeffs[k].scale_i64(k as i64))
                .collect(),
        }
    }

    /// d²/dt²; the result is two coefficients shorter.
    pub fn diff2(&self) -> Self {
        self.diff().diff()
    }

    /// Multiplicative inverse given the inverse of the constant term.
    pub fn recip_with(&self, inv0: &T) -> Self {
        let n = self.len();
        let mut r: Vec<T> = Vec::with_capacity(n);
        r.push(inv0.clone());
        for k in 1..n {
            let mut acc = T::zero();
            for j in 1..=k {
                acc = acc + self.coeffs[j].clone() * r[k - j].clone();
            }
            r.push(-(acc * inv0.clone()));
        }
        Jet { coeffs: r }
    }

    /// `self / other` given the inverse of `other`'s constant term.
    pub fn div_with(&self, other: &Self, inv0: &T) -> Self {
        let n = self.len().min(other.len());
        let a = self.truncate(n);
        let b = other.truncate(n);
        a * b.recip_with(inv0)
    }

    /// `d/dt log f = f'/f`, given the inverse of `f(t0)`.
    pub fn dlog_with(&self, inv0: &T) -> Self {
        let d = self.diff();
        d.div_with(&self.truncate(self.len() - 1), inv0)
    }
}

fn recip_factorial<T: Scalar>(k: usize) -> T {
    let mut f: i64 = 1;
    let mut out = T::one();
    for i in 2..=k {
        // keep the product exact for the rational types
        if let Some(v) = f.checked_mul(i as i64) {
            f = v;
        } else {
            out = out * T::from_frac(1, f);
            f = i as i64;
        }
    }
    out * T::from_frac(1, f)
}

impl<T: Scalar> Add for Jet<T> {
    type Output = Jet<T>;
    fn add(self, rhs: Self) -> Self {
        let n = self.len().min(rhs.len());
        Jet {
            coeffs: (0..n)
                .map(|k| self.coeffs[k].clone() + rhs.coeffs[k].clone())
                .collect(),
        }
    }
}

impl<T: Scalar> Sub for Jet<T> {
    type Output = Jet<T>;
    fn sub(self, rhs: Self) -> Self {
        let n = self.len().min(rhs.len());
        Jet {
            coeffs: (0..n)
                .map(|k| self.coeffs[k].clone() - rhs.coeffs[k].clone())
                .collect(),
        }
    }
}

impl<T: Scalar> Neg for Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Self {
        Jet {
            coeffs: self.coeffs.into_iter().map(|x| -x).collect(),
        }
    }
}

impl<T: Scalar> Mul for Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: Self) -> Self {
        let n = self.len().min(rhs.len());
        let coeffs = (0..n)
            .map(|k| {
                let mut acc = T::zero();
                for j in 0..=k {
                    acc = acc + self.coeffs[j].clone() * rhs.coeffs[k - j].clone();
                }
                acc
            })
            .collect();
        Jet { coeffs }
    }
}

impl Jet<f64> {
    /// Jet of `log cosh(y0 + tau)`, numerically stable for large `|y0|`.
    pub fn log_cosh_at(y0: f64, len: usize) -> Self {
        let th = Self::tanh_at(y0, len);
        let mut c = vec![0.0; len];
        c[0] = log_cosh(y0);
        // (log cosh)' = tanh
        for k in 1..len {
            c[k] = th.coeffs[k - 1] / k as f64;
        }
        Jet { coeffs: c }
    }

    /// Jet of `tanh(y0 + tau)` from the Riccati equation `T' = 1 - T²`.
    pub fn tanh_at(y0: f64, len: usize) -> Self {
        let mut t = vec![0.0; len];
        t[0] = y0.tanh();
        for k in 0..len.saturating_sub(1) {
            let mut sq = 0.0;
            for j in 0..=k {
                sq += t[j] * t[k - j];
            }
            // 1 - tanh² cancels for large |y0|; use sech² directly
            let rhs = if k == 0 { sech2(y0) } else { -sq };
            t[k + 1] = rhs / (k + 1) as f64;
        }
        Jet { coeffs: t }
    }

    /// Evaluate the Taylor polynomial at offset `tau`.
    pub fn eval(&self, tau: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * tau + c)
    }

    pub fn ln(&self) -> Self {
        let inv0 = 1.0 / self.coeffs[0];
        let d = self.dlog_with(&inv0);
        let mut c = vec![0.0; self.len()];
        c[0] = self.coeffs[0].ln();
        for k in 1..self.len() {
            c[k] = d.coeffs[k - 1] / k as f64;
        }
        Jet { coeffs: c }
    }
}

/// `log cosh x` without overflow.
pub fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `sech² x` without overflow.
pub fn sech2(x: f64) -> f64 {
    let a = x.abs();
    let e = (-2.0 * a).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn tanh_jet_matches_series_at_zero() {
        // tanh x = x - x^3/3 + 2x^5/15 - 17x^7/315
        let j = Jet::tanh_at(0.0, 8);
        let expect = [0.0, 1.0, 0.0, -1.0 / 3.0, 0.0, 2.0 / 15.0, 0.0, -17.0 / 315.0];
        for (a, b) in j.coeffs.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn log_cosh_jet_derivatives_match_finite_differences() {
        let y = 0.8;
        let j = Jet::log_cosh_at(y, 4);
        let h = 1e-4;
        let fd2 = (log_cosh(y + h) - 2.0 * log_cosh(y) + log_cosh(y - h)) / (h * h);
        assert!((j.derivative_at(2) - fd2).abs() < 1e-6);
        assert!((j.derivative_at(2) - sech2(y)).abs() < 1e-14);
    }

    #[test]
    fn recip_and_log_are_consistent() {
        let f = Jet::new(vec![2.0, 0.5, -0.25, 0.125]);
        let g = f.recip_with(&0.5);
        let one = f.clone() * g;
        assert!((one.coeffs[0] - 1.0).abs() < 1e-15);
        for c in &one.coeffs[1..] {
            assert!(c.abs() < 1e-15);
        }
        let l = f.ln();
        assert!((l.coeffs[0] - 2f64.ln()).abs() < 1e-15);
        assert!((l.coeffs[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn exact_jets_use_rationals() {
        let d: Vec<BigRational> = (1..=4).map(|k| BigRational::from_integer(k.into())).collect();
        let j = Jet::from_derivatives(&d);
        assert_eq!(j.coeffs[3], BigRational::new(4.into(), 6.into()));
        assert_eq!(j.derivative_at(3), BigRational::from_integer(4.into()));
    }
}
