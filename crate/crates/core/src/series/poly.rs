//! Sparse multivariate Laurent polynomials in the cumulants `c_1, c_2, …`.
//!
//! Only `c_2` ever needs a negative exponent (the saddle series carries
//! powers of `1/c_2`), but the representation allows any integer exponent.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::scalar::Scalar;

/// Exponent vector: entry `i` is the power of `c_{i+1}`; trailing zeros are
/// trimmed so that equal monomials have equal keys.
pub type Exponents = Vec<i32>;

#[derive(Clone, PartialEq, Eq, Default)]
pub struct CumulantPoly {
    terms: BTreeMap<Exponents, BigRational>,
}

fn trim(mut e: Exponents) -> Exponents {
    while e.last() == Some(&0) {
        e.pop();
    }
    e
}

impl CumulantPoly {
    pub fn constant(c: BigRational) -> Self {
        Self::monomial(Vec::new(), c)
    }

    pub fn monomial(exps: Exponents, coeff: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert(trim(exps), coeff);
        }
        CumulantPoly { terms }
    }

    /// The cumulant `c_k` (1-based).
    pub fn var(k: usize) -> Self {
        Self::var_pow(k, 1)
    }

    /// `c_k^p` for any integer `p`.
    pub fn var_pow(k: usize, p: i32) -> Self {
        assert!(k >= 1, "cumulants are 1-based");
        let mut e = vec![0; k];
        e[k - 1] = p;
        Self::monomial(e, BigRational::one())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &BigRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Power of `c_k` in a monomial key.
    pub fn exponent(exps: &Exponents, k: usize) -> i32 {
        exps.get(k - 1).copied().unwrap_or(0)
    }

    /// Substitute exact values for `c_1, c_2, …`.
    pub fn evaluate(&self, c: &[BigRational]) -> BigRational {
        let mut total = BigRational::zero();
        for (e, coeff) in &self.terms {
            let mut v = coeff.clone();
            for (i, &p) in e.iter().enumerate() {
                if p == 0 {
                    continue;
                }
                let base = &c[i];
                let pw = num_traits::pow(base.clone(), p.unsigned_abs() as usize);
                v *= if p > 0 { pw } else { pw.recip() };
            }
            total += v;
        }
        total
    }

    fn add_term(&mut self, e: Exponents, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(e);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }
}

impl fmt::Debug for CumulantPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (i, p) in e.iter().enumerate() {
                match p {
                    0 => {}
                    1 => write!(f, "·c{}", i + 1)?,
                    _ => write!(f, "·c{}^{}", i + 1, p)?,
                }
            }
        }
        Ok(())
    }
}

impl Add for CumulantPoly {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (e, c) in rhs.terms {
            self.add_term(e, c);
        }
        self
    }
}

impl Sub for CumulantPoly {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for CumulantPoly {
    type Output = Self;
    fn neg(mut self) -> Self {
        for c in self.terms.values_mut() {
            *c = -c.clone();
        }
        self
    }
}

impl Mul for CumulantPoly {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = CumulantPoly::default();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let n = ea.len().max(eb.len());
                let e: Exponents = (0..n)
                    .map(|i| ea.get(i).copied().unwrap_or(0) + eb.get(i).copied().unwrap_or(0))
                    .collect();
                out.add_term(trim(e), ca * cb);
            }
        }
        out
    }
}

impl Zero for CumulantPoly {
    fn zero() -> Self {
        CumulantPoly::default()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl One for CumulantPoly {
    fn one() -> Self {
        Self::constant(BigRational::one())
    }
}

impl Scalar for CumulantPoly {
    fn from_ratio(r: &BigRational) -> Self {
        Self::constant(r.clone())
    }

    fn scale_i64(&self, k: i64) -> Self {
        if k == 0 {
            return Self::zero();
        }
        let k = BigRational::from_integer(BigInt::from(k));
        CumulantPoly {
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * &k)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn laurent_arithmetic() {
        let c2 = CumulantPoly::var(2);
        let inv = CumulantPoly::var_pow(2, -1);
        assert_eq!(c2.clone() * inv, CumulantPoly::one());
        let c3 = CumulantPoly::var(3);
        let p = (c3.clone() + c2.clone()) * (c3.clone() - c2.clone());
        let q = c3.clone() * c3 - c2.clone() * c2;
        assert_eq!(p, q);
        assert!((p.clone() - q).is_zero());
        let vals = vec![rat(0, 1), rat(2, 1), rat(5, 1)];
        assert_eq!(p.evaluate(&vals), rat(21, 1));
    }
}
