//! Minimal ring/field abstraction shared by the exact and floating code paths.
//!
//! The series machinery, the moment recurrences and the orthogonal-polynomial
//! recurrences are written once over [`Scalar`] and instantiated with `f64`,
//! exact rationals, complex numbers, or symbolic cumulant polynomials.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Commutative ring with a canonical embedding of the rationals.
pub trait Scalar:
    Clone
    + Debug
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn from_ratio(r: &BigRational) -> Self;

    fn from_i64(i: i64) -> Self {
        Self::from_ratio(&BigRational::from_integer(BigInt::from(i)))
    }

    fn from_frac(num: i64, den: i64) -> Self {
        Self::from_ratio(&BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// Multiply by a small integer.
    fn scale_i64(&self, k: i64) -> Self {
        self.clone() * Self::from_i64(k)
    }
}

/// A [`Scalar`] with exact or floating division.
pub trait Field: Scalar + Div<Output = Self> {}

impl<T: Scalar + Div<Output = T>> Field for T {}

impl Scalar for f64 {
    fn from_ratio(r: &BigRational) -> Self {
        ratio_to_f64(r)
    }
    fn from_i64(i: i64) -> Self {
        i as f64
    }
    fn from_frac(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn scale_i64(&self, k: i64) -> Self {
        self * k as f64
    }
}

impl Scalar for BigRational {
    fn from_ratio(r: &BigRational) -> Self {
        r.clone()
    }
}

impl<T> Scalar for Complex<T>
where
    T: Scalar + num_traits::Num,
{
    fn from_ratio(r: &BigRational) -> Self {
        Complex::new(T::from_ratio(r), T::zero())
    }
}

/// Nearest `f64` to a rational, robust to numerators/denominators that
/// overflow `f64` on their own.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    // Align both to ~60 significant bits before dividing.
    let shift_n = (nb - 60).max(0);
    let shift_d = (db - 60).max(0);
    let n = (r.numer() >> shift_n as usize).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> shift_d as usize).to_f64().unwrap_or(1.0);
    let e = (shift_n - shift_d) as i32;
    (n / d) * 2f64.powi(e)
}

/// Exact rational value of a finite `f64`.
pub fn f64_to_ratio(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(BigRational::zero)
}
