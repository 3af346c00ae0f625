//! Small-s Taylor series of the Lanczos functions.
//!
//! `α(s) = c_1 + Σ a_n s^{n+1}` and `β²(s) = Σ b_n s^{n+1}` are obtained by
//! inverting the saddle series `ε(ξ)` and solving the one-cut integral
//! equations order by order. Everything is generic over [`Scalar`], so the
//! same code runs on floats, exact rationals and symbolic cumulants.

pub mod poly;
pub mod table;

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::binomial;
use crate::jet::Jet;
use crate::scalar::{f64_to_ratio, ratio_to_f64, Field, Scalar};

pub use poly::CumulantPoly;
pub use table::{partition_coefficients, table1_transcription, PartitionTerm, Which};

/// Default and maximum order of the Taylor series.
pub const DEFAULT_N_MAX: usize = 6;

/// Coefficients `e_1..e_K` of `ξ = Σ e_k (ε − c_1)^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseSaddleSeries<T> {
    pub e: Vec<T>,
}

/// Taylor coefficients of the Lanczos functions.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCoefficients<T> {
    pub c1: T,
    pub a: Vec<T>,
    pub b: Vec<T>,
    pub exact: bool,
}

impl SeriesCoefficients<f64> {
    pub fn alpha(&self, s: f64) -> f64 {
        self.c1 + s * horner(&self.a, s)
    }

    pub fn beta2(&self, s: f64) -> f64 {
        s * horner(&self.b, s)
    }
}

impl SeriesCoefficients<BigRational> {
    pub fn to_f64(&self) -> SeriesCoefficients<f64> {
        SeriesCoefficients {
            c1: ratio_to_f64(&self.c1),
            a: self.a.iter().map(ratio_to_f64).collect(),
            b: self.b.iter().map(ratio_to_f64).collect(),
            exact: self.exact,
        }
    }
}

fn horner(c: &[f64], s: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * s + v)
}

/// Reversion of `ε − c_1 = Σ_{n≥1} c_{n+1} ξ^n / n!`, given `1/c_2`.
///
/// Uses `e_k = −e_1 [δ^k] Σ_{n≥2} (c_{n+1}/n!) ξ(δ)^n`; the coefficient of
/// `δ^k` in `ξ^n` only involves `e_1..e_{k−n+1}`, so the powers are built
/// up one order at a time.
pub fn invert_saddle_generic<T: Scalar>(c: &[T], inv_c2: &T, k_max: usize) -> Result<InverseSaddleSeries<T>> {
    if c.len() < k_max + 1 {
        return Err(Error::Arity {
            needed: k_max + 1,
            got: c.len(),
        });
    }
    // pow[n][k] = [δ^k] ξ^n for n ≥ 1
    let mut pow: Vec<Vec<T>> = vec![vec![T::zero(); k_max + 1]; k_max + 1];
    let mut e: Vec<T> = Vec::with_capacity(k_max);
    let mut inv_fact = T::one();
    let mut inv_facts = vec![T::one(); k_max + 1];
    for (n, f) in inv_facts.iter_mut().enumerate().skip(1) {
        inv_fact = inv_fact * T::from_frac(1, n as i64);
        *f = inv_fact.clone();
    }
    for k in 1..=k_max {
        for n in 2..=k {
            let mut acc = T::zero();
            for j in 1..=k - n + 1 {
                acc = acc + e[j - 1].clone() * pow[n - 1][k - j].clone();
            }
            pow[n][k] = acc;
        }
        let ek = if k == 1 {
            inv_c2.clone()
        } else {
            let mut acc = T::zero();
            for n in 2..=k {
                acc = acc + c[n].clone() * inv_facts[n].clone() * pow[n][k].clone();
            }
            -(inv_c2.clone() * acc)
        };
        pow[1][k] = ek.clone();
        e.push(ek);
    }
    Ok(InverseSaddleSeries { e })
}

fn check_c2(c2: &BigRational) -> Result<()> {
    if c2.is_zero() {
        return Err(Error::Degenerate("c2 = 0: the saddle series cannot be inverted".into()));
    }
    if c2.is_negative() {
        return Err(Error::InvalidModel(format!("c2 must be positive, got {c2}")));
    }
    Ok(())
}

/// Exact inverse saddle series from rational cumulants `c_1..`.
pub fn invert_saddle_series(c: &[BigRational], k: usize) -> Result<InverseSaddleSeries<BigRational>> {
    if c.len() < 2 {
        return Err(Error::Arity {
            needed: 2,
            got: c.len(),
        });
    }
    check_c2(&c[1])?;
    invert_saddle_generic(c, &c[1].recip(), k)
}

/// Truncated power series in `s` with coefficients `s^0..s^D`.
fn series_mul<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    let d = a.len();
    (0..d)
        .map(|k| {
            let mut acc = T::zero();
            for j in 0..=k {
                acc = acc + a[j].clone() * b[k - j].clone();
            }
            acc
        })
        .collect()
}

/// `(1/2)_m / m! = C(2m, m) / 4^m`.
fn central_binomial_ratio(m: usize) -> BigRational {
    BigRational::new(
        binomial(2 * m as u64, m as u64),
        num_traits::pow(num_bigint::BigInt::from(4), m),
    )
}

/// Coefficient of `s^order` in the two one-cut conditions,
/// `Σ_k e_k Σ_m C(k,2m) (1/2)_m/m! x^{k−2m} y^m` and
/// `Σ_k e_k Σ_m C(k,2m+1) (1/2)_{m+1}/(m+1)! x^{k−2m−1} y^{m+1}`,
/// with `x = α − c_1` and `y = 4β²`.
fn one_cut_coefficients<T: Scalar>(e: &[T], xp: &[Vec<T>], yp: &[Vec<T>], order: usize) -> (T, T) {
    let prod_coeff = |i: usize, m: usize| -> T {
        let mut acc = T::zero();
        for j in i..=order.saturating_sub(m) {
            acc = acc + xp[i][j].clone() * yp[m][order - j].clone();
        }
        acc
    };
    let mut eq1 = T::zero();
    let mut eq2 = T::zero();
    for (idx, ek) in e.iter().enumerate() {
        let k = idx + 1;
        for m in 0..=k / 2 {
            let i = k - 2 * m;
            if i + m > order || ek.is_zero() {
                continue;
            }
            let w = BigRational::from_integer(binomial(k as u64, 2 * m as u64))
                * central_binomial_ratio(m);
            eq1 = eq1 + ek.clone() * T::from_ratio(&w) * prod_coeff(i, m);
        }
        for m in 0..=(k - 1) / 2 {
            let i = k - 2 * m - 1;
            if i + m + 1 > order || ek.is_zero() {
                continue;
            }
            let w = BigRational::from_integer(binomial(k as u64, 2 * m as u64 + 1))
                * central_binomial_ratio(m + 1);
            eq2 = eq2 + ek.clone() * T::from_ratio(&w) * prod_coeff(i, m + 1);
        }
    }
    (eq1, eq2)
}

fn powers<T: Scalar>(x: &[T], max_pow: usize) -> Vec<Vec<T>> {
    let d = x.len();
    let mut out = Vec::with_capacity(max_pow + 1);
    let mut one = vec![T::zero(); d];
    one[0] = T::one();
    out.push(one);
    for p in 1..=max_pow {
        let next = series_mul(&out[p - 1], x);
        out.push(next);
    }
    out
}

/// Order-by-order solution of the one-cut conditions for `a_0..a_{n_max}`
/// and `b_0..b_{n_max}`, given `c_2` and `1/c_2`.
///
/// At order `s^{n+1}` the normalization condition is `2 e_1 b_n + (lower) =
/// 2 δ_{n0}`, and with `b_n` known the supplementary condition is
/// `e_1 a_n + 2 e_2 b_n + (lower) = 0`.
pub fn lanczos_taylor_generic<T: Scalar>(
    c: &[T],
    c2: &T,
    inv_c2: &T,
    n_max: usize,
) -> Result<SeriesCoefficients<T>> {
    let needed = 2 * n_max + 3;
    if c.len() < needed {
        return Err(Error::Arity {
            needed,
            got: c.len(),
        });
    }
    let d = n_max + 1;
    let inv = invert_saddle_generic(c, inv_c2, 2 * d)?;
    let mut x = vec![T::zero(); d + 1];
    let mut y = vec![T::zero(); d + 1];
    let mut a = Vec::with_capacity(n_max + 1);
    let mut b = Vec::with_capacity(n_max + 1);
    let half = T::from_frac(1, 2);
    for n in 0..=n_max {
        let order = n + 1;
        let (_, eq2) = one_cut_coefficients(&inv.e, &powers(&x, order), &powers(&y, order), order);
        let rhs = if n == 0 { T::from_i64(2) } else { T::zero() };
        let bn = (rhs - eq2) * c2.clone() * half.clone();
        y[order] = bn.scale_i64(4);
        b.push(bn);
        let (eq1, _) = one_cut_coefficients(&inv.e, &powers(&x, order), &powers(&y, order), order);
        let an = -(eq1 * c2.clone());
        x[order] = an.clone();
        a.push(an);
    }
    Ok(SeriesCoefficients {
        c1: c[0].clone(),
        a,
        b,
        exact: false,
    })
}

/// Exact Taylor coefficients from rational cumulants; needs `c_1..c_{2n_max+3}`.
pub fn lanczos_taylor(c: &[BigRational], n_max: usize) -> Result<SeriesCoefficients<BigRational>> {
    if c.len() < 2 {
        return Err(Error::Arity {
            needed: 2 * n_max + 3,
            got: c.len(),
        });
    }
    check_c2(&c[1])?;
    let mut out = lanczos_taylor_generic(c, &c[1], &c[1].recip(), n_max)?;
    out.exact = true;
    Ok(out)
}

/// Float cumulants are converted exactly and the series evaluated in
/// rational arithmetic; the result is rounded once at the end.
pub fn lanczos_taylor_f64(c: &[f64], n_max: usize) -> Result<SeriesCoefficients<f64>> {
    let exact: Vec<BigRational> = c.iter().map(|&v| f64_to_ratio(v)).collect();
    let mut out = lanczos_taylor(&exact, n_max)?.to_f64();
    out.exact = false;
    Ok(out)
}

/// Continuum hierarchy `l_p(t)`, `m_p(t)` as Taylor jets in `t`.
#[derive(Debug, Clone)]
pub struct HierarchyTaylor<T> {
    /// `l[p−1]` is the jet of `l_p`.
    pub l: Vec<Jet<T>>,
    /// `m[p−1]` is the jet of `m_p`.
    pub m: Vec<Jet<T>>,
}

/// `l_1 = F''`, `l_2 = (log F'')''/2`, `l_{p+2} = m_p''/((p+2)(p+1))` with
/// `Σ m_p s^p = log(1 + Σ (l_{p+1}/l_1) s^p)`, from the jet of `F''` at `t`.
///
/// A jet of length `L` yields `l_p` for `2p ≤ L + 1` and `m_p` with at
/// least two coefficients for `2p + 2 ≤ L`.
pub fn hierarchy_taylor<T: Field>(f2: &Jet<T>, p_max: usize) -> Result<HierarchyTaylor<T>> {
    if f2.value().is_zero() {
        return Err(Error::Degenerate("F'' vanishes".into()));
    }
    if f2.len() + 1 < 2 * p_max {
        return Err(Error::Arity {
            needed: 2 * p_max - 1,
            got: f2.len(),
        });
    }
    let inv = T::one() / f2.value().clone();
    let mut l = vec![f2.clone()];
    let mut m: Vec<Jet<T>> = Vec::new();
    if p_max >= 2 {
        l.push(f2.dlog_with(&inv).diff().scale(&T::from_frac(1, 2)));
    }
    let mut p = 1;
    while l.len() < p_max || m.len() + 1 < l.len() {
        // m_p from l_1..l_{p+1}
        let g = |i: usize| l[i].div_with(&l[0], &inv);
        let mut mp = g(p);
        for i in 1..p {
            mp = mp - (m[i - 1].clone() * g(p - i)).scale(&T::from_frac(i as i64, p as i64));
        }
        m.push(mp);
        if l.len() < p_max {
            let next = m[p - 1]
                .diff2()
                .scale(&T::from_frac(1, ((p + 2) * (p + 1)) as i64));
            l.push(next);
        }
        p += 1;
    }
    Ok(HierarchyTaylor { l, m })
}

/// Taylor coefficients of `β²` and `α` from the continuum hierarchy at
/// `t = 0`: `b_{p−1} = l_p(0)`, `a_0 = c_3/c_2`, `a_p = m_p'(0)/(p+1)`.
pub fn taylor_from_hierarchy(c: &[BigRational], n_max: usize) -> Result<SeriesCoefficients<BigRational>> {
    let len = 2 * n_max + 2;
    if c.len() < len + 1 {
        return Err(Error::Arity {
            needed: len + 1,
            got: c.len(),
        });
    }
    check_c2(&c[1])?;
    // F''(τ) = Σ c_{k+2} τ^k / k!
    let f2 = Jet::from_derivatives(&c[1..=len]);
    let h = hierarchy_taylor(&f2, n_max + 1)?;
    let b = (0..=n_max).map(|p| h.l[p].value().clone()).collect();
    let mut a = vec![&c[2] / &c[1]];
    for p in 1..=n_max {
        a.push(h.m[p - 1].derivative_at(1) / BigRational::from_integer((p as i64 + 1).into()));
    }
    Ok(SeriesCoefficients {
        c1: c[0].clone(),
        a,
        b,
        exact: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    fn cs(v: &[i64]) -> Vec<BigRational> {
        v.iter().map(|&x| rat(x, 1)).collect()
    }

    #[test]
    fn inversion_low_orders() {
        let c = cs(&[1, 2, 3, 5, 7, 11]);
        let inv = invert_saddle_series(&c, 4).unwrap();
        assert_eq!(inv.e[0], rat(1, 2));
        assert_eq!(inv.e[1], -&c[2] / (rat(2, 1) * &c[1] * &c[1] * &c[1]));
        let g = invert_saddle_series(&cs(&[0, 3, 0, 0, 0]), 4).unwrap();
        assert!(g.e[1..].iter().all(|v| v.is_zero()));
    }

    #[test]
    fn inversion_composes_to_identity() {
        // ε(ξ(δ)) = δ up to the truncation order
        let c = vec![rat(0, 1), rat(3, 2), rat(-1, 3), rat(2, 5), rat(1, 7), rat(-3, 4), rat(1, 9)];
        let k = 6;
        let e = invert_saddle_series(&c, k).unwrap().e;
        let mut xi = vec![BigRational::zero(); k + 1];
        for j in 1..=k {
            xi[j] = e[j - 1].clone();
        }
        let mut total = vec![BigRational::zero(); k + 1];
        let mut pw = xi.clone();
        let mut fact = BigRational::from_integer(1.into());
        for n in 1..=k {
            fact = fact * BigRational::from_integer((n as i64).into());
            for d in 0..=k {
                total[d] += &c[n] * &pw[d] / &fact;
            }
            pw = series_mul(&pw, &xi);
        }
        assert_eq!(total[1], rat(1, 1));
        assert!(total[2..].iter().all(|v| v.is_zero()));
    }

    #[test]
    fn leading_coefficients() {
        let c = cs(&[1, 2, 3, 5, 7, 11, 13, 17, 19]);
        let s = lanczos_taylor(&c, 3).unwrap();
        let (c2, c3, c4, c5) = (&c[1], &c[2], &c[3], &c[4]);
        assert_eq!(s.b[0], *c2);
        assert_eq!(s.a[0], c3 / c2);
        assert_eq!(s.b[1], (c2 * c4 - c3 * c3) / (rat(2, 1) * c2 * c2));
        let a1 = (rat(3, 1) * c3 * c3 * c3 - rat(4, 1) * c2 * c3 * c4 + c2 * c2 * c5)
            / (rat(4, 1) * c2 * c2 * c2 * c2);
        assert_eq!(s.a[1], a1);
    }

    #[test]
    fn gaussian_series_is_linear() {
        let s = lanczos_taylor(&cs(&[2, 3, 0, 0, 0, 0, 0, 0, 0]), 3).unwrap();
        assert_eq!(s.b[0], rat(3, 1));
        assert!(s.b[1..].iter().all(|v| v.is_zero()));
        assert!(s.a.iter().all(|v| v.is_zero()));
        assert!(lanczos_taylor(&cs(&[0, 0, 1, 1, 1, 1, 1, 1, 1]), 3).is_err());
        assert!(matches!(lanczos_taylor(&cs(&[0, 1, 1]), 3), Err(Error::Arity { .. })));
    }

    #[test]
    fn hierarchy_agrees_with_one_cut_series() {
        let c = vec![
            rat(1, 2), rat(3, 2), rat(-1, 3), rat(2, 5), rat(1, 7), rat(-3, 4),
            rat(1, 9), rat(2, 3), rat(-5, 6), rat(1, 11), rat(7, 13), rat(1, 2),
        ];
        let direct = lanczos_taylor(&c, 4).unwrap();
        let hier = taylor_from_hierarchy(&c, 4).unwrap();
        assert_eq!(direct.b, hier.b);
        assert_eq!(direct.a, hier.a);
    }

    #[test]
    fn hierarchy_first_members() {
        let f2 = Jet::new(vec![2.0, 0.3, -0.4, 0.1, 0.05, -0.02]);
        let h = hierarchy_taylor(&f2, 3).unwrap();
        let (d2, d3, d4) = (f2.derivative_at(0), f2.derivative_at(1), f2.derivative_at(2));
        assert_eq!(*h.l[0].value(), 2.0);
        let l2 = (d2 * d4 - d3 * d3) / (2.0 * d2 * d2);
        assert!((h.l[1].value() - l2).abs() < 1e-15);
        let gauss = hierarchy_taylor(&Jet::new(vec![3.0, 0.0, 0.0, 0.0, 0.0]), 3).unwrap();
        assert!(gauss.l[1..].iter().all(|j| j.coeffs.iter().all(|v| *v == 0.0)));
    }
}
