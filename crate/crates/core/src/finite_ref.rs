//! Exact finite-N reference computations.
//!
//! Moments of the total Hamiltonian are kept as exact rationals (floating
//! inputs are converted exactly), so Hankel determinants and recurrence
//! coefficients carry no rounding error. These results serve as the oracle
//! for the thermodynamic-limit formulas.

use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::Decimal;
use crate::jet::Jet;
use crate::models::{bell_moments, moments_from_cumulants, CumulantModel};
use crate::scalar::{f64_to_ratio, ratio_to_f64, Field};

/// Moments `μ_0..μ_K` of the total Hamiltonian at system size `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub n_sites: BigRational,
    pub mu: Vec<BigRational>,
    /// True when the moments derive from exactly rational cumulants.
    pub exact: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MomentTableDoc {
    #[serde(rename = "N")]
    n_sites: Decimal,
    exact: bool,
    mu: Vec<Decimal>,
}

impl MomentTable {
    /// Highest available moment index `K`.
    pub fn order(&self) -> usize {
        self.mu.len() - 1
    }

    pub fn to_json(&self) -> String {
        let doc = MomentTableDoc {
            n_sites: Decimal(self.n_sites.clone()),
            exact: self.exact,
            mu: self.mu.iter().cloned().map(Decimal).collect(),
        };
        serde_json::to_string_pretty(&doc).expect("moment table serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        let doc: MomentTableDoc = serde_path_to_error::deserialize(&mut de)
            .map_err(|e| Error::Parse(format!("{}: {}", e.path(), e.inner())))?;
        let table = MomentTable {
            n_sites: doc.n_sites.0,
            mu: doc.mu.into_iter().map(|d| d.0).collect(),
            exact: doc.exact,
        };
        if table.mu.first().map_or(true, |m| !m.is_one()) {
            return Err(Error::Parse("mu[0] must equal 1".into()));
        }
        Ok(table)
    }
}

/// Why the recurrence stopped before the requested order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// `β²_n = 0`: the measure has exactly `n` support points.
    Exhausted { n: usize },
    /// `β²_n < 0`: the moments are not those of a positive measure.
    Indefinite { n: usize },
}

/// Recurrence coefficients of the monic orthogonal polynomials
/// `p_{n+1} = (ε − α_n) p_n − β²_n p_{n−1}`.
///
/// `beta2[0]` holds `μ_0` by convention, so `beta2[n]` is `β²_n` for `n ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiData {
    pub alpha: Vec<BigRational>,
    pub beta2: Vec<BigRational>,
    /// Squared norms `h_n` of the monic polynomials.
    pub h: Vec<BigRational>,
    /// Hankel determinants `Δ_n`.
    pub delta: Vec<BigRational>,
    pub termination: Option<Termination>,
}

impl JacobiData {
    pub fn alpha_f64(&self) -> Vec<f64> {
        self.alpha.iter().map(ratio_to_f64).collect()
    }

    pub fn beta2_f64(&self) -> Vec<f64> {
        self.beta2.iter().map(ratio_to_f64).collect()
    }

    /// Number of `α_n` available.
    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }
}

/// Leading principal minors of an `n×n` matrix by fraction-free elimination.
/// The pivot at step `k` of Bareiss' scheme is the `(k+1)`-th minor.
fn leading_minors(mut a: Vec<Vec<BigRational>>) -> Vec<BigRational> {
    let n = a.len();
    let mut minors = Vec::with_capacity(n);
    let mut prev = BigRational::one();
    for k in 0..n {
        let pivot = a[k][k].clone();
        minors.push(pivot.clone());
        if pivot.is_zero() {
            break;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&pivot * &a[i][j] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = pivot;
    }
    minors
}

fn hankel_matrix(mu: &[BigRational], size: usize) -> Vec<Vec<BigRational>> {
    (0..size)
        .map(|i| (0..size).map(|j| mu[i + j].clone()).collect())
        .collect()
}

/// Hankel determinants `Δ_0..Δ_{n_max}` with `Δ_n = det[μ_{i+j}]_{i,j=0..n}`.
pub fn hankel_determinants(m: &MomentTable, n_max: usize) -> Result<Vec<BigRational>> {
    if 2 * n_max > m.order() {
        return Err(Error::Arity {
            needed: 2 * n_max + 1,
            got: m.mu.len(),
        });
    }
    let minors = leading_minors(hankel_matrix(&m.mu, n_max + 1));
    for (n, d) in minors.iter().enumerate() {
        if !d.is_positive() {
            return Err(Error::IndefiniteMoments { n });
        }
    }
    Ok(minors)
}

/// Recurrence coefficients `α_0..α_{n_max}`, `β²_1..β²_{n_max}` by the
/// modified Chebyshev algorithm on the raw moments, cross-checked against
/// the Hankel determinant formulas.
pub fn jacobi_from_moments(m: &MomentTable, n_max: usize) -> Result<JacobiData> {
    if 2 * n_max + 1 > m.order() {
        return Err(Error::Arity {
            needed: 2 * n_max + 2,
            got: m.mu.len(),
        });
    }
    let mu = &m.mu;
    let width = 2 * n_max + 2;
    let mut alpha: Vec<BigRational> = Vec::new();
    let mut beta2: Vec<BigRational> = Vec::new();
    let mut h: Vec<BigRational> = Vec::new();
    let mut termination = None;

    // sigma_k(l) = <p_k, x^l>; only the two previous rows are kept.
    let mut prev: Vec<BigRational> = vec![BigRational::zero(); width];
    let mut cur: Vec<BigRational> = mu[..width].to_vec();
    for k in 0..=n_max {
        if k > 0 {
            let mut next = vec![BigRational::zero(); width];
            for l in k..width - k {
                next[l] = &cur[l + 1] - &alpha[k - 1] * &cur[l] - &beta2[k - 1] * &prev[l];
            }
            prev = std::mem::replace(&mut cur, next);
        }
        let hk = cur[k].clone();
        if hk.is_zero() {
            termination = Some(Termination::Exhausted { n: k });
            break;
        }
        if hk.is_negative() {
            termination = Some(Termination::Indefinite { n: k });
            break;
        }
        let mut a = &cur[k + 1] / &hk;
        if k > 0 {
            a -= &prev[k] / &h[k - 1];
            beta2.push(&hk / &h[k - 1]);
        } else {
            beta2.push(hk.clone());
        }
        alpha.push(a);
        h.push(hk);
    }

    // Δ_n = Π h_j, and β²_n = Δ_n Δ_{n−2} / Δ²_{n−1}.
    let n_ok = h.len();
    let delta = if n_ok > 0 {
        leading_minors(hankel_matrix(mu, n_ok))
    } else {
        Vec::new()
    };
    let mut prod = BigRational::one();
    for (n, hn) in h.iter().enumerate() {
        prod *= hn;
        if delta[n] != prod {
            return Err(Error::Internal(format!(
                "Hankel determinant {n} disagrees with the product of norms"
            )));
        }
        if n >= 1 {
            let dm2 = if n >= 2 {
                delta[n - 2].clone()
            } else {
                BigRational::one()
            };
            if &delta[n] * &dm2 / (&delta[n - 1] * &delta[n - 1]) != beta2[n] {
                return Err(Error::Internal(format!(
                    "β² at n = {n} disagrees with the Hankel ratio"
                )));
            }
        }
    }

    Ok(JacobiData {
        alpha,
        beta2,
        h,
        delta,
        termination,
    })
}

/// The printed large-N truncations of `α_n` and `β²_n` for the total
/// Hamiltonian of an extensive system with cumulant densities `c`.
pub fn expansion_check<T>(c: &[T], n_sites: &T, n: usize) -> Result<(T, T)>
where
    T: Field + PartialOrd,
{
    if c.len() < 6 {
        return Err(Error::Arity {
            needed: 6,
            got: c.len(),
        });
    }
    let (c1, c2, c3, c4, c5, c6) = (
        c[0].clone(),
        c[1].clone(),
        c[2].clone(),
        c[3].clone(),
        c[4].clone(),
        c[5].clone(),
    );
    if !(c2 > T::zero()) {
        return Err(Error::InvalidModel(format!("c2 must be positive, got {c2:?}")));
    }
    let nn = T::from_i64(n as i64);
    let n1 = T::from_i64(n as i64 - 1);
    let n2 = T::from_i64(n as i64 - 2);
    let big_n = n_sites.clone();
    let p2 = c2.clone() * c2.clone();
    let p4 = p2.clone() * p2.clone();
    let alpha_bracket = (T::from_i64(3) * c3.clone() * c3.clone() * c3.clone()
        - T::from_i64(4) * c2.clone() * c3.clone() * c4.clone()
        + p2.clone() * c5.clone())
        / (T::from_i64(2) * p4.clone());
    let alpha = c1 * big_n.clone()
        + nn.clone() * c3.clone() / c2.clone()
        + T::from_frac(1, 2) * nn.clone() * n1.clone() * alpha_bracket / big_n.clone();

    let c3sq = c3.clone() * c3.clone();
    let beta_bracket = (T::from_i64(-12) * c3sq.clone() * c3sq.clone()
        + T::from_i64(21) * c2.clone() * c3sq.clone() * c4.clone()
        - T::from_i64(4) * p2.clone() * c4.clone() * c4.clone()
        - T::from_i64(6) * p2.clone() * c3.clone() * c5
        + p2.clone() * c2.clone() * c6)
        / (T::from_i64(2) * p4 * c2.clone());
    let beta2 = nn.clone() * c2.clone() * big_n.clone()
        + T::from_frac(1, 2) * nn.clone() * n1.clone() * (c2 * c4 - c3sq) / p2
        + T::from_frac(1, 6) * nn * n1 * n2 * beta_bracket / big_n;
    Ok((alpha, beta2))
}

/// Coefficients `l_np(t)` and `m_np(t)` of the 1/N expansion of the scaled
/// L-function, indexed `[t][n][p − 1]` for `n = 0..=n_max`, `p = 1..=p_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyTable<T> {
    pub t: Vec<f64>,
    pub l: Vec<Vec<Vec<T>>>,
    pub m: Vec<Vec<Vec<T>>>,
}

/// Jets of `l_np` and `m_np` given the Taylor jet of `F''` at one point.
///
/// The jet must have length at least `2·p_max`; the t-derivatives in the
/// hierarchy are taken by exact jet arithmetic.
pub fn hierarchy_jets<T: Field>(
    f2: &Jet<T>,
    n_max: usize,
    p_max: usize,
) -> Result<(Vec<Vec<Jet<T>>>, Vec<Vec<Jet<T>>>)> {
    if p_max == 0 {
        return Ok((vec![Vec::new(); n_max + 1], vec![Vec::new(); n_max + 1]));
    }
    if f2.len() < 2 * p_max {
        return Err(Error::Arity {
            needed: 2 * p_max,
            got: f2.len(),
        });
    }
    if f2.value().is_zero() {
        return Err(Error::Degenerate("F'' vanishes".into()));
    }
    let inv_f2 = T::one() / f2.value().clone();
    // log l_{n1} = log n + log F'', so its second derivative is n-independent
    let d2_log_f2 = f2.dlog_with(&inv_f2).diff();

    let mut l: Vec<Vec<Jet<T>>> = vec![Vec::new(); n_max + 1];
    let mut m: Vec<Vec<Jet<T>>> = vec![Vec::new(); n_max + 1];
    for n in 0..=n_max {
        l[n].push(f2.scale(&T::from_i64(n as i64)));
    }
    for p in 2..=p_max {
        for n in 0..=n_max {
            let mut acc: Option<Jet<T>> = None;
            if n >= 1 {
                for j in 1..n {
                    let term = if p == 2 {
                        d2_log_f2.clone()
                    } else {
                        m[n - j][p - 3].diff2()
                    };
                    let term = term.scale(&T::from_i64(j as i64));
                    acc = Some(match acc {
                        None => term,
                        Some(a) => a + term,
                    });
                }
            }
            let len = f2.len() - 2 * (p - 1);
            l[n].push(acc.unwrap_or_else(|| Jet::zero(len)));
        }
        // m_{n,p−1} needs l_{n,1..p}
        for n in 0..=n_max {
            let q = p - 1;
            if n == 0 {
                m[n].push(Jet::zero(l[n][q].len()));
                continue;
            }
            let inv = T::one() / l[n][0].value().clone();
            let g = |i: usize| l[n][i].div_with(&l[n][0], &inv);
            let mut mq = g(q);
            for i in 1..q {
                let t = (m[n][i - 1].clone() * g(q - i)).scale(&T::from_frac(i as i64, q as i64));
                mq = mq - t;
            }
            m[n].push(mq);
        }
    }
    Ok((l, m))
}

/// Finite-N hierarchy coefficients `l_np(t)`, `m_np(t)` for a model.
pub fn hierarchy_l_np(
    model: &CumulantModel,
    n_max: usize,
    p_max: usize,
    t_points: &[f64],
) -> Result<HierarchyTable<f64>> {
    let mut out = HierarchyTable {
        t: t_points.to_vec(),
        l: Vec::new(),
        m: Vec::new(),
    };
    for &t in t_points {
        let d = model.derivatives(t, 2 * p_max + 1)?;
        if !(d[2] > 0.0) {
            return Err(Error::Degenerate(format!("F''({t}) = {} is not positive", d[2])));
        }
        let f2 = Jet::from_derivatives(&d[2..]);
        let (l, m) = hierarchy_jets(&f2, n_max, p_max)?;
        out.l.push(l.iter().map(|row| row.iter().map(|j| *j.value()).collect()).collect());
        out.m.push(m.iter().map(|row| row.iter().map(|j| *j.value()).collect()).collect());
    }
    Ok(out)
}

/// Evaluate the monic polynomials `p_0..p_{k}` at `ε`.
pub fn monic_polynomials<T: Field>(alpha: &[T], beta2: &[T], eps: &T, k: usize) -> Vec<T> {
    let mut p = Vec::with_capacity(k + 1);
    p.push(T::one());
    if k >= 1 {
        p.push(eps.clone() - alpha[0].clone());
    }
    for n in 1..k {
        let next = (eps.clone() - alpha[n].clone()) * p[n].clone() - beta2[n].clone() * p[n - 1].clone();
        p.push(next);
    }
    p
}

/// Difference between the Turán determinant `D_n = p_n² − p_{n+1} p_{n−1}`
/// and its recurrence `β²_n D_{n−1} + (α_n − α_{n−1}) p_n p_{n−1}
/// + (β²_n − β²_{n−1}) p_n p_{n−2}`, computed exactly.
pub fn turan_difference(
    j: &JacobiData,
    eps: &Complex<BigRational>,
    n: usize,
) -> Result<Complex<BigRational>> {
    if n == 0 || n + 1 > j.alpha.len() {
        return Err(Error::Arity {
            needed: n + 2,
            got: j.alpha.len(),
        });
    }
    let lift = |v: &BigRational| Complex::new(v.clone(), BigRational::zero());
    let alpha: Vec<_> = j.alpha.iter().map(lift).collect();
    let beta2: Vec<_> = j.beta2.iter().map(lift).collect();
    let p = monic_polynomials(&alpha, &beta2, eps, n + 1);
    let zero = Complex::new(BigRational::zero(), BigRational::zero());
    let pm = |k: isize| -> Complex<BigRational> {
        if k < 0 {
            zero.clone()
        } else {
            p[k as usize].clone()
        }
    };
    let n_i = n as isize;
    let d = |k: isize| pm(k) * pm(k) - pm(k + 1) * pm(k - 1);
    let rhs = beta2[n].clone() * d(n_i - 1)
        + (alpha[n].clone() - alpha[n - 1].clone()) * pm(n_i) * pm(n_i - 1)
        + (beta2[n].clone() - beta2[n - 1].clone()) * pm(n_i) * pm(n_i - 2);
    Ok(d(n_i) - rhs)
}

/// `|D_n − recurrence|` as a float; the arithmetic itself is exact.
pub fn turan_identity_check(j: &JacobiData, eps: Complex<f64>, n: usize) -> Result<f64> {
    let e = Complex::new(f64_to_ratio(eps.re), f64_to_ratio(eps.im));
    let d = turan_difference(j, &e, n)?;
    Ok(ratio_to_f64(&d.re).hypot(ratio_to_f64(&d.im)))
}

/// Moments of a model at size `N`, exact when the model has rational
/// cumulants and otherwise from its float cumulants.
pub fn model_moments(model: &CumulantModel, n_sites: u64, k: usize) -> Result<MomentTable> {
    let n = BigRational::from_integer(n_sites.into());
    match model.exact_cumulants(k)? {
        Some(c) => moments_from_cumulants(&c, &n, k),
        None => {
            let c: Vec<BigRational> = model.cumulants(k)?.iter().map(|&x| f64_to_ratio(x)).collect();
            let mut m = moments_from_cumulants(&c, &n, k)?;
            m.exact = false;
            Ok(m)
        }
    }
}

/// `(α_n/N, β²_n/N²)` at size `N`, the finite-N counterparts of `α(s)`,
/// `β²(s)` at `s = n/N`.
pub fn scaled_coefficients(model: &CumulantModel, n_sites: u64, n: usize) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::Arity { needed: 1, got: 0 });
    }
    let m = model_moments(model, n_sites, 2 * n + 1)?;
    let j = jacobi_from_moments(&m, n)?;
    if let Some(t) = j.termination {
        return Err(match t {
            Termination::Exhausted { n } | Termination::Indefinite { n } => Error::IndefiniteMoments { n },
        });
    }
    let big_n = BigRational::from_integer(n_sites.into());
    let a = &j.alpha[n] / &big_n;
    let b = &j.beta2[n] / (&big_n * &big_n);
    Ok((ratio_to_f64(&a), ratio_to_f64(&b)))
}

/// Moment table of the tilted measure `e^{tH}` at size `N`, built from the
/// model's derivatives `F^{(k)}(t)`.
pub fn tilted_moments(model: &CumulantModel, n_sites: f64, t: f64, k: usize) -> Result<MomentTable> {
    let d = model.derivatives(t, k)?;
    let n = f64_to_ratio(n_sites);
    let nu: Vec<BigRational> = d[1..].iter().map(|&x| f64_to_ratio(x) * &n).collect();
    Ok(MomentTable {
        n_sites: n,
        mu: bell_moments(&nu, k),
        exact: false,
    })
}

fn log_normalized_hankel(model: &CumulantModel, n_sites: f64, t: f64, n: usize) -> Result<Vec<f64>> {
    let m = tilted_moments(model, n_sites, t, 2 * n)?;
    let minors = hankel_determinants(&m, n)?;
    Ok(minors.iter().map(|d| ratio_to_f64(d).ln()).collect())
}

/// Second derivative by a five-point stencil with one Richardson step.
fn stencil_d2<F: FnMut(f64) -> Result<f64>>(mut f: F, t: f64, h: f64) -> Result<f64> {
    let mut d = |h: f64| -> Result<f64> {
        let (a, b, c, d, e) = (f(t - 2.0 * h)?, f(t - h)?, f(t)?, f(t + h)?, f(t + 2.0 * h)?);
        Ok((-a + 16.0 * b - 30.0 * c + 16.0 * d - e) / (12.0 * h * h))
    };
    let fine = d(h)?;
    let coarse = d(2.0 * h)?;
    Ok((16.0 * fine - coarse) / 15.0)
}

/// Step used by the t-stencils of the identity checks.
pub const STENCIL_STEP: f64 = 1e-3;

/// Sides of the Sylvester identity in normalized form,
/// `Δ̃_{n+1} Δ̃_{n−1} / Δ̃_n² = (n+1) N F''(t) + D²_t log Δ̃_n(t)`,
/// where `Δ̃_n` are Hankel determinants of the tilted, normalized moments.
/// Returns `(lhs, rhs)`.
pub fn sylvester_check(model: &CumulantModel, n_sites: f64, n: usize, t: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::Arity { needed: 1, got: 0 });
    }
    let logs = log_normalized_hankel(model, n_sites, t, n + 1)?;
    let lhs = (logs[n + 1] + logs[n - 1] - 2.0 * logs[n]).exp();
    let d2 = stencil_d2(
        |s| Ok(log_normalized_hankel(model, n_sites, s, n)?[n]),
        t,
        STENCIL_STEP,
    )?;
    let f2 = model.cgf_eval(t, 2)?;
    Ok((lhs, (n as f64 + 1.0) * n_sites * f2 + d2))
}

/// Scaled L-function `L_k(t) = Δ_k Δ_{k−2} / (N² Δ²_{k−1})`, `k ≥ 1`.
fn l_function(model: &CumulantModel, n_sites: f64, t: f64, k: usize) -> Result<f64> {
    let logs = log_normalized_hankel(model, n_sites, t, k)?;
    let lm2 = if k >= 2 { logs[k - 2] } else { 0.0 };
    Ok((logs[k] + lm2 - 2.0 * logs[k - 1]).exp() / (n_sites * n_sites))
}

/// Sides of the L-function equation of motion,
/// `L_n = (1/N) Σ_{j=1}^{n} (j/N) D²_t log L_{n−j}` with `log L_0 = N F`.
/// Returns `(lhs, rhs)`.
pub fn l_recursion_check(model: &CumulantModel, n_sites: f64, n: usize, t: f64) -> Result<(f64, f64)> {
    let lhs = l_function(model, n_sites, t, n)?;
    let mut rhs = n as f64 * model.cgf_eval(t, 2)?;
    for j in 1..n {
        let d2 = stencil_d2(|s| Ok(l_function(model, n_sites, s, n - j)?.ln()), t, STENCIL_STEP)?;
        rhs += j as f64 / n_sites * d2;
    }
    Ok((lhs, rhs / n_sites))
}
