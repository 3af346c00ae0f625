//! Diagnostics of the extensive measure: leading-order weight, ground-state
//! overlap, gap classification, the Jacobi continued fraction and the n-th
//! root asymptotics of the orthogonal polynomials.

use std::f64::consts::PI;

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::finite_ref::JacobiData;
use crate::models::CumulantModel;
use crate::quadrature::integrate_adaptive;
use crate::scalar::Field;
use crate::tl_solver::LanczosCurve;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightSample {
    pub epsilon: f64,
    pub xi: f64,
    pub w_leading: f64,
    /// `−log w` at leading order, `N[εξ − F(ξ)]`.
    pub u: f64,
    #[serde(rename = "N")]
    pub n_sites: f64,
}

/// `w(ε) = √(N/(2πF''(ξ))) exp(N[F(ξ) − εξ])` with `F'(ξ) = ε`.
pub fn weight_leading(model: &CumulantModel, epsilon: f64, n_sites: f64) -> Result<WeightSample> {
    if !(n_sites > 0.0) {
        return Err(Error::InvalidModel(format!("N must be positive, got {n_sites}")));
    }
    let sol = model.saddle_xi(epsilon)?;
    let f = model.derivatives(sol.xi, 2)?;
    let u = n_sites * (epsilon * sol.xi - f[0]);
    let w = (n_sites / (2.0 * PI * f[2])).sqrt() * (-u).exp();
    Ok(WeightSample {
        epsilon,
        xi: sol.xi,
        w_leading: w,
        u,
        n_sites,
    })
}

/// Second divided differences of `u` on an increasing grid.
pub fn second_divided_differences(samples: &[WeightSample]) -> Vec<f64> {
    samples
        .windows(3)
        .map(|w| {
            let (x0, x1, x2) = (w[0].epsilon, w[1].epsilon, w[2].epsilon);
            let d01 = (w[1].u - w[0].u) / (x1 - x0);
            let d12 = (w[2].u - w[1].u) / (x2 - x1);
            (d12 - d01) / (x2 - x0)
        })
        .collect()
}

/// Asymptotic class of `ε(ξ) − ε_0` as `ξ → −∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GapKind {
    /// `A|ξ|^{−γ}`.
    Gapless { gamma: f64 },
    /// `A e^{−Δ|ξ|}`.
    GappedPure { delta: f64 },
    /// `A|ξ|^{−γ} e^{−Δ|ξ|}`.
    GappedMixed { gamma: f64, delta: f64 },
    Unclassified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapClassification {
    pub kind: GapKind,
    pub amplitude: f64,
    /// RMS of the log-space fit.
    pub fit_residual: f64,
    /// `ε(−∞)` from the deepest sample minus the fitted tail.
    pub eps0: f64,
    /// Two-sigma bands of the fitted exponents.
    pub gamma_band: Option<f64>,
    pub delta_band: Option<f64>,
}

impl GapClassification {
    pub fn gamma(&self) -> Option<f64> {
        match self.kind {
            GapKind::Gapless { gamma } | GapKind::GappedMixed { gamma, .. } => Some(gamma),
            _ => None,
        }
    }

    pub fn delta(&self) -> Option<f64> {
        match self.kind {
            GapKind::GappedPure { delta } | GapKind::GappedMixed { delta, .. } => Some(delta),
            _ => None,
        }
    }

    /// `ε(ξ) − ε_0` of the fitted form at `|ξ| = x`.
    pub fn tail(&self, x: f64) -> f64 {
        let a = self.amplitude;
        match self.kind {
            GapKind::Gapless { gamma } => a * x.powf(-gamma),
            GapKind::GappedPure { delta } => a * (-delta * x).exp(),
            GapKind::GappedMixed { gamma, delta } => a * x.powf(-gamma) * (-delta * x).exp(),
            GapKind::Unclassified => f64::NAN,
        }
    }

    /// `{kind, gamma, delta, amplitude, residual}`.
    pub fn to_json(&self) -> serde_json::Value {
        let kind = match self.kind {
            GapKind::Gapless { .. } => "gapless",
            GapKind::GappedPure { .. } => "gapped_pure",
            GapKind::GappedMixed { .. } => "gapped_mixed",
            GapKind::Unclassified => "unclassified",
        };
        serde_json::json!({
            "kind": kind,
            "gamma": self.gamma(),
            "delta": self.delta(),
            "amplitude": self.amplitude,
            "residual": self.fit_residual,
            "eps0": self.eps0,
        })
    }
}

/// Log-space RMS above which no form is accepted.
pub const GAP_FIT_THRESHOLD: f64 = 0.1;

struct LinearFit {
    coef: Vec<f64>,
    rms: f64,
    sigma: Vec<f64>,
}

/// Least squares `y ≈ X c` for a handful of columns via the normal equations.
fn least_squares(cols: &[Vec<f64>], y: &[f64]) -> Option<LinearFit> {
    let p = cols.len();
    let n = y.len();
    if n <= p {
        return None;
    }
    let mut a = vec![vec![0.0; p]; p];
    let mut b = vec![0.0; p];
    for i in 0..p {
        for j in 0..p {
            a[i][j] = (0..n).map(|k| cols[i][k] * cols[j][k]).sum();
        }
        b[i] = (0..n).map(|k| cols[i][k] * y[k]).sum();
    }
    let inv = invert(&a)?;
    let coef: Vec<f64> = (0..p).map(|i| (0..p).map(|j| inv[i][j] * b[j]).sum()).collect();
    let ssr: f64 = (0..n)
        .map(|k| {
            let fit: f64 = (0..p).map(|i| coef[i] * cols[i][k]).sum();
            (y[k] - fit).powi(2)
        })
        .sum();
    let var = ssr / (n - p) as f64;
    Some(LinearFit {
        sigma: (0..p).map(|i| (var * inv[i][i]).max(0.0).sqrt()).collect(),
        rms: (ssr / n as f64).sqrt(),
        coef,
    })
}

fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| m[i][c].abs().partial_cmp(&m[j][c].abs()).unwrap())?;
        if m[piv][c].abs() < 1e-300 {
            return None;
        }
        m.swap(c, piv);
        let d = m[c][c];
        for v in m[c].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                if f != 0.0 {
                    for k in 0..2 * n {
                        m[r][k] -= f * m[c][k];
                    }
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Classify the approach of `ε(ξ)` to `ε_0` from samples of `ε` and of its
/// slope `dε/dξ` at negative `ξ`.
///
/// The slope does not involve `ε_0`, so each form is a linear fit of
/// `log(dε/dξ)` on the last decade of `|ξ|`; `ε_0` then follows from the
/// deepest sample.
pub fn classify_tail(xi: &[f64], eps: &[f64], slope: &[f64]) -> Result<GapClassification> {
    if xi.len() != eps.len() || xi.len() != slope.len() {
        return Err(Error::Arity {
            needed: xi.len(),
            got: eps.len().min(slope.len()),
        });
    }
    if xi.iter().any(|&v| !(v < 0.0)) {
        return Err(Error::Parse("gap classification needs negative ξ samples".into()));
    }
    let deepest = (0..xi.len())
        .min_by(|&i, &j| xi[i].partial_cmp(&xi[j]).unwrap())
        .ok_or(Error::Arity { needed: 4, got: 0 })?;
    let x_max = -xi[deepest];
    let keep: Vec<usize> = (0..xi.len())
        .filter(|&i| -xi[i] >= 0.1 * x_max && slope[i] > 0.0)
        .collect();
    let unclassified = GapClassification {
        kind: GapKind::Unclassified,
        amplitude: f64::NAN,
        fit_residual: f64::INFINITY,
        eps0: eps[deepest],
        gamma_band: None,
        delta_band: None,
    };
    if keep.len() < 4 {
        return Ok(unclassified);
    }
    let x: Vec<f64> = keep.iter().map(|&i| -xi[i]).collect();
    let y: Vec<f64> = keep.iter().map(|&i| slope[i].ln()).collect();
    let one = vec![1.0; x.len()];
    let lx: Vec<f64> = x.iter().map(|v| -v.ln()).collect();
    let mx: Vec<f64> = x.iter().map(|v| -v).collect();

    // log slope = log(Aγ) − (γ+1) log x
    let power = least_squares(&[one.clone(), lx.clone()], &y).map(|f| {
        let gamma = f.coef[1] - 1.0;
        let amp = f.coef[0].exp() / gamma;
        (GapKind::Gapless { gamma }, amp, f.rms, Some(2.0 * f.sigma[1]), None)
    });
    // log slope = log(AΔ) − Δx
    let pure = least_squares(&[one.clone(), mx.clone()], &y).map(|f| {
        let delta = f.coef[1];
        let amp = f.coef[0].exp() / delta;
        (GapKind::GappedPure { delta }, amp, f.rms, None, Some(2.0 * f.sigma[1]))
    });
    let mixed = least_squares(&[one, lx, mx], &y).map(|f| {
        let (gamma, delta) = (f.coef[1], f.coef[2]);
        let refined = refine_mixed(&x, &y, f.coef[0], gamma, delta);
        let (la, gamma, delta, rms) = refined.unwrap_or((f.coef[0] - delta.ln(), gamma, delta, f.rms));
        (
            GapKind::GappedMixed { gamma, delta },
            la.exp(),
            rms,
            Some(2.0 * f.sigma[1]),
            Some(2.0 * f.sigma[2]),
        )
    });

    let valid = |c: &Option<(GapKind, f64, f64, Option<f64>, Option<f64>)>| {
        c.as_ref().filter(|(k, a, r, _, _)| {
            let exps_ok = match *k {
                GapKind::Gapless { gamma } => gamma > 0.0,
                GapKind::GappedPure { delta } => delta > 0.0,
                GapKind::GappedMixed { gamma, delta } => delta > 0.0 && gamma.is_finite(),
                GapKind::Unclassified => false,
            };
            exps_ok && a.is_finite() && *a > 0.0 && r.is_finite()
        })
        .cloned()
    };
    let simple = [valid(&power), valid(&pure)]
        .into_iter()
        .flatten()
        .min_by(|a, b| a.2.partial_cmp(&b.2).unwrap());
    let mixed = valid(&mixed);
    let best = match (simple, mixed) {
        (Some(s), Some(m)) => {
            if s.2 > 1e-6 && m.2 < 0.1 * s.2 {
                m
            } else {
                s
            }
        }
        (Some(s), None) => s,
        (None, Some(m)) => m,
        (None, None) => return Ok(unclassified),
    };
    if best.2 > GAP_FIT_THRESHOLD {
        return Ok(GapClassification {
            fit_residual: best.2,
            ..unclassified
        });
    }
    let mut out = GapClassification {
        kind: best.0,
        amplitude: best.1,
        fit_residual: best.2,
        eps0: 0.0,
        gamma_band: best.3,
        delta_band: best.4,
    };
    out.eps0 = eps[deepest] - out.tail(x_max);
    Ok(out)
}

/// Gauss–Newton on `log slope = a − γ log x − Δx + log(Δ + γ/x)`, the exact
/// derivative of the mixed form. Returns `(log A, γ, Δ, rms)`.
fn refine_mixed(x: &[f64], y: &[f64], c0: f64, gamma: f64, delta: f64) -> Option<(f64, f64, f64, f64)> {
    if !(delta > 0.0) {
        return None;
    }
    let model = |p: &[f64; 3], xv: f64| -> Option<f64> {
        let d = p[2] + p[1] / xv;
        (d > 0.0).then(|| p[0] - p[1] * xv.ln() - p[2] * xv + d.ln())
    };
    let rms = |p: &[f64; 3]| -> Option<f64> {
        let mut s = 0.0;
        for (xv, yv) in x.iter().zip(y) {
            s += (yv - model(p, *xv)?).powi(2);
        }
        Some((s / x.len() as f64).sqrt())
    };
    let mut p = [c0 - delta.ln(), gamma, delta];
    let mut best = rms(&p)?;
    for _ in 0..50 {
        let mut cols = vec![vec![0.0; x.len()]; 3];
        let mut r = vec![0.0; x.len()];
        for (k, (&xv, &yv)) in x.iter().zip(y).enumerate() {
            let d = p[2] + p[1] / xv;
            cols[0][k] = 1.0;
            cols[1][k] = -xv.ln() + 1.0 / (xv * d);
            cols[2][k] = -xv + 1.0 / d;
            r[k] = yv - model(&p, xv)?;
        }
        let step = least_squares(&cols, &r)?;
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..20 {
            let q = [
                p[0] + lambda * step.coef[0],
                p[1] + lambda * step.coef[1],
                p[2] + lambda * step.coef[2],
            ];
            if let Some(v) = rms(&q) {
                if v < best {
                    p = q;
                    improved = best - v > 1e-14 * best.max(1e-300);
                    best = v;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Some((p[0], p[1], p[2], best))
}

/// Default sample points: 40 geometric points on `ξ ∈ [−200, −20]`.
pub fn default_xi_samples() -> Vec<f64> {
    let n = 40;
    (0..n)
        .map(|i| -20.0 * 10f64.powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// Classify a model from `ε(ξ) = F'(ξ)` and `F''(ξ)` at the given samples.
pub fn gap_classify(model: &CumulantModel, xi_samples: &[f64]) -> Result<GapClassification> {
    let mut eps = Vec::with_capacity(xi_samples.len());
    let mut slope = Vec::with_capacity(xi_samples.len());
    for &x in xi_samples {
        let d = model.derivatives(x, 2)?;
        eps.push(d[1]);
        slope.push(d[2]);
    }
    classify_tail(xi_samples, &eps, &slope)
}

/// Details of [`overlap_integral`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Overlap {
    /// `(1/N) log|⟨Ψ_GS|ψ_0⟩|²`.
    pub log_overlap: f64,
    pub cutoff: f64,
    pub body: f64,
    pub tail: f64,
    pub quadrature_error: f64,
    pub classification: GapClassification,
}

/// Cutoff for gapless models, and `GAPPED_CUTOFF / Δ` for gapped ones.
pub const GAPLESS_CUTOFF: f64 = 1000.0;
pub const GAPPED_CUTOFF: f64 = 50.0;

/// `−∫₀^∞ [E(t) − E(∞)] dt` with `E(t) = F'(−t)`: adaptive quadrature on
/// `[0, T]` plus the integral of the fitted asymptotic form beyond `T`.
pub fn overlap_integral(model: &CumulantModel) -> Result<f64> {
    Ok(overlap_details(model)?.log_overlap)
}

pub fn overlap_details(model: &CumulantModel) -> Result<Overlap> {
    let e_inf = match model.spectrum_edges().0 {
        Some(e) => e,
        None => {
            return Err(Error::NonIntegrable(
                "E(t) has no finite limit: the spectrum is unbounded below".into(),
            ))
        }
    };
    if model.is_critical() {
        return Err(Error::NonIntegrable("E(t) − E(∞) decays like 1/t at criticality".into()));
    }
    let coarse = gap_classify(model, &default_xi_samples())?;
    let cutoff = match coarse.kind {
        GapKind::Gapless { gamma } if gamma <= 1.0 => {
            return Err(Error::NonIntegrable(format!("gapless tail with γ = {gamma} ≤ 1")))
        }
        GapKind::Gapless { .. } => GAPLESS_CUTOFF,
        GapKind::GappedPure { delta } | GapKind::GappedMixed { delta, .. } => GAPPED_CUTOFF / delta,
        GapKind::Unclassified => {
            return Err(Error::NonIntegrable("the tail of E(t) fits no known form".into()))
        }
    };
    // classify again on the last decade below the cutoff
    let samples: Vec<f64> = (0..40)
        .map(|i| -0.1 * cutoff * 10f64.powf(i as f64 / 39.0))
        .collect();
    let near = gap_classify(model, &samples)?;
    let class = if near.kind == GapKind::Unclassified { coarse } else { near };
    let mut fail = None;
    let (body, err) = integrate_adaptive(
        |t| match model.derivatives(-t, 1) {
            Ok(d) => d[1] - e_inf,
            Err(e) => {
                fail.get_or_insert(e);
                0.0
            }
        },
        0.0,
        cutoff,
        1e-13,
        1e-13,
        2000,
    );
    if let Some(e) = fail {
        return Err(e);
    }
    let tail = match class.kind {
        GapKind::Gapless { gamma } if gamma > 1.0 => {
            class.amplitude * cutoff.powf(1.0 - gamma) / (gamma - 1.0)
        }
        GapKind::GappedPure { delta } => class.amplitude * (-delta * cutoff).exp() / delta,
        GapKind::GappedMixed { delta, .. } => {
            integrate_adaptive(|t| class.tail(t), cutoff, cutoff + 60.0 / delta, 1e-16, 1e-10, 200).0
        }
        _ => return Err(Error::NonIntegrable("the tail of E(t) is not integrable".into())),
    };
    Ok(Overlap {
        log_overlap: -(body + tail),
        cutoff,
        body,
        tail,
        quadrature_error: err,
        classification: class,
    })
}

/// `(1/2π) ∫₀^π ln((ε_q + x + cos q)/(2ε_q)) dq`, the closed-form ITF overlap.
pub fn itf_overlap_closed_form(x: f64) -> f64 {
    let (v, _) = integrate_adaptive(
        |q| {
            let (c, sn) = (q.cos(), q.sin());
            let eq = (1.0 + x * x + 2.0 * x * c).sqrt();
            // ε_q² − (x + cos q)² = sin² q
            let num = if x + c >= 0.0 { eq + x + c } else { sn * sn / (eq - x - c) };
            (num / (2.0 * eq)).ln()
        },
        0.0,
        PI,
        1e-15,
        1e-14,
        500,
    );
    v / (2.0 * PI)
}

/// Jacobi fraction `μ_0/(ε − α_0 − β²_1/(ε − α_1 − …))` of the given depth,
/// evaluated bottom-up. `beta2[0]` is `μ_0`.
pub fn cf_eval<T: Field + PartialEq>(alpha: &[T], beta2: &[T], eps: &T, depth: usize) -> Result<T> {
    if depth == 0 || depth > alpha.len() || depth > beta2.len() {
        return Err(Error::Arity {
            needed: depth.max(1),
            got: alpha.len().min(beta2.len()),
        });
    }
    let mut tail = T::zero();
    for k in (0..depth).rev() {
        let den = eps.clone() - alpha[k].clone() - tail;
        if den == T::zero() {
            return Err(Error::Pole { level: k });
        }
        tail = beta2[k].clone() / den;
    }
    Ok(tail)
}

/// Resolvent `R(ε) = ∫ dρ(x)/(ε − x)` from the first `depth` levels of `j`.
pub fn resolvent_cf(j: &JacobiData, eps: Complex<f64>, depth: usize) -> Result<Complex<f64>> {
    let lift = |v: Vec<f64>| -> Vec<Complex<f64>> { v.into_iter().map(|x| Complex::new(x, 0.0)).collect() };
    cf_eval(&lift(j.alpha_f64()), &lift(j.beta2_f64()), &eps, depth)
}

/// Coefficients of `R = Σ_k m_k ε^{−k−1}` for the depth-`depth` fraction,
/// `k = 0..order`. They equal the moments for `k < 2·depth`.
pub fn cf_laurent<T: Field>(alpha: &[T], beta2: &[T], depth: usize, order: usize) -> Result<Vec<T>> {
    if depth == 0 || depth > alpha.len() || depth > beta2.len() {
        return Err(Error::Arity {
            needed: depth.max(1),
            got: alpha.len().min(beta2.len()),
        });
    }
    let len = order + 2;
    // power series in z = 1/ε; level k is z/(1 − α_k z − z·tail)
    let mut tail = vec![T::zero(); len];
    for k in (0..depth).rev() {
        let mut den = vec![T::zero(); len];
        den[0] = T::one();
        den[1] = -alpha[k].clone();
        for i in 1..len {
            den[i] = den[i].clone() - tail[i - 1].clone();
        }
        // 1/den, den[0] = 1
        let mut inv = vec![T::zero(); len];
        inv[0] = T::one();
        for i in 1..len {
            let mut acc = T::zero();
            for j in 1..=i {
                acc = acc + den[j].clone() * inv[i - j].clone();
            }
            inv[i] = -acc;
        }
        let mut next = vec![T::zero(); len];
        for i in 1..len {
            next[i] = beta2[k].clone() * inv[i - 1].clone();
        }
        tail = next;
    }
    Ok(tail[1..].to_vec())
}

/// `∫₀^s ln ½[ε − α(t) + √((ε − α(t))² − 4β²(t))] dt` over the stored curve,
/// on the branch that grows with `ε`.
///
/// The curve is extended to `t = 0` with `β² = 0` and `α` extrapolated
/// linearly; the integral is the trapezoid rule on the curve nodes.
pub fn nth_root_poly(curve: &LanczosCurve, eps: Complex<f64>, s: f64) -> Result<Complex<f64>> {
    let pts = &curve.points;
    if pts.is_empty() {
        return Err(Error::Arity { needed: 1, got: 0 });
    }
    let last = pts[pts.len() - 1].s;
    if !(s >= 0.0 && s <= last * (1.0 + 1e-12)) {
        return Err(Error::Parse(format!("s = {s} is outside the curve range (0, {last}]")));
    }
    if s == 0.0 {
        return Ok(Complex::new(0.0, 0.0));
    }
    let alpha0 = if pts.len() >= 2 && pts[0].s > 0.0 {
        let (a, b) = (&pts[0], &pts[1]);
        a.alpha - a.s * (b.alpha - a.alpha) / (b.s - a.s)
    } else {
        pts[0].alpha
    };
    let mut nodes: Vec<(f64, f64, f64)> = Vec::with_capacity(pts.len() + 1);
    if pts[0].s > 0.0 {
        nodes.push((0.0, alpha0, 0.0));
    }
    for p in pts {
        if p.s <= s {
            nodes.push((p.s, p.alpha, p.beta2));
        } else {
            let (t0, a0, b0) = *nodes.last().unwrap();
            let f = (s - t0) / (p.s - t0);
            nodes.push((s, a0 + f * (p.alpha - a0), b0 + f * (p.beta2 - b0)));
            break;
        }
    }
    let integrand = |alpha: f64, beta2: f64| -> Result<Complex<f64>> {
        let d = eps - alpha;
        if eps.im == 0.0 && d.re.abs() <= 2.0 * beta2.max(0.0).sqrt() {
            return Err(Error::Branch { re: eps.re, im: eps.im });
        }
        let r = (d * d - 4.0 * beta2).sqrt();
        let (p, m) = (d + r, d - r);
        let root = if p.norm() >= m.norm() { p } else { m };
        Ok((0.5 * root).ln())
    };
    let mut total = Complex::new(0.0, 0.0);
    let mut prev = integrand(nodes[0].1, nodes[0].2)?;
    for w in nodes.windows(2) {
        let next = integrand(w[1].1, w[1].2)?;
        total += 0.5 * (w[1].0 - w[0].0) * (prev + next);
        prev = next;
    }
    Ok(total)
}

/// Values of the Chebyshev-weighted integral of `log w` over
/// `[ε_0 + δ, ε_∞ − δ]` for geometrically shrinking `δ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SzegoMonitor {
    pub deltas: Vec<f64>,
    pub values: Vec<f64>,
    pub bounded: bool,
    /// Geometric extrapolation of the last increments.
    pub limit: f64,
}

/// With `ε = c + h cos θ` the Chebyshev weight becomes `dθ`, so the integral
/// is `∫ log w dθ` over the θ-range that maps inside the cut interval.
pub fn szego_monitor(model: &CumulantModel, n_sites: f64, levels: usize) -> Result<SzegoMonitor> {
    let (lo, hi) = match model.spectrum_edges() {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => return Err(Error::NonIntegrable("the spectrum is unbounded".into())),
    };
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let mut deltas = Vec::with_capacity(levels);
    let mut values = Vec::with_capacity(levels);
    let mut total = 0.0;
    let mut theta_prev = PI / 2.0;
    let mut fail = None;
    let mut log_w = |theta: f64| -> f64 {
        match weight_leading(model, c + h * theta.cos(), n_sites) {
            Ok(w) => 0.5 * (n_sites / (2.0 * PI)).ln() - w.u - 0.5 * model.derivatives(w.xi, 2).map(|d| d[2].ln()).unwrap_or(f64::NAN),
            Err(e) => {
                fail.get_or_insert(e);
                0.0
            }
        }
    };
    for k in 0..levels {
        let delta = h * 0.1 * 0.25f64.powi(k as i32);
        let theta = (1.0 - delta / h).acos();
        // both edges: θ ∈ [θ_δ, θ_prev] near ε_∞ and its mirror near ε_0
        let upper = integrate_adaptive(&mut log_w, theta, theta_prev, 1e-10, 1e-10, 200).0;
        let lower = integrate_adaptive(&mut log_w, PI - theta_prev, PI - theta, 1e-10, 1e-10, 200).0;
        total += upper + lower;
        theta_prev = theta;
        deltas.push(delta);
        values.push(total);
    }
    if let Some(e) = fail {
        return Err(e);
    }
    let incr: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let bounded = values.iter().all(|v| v.is_finite())
        && incr.len() >= 2
        && incr.windows(2).skip(incr.len().saturating_sub(3)).all(|w| w[1] <= 0.9 * w[0] + 1e-12);
    let last = *values.last().unwrap_or(&f64::NAN);
    let limit = match incr.len() {
        n if n >= 2 && bounded => {
            let r = incr[n - 1] / incr[n - 2];
            last + (values[n] - values[n - 1]) * r / (1.0 - r)
        }
        _ => f64::NAN,
    };
    Ok(SzegoMonitor {
        deltas,
        values,
        bounded,
        limit,
    })
}
