//! Thermodynamic-limit Lanczos functions `α(s)`, `β²(s)`.
//!
//! The coupled equations
//!
//! ```text
//! 0 = ∫ ξ(ε) / √(4β² − (ε−α)²) dε
//! s = (1/2π) ∫ ε ξ(ε) / √(4β² − (ε−α)²) dε
//! ```
//!
//! over `(α−2β, α+2β)` become smooth periodic integrals under
//! `ε = α + 2β cos θ` and are solved by damped Newton on `(α, β)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::CumulantModel;

pub const SOLVER_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_NODES: usize = 128;
pub const MAX_NEWTON_ITERATIONS: usize = 50;
pub const MAX_STEP_HALVINGS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Bound on both residuals.
    pub tolerance: f64,
    pub initial_nodes: usize,
    pub max_nodes: usize,
    /// Accepted change of the residuals when the θ-grid is doubled.
    pub node_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: SOLVER_TOLERANCE,
            initial_nodes: DEFAULT_NODES,
            max_nodes: 1 << 15,
            node_tolerance: 1e-12,
            max_iterations: MAX_NEWTON_ITERATIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LanczosPoint {
    pub s: f64,
    pub alpha: f64,
    pub beta2: f64,
    /// (supplementary, normalization)
    pub residuals: (f64, f64),
    pub newton_iters: usize,
    /// θ-intervals of the accepted trapezoid rule.
    pub nodes: usize,
}

impl LanczosPoint {
    pub fn beta(&self) -> f64 {
        self.beta2.sqrt()
    }

    pub fn eps_minus(&self) -> f64 {
        self.alpha - 2.0 * self.beta()
    }

    pub fn eps_plus(&self) -> f64 {
        self.alpha + 2.0 * self.beta()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LanczosCurve {
    pub points: Vec<LanczosPoint>,
    pub eps_minus: Vec<f64>,
    pub eps_plus: Vec<f64>,
    pub model_id: String,
    /// Indices `i` where an envelope moved the wrong way between `i−1` and `i`.
    pub monotonicity_violations: Vec<usize>,
}

impl LanczosCurve {
    pub fn is_monotone(&self) -> bool {
        self.monotonicity_violations.is_empty()
    }

    pub fn s(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.s).collect()
    }
}

struct Residuals {
    r: [f64; 2],
    jac: [[f64; 2]; 2],
    xi: Vec<f64>,
}

fn theta(j: usize, m: usize) -> f64 {
    PI * j as f64 / m as f64
}

/// Periodic endpoint-clustering map `θ = φ − sin(2φ)/2` on `[0, π/2]`;
/// it keeps `g(cos θ(φ)) θ'(φ)` even and 2π-periodic, so the trapezoid rule
/// in `φ` stays spectrally accurate while `θ ∝ φ³` resolves features that
/// sit close to the edges of the support.
fn clustered(phi: f64) -> (f64, f64) {
    (phi - 0.5 * (2.0 * phi).sin(), 2.0 * phi.sin().powi(2))
}

/// Interior nodes `(cos θ, weight/π)` of the mapped trapezoid rule with `m`
/// intervals; the endpoint weights vanish and are dropped.
fn nodes(m: usize) -> Vec<(f64, f64)> {
    (1..m)
        .map(|j| {
            let phi = theta(j, m);
            // evaluate near θ = π through the complement for accuracy
            let (u, flip) = if phi > 0.5 * PI { (PI - phi, -1.0) } else { (phi, 1.0) };
            let (th, dth) = clustered(u);
            (flip * th.cos(), dth / m as f64)
        })
        .collect()
}

/// Saddle points at `ε = α + 2β cos θ` for each node, warm-started from `guess`.
fn saddles(
    model: &CumulantModel,
    alpha: f64,
    beta: f64,
    cos_theta: &[f64],
    guess: Option<&[f64]>,
) -> Result<Vec<(f64, f64)>> {
    cos_theta
        .par_iter()
        .enumerate()
        .map(|(j, &c)| {
            let eps = alpha + 2.0 * beta * c;
            let g = guess.map(|g| g[j]);
            model
                .saddle_xi_near(eps, g)
                .map(|sol| (sol.xi, sol.f2_at_xi))
                .map_err(|e| match e {
                    Error::OutOfSpectrum { .. } => Error::SpectrumBound {
                        lower: alpha - 2.0 * beta,
                        upper: alpha + 2.0 * beta,
                    },
                    other => other,
                })
        })
        .collect()
}

struct Problem<'a> {
    model: &'a CumulantModel,
    s: f64,
    /// The tilted measure `e^{tE} dρ(E)` has saddle points `ξ(ε) − t`.
    tilt: f64,
}

fn residuals(
    pb: &Problem,
    alpha: f64,
    beta: f64,
    m: usize,
    guess: Option<&[f64]>,
) -> Result<Residuals> {
    let rule = nodes(m);
    let cos_theta: Vec<f64> = rule.iter().map(|p| p.0).collect();
    let sad = saddles(pb.model, alpha, beta, &cos_theta, guess)?;
    let mut sums = [0.0; 6];
    for (&(c, w), &(xi_raw, f2)) in rule.iter().zip(&sad) {
        let xi = xi_raw - pb.tilt;
        let eps = alpha + 2.0 * beta * c;
        let dxi = 1.0 / f2;
        sums[0] += w * xi;
        sums[1] += w * eps * xi;
        sums[2] += w * dxi;
        sums[3] += w * 2.0 * c * dxi;
        sums[4] += w * (xi + eps * dxi);
        sums[5] += w * 2.0 * c * (xi + eps * dxi);
    }
    // sums are (1/π)∫…dθ
    Ok(Residuals {
        r: [sums[0], 0.5 * sums[1] - pb.s],
        jac: [[sums[2], sums[3]], [0.5 * sums[4], 0.5 * sums[5]]],
        xi: sad.into_iter().map(|p| p.0).collect(),
    })
}

fn refine_guess(xi: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * xi.len() + 1);
    out.push(xi[0]);
    for j in 0..xi.len() {
        out.push(xi[j]);
        out.push(xi.get(j + 1).map_or(xi[j], |next| 0.5 * (xi[j] + next)));
    }
    out
}

fn norm(r: &[f64; 2]) -> f64 {
    r[0].abs().max(r[1].abs())
}

/// Two-term series seed `α ≈ c₁ + s c₃/c₂`, `β² ≈ c₂ s`, pulled inside the spectrum.
fn series_seed(model: &CumulantModel, s: f64) -> Result<(f64, f64)> {
    let c = model.cumulants(3)?;
    if !(c[1] > 0.0) {
        return Err(Error::Degenerate(format!("c2 = {}", c[1])));
    }
    let alpha = c[0] + s * c[2] / c[1];
    let mut beta = (c[1] * s).sqrt();
    let (lo, hi) = model.spectrum_range();
    if !(alpha > lo && alpha < hi) {
        return Err(Error::SpectrumBound { lower: alpha, upper: alpha });
    }
    while !(alpha - 2.0 * beta > lo && alpha + 2.0 * beta < hi) {
        beta *= 0.8;
        if beta < 1e-300 {
            return Err(Error::SpectrumBound { lower: alpha, upper: alpha });
        }
    }
    Ok((alpha, beta * beta))
}

fn newton(
    model: &CumulantModel,
    s: f64,
    seed: (f64, f64),
    opts: &SolverOptions,
) -> Result<LanczosPoint> {
    newton_tilted(model, s, 0.0, seed, opts)
}

fn newton_tilted(
    model: &CumulantModel,
    s: f64,
    tilt: f64,
    seed: (f64, f64),
    opts: &SolverOptions,
) -> Result<LanczosPoint> {
    let pb = Problem { model, s, tilt };
    let (mut alpha, mut beta) = (seed.0, seed.1.max(0.0).sqrt());
    if !(beta > 0.0) {
        beta = (s * model.cumulants(2)?[1]).sqrt();
    }
    let mut m = opts.initial_nodes.max(4);
    let (lo, hi) = model.spectrum_range();
    if !(alpha > lo && alpha < hi) {
        return Err(Error::SpectrumBound {
            lower: alpha - 2.0 * beta,
            upper: alpha + 2.0 * beta,
        });
    }
    // pull a seed window that overshoots the spectrum back inside
    let mut shrink = 0;
    while !(alpha - 2.0 * beta > lo && alpha + 2.0 * beta < hi) && shrink < 200 {
        beta *= 0.9;
        shrink += 1;
    }
    let mut ev = residuals(&pb, alpha, beta, m, None)?;
    let scale = s.max(1.0);
    let mut best = (norm(&ev.r), alpha, beta);
    for iter in 0..=opts.max_iterations {
        if norm(&ev.r) <= opts.tolerance {
            let fine = residuals(&pb, alpha, beta, 2 * m, Some(&refine_guess(&ev.xi)))?;
            let change = (fine.r[0] - ev.r[0]).abs().max((fine.r[1] - ev.r[1]).abs());
            if change <= opts.node_tolerance * scale && norm(&fine.r) <= opts.tolerance {
                return Ok(LanczosPoint {
                    s,
                    alpha,
                    beta2: beta * beta,
                    residuals: (fine.r[0], fine.r[1]),
                    newton_iters: iter,
                    nodes: 2 * m,
                });
            }
            m *= 2;
            if m > opts.max_nodes {
                return Err(Error::Convergence {
                    what: "θ-quadrature".into(),
                    iterations: iter,
                    residual: change,
                    best: Some((alpha, beta * beta)),
                });
            }
            ev = fine;
            continue;
        }
        if iter == opts.max_iterations {
            break;
        }
        let [[a, b], [c, d]] = ev.jac;
        let det = a * d - b * c;
        if !(det.is_finite() && det != 0.0) {
            return Err(Error::Degenerate(format!("singular Jacobian at s = {s}")));
        }
        let da = -(d * ev.r[0] - b * ev.r[1]) / det;
        let db = -(a * ev.r[1] - c * ev.r[0]) / det;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_STEP_HALVINGS {
            let (ta, tb) = (alpha + lambda * da, beta + lambda * db);
            if tb > 0.0 {
                if let Ok(trial) = residuals(&pb, ta, tb, m, Some(&ev.xi)) {
                    if norm(&trial.r) < norm(&ev.r) {
                        accepted = Some((ta, tb, trial));
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        let Some((ta, tb, trial)) = accepted else {
            return Err(Error::Convergence {
                what: "Newton line search".into(),
                iterations: iter,
                residual: best.0,
                best: Some((best.1, best.2 * best.2)),
            });
        };
        alpha = ta;
        beta = tb;
        ev = trial;
        if norm(&ev.r) < best.0 {
            best = (norm(&ev.r), alpha, beta);
        }
    }
    Err(Error::Convergence {
        what: "Newton".into(),
        iterations: opts.max_iterations,
        residual: best.0,
        best: Some((best.1, best.2 * best.2)),
    })
}

/// Solve for `(α(s), β²(s))`, optionally from a seed `(α, β²)`.
pub fn solve_point(
    model: &CumulantModel,
    s: f64,
    seed: Option<(f64, f64)>,
) -> Result<LanczosPoint> {
    solve_point_with(model, s, seed, &SolverOptions::default())
}

pub fn solve_point_with(
    model: &CumulantModel,
    s: f64,
    seed: Option<(f64, f64)>,
    opts: &SolverOptions,
) -> Result<LanczosPoint> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Domain {
            t: s,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    if let Some(seed) = seed {
        return newton(model, s, seed, opts);
    }
    let mut s0 = s.min(CONTINUATION_START);
    let start = loop {
        match series_seed(model, s0).and_then(|seed| newton(model, s0, seed, opts)) {
            Ok(p) => break p,
            Err(e) if s0 < 1e-6 => return Err(e),
            Err(_) => s0 *= 0.25,
        }
    };
    continue_to(model, start, s, opts)
}

const CONTINUATION_START: f64 = 0.01;

/// `(α, β²)` of the tilted measure `e^{tE} dρ(E)` at `s`, i.e. `L(s, t)` of
/// the Toda flow, by continuation in `s` from the tilted two-term series.
pub fn solve_point_tilted(
    model: &CumulantModel,
    s: f64,
    t: f64,
    opts: &SolverOptions,
) -> Result<LanczosPoint> {
    if t == 0.0 {
        return solve_point_with(model, s, None, opts);
    }
    let d = model.derivatives(t, 3)?;
    let (c1, c2, c3) = (d[1], d[2], d[3]);
    let mut s0 = s.min(CONTINUATION_START);
    let mut point = loop {
        let seed = (c1 + s0 * c3 / c2, c2 * s0);
        match newton_tilted(model, s0, t, seed, opts) {
            Ok(p) => break p,
            Err(e) if s0 < 1e-6 => return Err(e),
            Err(_) => s0 *= 0.25,
        }
    };
    let mut prev: Option<LanczosPoint> = None;
    let mut step = (s - point.s).min(0.25 * point.s);
    let mut halvings = 0;
    while point.s < s {
        let target = (point.s + step).min(s);
        let seed = extrapolate(prev.as_ref(), &point, target);
        match newton_tilted(model, target, t, seed, opts) {
            Ok(next) => {
                prev = Some(std::mem::replace(&mut point, next));
                step *= 1.5;
            }
            Err(e) => {
                halvings += 1;
                if halvings > MAX_SUBSTEP_HALVINGS || exhausted_nodes(&e) {
                    return Err(e);
                }
                step *= 0.5;
            }
        }
    }
    Ok(point)
}

const MAX_SUBSTEP_HALVINGS: usize = 12;

/// The finest θ-grid was not enough; shorter steps do not help.
fn exhausted_nodes(e: &Error) -> bool {
    matches!(e, Error::Convergence { what, .. } if what == "θ-quadrature")
}

/// Continue a solution from `from.s` to `s`, shrinking the step on failure.
fn continue_to(
    model: &CumulantModel,
    from: LanczosPoint,
    s: f64,
    opts: &SolverOptions,
) -> Result<LanczosPoint> {
    let mut point = from;
    let mut prev: Option<LanczosPoint> = None;
    let mut step = (s - point.s).min(0.25 * point.s.max(1e-3));
    let mut halvings = 0;
    while point.s < s {
        let target = (point.s + step).min(s);
        let seed = extrapolate(prev.as_ref(), &point, target);
        match newton(model, target, seed, opts) {
            Ok(next) => {
                prev = Some(std::mem::replace(&mut point, next));
                step *= 1.5;
            }
            Err(e) => {
                halvings += 1;
                if halvings > MAX_SUBSTEP_HALVINGS || exhausted_nodes(&e) {
                    return Err(e);
                }
                step *= 0.5;
            }
        }
    }
    Ok(point)
}

/// Linear extrapolation of `(α, β²)` from the last two solutions.
fn extrapolate(prev: Option<&LanczosPoint>, last: &LanczosPoint, s: f64) -> (f64, f64) {
    if let Some(p) = prev {
        let f = (s - last.s) / (last.s - p.s);
        let b2 = last.beta2 + f * (last.beta2 - p.beta2);
        let a = last.alpha + f * (last.alpha - p.alpha);
        if b2 > 0.0 {
            return (a, b2);
        }
    }
    (last.alpha, last.beta2 * s / last.s)
}

/// Sequential continuation along an increasing grid of `s`.
pub fn solve_curve(
    model: &CumulantModel,
    s_grid: &[f64],
    opts: &SolverOptions,
) -> Result<LanczosCurve> {
    let (curve, err) = solve_curve_partial(model, s_grid, opts);
    match err {
        Some(e) => Err(e),
        None => Ok(curve),
    }
}

/// As [`solve_curve`], but stops at the first failure and returns the points
/// solved so far together with the annotated error.
pub fn solve_curve_partial(
    model: &CumulantModel,
    s_grid: &[f64],
    opts: &SolverOptions,
) -> (LanczosCurve, Option<Error>) {
    let mut points: Vec<LanczosPoint> = Vec::with_capacity(s_grid.len());
    let mut failure = None;
    if s_grid.is_empty() {
        failure = Some(Error::Arity { needed: 1, got: 0 });
    } else if s_grid.windows(2).any(|w| !(w[1] > w[0])) || !(s_grid[0] > 0.0) {
        failure = Some(Error::Parse(
            "s_grid must be positive and strictly increasing".into(),
        ));
    }
    if failure.is_none() {
        for &s in s_grid {
            let result = match points.as_slice() {
                [] => solve_point_with(model, s, None, opts),
                [.., last] => {
                    let prev = points.len().checked_sub(2).map(|i| &points[i]);
                    newton(model, s, extrapolate(prev, last, s), opts)
                        .or_else(|_| continue_to(model, last.clone(), s, opts))
                }
            };
            match result {
                Ok(p) => points.push(p),
                Err(e) => {
                    failure = Some(e.at_s(s));
                    break;
                }
            }
        }
    }
    (curve_from_points(model.id(), points), failure)
}

fn curve_from_points(model_id: String, points: Vec<LanczosPoint>) -> LanczosCurve {
    let eps_minus: Vec<f64> = points.iter().map(LanczosPoint::eps_minus).collect();
    let eps_plus: Vec<f64> = points.iter().map(LanczosPoint::eps_plus).collect();
    let slack = |a: f64, b: f64| 1e-12 * a.abs().max(b.abs()).max(1.0);
    let monotonicity_violations = (1..points.len())
        .filter(|&i| {
            eps_plus[i] < eps_plus[i - 1] - slack(eps_plus[i], eps_plus[i - 1])
                || eps_minus[i] > eps_minus[i - 1] + slack(eps_minus[i], eps_minus[i - 1])
        })
        .collect();
    LanczosCurve {
        points,
        eps_minus,
        eps_plus,
        model_id,
        monotonicity_violations,
    }
}

/// Least-squares fit `y ≈ a + b s^{−k}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailFit {
    pub a: f64,
    pub b: f64,
    pub k: f64,
    pub rms: f64,
}

impl TailFit {
    /// The fitted curve has a finite limit as `s → ∞`.
    pub fn is_bounded(&self) -> bool {
        self.k > 0.0
    }
}

fn fit_linear(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let rms = (x.iter().zip(y).map(|(u, v)| (a + b * u - v).powi(2)).sum::<f64>() / n).sqrt();
    (a, b, rms)
}

/// Scan `k` over a grid (negative `k` means growth) and keep the best fit.
pub fn fit_tail(s: &[f64], y: &[f64]) -> Option<TailFit> {
    if s.len() < 3 {
        return None;
    }
    let mut best: Option<TailFit> = None;
    for i in -400..=800 {
        let k = i as f64 * 0.01;
        if i == 0 {
            continue;
        }
        let x: Vec<f64> = s.iter().map(|v| v.powf(-k)).collect();
        let (a, b, rms) = fit_linear(&x, y);
        if best.map_or(true, |f| rms < f.rms) {
            best = Some(TailFit { a, b, k, rms });
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GseBounds {
    /// `inf ε₋` over the sampled grid.
    pub eps0_sampled: f64,
    /// `sup ε₊` over the sampled grid.
    pub epsinf_sampled: f64,
    /// Extrapolated ground-state energy density; `None` when unbounded.
    pub eps0: Option<f64>,
    /// Extrapolated top of the spectrum; `None` when unbounded.
    pub epsinf: Option<f64>,
    pub eps0_fit: Option<TailFit>,
    pub epsinf_fit: Option<TailFit>,
    /// `ε₋` is still moving by more than a tenth of its sampled range.
    pub eps0_steep: bool,
    pub epsinf_steep: bool,
}

impl GseBounds {
    /// Best available estimate of `ε₀`.
    pub fn eps0_estimate(&self) -> f64 {
        self.eps0.unwrap_or(self.eps0_sampled)
    }
}

fn tail_estimate(s: &[f64], y: &[f64], extreme: f64) -> (Option<f64>, Option<TailFit>, bool) {
    let start = (2 * s.len()) / 3;
    let start = start.min(s.len().saturating_sub(3));
    let fit = fit_tail(&s[start..], &y[start..]);
    let span = (y[y.len() - 1] - y[0]).abs();
    match fit {
        Some(f) if f.is_bounded() => {
            let remaining = (f.a - y[y.len() - 1]).abs();
            (Some(f.a), Some(f), remaining > 0.1 * span)
        }
        Some(f) => (None, Some(f), true),
        None => (Some(extreme), None, true),
    }
}

/// Ground-state and top-of-spectrum energy densities from a solved curve.
pub fn gse_bounds(curve: &LanczosCurve) -> GseBounds {
    let s = curve.s();
    let eps0_sampled = curve.eps_minus.iter().copied().fold(f64::INFINITY, f64::min);
    let epsinf_sampled = curve.eps_plus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (eps0, eps0_fit, eps0_steep) = tail_estimate(&s, &curve.eps_minus, eps0_sampled);
    let (epsinf, epsinf_fit, epsinf_steep) = tail_estimate(&s, &curve.eps_plus, epsinf_sampled);
    GseBounds {
        eps0_sampled,
        epsinf_sampled,
        // the limit cannot lie above a sampled value
        eps0: eps0.map(|e| e.min(eps0_sampled)),
        epsinf: epsinf.map(|e| e.max(epsinf_sampled)),
        eps0_fit,
        epsinf_fit,
        eps0_steep,
        epsinf_steep,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChargeDensity {
    pub s: f64,
    pub support: (f64, f64),
    /// Interior nodes in increasing order.
    pub eps: Vec<f64>,
    pub sigma: Vec<f64>,
    /// `∫σ₀ dε` of the Chebyshev representation.
    pub mass: f64,
    /// Largest violation of `ξ(ε) = 2 PV∫ σ₀(ε′)/(ε−ε′) dε′` off the nodes.
    pub force_residual: f64,
}

/// DCT-I coefficients: `f(θ) = a₀/2 + Σ_{k≥1} a_k cos kθ` on `θ_j = jπ/m`.
fn cosine_coefficients(f: &[f64]) -> Vec<f64> {
    let m = f.len() - 1;
    (0..=m)
        .into_par_iter()
        .map(|k| {
            let mut acc = 0.0;
            for (j, v) in f.iter().enumerate() {
                let w = if j == 0 || j == m { 0.5 } else { 1.0 };
                acc += w * v * ((k * j) as f64 * PI / m as f64).cos();
            }
            let a = 2.0 * acc / m as f64;
            if k == m {
                0.5 * a
            } else {
                a
            }
        })
        .collect()
}

/// Minimal charge density `σ₀` of the one-cut equilibrium at `point`.
///
/// With `ξ(α + 2β cos θ) = a₀/2 + Σ a_k cos kθ` the principal-value solution
/// reduces to `σ₀ = (1/2π) Σ a_k sin kφ`, whose mass is `β a₁ / 2`.
pub fn equilibrium_density(
    model: &CumulantModel,
    point: &LanczosPoint,
    node_count: usize,
) -> Result<ChargeDensity> {
    if !(point.beta2 > 0.0) {
        return Err(Error::Degenerate("β² must be positive".into()));
    }
    if node_count < 2 {
        return Err(Error::Arity {
            needed: 2,
            got: node_count,
        });
    }
    let (alpha, beta) = (point.alpha, point.beta());
    let m = point.nodes.max(node_count).max(DEFAULT_NODES);
    let cos_theta: Vec<f64> = (0..=m).map(|j| theta(j, m).cos()).collect();
    let xi: Vec<f64> = saddles(model, alpha, beta, &cos_theta, None)?
        .into_iter()
        .map(|p| p.0)
        .collect();
    let a = cosine_coefficients(&xi);

    let density_at = |phi: f64| -> f64 {
        a.iter()
            .enumerate()
            .skip(1)
            .map(|(k, ak)| ak * (k as f64 * phi).sin())
            .sum::<f64>()
            / (2.0 * PI)
    };
    let interp_at = |phi: f64| -> f64 {
        a.iter()
            .enumerate()
            .skip(1)
            .map(|(k, ak)| ak * (k as f64 * phi).cos())
            .sum::<f64>()
    };

    // nodes φ_j = jπ/node_count, j = 1..node_count−1, listed by increasing ε
    let phis: Vec<f64> = (1..node_count).rev().map(|j| theta(j, node_count)).collect();
    let eps: Vec<f64> = phis.iter().map(|p| alpha + 2.0 * beta * p.cos()).collect();
    let sigma: Vec<f64> = phis.par_iter().map(|&p| density_at(p)).collect();
    let min_density = sigma.iter().copied().fold(f64::INFINITY, f64::min);
    if min_density < -1e-8 {
        return Err(Error::InvalidInterval { min_density });
    }

    let mids: Vec<f64> = (0..node_count)
        .map(|j| PI * (j as f64 + 0.5) / node_count as f64)
        .collect();
    let force_residual = mids
        .par_iter()
        .map(|&p| -> Result<f64> {
            let e = alpha + 2.0 * beta * p.cos();
            let direct = model.saddle_xi(e)?.xi;
            Ok((direct - interp_at(p)).abs())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    Ok(ChargeDensity {
        s: point.s,
        support: (alpha - 2.0 * beta, alpha + 2.0 * beta),
        eps,
        sigma,
        mass: 0.5 * beta * a[1],
        force_residual,
    })
}

/// Grid for [`toda_march`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarchOptions {
    /// The `t`-window is `[−half_width, half_width]`.
    pub half_width: f64,
    pub dt: f64,
    /// Upper bound on the `s` step.
    pub ds: f64,
    /// Number of recorded slices after `s = 0`.
    pub samples: usize,
}

impl Default for MarchOptions {
    fn default() -> Self {
        MarchOptions {
            half_width: 3.0,
            dt: 0.05,
            ds: 1e-5,
            samples: 50,
        }
    }
}

/// Output of [`toda_march`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TodaMarch {
    pub s: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta2: Vec<f64>,
    pub t: Vec<f64>,
    /// `l[i][j] = L(s_i, t_j)`.
    pub l: Vec<Vec<f64>>,
    pub steps: usize,
}

impl TodaMarch {
    /// Linear interpolation of `(α, β²)` at `s` inside the marched range.
    pub fn interpolate(&self, s: f64) -> Option<(f64, f64)> {
        let last = *self.s.last()?;
        if !(s >= 0.0 && s <= last) || self.s.len() < 2 {
            return None;
        }
        let h = self.s[1] - self.s[0];
        let i = ((s / h).floor() as usize).min(self.s.len() - 2);
        let f = (s - self.s[i]) / h;
        let lerp = |v: &[f64]| v[i] + f * (v[i + 1] - v[i]);
        Some((lerp(&self.alpha), lerp(&self.beta2)))
    }
}

/// Fourth-order `D²_t` in the interior; the two nodes at each edge copy the
/// nearest centred value.
fn second_difference(v: &[f64], dt: f64, out: &mut [f64]) {
    let n = v.len();
    let k = 1.0 / (12.0 * dt * dt);
    for j in 2..n - 2 {
        out[j] = k * (-v[j - 2] + 16.0 * v[j - 1] - 30.0 * v[j] + 16.0 * v[j + 1] - v[j + 2]);
    }
    out[0] = out[2];
    out[1] = out[2];
    out[n - 1] = out[n - 3];
    out[n - 2] = out[n - 3];
}

/// March `L(s,t) = ∫₀^s r D²_t log L(s−r,t) dr + s F''(t)` on a uniform
/// `t`-grid.
///
/// With `L = sΛ` the `log s` term drops out of `D²_t log L` and
/// `Λ(0,t) = F''(t)`. The convolution is the trapezoid rule, whose weight at
/// `r = 0` vanishes, so each step is explicit; it is kept as two running
/// sums. `α` follows from `∂_s α = ∂_t log L` at `t = 0`.
///
/// The equation is hyperbolic with speed `1/√Λ`, so the step must satisfy
/// `ds ≲ Λ dt²` and the window has to cover the domain of dependence of
/// `t = 0`. Values near the window edges are not accurate.
pub fn toda_march(model: &CumulantModel, s_max: f64, opts: &MarchOptions) -> Result<TodaMarch> {
    let MarchOptions {
        half_width,
        dt,
        ds,
        samples,
    } = *opts;
    if !(s_max > 0.0 && ds > 0.0 && half_width > 0.0 && dt > 0.0 && samples > 0) {
        return Err(Error::Parse(format!("invalid march parameters {opts:?}, s_max = {s_max}")));
    }
    let half = (half_width / dt).round() as usize;
    if half < 3 {
        return Err(Error::Parse(format!("march window {half_width} holds fewer than 7 nodes of width {dt}")));
    }
    let nt = 2 * half + 1;
    let t: Vec<f64> = (0..nt).map(|j| (j as f64 - half as f64) * dt).collect();
    let f2 = t
        .iter()
        .map(|&tj| model.derivatives(tj, 2).map(|d| d[2]))
        .collect::<Result<Vec<f64>>>()?;
    let f1 = model.derivatives(0.0, 1)?[1];

    let per_sample = ((s_max / ds) / samples as f64).ceil().max(1.0) as usize;
    let steps = per_sample * samples;
    let h = s_max / steps as f64;

    let mut s_out = Vec::with_capacity(samples + 1);
    let mut alpha_out = Vec::with_capacity(samples + 1);
    let mut beta2_out = Vec::with_capacity(samples + 1);
    let mut l_out = Vec::with_capacity(samples + 1);

    let mut sum0 = vec![0.0; nt];
    let mut sum1 = vec![0.0; nt];
    let mut lam = f2.clone();
    let mut log_lam = vec![0.0; nt];
    let mut g = vec![0.0; nt];
    let mut alpha = f1;
    let mut prev_slope = 0.0;
    for i in 0..=steps {
        let si = i as f64 * h;
        if i > 0 {
            let r = h / si;
            for j in 0..nt {
                lam[j] = f2[j] + r * (si * sum0[j] - sum1[j]);
            }
        }
        for j in 0..nt {
            if !(lam[j] > 0.0 && lam[j].is_finite()) {
                return Err(Error::Breakdown { s: si });
            }
            log_lam[j] = lam[j].ln();
        }
        second_difference(&log_lam, dt, &mut g);
        let w = if i == 0 { 0.5 } else { 1.0 };
        for j in 0..nt {
            sum0[j] += w * g[j];
            sum1[j] += w * si * g[j];
        }
        let m = half;
        let slope = (-log_lam[m + 2] + 8.0 * log_lam[m + 1] - 8.0 * log_lam[m - 1] + log_lam[m - 2])
            / (12.0 * dt);
        if i > 0 {
            alpha += 0.5 * h * (prev_slope + slope);
        }
        prev_slope = slope;
        if i % per_sample == 0 {
            s_out.push(si);
            alpha_out.push(alpha);
            beta2_out.push(si * lam[m]);
            l_out.push(lam.iter().map(|v| si * v).collect());
        }
    }
    Ok(TodaMarch {
        s: s_out,
        alpha: alpha_out,
        beta2: beta2_out,
        t,
        l: l_out,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_is_analytic() {
        let m = CumulantModel::gaussian(0.3, 2.0).unwrap();
        for s in [0.1, 1.0, 10.0] {
            let p = solve_point(&m, s, None).unwrap();
            assert!((p.alpha - 0.3).abs() < 1e-10);
            assert!((p.beta2 - 2.0 * s).abs() < 1e-10 * s.max(1.0));
            assert!(norm(&[p.residuals.0, p.residuals.1]) <= SOLVER_TOLERANCE);
        }
    }

    #[test]
    fn semicircle_density() {
        let m = CumulantModel::gaussian(0.0, 1.5).unwrap();
        let p = solve_point(&m, 1.0, None).unwrap();
        let d = equilibrium_density(&m, &p, 64).unwrap();
        assert!((d.mass - 1.0).abs() < 1e-8);
        for (e, sg) in d.eps.iter().zip(&d.sigma) {
            let exact = (4.0 * 1.5 - e * e).max(0.0).sqrt() / (2.0 * PI * 1.5);
            assert!((sg - exact).abs() < 1e-8);
        }
        assert!(d.force_residual < 1e-10);
    }

    #[test]
    fn gaussian_march_is_stationary() {
        let m = CumulantModel::gaussian(-1.0, 0.5).unwrap();
        let opts = MarchOptions {
            ds: 1e-3,
            ..MarchOptions::default()
        };
        let r = toda_march(&m, 2.0, &opts).unwrap();
        assert_eq!(r.s.len(), 51);
        for i in [0, 20, 50] {
            for l in &r.l[i] {
                assert!((l - 0.5 * r.s[i]).abs() < 1e-12);
            }
            assert!((r.alpha[i] + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn xy_march_tracks_solver() {
        let m = CumulantModel::xy_isotropic();
        let r = toda_march(&m, 0.2, &MarchOptions { samples: 4, ..MarchOptions::default() }).unwrap();
        let p = solve_point(&m, 0.1, None).unwrap();
        assert!((r.beta2[2] - p.beta2).abs() < 1e-7);
        assert!(r.alpha[2].abs() < 1e-12);
    }

    #[test]
    fn xy_small_s_matches_two_terms() {
        let m = CumulantModel::xy_isotropic();
        let p = solve_point(&m, 0.05, None).unwrap();
        let approx = 0.25 * 0.05 - 0.75 * 0.05 * 0.05;
        assert!((p.beta2 - approx).abs() < 0.02 * approx);
        assert!(p.alpha.abs() < 1e-10);
    }

    #[test]
    fn tail_fit_recovers_power_law() {
        let s: Vec<f64> = (1..=30).map(|i| i as f64).collect();
        let y: Vec<f64> = s.iter().map(|v| -1.0 + 2.0 / (v * v)).collect();
        let f = fit_tail(&s, &y).unwrap();
        assert!((f.k - 2.0).abs() < 1e-9 && (f.a + 1.0).abs() < 1e-9);
        let grow: Vec<f64> = s.iter().map(|v| -v.sqrt()).collect();
        assert!(!fit_tail(&s, &grow).unwrap().is_bounded());
    }
}
