//! Cumulant generating function models.
//!
//! A model is the per-site CGF `F(t) = lim (1/N) log <exp(tH)>` of a trial
//! state. Four kinds are built in: a Gaussian, a truncated cumulant series,
//! the isotropic XY chain and the transverse-field Ising chain. The two chain
//! models are q-integrals of `log cosh`, evaluated by Gauss–Legendre
//! quadrature with derivatives taken analytically under the integral.

use std::collections::HashMap;
use std::f64::consts::{LN_2, PI};
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{bernoulli_numbers, binomial, Decimal};
use crate::finite_ref::MomentTable;
use crate::jet::{log_cosh, sech2, Jet};
use crate::quadrature::{composite_rule, GaussLegendre};
use crate::scalar::{f64_to_ratio, ratio_to_f64, Scalar};

/// Highest derivative order available through quadrature.
pub const MAX_DERIVATIVE_ORDER: usize = 64;
/// Highest cumulant order for models with exact cumulants.
pub const MAX_EXACT_ORDER: usize = 512;

const BASE_NODES: usize = 256;
const MAX_NODES: usize = 1 << 17;
/// Width of the ITF endpoint zones refined by geometric panels.
const ENDPOINT_ZONE: f64 = PI / 64.0;
const GRADED_PANEL_NODES: usize = 12;
const MIN_GRADED_LEVELS: usize = 3;
/// Deep enough for any kink distance above the smallest subnormal.
const MAX_GRADED_LEVELS: usize = 1080;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Gaussian {
        c1: BigRational,
        c2: BigRational,
    },
    XyIsotropic,
    Itf {
        x: f64,
    },
    Polynomial {
        cumulants: Vec<BigRational>,
        trust_radius: f64,
    },
}

/// Quadrature nodes for a CGF of the form
/// `F(t) = Σ w_i [log cosh(a_i t + b_i) − log cosh(b_i)]`.
#[derive(Debug)]
struct NodeSet {
    a: Vec<f64>,
    b: Vec<f64>,
    lc_b: Vec<f64>,
    w: Vec<f64>,
}

#[derive(Debug, Default)]
struct NodeCache {
    sets: Mutex<HashMap<(usize, usize, usize), Arc<NodeSet>>>,
}

#[derive(Debug, Clone)]
pub struct CumulantModel {
    kind: ModelKind,
    float_c: Vec<f64>,
    nodes: Arc<NodeCache>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleSolution {
    pub epsilon: f64,
    pub xi: f64,
    pub f2_at_xi: f64,
    pub residual: f64,
}

impl CumulantModel {
    pub fn gaussian(c1: f64, c2: f64) -> Result<Self> {
        if !c1.is_finite() || !c2.is_finite() {
            return Err(Error::InvalidModel("gaussian cumulants must be finite".into()));
        }
        Self::gaussian_exact(f64_to_ratio(c1), f64_to_ratio(c2))
    }

    pub fn gaussian_exact(c1: BigRational, c2: BigRational) -> Result<Self> {
        if !c2.is_positive() {
            return Err(Error::InvalidModel(format!("c2 must be positive, got {c2}")));
        }
        let float_c = vec![ratio_to_f64(&c1), ratio_to_f64(&c2)];
        Ok(Self::with_kind(ModelKind::Gaussian { c1, c2 }, float_c))
    }

    pub fn xy_isotropic() -> Self {
        Self::with_kind(ModelKind::XyIsotropic, Vec::new())
    }

    /// Transverse-field Ising chain at coupling `x ≥ 0`; `x = 1` is critical.
    pub fn itf(x: f64) -> Result<Self> {
        if !(x.is_finite() && x >= 0.0) {
            return Err(Error::InvalidModel(format!("ITF coupling must be >= 0, got {x}")));
        }
        Ok(Self::with_kind(ModelKind::Itf { x }, Vec::new()))
    }

    /// Truncated cumulant series `F(t) = Σ c_k t^k / k!` trusted on `|t| ≤ r`.
    pub fn polynomial(cumulants: Vec<BigRational>, trust_radius: f64) -> Result<Self> {
        if cumulants.len() < 2 {
            return Err(Error::InvalidModel("polynomial model needs at least c1 and c2".into()));
        }
        if !cumulants[1].is_positive() {
            return Err(Error::InvalidModel(format!(
                "c2 must be positive, got {}",
                cumulants[1]
            )));
        }
        if !(trust_radius.is_finite() && trust_radius > 0.0) {
            return Err(Error::InvalidModel(format!(
                "trust radius must be positive, got {trust_radius}"
            )));
        }
        let float_c = cumulants.iter().map(ratio_to_f64).collect();
        Ok(Self::with_kind(
            ModelKind::Polynomial {
                cumulants,
                trust_radius,
            },
            float_c,
        ))
    }

    pub fn polynomial_f64(cumulants: &[f64], trust_radius: f64) -> Result<Self> {
        if cumulants.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidModel("cumulants must be finite".into()));
        }
        Self::polynomial(cumulants.iter().map(|&c| f64_to_ratio(c)).collect(), trust_radius)
    }

    fn with_kind(kind: ModelKind, float_c: Vec<f64>) -> Self {
        CumulantModel {
            kind,
            float_c,
            nodes: Arc::new(NodeCache::default()),
        }
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    /// True for the ITF chain at its critical coupling.
    pub fn is_critical(&self) -> bool {
        matches!(self.kind, ModelKind::Itf { x } if x == 1.0)
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.kind, ModelKind::Gaussian { .. })
    }

    /// Short human-readable identifier.
    pub fn id(&self) -> String {
        match &self.kind {
            ModelKind::Gaussian { c1, c2 } => format!(
                "gaussian(c1={},c2={})",
                crate::exact::format_rational(c1),
                crate::exact::format_rational(c2)
            ),
            ModelKind::XyIsotropic => "xy_isotropic".into(),
            ModelKind::Itf { x } => format!("itf(x={x})"),
            ModelKind::Polynomial {
                cumulants,
                trust_radius,
            } => format!("polynomial(K={},r={trust_radius})", cumulants.len()),
        }
    }

    /// Interval of `t` on which `F` is defined.
    pub fn domain(&self) -> (f64, f64) {
        match &self.kind {
            ModelKind::Polynomial { trust_radius, .. } => (-trust_radius, *trust_radius),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Infimum and supremum of `F'` over the domain.
    pub fn spectrum_range(&self) -> (f64, f64) {
        match &self.kind {
            ModelKind::Gaussian { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            ModelKind::XyIsotropic => (-1.0 / PI, 1.0 / PI),
            ModelKind::Itf { x } => {
                let e = itf_mean_quasiparticle_energy(*x);
                (-e, e)
            }
            ModelKind::Polynomial { trust_radius, .. } => {
                let r = *trust_radius;
                (self.poly_derivs(-r, 1)[1], self.poly_derivs(r, 1)[1])
            }
        }
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        if !(t >= lo && t <= hi) {
            return Err(Error::Domain { t, lo, hi });
        }
        Ok(())
    }

    /// `F^{(order)}(t)`.
    pub fn cgf_eval(&self, t: f64, order: usize) -> Result<f64> {
        Ok(self.derivatives(t, order)?[order])
    }

    /// `F(t), F'(t), …, F^{(max_order)}(t)`.
    ///
    /// For the quadrature models the node count is doubled until the highest
    /// requested derivative is stable to near machine precision.
    pub fn derivatives(&self, t: f64, max_order: usize) -> Result<Vec<f64>> {
        self.check_domain(t)?;
        match &self.kind {
            ModelKind::Gaussian { .. } => Ok(self.gauss_derivs(t, max_order)),
            ModelKind::Polynomial { .. } => Ok(self.poly_derivs(t, max_order)),
            _ => {
                if max_order > MAX_DERIVATIVE_ORDER {
                    return Err(Error::UnsupportedOrder {
                        order: max_order,
                        cap: MAX_DERIVATIVE_ORDER,
                    });
                }
                let mut n = self.node_count(t);
                let mut prev = self.quad_derivs(t, max_order, n);
                while n < MAX_NODES {
                    n *= 2;
                    let next = self.quad_derivs(t, max_order, n);
                    let stable = prev.iter().zip(&next).all(|(a, b)| {
                        (a - b).abs() <= 1e-13 * a.abs().max(b.abs()).max(1.0)
                    });
                    prev = next;
                    if stable {
                        break;
                    }
                }
                Ok(prev)
            }
        }
    }

    /// Derivatives as a Taylor jet of length `len` at `t`.
    pub fn jet(&self, t: f64, len: usize) -> Result<Jet<f64>> {
        Ok(Jet::from_derivatives(&self.derivatives(t, len - 1)?))
    }

    /// `(F, F', F'')` at a node count chosen from `|t|` without verification.
    /// This is the inner-loop evaluator used by the solvers.
    pub fn f012(&self, t: f64) -> (f64, f64, f64) {
        match &self.kind {
            ModelKind::Gaussian { .. } => {
                let d = self.gauss_derivs(t, 2);
                (d[0], d[1], d[2])
            }
            ModelKind::Polynomial { .. } => {
                let d = self.poly_derivs(t, 2);
                (d[0], d[1], d[2])
            }
            _ => {
                let set = self.node_set(self.node_count(t), self.graded_levels(t));
                let (mut f0, mut f1, mut f2) = (0.0, 0.0, 0.0);
                for i in 0..set.a.len() {
                    let (a, w) = (set.a[i], set.w[i]);
                    let y = a * t + set.b[i];
                    f0 += w * (log_cosh(y) - set.lc_b[i]);
                    f1 += w * a * y.tanh();
                    f2 += w * a * a * sech2(y);
                }
                (f0, f1, f2)
            }
        }
    }

    /// Cumulant densities `c_1..c_K` as floats.
    pub fn cumulants(&self, k: usize) -> Result<Vec<f64>> {
        if let Some(exact) = self.exact_cumulants(k)? {
            return Ok(exact.iter().map(ratio_to_f64).collect());
        }
        let d = self.derivatives(0.0, k)?;
        Ok(d[1..].to_vec())
    }

    /// Exact rational cumulants `c_1..c_K` when the model admits them.
    pub fn exact_cumulants(&self, k: usize) -> Result<Option<Vec<BigRational>>> {
        let cap = match self.kind {
            ModelKind::Itf { .. } => MAX_DERIVATIVE_ORDER,
            _ => MAX_EXACT_ORDER,
        };
        if k > cap {
            return Err(Error::UnsupportedOrder { order: k, cap });
        }
        Ok(match &self.kind {
            ModelKind::Gaussian { c1, c2 } => {
                let mut c = vec![BigRational::zero(); k];
                if k > 0 {
                    c[0] = c1.clone();
                }
                if k > 1 {
                    c[1] = c2.clone();
                }
                Some(c)
            }
            ModelKind::Polynomial { cumulants, .. } => Some(
                (0..k)
                    .map(|i| cumulants.get(i).cloned().unwrap_or_else(BigRational::zero))
                    .collect(),
            ),
            ModelKind::XyIsotropic => Some(xy_cumulants(k)),
            ModelKind::Itf { .. } => None,
        })
    }

    /// Solve `F'(ξ) = ε` for the unique real saddle point.
    pub fn saddle_xi(&self, epsilon: f64) -> Result<SaddleSolution> {
        self.saddle_xi_near(epsilon, None)
    }

    /// As [`saddle_xi`](Self::saddle_xi), starting the search from `guess`.
    pub fn saddle_xi_near(&self, epsilon: f64, guess: Option<f64>) -> Result<SaddleSolution> {
        let (lower, upper) = self.spectrum_range();
        if !(epsilon > lower && epsilon < upper) {
            return Err(Error::OutOfSpectrum {
                epsilon,
                lower,
                upper,
            });
        }
        let tol = 1e-12 * epsilon.abs().max(1.0);
        if let ModelKind::Gaussian { .. } = self.kind {
            let (c1, c2) = (self.float_c[0], self.float_c[1]);
            return Ok(SaddleSolution {
                epsilon,
                xi: (epsilon - c1) / c2,
                f2_at_xi: c2,
                residual: 0.0,
            });
        }
        let (dlo, dhi) = self.domain();
        let g = |t: f64| {
            let (_, f1, f2) = self.f012(t);
            (f1 - epsilon, f2)
        };

        let x0 = guess.unwrap_or(0.0).clamp(dlo, dhi);
        let (g0, d0) = g(x0);

        // Plain Newton from a good guess; fall back to bracketing if it stalls.
        if guess.is_some() && d0 > 0.0 {
            let (mut x, mut gx, mut dx) = (x0, g0, d0);
            for _ in 0..8 {
                let xn = x - gx / dx;
                if !(xn >= dlo && xn <= dhi) {
                    break;
                }
                let (gn, dn) = g(xn);
                if !(gn.abs() < gx.abs() && dn > 0.0) {
                    break;
                }
                let done = gx.abs() <= tol;
                (x, gx, dx) = (xn, gn, dn);
                // one step past the tolerance polishes to rounding level
                if done {
                    return Ok(SaddleSolution {
                        epsilon,
                        xi: x,
                        f2_at_xi: dx,
                        residual: gx.abs(),
                    });
                }
            }
            if gx.abs() <= tol {
                return Ok(SaddleSolution {
                    epsilon,
                    xi: x,
                    f2_at_xi: dx,
                    residual: gx.abs(),
                });
            }
        }
        if g0.abs() <= tol {
            return Ok(SaddleSolution {
                epsilon,
                xi: x0,
                f2_at_xi: d0,
                residual: g0.abs(),
            });
        }

        // Walk downhill of the residual until the sign flips.
        let dir = if g0 > 0.0 { -1.0 } else { 1.0 };
        let mut step = if d0 > 0.0 {
            (1.5 * g0.abs() / d0).clamp(1e-3, 1.0)
        } else {
            1.0
        };
        let (mut a, mut ga) = (x0, g0);
        let (b, gb) = loop {
            let edge = if dir > 0.0 { dhi } else { dlo };
            let mut x = a + dir * step;
            let at_edge = if dir > 0.0 { x >= edge } else { x <= edge };
            if at_edge {
                x = edge;
            }
            let (gx, _) = g(x);
            if gx == 0.0 || gx.signum() != ga.signum() {
                break (x, gx);
            }
            if at_edge || !x.is_finite() || step > 1e12 {
                let attained = gx + epsilon;
                return Err(Error::OutOfSpectrum {
                    epsilon,
                    lower: if dir < 0.0 { attained } else { lower },
                    upper: if dir > 0.0 { attained } else { upper },
                });
            }
            a = x;
            ga = gx;
            step *= 2.0;
        };

        // Safeguarded Newton on the bracket [lo, hi] with g(lo) < 0 < g(hi).
        let (mut lo, mut hi) = if ga < 0.0 { (a, b) } else { (b, a) };
        if gb == 0.0 {
            let (_, d) = g(b);
            return Ok(SaddleSolution {
                epsilon,
                xi: b,
                f2_at_xi: d,
                residual: 0.0,
            });
        }
        let mut x = 0.5 * (lo + hi);
        let mut best = (f64::INFINITY, x, 0.0);
        for _ in 0..300 {
            let (gx, dx) = g(x);
            if gx.abs() < best.0 {
                best = (gx.abs(), x, dx);
            }
            if gx.abs() <= tol {
                // one polishing step takes the quadratic gain for free
                if dx > 0.0 {
                    let xn = x - gx / dx;
                    let (gn, dn) = g(xn);
                    if gn.abs() < best.0 {
                        best = (gn.abs(), xn, dn);
                    }
                }
                break;
            }
            if gx < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let newton = x - gx / dx;
            x = if dx > 0.0 && newton > lo.min(hi) && newton < lo.max(hi) {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (hi - lo).abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-300) {
                break;
            }
        }
        let (res, xi, f2) = best;
        if !(f2 > 0.0) {
            return Err(Error::Degenerate(format!("F'' = {f2} at the saddle point {xi}")));
        }
        Ok(SaddleSolution {
            epsilon,
            xi,
            f2_at_xi: f2,
            residual: res,
        })
    }

    /// `lim_{t→−∞} F'(t)` and `lim_{t→+∞} F'(t)` when finite.
    pub fn spectrum_edges(&self) -> (Option<f64>, Option<f64>) {
        match self.kind {
            ModelKind::XyIsotropic | ModelKind::Itf { .. } => {
                let (lo, hi) = self.spectrum_range();
                (Some(lo), Some(hi))
            }
            _ => (None, None),
        }
    }

    fn gauss_derivs(&self, t: f64, max_order: usize) -> Vec<f64> {
        let (c1, c2) = (self.float_c[0], self.float_c[1]);
        let mut d = vec![0.0; max_order + 1];
        d[0] = c1 * t + 0.5 * c2 * t * t;
        if max_order >= 1 {
            d[1] = c1 + c2 * t;
        }
        if max_order >= 2 {
            d[2] = c2;
        }
        d
    }

    fn poly_derivs(&self, t: f64, max_order: usize) -> Vec<f64> {
        // F^{(j)}(t) = Σ_{k≥j} c_k t^{k−j}/(k−j)!, with c_0 = 0
        let c = &self.float_c;
        (0..=max_order)
            .map(|j| {
                let mut acc = 0.0;
                let mut term_pow = 1.0;
                for m in 0.. {
                    let k = j + m;
                    if k > c.len() {
                        break;
                    }
                    if k >= 1 {
                        acc += c[k - 1] * term_pow;
                    }
                    term_pow *= t / (m + 1) as f64;
                }
                acc
            })
            .collect()
    }

    fn node_count(&self, t: f64) -> usize {
        let a_max = match self.kind {
            ModelKind::Itf { x } => 2.0 * (1.0 + x),
            _ => 1.0,
        };
        let want = (24.0 * a_max * t.abs()).max(BASE_NODES as f64);
        if want >= MAX_NODES as f64 {
            MAX_NODES
        } else {
            (want as usize).next_power_of_two()
        }
    }

    /// Halvings of the two ITF endpoint zones, `(q = 0, q = π)`, needed to
    /// resolve the kink at distance `δ ≈ 2ε e^{−2ε|t|}` from an endpoint
    /// where `tanh b_q → ±1` with the sign of `t`.
    fn graded_levels(&self, t: f64) -> (usize, usize) {
        let ModelKind::Itf { x } = self.kind else {
            return (0, 0);
        };
        let depth = |e: f64, kink: bool| -> usize {
            if !kink || e == 0.0 {
                return MIN_GRADED_LEVELS;
            }
            let d = (2.0 * e * t.abs() - (2.0 * e).ln() + ENDPOINT_ZONE.ln()) / LN_2;
            (d.max(0.0).ceil() as usize + MIN_GRADED_LEVELS).min(MAX_GRADED_LEVELS)
        };
        let far = if x < 1.0 { t < 0.0 } else { t > 0.0 };
        (depth(1.0 + x, t > 0.0), depth((1.0 - x).abs(), far))
    }

    fn node_set(&self, n: usize, levels: (usize, usize)) -> Arc<NodeSet> {
        let key = (n, levels.0, levels.1);
        if let Some(s) = self.nodes.sets.lock().unwrap().get(&key) {
            return s.clone();
        }
        let set = match self.kind {
            ModelKind::XyIsotropic => {
                let (mut a, mut w) = (Vec::with_capacity(n), Vec::with_capacity(n));
                for (q, wq) in composite_rule(n, 0.0, 0.5 * PI) {
                    a.push(q.cos());
                    w.push(wq / PI);
                }
                NodeSet {
                    b: vec![0.0; n],
                    lc_b: vec![0.0; n],
                    a,
                    w,
                }
            }
            ModelKind::Itf { x } => {
                let mut set = NodeSet {
                    a: Vec::with_capacity(n),
                    b: Vec::with_capacity(n),
                    lc_b: Vec::with_capacity(n),
                    w: Vec::with_capacity(n),
                };
                // (sin q, cos q, weight); the endpoint zones are integrated in
                // the distance δ to the endpoint, which keeps full relative
                // precision where q itself cannot
                let mut rule: Vec<(f64, f64, f64)> = composite_rule(n, ENDPOINT_ZONE, PI - ENDPOINT_ZONE)
                    .into_iter()
                    .map(|(q, w)| (q.sin(), q.cos(), w))
                    .collect();
                for (side, count) in [(1.0, levels.0), (-1.0, levels.1)] {
                    let mut hi = ENDPOINT_ZONE;
                    for k in 0..=count {
                        let lo = if k == count { 0.0 } else { 0.5 * hi };
                        for (d, w) in composite_rule(GRADED_PANEL_NODES, lo, hi) {
                            rule.push((d.sin(), side * d.cos(), w));
                        }
                        hi = lo;
                    }
                }
                for (sq, cq, wq) in rule {
                    let (eq, bq) = itf_node(x, sq, cq);
                    set.a.push(2.0 * eq);
                    set.b.push(-bq);
                    set.lc_b.push(log_cosh(bq));
                    set.w.push(wq / (2.0 * PI));
                }
                set
            }
            _ => unreachable!("node sets exist only for quadrature models"),
        };
        let set = Arc::new(set);
        self.nodes.sets.lock().unwrap().insert(key, set.clone());
        set
    }

    fn quad_derivs(&self, t: f64, max_order: usize, n: usize) -> Vec<f64> {
        let set = self.node_set(n, self.graded_levels(t));
        let mut out = vec![0.0; max_order + 1];
        for i in 0..set.a.len() {
            let (a, w) = (set.a[i], set.w[i]);
            let y = a * t + set.b[i];
            out[0] += w * (log_cosh(y) - set.lc_b[i]);
            if max_order == 0 {
                continue;
            }
            if max_order <= 2 {
                out[1] += w * a * y.tanh();
                if max_order == 2 {
                    out[2] += w * a * a * sech2(y);
                }
                continue;
            }
            let jet = Jet::log_cosh_at(y, max_order + 1);
            // derivative k of log cosh(a t + b) is a^k k! jet_k
            let mut scale = w;
            for k in 1..=max_order {
                scale *= a * k as f64;
                out[k] += scale * jet.coeffs[k];
            }
        }
        out
    }
}

/// `(ε_q, b_q)` for the ITF integrand `log cosh(2 ε_q t − b_q) − log cosh b_q`
/// with `tanh b_q = (cos q + x)/ε_q`, from `sin q` and `cos q`.
fn itf_node(x: f64, s: f64, c: f64) -> (f64, f64) {
    let p = c + x;
    let eq = (1.0 + x * x + 2.0 * x * c).max(0.0).sqrt();
    // ε² − p² = sin² q, so both branches avoid cancellation
    let b = if p >= 0.0 {
        ((eq + p) / s).ln()
    } else {
        (s / (eq - p)).ln()
    };
    (eq, b)
}

/// `(1/π) ∫_0^π ε_q dq`, the magnitude of the ITF spectrum edges.
pub fn itf_mean_quasiparticle_energy(x: f64) -> f64 {
    if x == 1.0 {
        return 4.0 / PI;
    }
    let rule = GaussLegendre::cached(2048);
    rule.integrate(0.0, PI, |q| (1.0 + x * x + 2.0 * x * q.cos()).sqrt()) / PI
}

/// Exact cumulants of the isotropic XY model,
/// `c_{2k} = (4^k − 1) B_{2k} C(2k, k) / (4k)` and zero at odd orders.
fn xy_cumulants(k: usize) -> Vec<BigRational> {
    let bern = bernoulli_numbers(k + 1);
    (1..=k)
        .map(|n| {
            if n % 2 == 1 {
                return BigRational::zero();
            }
            let m = (n / 2) as u64;
            let four_m = num_traits::pow(BigInt::from(4), m as usize) - BigInt::one();
            let num = BigRational::from_integer(four_m * binomial(2 * m, m)) * &bern[n];
            num / BigRational::from_integer(BigInt::from(4 * m))
        })
        .collect()
}

/// Moments `μ_0..μ_K` of `exp(Σ ν_k t^k/k!)` from the cumulants `ν_k`,
/// via `μ_n = Σ_k C(n−1, k−1) ν_k μ_{n−k}`.
pub fn bell_moments<T: Scalar>(nu: &[T], k: usize) -> Vec<T> {
    let mut mu: Vec<T> = Vec::with_capacity(k + 1);
    mu.push(T::one());
    for n in 1..=k {
        let mut acc = T::zero();
        let mut binom: i64 = 1; // C(n−1, j−1)
        for j in 1..=n {
            if j > 1 && n <= I64_BINOMIAL_MAX {
                binom = binom * (n as i64 - j as i64 + 1) / (j as i64 - 1);
            }
            if j <= nu.len() {
                let term = nu[j - 1].clone() * mu[n - j].clone();
                acc = acc + scale_big(&term, binom, n, j);
            }
        }
        mu.push(acc);
    }
    mu
}

// C(n−1, j−1) overflows i64 past n ≈ 62; fall back to an exact binomial then.
const I64_BINOMIAL_MAX: usize = 60;

fn scale_big<T: Scalar>(term: &T, binom: i64, n: usize, j: usize) -> T {
    if n <= I64_BINOMIAL_MAX {
        term.scale_i64(binom)
    } else {
        term.clone() * T::from_ratio(&BigRational::from_integer(binomial(
            n as u64 - 1,
            j as u64 - 1,
        )))
    }
}

/// Moment table of an extensive system with cumulant densities `c` at size `N`.
/// Cumulants beyond the end of `c` are taken to vanish.
pub fn moments_from_cumulants(
    c: &[BigRational],
    n_sites: &BigRational,
    k: usize,
) -> Result<MomentTable> {
    if c.is_empty() {
        return Err(Error::Arity { needed: 1, got: 0 });
    }
    if !n_sites.is_positive() {
        return Err(Error::InvalidModel(format!("N must be positive, got {n_sites}")));
    }
    let nu: Vec<BigRational> = c[..k.min(c.len())].iter().map(|x| x * n_sites).collect();
    Ok(MomentTable {
        n_sites: n_sites.clone(),
        mu: bell_moments(&nu, k),
        exact: true,
    })
}

/// Float-input variant; values are converted exactly, so the table is exact
/// arithmetic on the binary inputs but flagged as not exact.
pub fn moments_from_cumulants_f64(c: &[f64], n_sites: f64, k: usize) -> Result<MomentTable> {
    let c: Vec<BigRational> = c.iter().map(|&x| f64_to_ratio(x)).collect();
    let mut m = moments_from_cumulants(&c, &f64_to_ratio(n_sites), k)?;
    m.exact = false;
    Ok(m)
}

/// JSON model description: `{"kind": "...", "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKindName,
    #[serde(default)]
    pub params: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKindName {
    Gaussian,
    XyIsotropic,
    Itf,
    Polynomial,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GaussianParams {
    c1: Decimal,
    c2: Decimal,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ItfParams {
    x: Decimal,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolynomialParams {
    cumulants: Vec<Decimal>,
    trust_radius: Option<Decimal>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

fn params<T: for<'de> Deserialize<'de>>(v: &serde_json::Value) -> Result<T> {
    let v = if v.is_null() {
        serde_json::Value::Object(Default::default())
    } else {
        v.clone()
    };
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        Error::Parse(format!("params.{path}: {}", e.inner()))
    })
}

impl ModelSpec {
    pub fn build(&self) -> Result<CumulantModel> {
        match self.kind {
            ModelKindName::Gaussian => {
                let p: GaussianParams = params(&self.params)?;
                CumulantModel::gaussian_exact(p.c1.0, p.c2.0)
            }
            ModelKindName::XyIsotropic => {
                let _: NoParams = params(&self.params)?;
                Ok(CumulantModel::xy_isotropic())
            }
            ModelKindName::Itf => {
                let p: ItfParams = params(&self.params)?;
                CumulantModel::itf(p.x.to_f64())
            }
            ModelKindName::Polynomial => {
                let p: PolynomialParams = params(&self.params)?;
                let r = p.trust_radius.map(|d| d.to_f64()).unwrap_or(1.0);
                CumulantModel::polynomial(p.cumulants.into_iter().map(|d| d.0).collect(), r)
            }
        }
    }
}

impl CumulantModel {
    pub fn from_json(text: &str) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        let spec: ModelSpec = serde_path_to_error::deserialize(&mut de)
            .map_err(|e| Error::Parse(format!("{}: {}", e.path(), e.inner())))?;
        spec.build()
    }

    /// The JSON description this model can be rebuilt from.
    pub fn spec(&self) -> ModelSpec {
        use serde_json::json;
        let fmt = crate::exact::format_rational;
        match &self.kind {
            ModelKind::Gaussian { c1, c2 } => ModelSpec {
                kind: ModelKindName::Gaussian,
                params: json!({"c1": fmt(c1), "c2": fmt(c2)}),
            },
            ModelKind::XyIsotropic => ModelSpec {
                kind: ModelKindName::XyIsotropic,
                params: json!({}),
            },
            ModelKind::Itf { x } => ModelSpec {
                kind: ModelKindName::Itf,
                params: json!({"x": fmt(&f64_to_ratio(*x))}),
            },
            ModelKind::Polynomial {
                cumulants,
                trust_radius,
            } => ModelSpec {
                kind: ModelKindName::Polynomial,
                params: json!({
                    "cumulants": cumulants.iter().map(fmt).collect::<Vec<_>>(),
                    "trust_radius": fmt(&f64_to_ratio(*trust_radius)),
                }),
            },
        }
    }
}
