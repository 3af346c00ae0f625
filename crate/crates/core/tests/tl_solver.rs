use proptest::prelude::*;
use thermolanczos::tl_solver::*;
use thermolanczos::CumulantModel;

fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[test]
fn xy_curve_is_converged_and_monotone() {
    let curve = solve_curve(&CumulantModel::xy_isotropic(), &grid(0.02, 0.6, 25), &SolverOptions::default()).unwrap();
    for p in &curve.points {
        assert!(p.residuals.0.abs() <= 1e-10 && p.residuals.1.abs() <= 1e-10, "{p:?}");
        assert!(p.alpha.abs() < 1e-10);
    }
    assert!(curve.is_monotone());
    assert!(curve.eps_minus.windows(2).all(|w| w[1] <= w[0]));
    assert!(curve.eps_plus.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn xy_small_s_follows_the_series() {
    // β² = c₂ s + b₁ s² + O(s³) with c₂ = 1/4, b₁ = (c₂c₄ − c₃²)/(2c₂²) = −3/4
    let s = 0.05;
    let p = solve_point(&CumulantModel::xy_isotropic(), s, None).unwrap();
    let two_terms = 0.25 * s - 0.75 * s * s;
    assert!((p.beta2 - two_terms).abs() < 0.02 * two_terms, "{} vs {two_terms}", p.beta2);
}

#[test]
fn density_has_mass_s() {
    for m in [CumulantModel::xy_isotropic(), CumulantModel::itf(2.0).unwrap()] {
        let s = 0.01;
        let p = solve_point(&m, s, None).unwrap();
        let d = equilibrium_density(&m, &p, 64).unwrap();
        assert!((d.mass - s).abs() < 1e-8, "{}: {}", m.id(), d.mass);
        assert!(d.sigma.iter().all(|v| *v >= 0.0));
        assert!(d.support.0 < d.support.1);
    }
}

#[test]
fn gaussian_spectrum_is_unbounded() {
    let g = CumulantModel::gaussian(0.0, 1.0).unwrap();
    let curve = solve_curve(&g, &grid(1.0, 20.0, 20), &SolverOptions::default()).unwrap();
    let b = gse_bounds(&curve);
    assert_eq!(b.eps0, None);
    assert_eq!(b.epsinf, None);
}

#[test]
fn saturated_models_fail_loudly() {
    let (curve, err) = solve_curve_partial(&CumulantModel::itf(2.0).unwrap(), &[0.005, 0.01, 0.1], &SolverOptions::default());
    assert_eq!(curve.points.len(), 2);
    assert!(err.is_some());
}

#[test]
fn invalid_grids_are_rejected() {
    let xy = CumulantModel::xy_isotropic();
    assert!(solve_curve(&xy, &[0.2, 0.1], &SolverOptions::default()).is_err());
    assert!(solve_curve(&xy, &[], &SolverOptions::default()).is_err());
    assert!(solve_point(&xy, -1.0, None).is_err());
}

#[test]
fn gaussian_march_is_flat() {
    let g = CumulantModel::gaussian(0.4, 1.5).unwrap();
    let opts = MarchOptions { samples: 10, ..MarchOptions::default() };
    let m = toda_march(&g, 0.2, &opts).unwrap();
    for (s, b) in m.s.iter().zip(&m.beta2) {
        assert!((b - 1.5 * s).abs() < 1e-8);
    }
    for a in &m.alpha {
        assert!((a - 0.4).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gaussian_point_is_exact(c1 in -3.0f64..3.0, c2 in 0.1f64..4.0, s in 0.01f64..10.0) {
        let g = CumulantModel::gaussian(c1, c2).unwrap();
        let p = solve_point(&g, s, None).unwrap();
        prop_assert!((p.alpha - c1).abs() < 1e-10);
        prop_assert!((p.beta2 - c2 * s).abs() < 1e-10 * (1.0 + c2 * s));
    }

    #[test]
    fn small_s_limit(x in 0.2f64..3.0) {
        let m = CumulantModel::itf(x).unwrap();
        let c = m.cumulants(3).unwrap();
        let s = 1e-4;
        let p = solve_point(&m, s, None).unwrap();
        prop_assert!((p.alpha - c[0] - c[2] / c[1] * s).abs() < 1e-6);
        prop_assert!((p.beta2 / s - c[1]).abs() < 1e-3 * c[1]);
    }
}
