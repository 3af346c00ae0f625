use approx::assert_abs_diff_eq;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use thermolanczos::exact::{binomial, rat};
use thermolanczos::models::{moments_from_cumulants, CumulantModel};

fn builtins() -> Vec<CumulantModel> {
    vec![
        CumulantModel::gaussian(0.3, 1.7).unwrap(),
        CumulantModel::xy_isotropic(),
        CumulantModel::itf(0.5).unwrap(),
        CumulantModel::itf(2.0).unwrap(),
        CumulantModel::polynomial_f64(&[0.1, 1.0, 0.2, -0.1], 1.0).unwrap(),
    ]
}

#[test]
fn cgf_values() {
    let g = CumulantModel::gaussian(0.0, 1.0).unwrap();
    assert_abs_diff_eq!(g.cgf_eval(0.7, 0).unwrap(), 0.245, epsilon = 1e-15);
    let xy = CumulantModel::xy_isotropic();
    assert_abs_diff_eq!(xy.cgf_eval(0.0, 0).unwrap(), 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(xy.cgf_eval(0.0, 2).unwrap(), 0.25, epsilon = 1e-12);
}

#[test]
fn cumulant_values() {
    let g = CumulantModel::gaussian(0.0, 1.0).unwrap();
    assert_eq!(g.cumulants(4).unwrap(), vec![0.0, 1.0, 0.0, 0.0]);
    let xy = CumulantModel::xy_isotropic().cumulants(4).unwrap();
    for (v, e) in xy.iter().zip([0.0, 0.25, 0.0, -0.375]) {
        assert_abs_diff_eq!(*v, e, epsilon = 1e-10);
    }
    let p = CumulantModel::polynomial(vec![rat(1, 1), rat(2, 1), rat(3, 1)], 1.0).unwrap();
    assert_eq!(p.cumulants(3).unwrap(), vec![1.0, 2.0, 3.0]);
}

#[test]
fn moment_values() {
    let m = moments_from_cumulants(&[rat(3, 2)], &rat(5, 1), 2).unwrap();
    assert_eq!(m.mu[1], rat(15, 2));
    assert_eq!(m.mu[2], rat(225, 4));
    let m = moments_from_cumulants(&[rat(0, 1), rat(1, 1)], &rat(1, 1), 4).unwrap();
    assert_eq!(m.mu, [0, 1, 0, 3].iter().fold(vec![rat(1, 1)], |mut v, &x| {
        v.push(rat(x, 1));
        v
    }));
    let m = moments_from_cumulants(&[rat(1, 1), rat(1, 1), rat(1, 1)], &rat(2, 1), 3).unwrap();
    assert_eq!(m.mu[3], rat(22, 1));
}

#[test]
fn saddle_values() {
    let g = CumulantModel::gaussian(0.0, 1.0).unwrap();
    assert_abs_diff_eq!(g.saddle_xi(0.3).unwrap().xi, 0.3, epsilon = 1e-14);
    let xy = CumulantModel::xy_isotropic();
    let sol = xy.saddle_xi(-0.31).unwrap();
    assert!(sol.xi < -3.0);
    assert_abs_diff_eq!(xy.cgf_eval(sol.xi, 1).unwrap(), -0.31, epsilon = 1e-12);
    assert!(xy.saddle_xi(-0.33).is_err());
}

#[test]
fn spectrum_ranges() {
    let (lo, hi) = CumulantModel::xy_isotropic().spectrum_range();
    assert_abs_diff_eq!(lo, -1.0 / std::f64::consts::PI, epsilon = 1e-12);
    assert_abs_diff_eq!(hi, 1.0 / std::f64::consts::PI, epsilon = 1e-12);
    let (lo, hi) = CumulantModel::gaussian(0.0, 1.0).unwrap().spectrum_range();
    assert!(lo.is_infinite() && hi.is_infinite());
}

#[test]
fn invalid_models_are_rejected() {
    assert!(CumulantModel::gaussian(0.0, -1.0).is_err());
    assert!(CumulantModel::itf(-0.1).is_err());
    assert!(CumulantModel::gaussian(f64::NAN, 1.0).is_err());
    assert!(CumulantModel::from_json(r#"{"kind":"itf","params":{}}"#).is_err());
    assert!(CumulantModel::from_json(r#"{"kind":"itf","params":{"x":1}}"#).unwrap().is_critical());
}

/// Cumulants recovered from moments by `κ_n = μ_n − Σ C(n−1,k−1) κ_k μ_{n−k}`.
fn cumulants_from_moments(mu: &[BigRational]) -> Vec<BigRational> {
    let mut kappa: Vec<BigRational> = Vec::new();
    for n in 1..mu.len() {
        let mut v = mu[n].clone();
        for k in 1..n {
            let b = BigRational::from_integer(binomial(n as u64 - 1, k as u64 - 1));
            v -= b * &kappa[k - 1] * &mu[n - k];
        }
        kappa.push(v);
    }
    kappa
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn second_derivative_is_positive(t in -5.0f64..5.0, which in 0usize..4) {
        prop_assert!(builtins()[which].cgf_eval(t, 2).unwrap() > 0.0);
    }

    #[test]
    fn moments_encode_extensive_cumulants(
        num in prop::collection::vec(-20i64..20, 1..5),
        den in prop::collection::vec(1i64..9, 5),
        n_sites in 1i64..12,
    ) {
        let c: Vec<BigRational> = num.iter().zip(&den).map(|(&a, &b)| rat(a, b)).collect();
        let k = 7;
        let m = moments_from_cumulants(&c, &rat(n_sites, 1), k).unwrap();
        let kappa = cumulants_from_moments(&m.mu);
        for (i, v) in kappa.iter().enumerate() {
            let expected = c.get(i).map_or(BigRational::zero(), |x| x * rat(n_sites, 1));
            prop_assert_eq!(v, &expected);
        }
    }

    #[test]
    fn integral_models_are_converged(t in -2.0f64..2.0, x in 0.0f64..3.0) {
        // Cumulant densities of the ITF chain follow from the jet at zero; the
        // same values through direct evaluation agree to quadrature accuracy.
        let m = CumulantModel::itf(x).unwrap();
        let d = m.derivatives(t, 2).unwrap();
        let h = 1e-4;
        let fd = (m.cgf_eval(t + h, 0).unwrap() - m.cgf_eval(t - h, 0).unwrap()) / (2.0 * h);
        prop_assert!((d[1] - fd).abs() < 1e-7 * (1.0 + d[1].abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn saddle_round_trip(t in -1.0f64..1.0, which in 0usize..5) {
        let m = &builtins()[which];
        let (lo, hi) = m.domain();
        let t = t.clamp(0.9 * lo, 0.9 * hi);
        let eps = m.cgf_eval(t, 1).unwrap();
        let xi = m.saddle_xi(eps).unwrap().xi;
        prop_assert!((xi - t).abs() < 1e-10, "{}: {} vs {}", m.id(), xi, t);
    }
}
