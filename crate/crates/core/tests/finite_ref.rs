use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use thermolanczos::exact::rat;
use thermolanczos::finite_ref::*;
use thermolanczos::models::moments_from_cumulants;
use thermolanczos::tl_solver::solve_point;
use thermolanczos::CumulantModel;

fn rationals(c: &[i64]) -> Vec<BigRational> {
    c.iter().map(|&v| rat(v, 1)).collect()
}

#[test]
fn hankel_examples() {
    let m = moments_from_cumulants(&[rat(1, 2), rat(3, 4)], &rat(1, 1), 4).unwrap();
    let d = hankel_determinants(&m, 2).unwrap();
    assert!(d[0].is_one());
    assert_eq!(d[1], &m.mu[2] - &m.mu[1] * &m.mu[1]);
    let g = moments_from_cumulants(&rationals(&[0, 1]), &rat(1, 1), 4).unwrap();
    assert_eq!(hankel_determinants(&g, 2).unwrap()[2], rat(2, 1));
}

#[test]
fn gaussian_is_hermite() {
    let m = moments_from_cumulants(&rationals(&[0, 1]), &rat(1, 1), 13).unwrap();
    let j = jacobi_from_moments(&m, 6).unwrap();
    assert!(j.alpha.iter().all(Zero::is_zero));
    for n in 1..=6 {
        assert_eq!(j.beta2[n], rat(n as i64, 1));
    }
    assert_eq!(j.termination, None);
}

#[test]
fn point_mass_terminates_after_one_step() {
    let m = moments_from_cumulants(&rationals(&[5]), &rat(1, 1), 7).unwrap();
    let j = jacobi_from_moments(&m, 3).unwrap();
    assert_eq!(j.alpha, vec![rat(5, 1)]);
    assert_eq!(j.termination, Some(Termination::Exhausted { n: 1 }));
}

#[test]
fn printed_expansion_example() {
    let c = rationals(&[0, 1, 0, 0, 0, 0]);
    assert_eq!(expansion_check(&c, &rat(10, 1), 3).unwrap(), (rat(0, 1), rat(30, 1)));
}

#[test]
fn xy_finite_size_converges() {
    let target = solve_point(&CumulantModel::xy_isotropic(), 0.25, None).unwrap().beta2;
    let xy = CumulantModel::xy_isotropic();
    let err: Vec<f64> = [16u64, 32, 64]
        .iter()
        .map(|&n| (scaled_coefficients(&xy, n, n as usize / 4).unwrap().1 - target).abs())
        .collect();
    assert!(err[1] < err[0] && err[2] < err[1], "{err:?}");
}

#[test]
fn sylvester_identity_holds() {
    for (m, t) in [
        (CumulantModel::xy_isotropic(), 0.2),
        (CumulantModel::itf(0.5).unwrap(), -0.3),
        (CumulantModel::gaussian(0.2, 1.3).unwrap(), 0.5),
    ] {
        for n in 1..=4 {
            let (lhs, rhs) = sylvester_check(&m, 8.0, n, t).unwrap();
            assert!((lhs - rhs).abs() <= 1e-6 * lhs.abs(), "{} n={n}: {lhs} vs {rhs}", m.id());
        }
    }
}

#[test]
fn l_recursion_holds() {
    let m = CumulantModel::itf(2.0).unwrap();
    for n in 1..=3 {
        let (lhs, rhs) = l_recursion_check(&m, 6.0, n, 0.1).unwrap();
        assert!((lhs - rhs).abs() <= 1e-6 * lhs.abs(), "n={n}: {lhs} vs {rhs}");
    }
}

/// Largest relative deviation of `y(n)` from the degree-`p` polynomial
/// interpolating its first `p + 1` values, by Newton's forward form.
fn polynomial_residual(y: &[f64], p: usize) -> f64 {
    let mut diffs = vec![y[..=p].to_vec()];
    for k in 1..=p {
        let prev = &diffs[k - 1];
        diffs.push(prev.windows(2).map(|w| w[1] - w[0]).collect());
    }
    let lead: Vec<f64> = diffs.iter().map(|d| d[0]).collect();
    let scale = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    (0..y.len())
        .map(|i| {
            let mut v = 0.0;
            let mut binom = 1.0;
            for (k, d) in lead.iter().enumerate() {
                v += binom * d;
                binom *= (i as f64 - k as f64) / (k as f64 + 1.0);
            }
            (v - y[i]).abs() / scale
        })
        .fold(0.0, f64::max)
}

#[test]
fn hierarchy_is_polynomial_in_n() {
    for m in [CumulantModel::xy_isotropic(), CumulantModel::itf(0.5).unwrap()] {
        let tab = hierarchy_l_np(&m, 9, 3, &[0.25]).unwrap();
        for p in 1..=3 {
            let y: Vec<f64> = (p..=p + 6).map(|n| tab.l[0][n][p - 1]).collect();
            let r = polynomial_residual(&y, p);
            assert!(r < 1e-8, "{} p={p}: {r}", m.id());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hankel_ratio_is_norm(
        num in prop::collection::vec(-6i64..6, 1..4),
        c2 in 1i64..5,
        n_sites in 1i64..6,
    ) {
        let mut c = vec![rat(num[0], 3), rat(c2, 2)];
        c.extend(num[1..].iter().map(|&v| rat(v, 7)));
        let m = moments_from_cumulants(&c, &rat(n_sites, 1), 9).unwrap();
        let Ok(d) = hankel_determinants(&m, 4) else { return Ok(()) };
        let j = jacobi_from_moments(&m, 4).unwrap();
        let mut prod = BigRational::one();
        for (n, h) in j.h.iter().enumerate() {
            prod *= h;
            prop_assert_eq!(&prod, &d[n]);
        }
    }

    #[test]
    fn turan_recurrence_is_exact(
        num in prop::collection::vec(-5i64..5, 2),
        re in -4i64..4,
        im in -4i64..4,
        n in 1usize..4,
    ) {
        let c = vec![rat(num[0], 2), rat(1, 1), rat(num[1], 5)];
        let m = moments_from_cumulants(&c, &rat(3, 1), 11).unwrap();
        let j = jacobi_from_moments(&m, 5).unwrap();
        prop_assume!(j.termination.is_none());
        let e = Complex::new(rat(re, 3), rat(im, 2));
        prop_assert!(turan_difference(&j, &e, n).unwrap().is_zero());
    }
}
