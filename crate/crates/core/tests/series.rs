use num_rational::BigRational;
use proptest::prelude::*;
use thermolanczos::exact::rat;
use thermolanczos::series::{invert_saddle_series, lanczos_taylor, lanczos_taylor_f64, taylor_from_hierarchy};

fn cumulants(num: &[i64], den: &[i64], c2: i64) -> Vec<BigRational> {
    let mut c: Vec<BigRational> = num.iter().zip(den).map(|(&a, &b)| rat(a, b)).collect();
    c[1] = rat(c2, 3);
    c
}

#[test]
fn float_series_matches_exact() {
    let c = [0.3, 1.2, -0.4, 0.9, 0.1, -0.7, 0.2, 0.05, -0.3, 0.6, 0.1, 0.2, -0.1, 0.3, 0.4];
    let f = lanczos_taylor_f64(&c, 6).unwrap();
    let exact: Vec<BigRational> = c.iter().map(|&v| thermolanczos::scalar::f64_to_ratio(v)).collect();
    let e = lanczos_taylor(&exact, 6).unwrap().to_f64();
    for (x, y) in f.a.iter().zip(&e.a).chain(f.b.iter().zip(&e.b)) {
        assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0), "{x} vs {y}");
    }
    assert!(lanczos_taylor_f64(&[0.0, -1.0, 0.0], 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn low_orders_are_closed_forms(
        num in prop::collection::vec(-9i64..9, 12),
        den in prop::collection::vec(1i64..6, 12),
        c2 in 1i64..7,
    ) {
        let c = cumulants(&num, &den, c2);
        let (c2, c3, c4) = (&c[1], &c[2], &c[3]);
        let inv = invert_saddle_series(&c, 3).unwrap();
        prop_assert_eq!(&inv.e[0], &(rat(1, 1) / c2));
        prop_assert_eq!(&inv.e[1], &(-c3 / (rat(2, 1) * c2 * c2 * c2)));
        let s = lanczos_taylor(&c, 2).unwrap();
        prop_assert_eq!(&s.c1, &c[0]);
        prop_assert_eq!(&s.a[0], &(c3 / c2));
        prop_assert_eq!(&s.b[0], c2);
        prop_assert_eq!(&s.b[1], &((c2 * c4 - c3 * c3) / (rat(2, 1) * c2 * c2)));
    }

    #[test]
    fn hierarchy_route_agrees(
        num in prop::collection::vec(-9i64..9, 12),
        den in prop::collection::vec(1i64..6, 12),
        c2 in 1i64..7,
    ) {
        let c = cumulants(&num, &den, c2);
        let a = lanczos_taylor(&c, 4).unwrap();
        let b = taylor_from_hierarchy(&c, 4).unwrap();
        prop_assert_eq!(a.a, b.a);
        prop_assert_eq!(a.b, b.b);
    }
}
