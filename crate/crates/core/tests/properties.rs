use gwmaxdeg_core::exact::{
    finite_dim_cdf, generation_cdf, generation_pmf, local_cdf, local_pmf, local_point,
};
use gwmaxdeg_core::global::{fixed_point_residual, global_cdf, global_point};
use gwmaxdeg_core::{CdfPoint, OffspringDistribution, OffspringSpec};
use proptest::prelude::*;

fn explicit_law() -> impl Strategy<Value = OffspringDistribution> {
    (0.05f64..1.0, prop::collection::vec(0.0f64..1.0, 1..6)).prop_filter_map(
        "degenerate",
        |(p0, rest)| {
            let mut w = vec![p0];
            w.extend(rest);
            let total: f64 = w.iter().sum();
            let p: Vec<f64> = w.iter().map(|x| x / total).collect();
            OffspringSpec::explicit(p).build().ok()
        },
    )
}

fn any_law() -> impl Strategy<Value = OffspringDistribution> {
    prop_oneof![
        explicit_law(),
        (0.05f64..0.7).prop_map(|a| OffspringSpec::geometric(a).build().unwrap()),
        (0.1f64..3.0).prop_map(|l| OffspringSpec::poisson(l).build().unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn generation_cdf_is_monotone_in_r(d in any_law(), n in 0u32..5, r in 0u64..12) {
        prop_assert!(generation_cdf(&d, n, r) <= generation_cdf(&d, n, r + 1) + 1e-15);
    }

    #[test]
    fn local_cdf_decreases_in_n(d in any_law(), n in 0u32..6, r in 0u64..10) {
        prop_assert!(local_cdf(&d, n + 1, r) <= local_cdf(&d, n, r) + 1e-15);
    }

    #[test]
    fn equal_caps_are_local(d in any_law(), n in 0usize..6, r in 0u64..10) {
        prop_assert_eq!(finite_dim_cdf(&d, &vec![r; n + 1]).unwrap(), local_cdf(&d, n as u32, r));
    }

    #[test]
    fn first_moment_bounds(d in any_law(), n in 0u32..7, r in 0u64..12) {
        let mu = d.mean();
        let p = d.pmf(r);
        prop_assert!(generation_pmf(&d, n, r) <= mu.powi(n as i32) * p + 1e-12);
        let sum: f64 = (0..=n).map(|i| mu.powi(i as i32)).sum();
        prop_assert!(local_pmf(&d, n, r) <= sum * p + 1e-12);
    }

    #[test]
    fn points_are_complementary(d in any_law(), n in 0u32..5, r in 0u64..12) {
        let x = local_point(&d, n, Some(r));
        prop_assert!((x.cdf + x.tail - 1.0).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&x.cdf) && (0.0..=1.0).contains(&x.tail));
    }

    #[test]
    fn global_fixed_point(d in any_law(), r in 0u64..15) {
        let (x, diag) = global_point(&d, r).unwrap();
        prop_assert!(diag.residual < 1e-10);
        prop_assert!(fixed_point_residual(&d, r, x) < 1e-10);
        prop_assert!(x.cdf <= local_cdf(&d, 6, r) + 1e-12);
        prop_assert!(global_cdf(&d, r).unwrap() <= global_cdf(&d, r + 1).unwrap() + 1e-15);
    }

    #[test]
    fn cdf_point_constructors(c in 0.0f64..=1.0) {
        let x = CdfPoint::from_cdf(c);
        prop_assert_eq!(x.cdf + x.tail, 1.0);
        let y = CdfPoint::from_tail(c);
        prop_assert!(y.scale() <= 0.5);
        prop_assert!(x.mass_above(&CdfPoint::ZERO) >= 0.0);
    }
}
