use gclab::grid::{conv_step, GriddedFunction};
use gclab::linalg::SymMatrix;
use proptest::prelude::*;

fn is_even(f: &GriddedFunction) -> bool {
    let v = f.values();
    v.iter().zip(v.iter().rev()).all(|(a, b)| a == b)
}

fn box_times_gaussian(a: f64, r: f64) -> GriddedFunction {
    GriddedFunction::from_fn(1, 12.0, 1025, |x| if x[0].abs() <= r { (-0.5 * a * x[0] * x[0]).exp() } else { 0.0 })
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn conv_step_mass_and_covariance(a in 0.2f64..3.0, r in 0.5f64..3.0) {
        let f = box_times_gaussian(a, r);
        let g = conv_step(&f).unwrap();
        prop_assert!(is_even(&g));
        let m = f.mass();
        prop_assert!((g.mass() - m * m).abs() <= 1e-9 * m * m, "{} vs {}", g.mass(), m * m);
        let c0 = f.covariance().get(0, 0);
        let c1 = g.normalized().covariance().get(0, 0);
        prop_assert!((c1 - c0).abs() <= 1e-6 * c0, "{c0} -> {c1}");
    }

    #[test]
    fn gaussian_is_a_fixed_point(a in 0.3f64..4.0) {
        let f = GriddedFunction::gaussian_default(&SymMatrix::scalar(a)).unwrap().normalized();
        let g = conv_step(&f).unwrap().normalized();
        prop_assert!(f.l1_distance(&g).unwrap() < 1e-6);
    }

    #[test]
    fn gaussian_mass(a in 0.3f64..4.0) {
        let f = GriddedFunction::gaussian_default(&SymMatrix::scalar(a)).unwrap();
        let exact = (std::f64::consts::TAU / a).sqrt();
        prop_assert!((f.mass() - exact).abs() <= 1e-10 * exact);
    }

    #[test]
    fn class_membership_is_monotone_in_a(a in 0.2f64..3.0, r in 0.5f64..3.0, shrink in 0.0f64..1.0) {
        let f = box_times_gaussian(a, r);
        let big = SymMatrix::scalar(a);
        prop_assert!(f.is_more_logconcave_than(&big).unwrap().holds);
        prop_assert!(f.is_more_logconcave_than(&SymMatrix::scalar(a * shrink)).unwrap().holds);
    }

    #[test]
    fn two_dim_gaussian_separates(a in 0.5f64..3.0, b in 0.5f64..3.0) {
        let g = GriddedFunction::gaussian(&SymMatrix::diagonal(&[a, b]), 12.0, 129).unwrap();
        let ga = GriddedFunction::gaussian(&SymMatrix::scalar(a), 12.0, 129).unwrap();
        let gb = GriddedFunction::gaussian(&SymMatrix::scalar(b), 12.0, 129).unwrap();
        prop_assert!(is_even(&g));
        let m = ga.mass() * gb.mass();
        prop_assert!((g.mass() - m).abs() <= 1e-12 * m);
    }
}
