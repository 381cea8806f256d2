use gclab::gaussian::{
    gaussian_ratio, infimum_gaussian, ratio_via_sqrt_form, BLProblem, Bounds, Convention, GaussianTuple,
    OptimizeOptions, OptimizeStatus,
};
use gclab::linalg::{BlockStructure, CovarianceBlocks, SymMatrix};
use gclab::random::{random_pd, random_psd, seeded_rng};
use proptest::prelude::*;

fn gci_instance() -> impl Strategy<Value = (u64, usize, usize)> {
    (any::<u64>(), 2usize..=6).prop_flat_map(|(seed, n)| (Just(seed), Just(n), 1..n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sqrt_form_agrees((seed, n, split) in gci_instance()) {
        let mut rng = seeded_rng(seed);
        let cb = CovarianceBlocks::new(random_pd(&mut rng, n), split).unwrap();
        let p = BLProblem::gci(&cb).unwrap();
        let a1 = random_psd(&mut rng, split, split);
        let a2 = random_psd(&mut rng, n - split, n - split);
        let r = gaussian_ratio(&p, &GaussianTuple::new(Convention::A, vec![a1.clone(), a2.clone()])).unwrap();
        let s = ratio_via_sqrt_form(&cb, &a1, &a2).unwrap();
        prop_assert!((r - s).abs() <= 1e-9 * r, "{r} vs {s}");
    }

    #[test]
    fn ratio_at_least_one((seed, n, split) in gci_instance(), r1 in 0usize..4, r2 in 0usize..4) {
        let mut rng = seeded_rng(seed);
        let cb = CovarianceBlocks::new(random_pd(&mut rng, n), split).unwrap();
        let p = BLProblem::gci(&cb).unwrap();
        let a1 = random_psd(&mut rng, split, r1.min(split));
        let a2 = random_psd(&mut rng, n - split, r2.min(n - split));
        let r = gaussian_ratio(&p, &GaussianTuple::new(Convention::A, vec![a1, a2])).unwrap();
        prop_assert!(r >= 1.0 - 1e-9, "{r}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gci_infimum_is_one((seed, n, split) in gci_instance()) {
        let cb = CovarianceBlocks::new(random_pd(&mut seeded_rng(seed), n), split).unwrap();
        let p = BLProblem::gci(&cb).unwrap();
        let r = infimum_gaussian(&p, None, &OptimizeOptions::default()).unwrap();
        prop_assert!((1.0..=1.0 + 1e-6).contains(&r.value), "{}", r.value);
        let tail = &r.trace[r.trace.len() / 2..];
        for w in tail.windows(2) {
            prop_assert!(w[1].arg_norm <= w[0].arg_norm + 1e-12);
        }
    }

    #[test]
    fn wider_bounds_never_increase_value(lo in 0.05f64..1.0, hi in 1.0f64..5.0, grow in 1.0f64..4.0) {
        let q = SymMatrix::from_rows(&[vec![0.0, 0.3], vec![0.3, 0.0]]).unwrap();
        let p = BLProblem::from_q(BlockStructure::unit(vec![1, 1]).unwrap(), q, vec![SymMatrix::zeros(1); 2]).unwrap();
        let bounds = |l: f64, u: f64| Bounds {
            lower: vec![SymMatrix::scalar(l); 2],
            upper: Some(vec![SymMatrix::scalar(u); 2]),
        };
        let opts = OptimizeOptions::default();
        let inner = infimum_gaussian(&p, Some(&bounds(lo, hi)), &opts).unwrap();
        let outer = infimum_gaussian(&p, Some(&bounds(lo / grow, hi * grow)), &opts).unwrap();
        prop_assert_eq!(inner.status, OptimizeStatus::Converged);
        prop_assert!(outer.value <= inner.value * (1.0 + 1e-9), "{} > {}", outer.value, inner.value);
    }
}
