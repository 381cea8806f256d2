use gclab::gci::{
    gauss_prob, gci_check, is_monotone, ou_corr_curve, prob_interp_curve, Method, QuasiConcaveFn, SymmetricConvexSet,
};
use gclab::linalg::{CovarianceBlocks, SymMatrix};
use gclab::random::{random_correlation, random_pd, seeded_rng};
use proptest::prelude::*;
use rand::Rng;

fn random_set(rng: &mut impl Rng, dim: usize) -> SymmetricConvexSet {
    match rng.random_range(0..3) {
        0 => SymmetricConvexSet::Box { halfwidths: (0..dim).map(|_| rng.random_range(0.3..2.0)).collect() },
        1 => {
            let d: Vec<f64> = (0..dim).map(|_| rng.random_range(0.2..3.0)).collect();
            SymmetricConvexSet::Ellipsoid { shape: SymMatrix::diagonal(&d) }
        }
        _ => {
            let k = rng.random_range(1..=dim + 1);
            let normals = (0..k).map(|_| (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect()).collect();
            SymmetricConvexSet::Polytope { normals }
        }
    }
}

fn mc(seed: u64) -> Method {
    Method::Mc { samples: 200_000, seed }
}

fn split_instance(max_n: usize) -> impl Strategy<Value = (u64, usize, usize)> {
    (any::<u64>(), 2..=max_n).prop_flat_map(|(seed, n)| (Just(seed), Just(n), 1..n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn mc_margin_is_not_significantly_negative((seed, n, split) in split_instance(8)) {
        let mut rng = seeded_rng(seed);
        let sigma = random_pd(&mut rng, n);
        let k = random_set(&mut rng, split);
        let l = random_set(&mut rng, n - split);
        let r = gci_check(&sigma, split, &k, &l, mc(seed)).unwrap();
        prop_assert!(r.margin >= -3.0 * r.margin_stderr, "{:?}", r);
        // Joint and complement counts come from the same samples.
        prop_assert!((r.p_joint.value + r.p_k_not_l.value - r.p1.value).abs() <= 1e-15);
    }

    #[test]
    fn quadrature_matches_mc((seed, n, split) in split_instance(3)) {
        let mut rng = seeded_rng(seed);
        let sigma = random_pd(&mut rng, n);
        let k = random_set(&mut rng, split);
        let l = random_set(&mut rng, n - split);
        let q = gci_check(&sigma, split, &k, &l, Method::Quadrature).unwrap();
        let m = gci_check(&sigma, split, &k, &l, mc(seed)).unwrap();
        for (a, b) in [(q.p_joint, m.p_joint), (q.p1, m.p1), (q.p2, m.p2)] {
            // Binomial stderr at the quadrature value: the sample estimate is 0
            // when no draw falls outside the set.
            let se = b.stderr.max((a.value * (1.0 - a.value) / 200_000.0).sqrt());
            prop_assert!((a.value - b.value).abs() <= 4.0 * se + 1e-12, "{} vs {} ± {}", a.value, b.value, se);
        }
        prop_assert!(q.margin >= -q.error);
        prop_assert!((q.p_joint.value + q.p_k_not_l.value - q.p1.value).abs() <= 2.0 * q.error + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn interpolation_curve_non_decreasing((seed, n, split) in split_instance(3)) {
        let mut rng = seeded_rng(seed);
        let cb = CovarianceBlocks::new(random_correlation(&mut rng, n), split).unwrap();
        let k = random_set(&mut rng, split);
        let l = random_set(&mut rng, n - split);
        let s: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
        let c = prob_interp_curve(&cb, &k, &l, &s, Method::Quadrature).unwrap();
        prop_assert!(is_monotone(&c, true, 1e-8));
        let c = prob_interp_curve(&cb, &k, &l, &s, mc(seed)).unwrap();
        prop_assert!(is_monotone(&c, true, 3.0 * c.iter().map(|p| p.stderr).fold(0.0, f64::max)));
    }

    #[test]
    fn ou_curve_non_increasing(seed in any::<u64>(), two_d in any::<bool>()) {
        let mut rng = seeded_rng(seed);
        // 2-d sets make this a 4-d integral; boxes keep it cheap.
        let set = |rng: &mut rand_chacha::ChaCha8Rng| {
            if two_d {
                SymmetricConvexSet::Box { halfwidths: vec![rng.random_range(0.3..2.0), rng.random_range(0.3..2.0)] }
            } else {
                random_set(rng, 1)
            }
        };
        let f1 = QuasiConcaveFn::indicator(set(&mut rng));
        let f2 = QuasiConcaveFn::indicator(set(&mut rng));
        let t = [0.0, 0.2, 0.5, 1.0, 2.0, f64::INFINITY];
        let c = ou_corr_curve(&f1, &f2, &t, Method::Quadrature).unwrap();
        prop_assert!(is_monotone(&c, false, 1e-8));
    }

    #[test]
    fn probability_invariant_under_coordinate_swap(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let sigma = random_pd(&mut rng, 2);
        let hw = [rng.random_range(0.3..2.0), rng.random_range(0.3..2.0)];
        let swapped = SymMatrix::from_rows(&[vec![sigma.get(1, 1), sigma.get(0, 1)], vec![sigma.get(0, 1), sigma.get(0, 0)]]).unwrap();
        let a = gauss_prob(&sigma, &SymmetricConvexSet::Box { halfwidths: hw.to_vec() }, Method::Quadrature).unwrap();
        let b = gauss_prob(&swapped, &SymmetricConvexSet::Box { halfwidths: vec![hw[1], hw[0]] }, Method::Quadrature).unwrap();
        prop_assert!((a.value - b.value).abs() <= a.error + b.error + 1e-12);
    }
}
