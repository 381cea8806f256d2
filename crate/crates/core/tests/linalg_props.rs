use gclab::linalg::{det_interp_curve, fischer_gap, minor_expansion, CovarianceBlocks, SymMatrix};
use gclab::random::{random_pd, random_psd, seeded_rng};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = (u64, usize, usize)> {
    (any::<u64>(), 2usize..=8).prop_flat_map(|(seed, n)| (Just(seed), Just(n), 1..n))
}

fn block_psd(rng: &mut rand_chacha::ChaCha8Rng, n: usize, split: usize) -> SymMatrix {
    SymMatrix::direct_sum(&[random_psd(rng, split, split), random_psd(rng, n - split, n - split)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fischer_inequality((seed, n, split) in instance()) {
        let m = random_pd(&mut seeded_rng(seed), n);
        let g = fischer_gap(&m, split).unwrap();
        prop_assert!(g.det_full <= g.det_product * (1.0 + 1e-12));
        prop_assert_eq!(g.is_equality(), g.offblock_max < 1e-12);
    }

    #[test]
    fn fischer_equality_on_block_diagonal((seed, n, split) in instance()) {
        let mut rng = seeded_rng(seed);
        let m = SymMatrix::direct_sum(&[random_pd(&mut rng, split), random_pd(&mut rng, n - split)]);
        prop_assert!(fischer_gap(&m, split).unwrap().is_equality());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn det_curve_non_increasing((seed, n, split) in instance()) {
        let mut rng = seeded_rng(seed);
        let cb = CovarianceBlocks::new(random_pd(&mut rng, n), split).unwrap();
        let a = block_psd(&mut rng, n, split);
        let s: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
        let d = det_interp_curve(&cb, &a, &s).unwrap();
        for w in d.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-10), "{} > {}", w[1], w[0]);
        }
    }

    #[test]
    fn interpolation_stays_pd((seed, n, split) in instance(), s in 0.0f64..=1.0) {
        let cb = CovarianceBlocks::new(random_pd(&mut seeded_rng(seed), n), split).unwrap();
        prop_assert!(cb.interpolate(s).unwrap().is_pd());
    }

    #[test]
    fn minor_expansion_matches_determinant((seed, n, _split) in instance()) {
        let mut rng = seeded_rng(seed);
        let sigma = random_pd(&mut rng, n);
        let d: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, 0.0..3.0)).collect();
        let a = SymMatrix::diagonal(&d);
        let direct = (DMatrix::identity(n, n) + a.matrix() * sigma.matrix()).determinant();
        let e = minor_expansion(&a, &sigma).unwrap();
        prop_assert!((e - direct).abs() <= 1e-10 * direct.abs(), "{e} vs {direct}");
    }
}
