//! Deterministic random instances for property checks, examples and the
//! acceptance suite.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::SymMatrix;

/// Ridge added to `G Gᵀ` so random covariances stay well conditioned.
pub const PD_RIDGE: f64 = 1e-3;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// `G Gᵀ + 1e-3·Id` with standard normal `G`.
pub fn random_pd<R: Rng>(rng: &mut R, n: usize) -> SymMatrix {
    let g = gaussian_matrix(rng, n, n);
    SymMatrix::from_dmatrix(&g * g.transpose() + DMatrix::identity(n, n) * PD_RIDGE)
}

/// Random PSD matrix of the given rank.
pub fn random_psd<R: Rng>(rng: &mut R, n: usize, rank: usize) -> SymMatrix {
    let g = gaussian_matrix(rng, n, rank);
    SymMatrix::from_dmatrix(&g * g.transpose())
}

/// Random PD covariance rescaled to unit diagonal.
pub fn random_correlation<R: Rng>(rng: &mut R, n: usize) -> SymMatrix {
    let s = random_pd(rng, n);
    let d: Vec<f64> = (0..n).map(|i| 1.0 / s.get(i, i).sqrt()).collect();
    SymMatrix::from_dmatrix(DMatrix::from_fn(n, n, |i, j| s.get(i, j) * d[i] * d[j]))
}
