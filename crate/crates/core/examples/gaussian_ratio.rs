// Gaussian Brascamp–Lieb ratio on a correlation instance and its infimum
// over A₁, A₂ ⪰ 0, which is attained at A = 0.

use gclab::gaussian::{
    gaussian_ratio, infimum_gaussian, ratio_via_sqrt_form, BLProblem, GaussianTuple, OptimizeOptions,
};
use gclab::linalg::{CovarianceBlocks, SymMatrix};

fn main() -> gclab::Result<()> {
    let sigma = SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]])?;
    let cb = CovarianceBlocks::new(sigma, 1)?;
    let p = BLProblem::gci(&cb)?;

    for a in [0.0, 0.5, 1.0, 4.0] {
        let mats = vec![SymMatrix::scalar(a), SymMatrix::scalar(a)];
        let g = GaussianTuple::new(p.natural_convention(), mats.clone());
        let r = gaussian_ratio(&p, &g)?;
        let s = ratio_via_sqrt_form(&cb, &mats[0], &mats[1])?;
        println!("A = {a:<4} ratio = {r:.12}  sqrt form = {s:.12}");
    }

    let best = infimum_gaussian(&p, None, &OptimizeOptions::default())?;
    println!(
        "infimum = {} ({:?}, restart {}), |argmin| = {:e}",
        best.value,
        best.status,
        best.restart,
        best.argmin.frobenius_norm()
    );
    Ok(())
}
