// s ↦ P(X^(s) ∈ K × L) is non-decreasing and t ↦ ∫ f₁ P_t f₂ dγ is
// non-increasing.

use gclab::gci::{
    curve_csv, is_monotone, ou_corr_curve, prob_interp_curve, Method, QuasiConcaveFn, SymmetricConvexSet,
};
use gclab::linalg::{CovarianceBlocks, SymMatrix};

fn main() -> gclab::Result<()> {
    let sigma = SymMatrix::from_rows(&[vec![1.0, 0.8], vec![0.8, 1.0]])?;
    let cb = CovarianceBlocks::new(sigma, 1)?;
    let k = SymmetricConvexSet::cube(1, 1.0);
    let s: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let curve = prob_interp_curve(&cb, &k, &k, &s, Method::Quadrature)?;
    print!("{}", curve_csv("s", &curve));
    println!("non-decreasing: {}", is_monotone(&curve, true, 1e-8));

    let f = QuasiConcaveFn::indicator(k);
    let t = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, f64::INFINITY];
    let curve = ou_corr_curve(&f, &f, &t, Method::Quadrature)?;
    print!("{}", curve_csv("t", &curve));
    println!("non-increasing: {}", is_monotone(&curve, false, 1e-8));
    Ok(())
}
