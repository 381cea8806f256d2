// The Brascamp–Lieb functional on gridded inputs: inverse inequality for
// boxes, the forward inequality for log-convex multipliers and the
// doubling inequality.

use gclab::bl::{bl_value, check_forward_bl, check_inverse_bl, step2_inequality_check};
use gclab::gaussian::{infimum_gaussian, BLProblem, OptimizeOptions};
use gclab::grid::GriddedFunction;
use gclab::linalg::{BlockStructure, CovarianceBlocks, SymMatrix};

fn main() -> gclab::Result<()> {
    let sigma = SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]])?;
    let p = BLProblem::gci(&CovarianceBlocks::new(sigma, 1)?)?;
    let bx = GriddedFunction::indicator_box(1, 1.0, 8.0, 1025)?;
    let fs = [bx.clone(), bx];
    let inf = infimum_gaussian(&p, None, &OptimizeOptions::default())?.value;
    println!("BL(boxes) = {:.8}", bl_value(&p, &fs)?);
    let r = check_inverse_bl(&p, &fs, inf)?;
    println!("inverse: {:.8} ≥ {:.8}  {:?}", r.lhs, r.rhs, r.status);
    let r = step2_inequality_check(&p, &fs, inf)?;
    println!("doubling: BL² = {:.8} ≥ I·BL(Conv f) = {:.8}  {:?}", r.lhs, r.rhs, r.status);

    // Forward direction on a Q-form problem with f_i = cosh · g_{Q_i}.
    let q = SymMatrix::from_rows(&[vec![0.6, 0.3], vec![0.3, 0.4]])?;
    let qi = vec![SymMatrix::scalar(1.0), SymMatrix::scalar(2.0)];
    let fp = BLProblem::from_q(BlockStructure::unit(vec![1, 1])?, q, qi.clone())?;
    let fs: Vec<GriddedFunction> = qi
        .iter()
        .map(|qq| {
            let c = qq.get(0, 0);
            GriddedFunction::from_fn(1, 14.0, 1025, |x| (-0.5 * c * x[0] * x[0]).exp() * (0.5 * x[0]).cosh())
        })
        .collect::<gclab::Result<_>>()?;
    let r = check_forward_bl(&fp, &fs, &OptimizeOptions::default())?;
    println!("forward: {:.8} ≤ {:.8}  {:?}", r.lhs, r.rhs, r.status);
    Ok(())
}
