// Box-constrained infimum of a general Q̄-form ratio, with its trace, and a
// problem whose infimum is 0 (reported as divergent).

use gclab::gaussian::{infimum_gaussian, BLProblem, Bounds, OptimizeOptions};
use gclab::linalg::{BlockStructure, SymMatrix};

fn main() -> gclab::Result<()> {
    let blocks = BlockStructure::unit(vec![1, 1])?;
    let qbar = SymMatrix::from_rows(&[vec![2.0, 0.7], vec![0.7, 1.5]])?;
    let p = BLProblem::from_qbar(blocks, qbar, vec![SymMatrix::scalar(1.0), SymMatrix::scalar(0.5)])?;
    let bounds = Bounds {
        lower: vec![SymMatrix::scalar(0.2), SymMatrix::scalar(0.1)],
        upper: Some(vec![SymMatrix::scalar(3.0), SymMatrix::scalar(2.0)]),
    };
    let r = infimum_gaussian(&p, Some(&bounds), &OptimizeOptions::default())?;
    println!(
        "bounded infimum {:.10} at {:?} ({:?})",
        r.value,
        r.argmin.mats.iter().map(|m| m.get(0, 0)).collect::<Vec<_>>(),
        r.status
    );
    print!("{}", r.trace_csv());

    // c = 1/2 on a single block with Q = 0: the ratio decays like det(B)^{-1/2}.
    let half =
        BLProblem::from_q(BlockStructure::new(vec![1], vec![0.5])?, SymMatrix::zeros(1), vec![SymMatrix::zeros(1)])?;
    let d = infimum_gaussian(&half, None, &OptimizeOptions::default())?;
    println!("c = 1/2: value {:e}, status {:?}", d.value, d.status);
    Ok(())
}
