// E f₁(X)f₂(X) ≥ E f₁(X) E f₂(X) for even quasi-concave functions given by
// nested super-level sets.

use gclab::gci::{quasiconcave_corr_check, Level, Method, QuasiConcaveFn, SymmetricConvexSet};
use gclab::linalg::SymMatrix;

fn main() -> gclab::Result<()> {
    let sigma = SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]])?;
    let f = QuasiConcaveFn::Layered {
        levels: vec![
            Level { level: 2.0, set: SymmetricConvexSet::cube(1, 0.5) },
            Level { level: 1.0, set: SymmetricConvexSet::cube(1, 1.5) },
        ],
    };
    let r = quasiconcave_corr_check(&sigma, &f, &f, Method::Quadrature)?;
    println!("E f₁f₂ = {:.10} ≥ E f₁ E f₂ = {:.10}", r.lhs.value, r.rhs);

    // Both functions on the whole of ℝ²: a disc and a slanted strip.
    let disc = QuasiConcaveFn::indicator(SymmetricConvexSet::Ellipsoid {
        shape: SymMatrix::scalar(1.0 / 4.0).direct_sum_pair(),
    });
    let strip = QuasiConcaveFn::indicator(SymmetricConvexSet::Polytope { normals: vec![vec![1.0, -1.0]] });
    let r = quasiconcave_corr_check(&sigma, &disc, &strip, Method::Quadrature)?;
    println!("disc/strip: {:.10} ≥ {:.10}", r.lhs.value, r.rhs);
    Ok(())
}

trait Pair {
    fn direct_sum_pair(&self) -> SymMatrix;
}

impl Pair for SymMatrix {
    fn direct_sum_pair(&self) -> SymMatrix {
        SymMatrix::direct_sum(&[self.clone(), self.clone()])
    }
}
