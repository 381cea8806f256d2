// Class tests on gridded functions: more log-concave / log-convex than a
// Gaussian, and the two closure properties used by the doubling step.

use gclab::grid::{convolution_check, product_split_check, Direction, GriddedFunction};
use gclab::linalg::SymMatrix;

fn main() -> gclab::Result<()> {
    let a = SymMatrix::scalar(0.5);
    let g = GriddedFunction::gaussian(&SymMatrix::scalar(2.0), 10.0, 1025)?;
    let boxed =
        GriddedFunction::from_fn(1, 10.0, 1025, |x| if x[0].abs() <= 2.0 { (-x[0] * x[0]).exp() } else { 0.0 })?;
    let cosh = GriddedFunction::from_fn(1, 10.0, 1025, |x| (-0.25 * x[0] * x[0]).exp() * x[0].cosh())?;
    let hole = GriddedFunction::box_complement(1, 1.0, 10.0, 1025)?;

    println!("g_2 more log-concave than g_0.5: {}", g.is_more_logconcave_than(&a)?.holds);
    println!("g_2·box more log-concave than g_0.5: {}", boxed.is_more_logconcave_than(&a)?.holds);
    println!("cosh·g_0.5 more log-convex than g_0.5: {}", cosh.is_more_logconvex_than(&a)?.holds);
    let c = hole.is_more_logconcave_than(&a)?;
    println!("box complement more log-concave: {} (witness {:?})", c.holds, c.witness);

    let split = product_split_check(&g, &boxed, 2.0, 0.5, 0.7, Direction::LogConcave)?;
    println!("y ↦ f₁((x+y)/√2) f₂((x−y)/√2) at x = {:.4}: {}", split.x, split.check.holds);
    println!("f₁ * f₂ in the harmonic class: {}", convolution_check(&g, &boxed, 2.0, 0.5)?.holds);
    Ok(())
}
