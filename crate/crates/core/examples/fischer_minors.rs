// Fischer's inequality, the determinant along Σ^(s) and the principal-minor
// expansion of det(Id + DΣ) for diagonal D.

use gclab::linalg::{det_interp_curve, fischer_gap, minor_expansion, CovarianceBlocks, SymMatrix};
use gclab::random::{random_pd, seeded_rng};

fn main() -> gclab::Result<()> {
    let mut rng = seeded_rng(5);
    let sigma = random_pd(&mut rng, 4);
    let g = fischer_gap(&sigma, 2)?;
    println!("det Σ = {:.6} ≤ det Σ₁ det Σ₂ = {:.6}", g.det_full, g.det_product);

    let cb = CovarianceBlocks::new(sigma.clone(), 2)?;
    let a = SymMatrix::direct_sum(&[random_pd(&mut rng, 2), random_pd(&mut rng, 2)]);
    let s: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    for (si, d) in s.iter().zip(det_interp_curve(&cb, &a, &s)?) {
        println!("s = {si:.1}  det(Id + AΣ^(s)) = {d:.8}");
    }

    let d = SymMatrix::diagonal(&[0.5, 1.0, 2.0, 0.25]);
    let direct = SymMatrix::identity(4).matrix() + d.matrix() * sigma.matrix();
    println!("minor expansion {:.10}, direct {:.10}", minor_expansion(&d, &sigma)?, direct.determinant());
    Ok(())
}
