// Gaussian probabilities of symmetric convex sets and the correlation
// inequality γ(K × L) ≥ γ(K)γ(L), by quadrature and by Monte Carlo.

use gclab::gci::{gauss_prob, gci_check, Method, SymmetricConvexSet};
use gclab::linalg::SymMatrix;

fn main() -> gclab::Result<()> {
    let unit = SymmetricConvexSet::cube(1, 1.0);
    for rho in [0.3, 0.5, 0.8] {
        let sigma = SymMatrix::from_rows(&[vec![1.0, rho], vec![rho, 1.0]])?;
        let q = gci_check(&sigma, 1, &unit, &unit, Method::Quadrature)?;
        let m = gci_check(&sigma, 1, &unit, &unit, Method::Mc { samples: 1_000_000, seed: 42 })?;
        println!(
            "ρ = {rho}: P(K×L) = {:.12} (±{:.1e}), margin {:.6}; MC margin {:.6} ± {:.1e}",
            q.p_joint.value, q.error, q.margin, m.margin, m.margin_stderr
        );
    }

    let sigma = SymMatrix::from_rows(&[vec![1.0, 0.4, 0.1], vec![0.4, 1.2, -0.3], vec![0.1, -0.3, 0.9]])?;
    let ell = SymmetricConvexSet::Ellipsoid { shape: SymMatrix::diagonal(&[1.0, 0.5, 2.0]) };
    let poly =
        SymmetricConvexSet::Polytope { normals: vec![vec![1.0, 1.0, 0.0], vec![0.0, 0.5, -1.0], vec![0.7, 0.0, 0.7]] };
    for (name, set) in [("ellipsoid", &ell), ("polytope", &poly)] {
        let q = gauss_prob(&sigma, set, Method::Quadrature)?;
        let m = gauss_prob(&sigma, set, Method::Mc { samples: 1_000_000, seed: 7 })?;
        println!("{name}: quadrature {:.10}, MC {:.5} ± {:.1e}", q.value, m.value, m.stderr);
    }
    Ok(())
}
