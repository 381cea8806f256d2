// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Oracles here are written independently of the library's own
// numerics.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use gclab::bl::{check_forward_bl, step2_inequality_check};
use gclab::gaussian::{gaussian_ratio, infimum_gaussian, BLProblem, Convention, GaussianTuple, OptimizeOptions};
use gclab::gci::{
    counterexample_demo, gauss_prob, gci_check, is_monotone, ou_corr_curve, prob_interp_curve, Level, Method,
    QuasiConcaveFn, SymmetricConvexSet,
};
use gclab::grid::{clt_flow, GriddedFunction};
use gclab::linalg::{det_interp_curve, fischer_gap, minor_expansion, BlockStructure, CovarianceBlocks, SymMatrix};
use gclab::random::{random_correlation, random_pd, random_psd, seeded_rng};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: gclab::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

// Φ by its Taylor series Φ(x) = ½ + φ(x) Σ x^{2k+1}/(2k+1)!!, with the
// complement used for x < 0. Accurate to ~1e-15 for |x| ≤ 9.
fn phi_cdf(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - phi_cdf(-x);
    }
    if x > 9.0 {
        return 1.0;
    }
    let (mut term, mut sum, mut k) = (x, x, 1.0);
    while term.abs() > 1e-17 * sum.abs() {
        term *= x * x / (2.0 * k + 1.0);
        sum += term;
        k += 1.0;
    }
    0.5 + sum * (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

// P(|X| ≤ 1, Y ∈ B) for unit-variance (X, Y) with correlation ρ, where
// `inside` selects B = [−1, 1] or its complement.
fn bivariate(rho: f64, inside: bool) -> f64 {
    let s = (1.0 - rho * rho).sqrt();
    simpson(
        |x| {
            let p = phi_cdf((1.0 - rho * x) / s) - phi_cdf((-1.0 - rho * x) / s);
            (-0.5 * x * x).exp() / (2.0 * PI).sqrt() * if inside { p } else { 1.0 - p }
        },
        -1.0,
        1.0,
        4000,
    )
}

fn c1_gaussian_infimum() -> Outcome {
    let mut rng = seeded_rng(101);
    let opts = OptimizeOptions::default();
    let mut worst_inf: f64 = 1.0;
    let mut worst_ratio = f64::INFINITY;
    for _ in 0..50 {
        let n = rng.random_range(2..=6);
        let split = rng.random_range(1..n);
        let cb = lib(CovarianceBlocks::new(random_pd(&mut rng, n), split))?;
        let p = lib(BLProblem::gci(&cb))?;
        let r = lib(infimum_gaussian(&p, None, &opts))?;
        ensure((1.0..=1.0 + 1e-6).contains(&r.value), || format!("infimum {} on N = {n}", r.value))?;
        worst_inf = worst_inf.max(r.value);
        for _ in 0..20 {
            let (r1, r2) = (rng.random_range(0..=split), rng.random_range(0..=n - split));
            let a1 = random_psd(&mut rng, split, r1);
            let a2 = random_psd(&mut rng, n - split, r2);
            let v = lib(gaussian_ratio(&p, &GaussianTuple::new(Convention::A, vec![a1, a2])))?;
            ensure(v >= 1.0 - 1e-9, || format!("ratio {v} < 1 − 1e-9"))?;
            worst_ratio = worst_ratio.min(v);
        }
    }
    Ok(format!("max infimum {worst_inf:.3e}, min random ratio {worst_ratio:.6}"))
}

fn c2_fischer() -> Outcome {
    let mut rng = seeded_rng(202);
    let (mut strict, mut equal) = (0, 0);
    for i in 0..200 {
        let n = rng.random_range(2..=8);
        let split = rng.random_range(1..n);
        // Every fourth matrix is block diagonal, so both classes occur.
        let m = if i % 4 == 0 {
            SymMatrix::direct_sum(&[random_pd(&mut rng, split), random_pd(&mut rng, n - split)])
        } else {
            random_pd(&mut rng, n)
        };
        let g = lib(fischer_gap(&m, split))?;
        ensure(g.det_full <= g.det_product * (1.0 + 1e-12), || format!("{} > {}", g.det_full, g.det_product))?;
        let decoupled = g.offblock_max < 1e-12;
        ensure(g.is_equality() == decoupled, || {
            format!("equality {} with max|M_o| = {:e}", g.is_equality(), g.offblock_max)
        })?;
        if decoupled {
            equal += 1;
        } else {
            strict += 1;
        }
    }
    Ok(format!("{strict} strict, {equal} equality cases"))
}

fn c3_det_monotone() -> Outcome {
    let mut rng = seeded_rng(303);
    let s: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
    let mut worst_minor: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..=8);
        let split = rng.random_range(1..n);
        let sigma = random_pd(&mut rng, n);
        let cb = lib(CovarianceBlocks::new(sigma.clone(), split))?;
        let a =
            SymMatrix::direct_sum(&[random_psd(&mut rng, split, split), random_psd(&mut rng, n - split, n - split)]);
        let d = lib(det_interp_curve(&cb, &a, &s))?;
        for w in d.windows(2) {
            ensure(w[1] <= w[0] * (1.0 + 1e-10), || format!("det rises {} -> {}", w[0], w[1]))?;
        }
        let diag: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
        let dm = SymMatrix::diagonal(&diag);
        let direct = (DMatrix::identity(n, n) + dm.matrix() * sigma.matrix()).lu().determinant();
        let e = lib(minor_expansion(&dm, &sigma))?;
        let rel = (e - direct).abs() / direct.abs();
        ensure(rel < 1e-10, || format!("minor expansion off by {rel:e}"))?;
        worst_minor = worst_minor.max(rel);
    }
    Ok(format!("minor expansion max rel err {worst_minor:.1e}"))
}

fn c4_gci_desk_scale() -> Outcome {
    let unit = SymmetricConvexSet::cube(1, 1.0);
    let mut lines = Vec::new();
    for rho in [0.3, 0.5, 0.8] {
        let sigma = lib(SymMatrix::from_rows(&[vec![1.0, rho], vec![rho, 1.0]]))?;
        let r = lib(gci_check(&sigma, 1, &unit, &unit, Method::Quadrature))?;
        let oracle = bivariate(rho, true);
        ensure((r.p_joint.value - oracle).abs() < 1e-10, || {
            format!("ρ = {rho}: {} vs oracle {oracle}", r.p_joint.value)
        })?;
        ensure(r.error < 1e-10, || format!("ρ = {rho}: error {:e}", r.error))?;
        ensure(r.margin > 1e-3, || format!("ρ = {rho}: margin {}", r.margin))?;
        lines.push(format!("ρ={rho} margin {:.4}", r.margin));
    }

    // Monte Carlo at the default budget. Probabilities of boxes of dimension
    // ≤ 4 are compared with quadrature; larger joint boxes only need a margin
    // that is not significantly negative.
    let mut rng = seeded_rng(404);
    let mut worst_z: f64 = 0.0;
    for n in [2, 3, 4, 6, 8] {
        let split = n / 2;
        let sigma = random_correlation(&mut rng, n);
        let k = SymmetricConvexSet::Box { halfwidths: (0..split).map(|_| rng.random_range(0.5..2.0)).collect() };
        let l = SymmetricConvexSet::Box { halfwidths: (0..n - split).map(|_| rng.random_range(0.5..2.0)).collect() };
        let m = lib(gci_check(&sigma, split, &k, &l, Method::Mc { samples: 10_000_000, seed: 42 }))?;
        let mut pairs = vec![
            (m.p1, lib(gauss_prob(&sigma.principal(&(0..split).collect::<Vec<_>>()), &k, Method::Quadrature))?),
            (m.p2, lib(gauss_prob(&sigma.principal(&(split..n).collect::<Vec<_>>()), &l, Method::Quadrature))?),
        ];
        if n <= 4 {
            let mut hw = k_halfwidths(&k);
            hw.extend(k_halfwidths(&l));
            pairs.push((
                m.p_joint,
                lib(gauss_prob(&sigma, &SymmetricConvexSet::Box { halfwidths: hw }, Method::Quadrature))?,
            ));
        }
        for (mc, q) in pairs {
            let z = (mc.value - q.value).abs() / mc.stderr;
            ensure(z <= 3.0, || format!("N = {n}: MC {} vs quadrature {} ({z:.2} stderr)", mc.value, q.value))?;
            worst_z = worst_z.max(z);
        }
        ensure(m.margin >= -3.0 * m.margin_stderr, || {
            format!("N = {n}: MC margin {} ± {}", m.margin, m.margin_stderr)
        })?;
    }
    lines.push(format!("MC max |z| {worst_z:.2}"));
    Ok(lines.join(", "))
}

fn k_halfwidths(s: &SymmetricConvexSet) -> Vec<f64> {
    match s {
        SymmetricConvexSet::Box { halfwidths } => halfwidths.clone(),
        _ => unreachable!(),
    }
}

// Density of (U₁ + … + U_m)/√m with U_i uniform on [−1, 1]. Irwin–Hall sum
// for m ≤ 16; inversion of the characteristic function (sin u/u)^m above.
fn uniform_sum_density(m: u32, x: f64) -> f64 {
    let rm = (m as f64).sqrt();
    if m <= 16 {
        let y = (rm * x + m as f64) / 2.0;
        if y <= 0.0 || y >= m as f64 {
            return 0.0;
        }
        let (mut s, mut binom, mut fact) = (0.0, 1.0, 1.0);
        for j in 1..m {
            fact *= j as f64;
        }
        for k in 0..=(y.floor() as u32) {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            s += sign * binom * (y - k as f64).powi(m as i32 - 1);
            binom = binom * (m - k) as f64 / (k + 1) as f64;
        }
        0.5 * rm * s / fact
    } else {
        let cf = |t: f64| {
            let u = t / rm;
            let sinc = if u == 0.0 { 1.0 } else { u.sin() / u };
            sinc.powi(m as i32) * (t * x).cos()
        };
        simpson(cf, 0.0, 60.0, 6000) / PI
    }
}

fn c5_conv_flow() -> Outcome {
    let f = lib(GriddedFunction::indicator_box(1, 1.0, 12.0 / 3f64.sqrt(), 1025))?;
    let state = lib(clt_flow(&[f], 10))?;
    let drift = state.covariance_drift();
    let l1 = state.l1_to_gaussian.last().unwrap()[0];
    ensure(drift < 1e-5, || format!("covariance drift {drift:e}"))?;
    ensure(l1 < 1e-3, || format!("L1 to N(0, 1/3) {l1:e}"))?;

    // Re-run step by step and compare each iterate with the exact density of
    // the 2^k-fold normalized sum. The box itself (k = 0) is skipped: its
    // jump makes a pointwise comparison measure only the edge cells.
    let mut worst: f64 = 0.0;
    let mut g = lib(GriddedFunction::indicator_box(1, 1.0, 12.0 / 3f64.sqrt(), 1025))?.normalized();
    for k in 0..=10u32 {
        if k > 0 {
            g = lib(gclab::grid::conv_step(&g))?.normalized();
        }
        let h = g.spacing();
        let d: f64 =
            (0..g.points_per_axis()).map(|i| (g.values()[i] - uniform_sum_density(1 << k, g.coord(i))).abs() * h).sum();
        if k > 0 {
            worst = worst.max(d);
        }
    }
    ensure(worst < 1e-4, || format!("iterate vs convolution oracle L1 {worst:e}"))?;
    Ok(format!("drift {drift:.1e}, L1 to Gaussian {l1:.1e}, max L1 to oracle {worst:.1e}"))
}

fn box_or_tilted(rng: &mut ChaCha8Rng) -> Result<GriddedFunction, String> {
    let r = rng.random_range(0.5..2.0);
    if rng.random_bool(0.5) {
        lib(GriddedFunction::indicator_box(1, r, 12.0, 1025))
    } else {
        let a = rng.random_range(0.2..2.0);
        lib(GriddedFunction::from_fn(
            1,
            12.0,
            1025,
            |x| if x[0].abs() <= r { (-0.5 * a * x[0] * x[0]).exp() } else { 0.0 },
        ))
    }
}

fn c6_step2() -> Outcome {
    let mut rng = seeded_rng(606);
    let mut worst = f64::INFINITY;
    for _ in 0..20 {
        let rho = rng.random_range(-0.9..0.9);
        let sigma = lib(SymMatrix::from_rows(&[vec![1.0, rho], vec![rho, 1.0]]))?;
        let p = lib(BLProblem::gci(&lib(CovarianceBlocks::new(sigma, 1))?))?;
        let fs = [box_or_tilted(&mut rng)?, box_or_tilted(&mut rng)?];
        let r = lib(step2_inequality_check(&p, &fs, 1.0))?;
        let rel = r.margin / r.rhs;
        ensure(rel >= -1e-3, || format!("ρ = {rho}: BL² = {} < BL(Conv f) = {}", r.lhs, r.rhs))?;
        worst = worst.min(rel);
    }
    Ok(format!("min relative margin {worst:.3e}"))
}

fn c7_counterexample() -> Outcome {
    let r = lib(counterexample_demo(0.5))?;
    let oracle = bivariate(0.5, false)
        / (bivariate(0.0, true) / (phi_cdf(1.0) - phi_cdf(-1.0)) * (1.0 - (phi_cdf(1.0) - phi_cdf(-1.0))));
    ensure((r.lhs_quadrature - oracle).abs() < 1e-8, || format!("ratio {} vs oracle {oracle}", r.lhs_quadrature))?;
    ensure(r.lhs_quadrature < 1.0 - 1e-2, || format!("ratio {}", r.lhs_quadrature))?;
    ensure(r.gaussian_infimum == 1.0, || format!("Gaussian infimum {}", r.gaussian_infimum))?;
    ensure(r.margin > 100.0 * r.quadrature_error, || format!("margin {} vs error {:e}", r.margin, r.quadrature_error))?;
    Ok(format!(
        "ratio {:.6} (oracle {oracle:.6}), margin {:.4}, error {:.1e}",
        r.lhs_quadrature, r.margin, r.quadrature_error
    ))
}

fn random_set(rng: &mut ChaCha8Rng, dim: usize, boxes_only: bool) -> SymmetricConvexSet {
    let kind = if boxes_only { 0 } else { rng.random_range(0..3) };
    match kind {
        0 => SymmetricConvexSet::Box { halfwidths: (0..dim).map(|_| rng.random_range(0.3..2.0)).collect() },
        1 => SymmetricConvexSet::Ellipsoid {
            shape: SymMatrix::diagonal(&(0..dim).map(|_| rng.random_range(0.2..3.0)).collect::<Vec<_>>()),
        },
        _ => SymmetricConvexSet::Polytope {
            normals: (0..dim).map(|_| (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect()).collect(),
        },
    }
}

fn c8_monotone_curves() -> Outcome {
    let mut rng = seeded_rng(808);
    let s: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    for i in 0..20 {
        let n = 2 + i % 3;
        let split = rng.random_range(1..n);
        let cb = lib(CovarianceBlocks::new(random_correlation(&mut rng, n), split))?;
        let k = random_set(&mut rng, split, n == 4);
        let l = random_set(&mut rng, n - split, n == 4);
        let c = lib(prob_interp_curve(&cb, &k, &l, &s, Method::Quadrature))?;
        ensure(is_monotone(&c, true, 1e-8), || format!("interpolation curve {i} decreases"))?;
    }
    let t = [0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, f64::INFINITY];
    for i in 0..20 {
        // 1-d sets and layered functions, and 2-d boxes (a 4-d integral).
        let dim = if i % 4 == 3 { 2 } else { 1 };
        let f1 = if i % 2 == 0 {
            let a = rng.random_range(0.2..1.0);
            QuasiConcaveFn::Layered {
                levels: vec![
                    Level { level: 2.0, set: SymmetricConvexSet::cube(dim, a) },
                    Level { level: 1.0, set: SymmetricConvexSet::cube(dim, a + rng.random_range(0.2..1.5)) },
                ],
            }
        } else {
            QuasiConcaveFn::indicator(random_set(&mut rng, dim, dim == 2))
        };
        let f2 = QuasiConcaveFn::indicator(random_set(&mut rng, dim, dim == 2));
        let c = lib(ou_corr_curve(&f1, &f2, &t, Method::Quadrature))?;
        ensure(is_monotone(&c, false, 1e-8), || format!("OU curve {i} increases"))?;
    }
    Ok("20 interpolation and 20 OU curves monotone".into())
}

fn c9_forward() -> Outcome {
    let mut rng = seeded_rng(909);
    let opts = OptimizeOptions::default();
    let mut worst = f64::INFINITY;
    for _ in 0..100 {
        // Q ⪰ 0 on two 1-d blocks.
        let g = gclab::random::gaussian_matrix(&mut rng, 2, 2);
        let q = SymMatrix::from_dmatrix(&g * g.transpose() * 0.3);
        let qi: Vec<f64> = (0..2).map(|_| rng.random_range(0.5..2.0)).collect();
        let p = lib(BLProblem::from_q(
            lib(BlockStructure::unit(vec![1, 1]))?,
            q,
            qi.iter().map(|&v| SymMatrix::scalar(v)).collect(),
        ))?;
        // f_i = g_{Q_i} · cosh(s x) · exp(τx²/2) with τ < Q_i: log-convex multiplier.
        let fs = qi
            .iter()
            .map(|&c| {
                let s = rng.random_range(0.0..1.0);
                let tau = rng.random_range(0.0..0.4) * c;
                GriddedFunction::from_fn(1, 14.0 / (c - tau).sqrt(), 1025, |x| {
                    (-0.5 * (c - tau) * x[0] * x[0]).exp() * (s * x[0]).cosh()
                })
            })
            .collect::<gclab::Result<Vec<_>>>();
        let fs = lib(fs)?;
        let r = lib(check_forward_bl(&p, &fs, &opts))?;
        ensure(r.margin >= -1e-6, || format!("margin {}", r.margin))?;
        worst = worst.min(r.margin);
    }
    Ok(format!("min margin {worst:.3e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 gaussian infimum = 1", Duration::from_secs(60), c1_gaussian_infimum),
        ("2 fischer property suite", Duration::from_secs(5), c2_fischer),
        ("3 determinant monotonicity", Duration::from_secs(30), c3_det_monotone),
        ("4 gci at desk scale", Duration::from_secs(120), c4_gci_desk_scale),
        ("5 conv flow", Duration::from_secs(10), c5_conv_flow),
        ("6 step-2 inequality", Duration::from_secs(60), c6_step2),
        ("7 counterexample", Duration::from_secs(5), c7_counterexample),
        ("8 monotone curves", Duration::from_secs(60), c8_monotone_curves),
        ("9 forward inequality", Duration::from_secs(30), c9_forward),
    ];
    let mut failed = 0;
    for (name, limit, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if took <= limit => (true, d),
            Ok(d) => (false, format!("{d}; over the {}s budget", limit.as_secs())),
            Err(e) => (false, e),
        };
        failed += !ok as u32;
        println!(
            "{} {name}: {detail} [{:.2}s / {}s]",
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
