//! Command-line front end. Exit codes: 0 the checked property holds, 1 it is
//! violated, 2 usage or configuration error, 3 a mathematical precondition
//! fails (non-PSD input, function outside the hypothesis class).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use gclab::bl::{check_forward_bl, check_inverse_bl, step2_inequality_check, CheckStatus, Report};
use gclab::gaussian::{
    gaussian_ratio, infimum_gaussian, optimize_gaussian, ratio_via_sqrt_form, BLProblem, Bounds, GaussianTuple,
    OptimizeOptions, OptimizeStatus, Sense,
};
use gclab::gci::{
    counterexample_demo, curve_csv, gci_check, is_monotone, ou_corr_curve, prob_interp_curve, quasiconcave_corr_check,
    CurvePoint, Method, QuasiConcaveFn, SymmetricConvexSet, DEFAULT_SEED,
};
use gclab::grid::{clt_flow, FunctionSpec, GriddedFunction};
use gclab::linalg::{det_interp_curve, BlockStructure, CovarianceBlocks, SymMatrix};
use gclab::mc::DEFAULT_SAMPLES;
use gclab::Error;

const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Relative tolerance for the determinant curve.
const DET_MONOTONE_RTOL: f64 = 1e-10;
/// Absolute tolerance for quadrature probability curves.
const CURVE_ATOL: f64 = 1e-8;
/// Covariance drift allowed over a flow run.
const FLOW_DRIFT_TOL: f64 = 1e-5;

#[derive(Parser)]
#[command(name = "gclab", version, about = "Gaussian correlation and inverse Brascamp-Lieb laboratory")]
struct Cli {
    /// Seed for random restarts and Monte Carlo. GCLAB_SEED takes precedence.
    #[arg(long, global = true, env = "GCLAB_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gaussian ratio at a given tuple.
    Ratio {
        #[arg(long)]
        config: PathBuf,
    },
    /// Constrained infimum (or supremum) of the Gaussian ratio.
    Optimize {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 400)]
        max_iter: usize,
        #[arg(long, value_enum, default_value_t = SenseArg::Min)]
        sense: SenseArg,
        /// Optimizer trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Central-limit flow of `Conv`.
    Flow {
        #[arg(long)]
        f: PathBuf,
        #[arg(long, default_value_t = 10)]
        iters: usize,
    },
    /// Gaussian correlation check on sets or quasi-concave functions.
    Gci {
        #[arg(long)]
        sigma: PathBuf,
        /// `{"k": set, "l": set}`.
        #[arg(long, conflicts_with = "f")]
        sets: Option<PathBuf>,
        /// `{"f1": function, "f2": function}`.
        #[arg(long)]
        f: Option<PathBuf>,
        #[command(flatten)]
        method: MethodArgs,
    },
    /// Monotone curves.
    Curve {
        #[arg(value_enum)]
        what: CurveKind,
        #[arg(long)]
        sigma: Option<PathBuf>,
        /// Split for `det`; `prob` takes it from the sets.
        #[arg(long)]
        split: Option<usize>,
        /// Block-diagonal PSD matrix for `det`.
        #[arg(long)]
        a: Option<PathBuf>,
        #[arg(long)]
        sets: Option<PathBuf>,
        #[arg(long)]
        f: Option<PathBuf>,
        /// Comma-separated grid (`inf` allowed for `ou`).
        #[arg(long)]
        grid: Option<String>,
        /// Number of evenly spaced grid points when `--grid` is absent.
        #[arg(long, default_value_t = 21)]
        points: usize,
        #[command(flatten)]
        method: MethodArgs,
    },
    /// Box / box-complement instance showing log-concavity cannot be dropped.
    Counterexample {
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        /// Exit 0 when the violation is certified, 1 otherwise.
        #[arg(long)]
        expect_violation: bool,
    },
    /// Brascamp-Lieb functional checks on gridded functions.
    Bl {
        #[arg(value_enum)]
        check: BlCheck,
        #[arg(long)]
        problem: PathBuf,
        /// JSON list of function specs, one per block.
        #[arg(long)]
        f: PathBuf,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Constant of the doubling inequality; defaults to the Gaussian infimum.
        #[arg(long)]
        i_ab: Option<f64>,
        #[arg(long)]
        expect_violation: bool,
    },
}

#[derive(Args, Clone, Copy)]
struct MethodArgs {
    #[arg(long, value_enum, default_value_t = MethodKind::Quadrature)]
    method: MethodKind,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: u64,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum MethodKind {
    Quadrature,
    Mc,
}

#[derive(ValueEnum, Clone, Copy)]
enum SenseArg {
    Min,
    Max,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum CurveKind {
    Det,
    Prob,
    Ou,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum BlCheck {
    Inverse,
    Forward,
    Step2,
}

/// Problem description accepted in configuration files.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ProblemConfig {
    /// `Q̄ = Σ⁻¹`, `Q_i = Σ_i⁻¹`, `c_i = 1`, normalized to 1 at `A = 0`.
    Gci { sigma: SymMatrix, split: usize },
    Qbar {
        sizes: Vec<usize>,
        #[serde(default)]
        exponents: Option<Vec<f64>>,
        qbar: SymMatrix,
        qi: Vec<SymMatrix>,
        #[serde(default)]
        log_normalization: f64,
    },
    Q {
        sizes: Vec<usize>,
        #[serde(default)]
        exponents: Option<Vec<f64>>,
        q: SymMatrix,
        qi: Vec<SymMatrix>,
        #[serde(default)]
        log_normalization: f64,
    },
}

impl ProblemConfig {
    fn build(&self) -> gclab::Result<BLProblem> {
        let blocks = |sizes: &[usize], e: &Option<Vec<f64>>| match e {
            Some(e) => BlockStructure::new(sizes.to_vec(), e.clone()),
            None => BlockStructure::unit(sizes.to_vec()),
        };
        match self {
            ProblemConfig::Gci { sigma, split } => BLProblem::gci(&CovarianceBlocks::new(sigma.clone(), *split)?),
            ProblemConfig::Qbar { sizes, exponents, qbar, qi, log_normalization } => {
                Ok(BLProblem::from_qbar(blocks(sizes, exponents)?, qbar.clone(), qi.clone())?
                    .with_log_normalization(*log_normalization))
            }
            ProblemConfig::Q { sizes, exponents, q, qi, log_normalization } => {
                Ok(BLProblem::from_q(blocks(sizes, exponents)?, q.clone(), qi.clone())?
                    .with_log_normalization(*log_normalization))
            }
        }
    }
}

#[derive(Deserialize, Serialize)]
struct RatioConfig {
    problem: ProblemConfig,
    /// `A_i` for a `Q̄`/GCI problem, `B_i` for a `Q` problem.
    mats: Vec<SymMatrix>,
}

#[derive(Deserialize, Serialize)]
struct OptimizeConfig {
    problem: ProblemConfig,
    #[serde(default)]
    bounds: Option<Bounds>,
}

#[derive(Deserialize, Serialize)]
struct SetsConfig {
    k: SymmetricConvexSet,
    l: SymmetricConvexSet,
}

#[derive(Deserialize, Serialize)]
struct FunctionsConfig {
    f1: QuasiConcaveFn,
    f2: QuasiConcaveFn,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NotPositiveDefinite
            | Error::ConstraintViolated(_)
            | Error::InfeasibleBounds(_)
            | Error::ClassViolation(_) => 3,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Main output plus the exit code it implies.
struct Output {
    text: String,
    code: u8,
}

fn report(command: &str, config: Value, result: Value) -> String {
    let v = json!({ "tool": "gclab", "version": VERSION, "command": command, "config": config, "result": result });
    serde_json::to_string_pretty(&v).unwrap_or_default() + "\n"
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn method(m: MethodArgs, seed: u64) -> Method {
    match m.method {
        MethodKind::Quadrature => Method::Quadrature,
        MethodKind::Mc => Method::Mc { samples: m.samples, seed },
    }
}

fn status_code(status: CheckStatus) -> u8 {
    match status {
        CheckStatus::Holds => 0,
        CheckStatus::Violated => 1,
        CheckStatus::OutsideHypotheses => 3,
    }
}

fn flip(code: u8, expect_violation: bool) -> u8 {
    match (expect_violation, code) {
        (true, 0) => 1,
        (true, 1) => 0,
        _ => code,
    }
}

fn parse_grid(grid: &Option<String>, points: usize, hi: f64) -> Result<Vec<f64>, Failure> {
    match grid {
        Some(s) => s
            .split(',')
            .map(|t| {
                let t = t.trim();
                if t.eq_ignore_ascii_case("inf") {
                    Ok(f64::INFINITY)
                } else {
                    t.parse::<f64>().map_err(|e| usage(format!("bad grid value {t:?}: {e}")))
                }
            })
            .collect(),
        None => {
            if points < 2 {
                return Err(usage("--points must be at least 2"));
            }
            Ok((0..points).map(|i| hi * i as f64 / (points - 1) as f64).collect())
        }
    }
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a PathBuf, Failure> {
    p.as_ref().ok_or_else(|| usage(format!("{flag} is required")))
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    let seed = cli.seed;
    match &cli.command {
        Command::Ratio { config } => {
            let cfg: RatioConfig = read_json(config)?;
            let p = cfg.problem.build()?;
            let tuple = GaussianTuple::new(p.natural_convention(), cfg.mats.clone());
            let value = gaussian_ratio(&p, &tuple)?;
            let sqrt_form = match (&cfg.problem, cfg.mats.as_slice()) {
                (ProblemConfig::Gci { sigma, split }, [a1, a2]) => {
                    Some(ratio_via_sqrt_form(&CovarianceBlocks::new(sigma.clone(), *split)?, a1, a2)?)
                }
                _ => None,
            };
            let result = json!({
                "gaussian_ratio": value,
                "ratio_via_sqrt_form": sqrt_form,
                "difference": sqrt_form.map(|s| value - s),
            });
            Ok(Output { text: report("ratio", to_value(&cfg), result), code: 0 })
        }
        Command::Optimize { problem, restarts, tol, max_iter, sense, trace } => {
            let cfg: OptimizeConfig = read_json(problem)?;
            let p = cfg.problem.build()?;
            let opts = OptimizeOptions { restarts: *restarts, tol: *tol, max_iter: *max_iter, seed };
            let sense = match sense {
                SenseArg::Min => Sense::Minimize,
                SenseArg::Max => Sense::Maximize,
            };
            let r = optimize_gaussian(&p, cfg.bounds.as_ref(), sense, &opts)?;
            if let Some(path) = trace {
                std::fs::write(path, r.trace_csv()).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            }
            let config = json!({ "problem": cfg.problem, "bounds": cfg.bounds, "options": opts, "sense": sense });
            let result = json!({
                "value": r.value,
                "status": r.status,
                "restart": r.restart,
                "argmin": r.argmin,
                "iterations": r.trace.len(),
            });
            let code = if r.status == OptimizeStatus::Divergent { 1 } else { 0 };
            Ok(Output { text: report("optimize", config, result), code })
        }
        Command::Flow { f, iters } => {
            let specs: Vec<FunctionSpec> = read_json(f)?;
            let fs = specs.iter().map(FunctionSpec::build).collect::<gclab::Result<Vec<GriddedFunction>>>()?;
            let state = clt_flow(&fs, *iters)?;
            let mut csv = String::from("iter,index,l1_to_gaussian");
            let max_dim = fs.iter().map(GriddedFunction::dim).max().unwrap_or(1);
            for i in 0..max_dim {
                for j in i..max_dim {
                    csv.push_str(&format!(",cov_{i}{j}"));
                }
            }
            csv.push('\n');
            for (it, (covs, l1s)) in state.covariances.iter().zip(&state.l1_to_gaussian).enumerate() {
                for (idx, (c, l1)) in covs.iter().zip(l1s).enumerate() {
                    csv.push_str(&format!("{it},{idx},{l1:e}"));
                    for i in 0..max_dim {
                        for j in i..max_dim {
                            let v = if j < c.dim() { format!("{:e}", c.get(i, j)) } else { String::new() };
                            csv.push_str(&format!(",{v}"));
                        }
                    }
                    csv.push('\n');
                }
            }
            let drift = state.covariance_drift();
            let code = if drift < FLOW_DRIFT_TOL { 0 } else { 1 };
            eprintln!("covariance drift {drift:e} (tolerance {FLOW_DRIFT_TOL:e})");
            Ok(Output { text: csv, code })
        }
        Command::Gci { sigma, sets, f, method: m } => {
            let sigma: SymMatrix = read_json(sigma)?;
            let meth = method(*m, seed);
            match (sets, f) {
                (Some(path), _) => {
                    let cfg: SetsConfig = read_json(path)?;
                    let r = gci_check(&sigma, cfg.k.dim(), &cfg.k, &cfg.l, meth)?;
                    let config =
                        json!({ "sigma": sigma, "split": cfg.k.dim(), "k": cfg.k, "l": cfg.l, "method": meth });
                    Ok(Output { text: report("gci", config, to_value(&r)), code: if r.holds { 0 } else { 1 } })
                }
                (None, Some(path)) => {
                    let cfg: FunctionsConfig = read_json(path)?;
                    let r = quasiconcave_corr_check(&sigma, &cfg.f1, &cfg.f2, meth)?;
                    let config = json!({ "sigma": sigma, "f1": cfg.f1, "f2": cfg.f2, "method": meth });
                    Ok(Output { text: report("gci", config, to_value(&r)), code: if r.holds { 0 } else { 1 } })
                }
                (None, None) => Err(usage("gci needs --sets or --f")),
            }
        }
        Command::Curve { what, sigma, split, a, sets, f, grid, points, method: m } => {
            let meth = method(*m, seed);
            let (axis, pts, ok): (&str, Vec<CurvePoint>, bool) = match what {
                CurveKind::Det => {
                    let sigma: SymMatrix = read_json(required(sigma, "--sigma")?)?;
                    let a: SymMatrix = read_json(required(a, "--a")?)?;
                    let split = split.ok_or_else(|| usage("--split is required"))?;
                    let cb = CovarianceBlocks::new(sigma, split)?;
                    let s = parse_grid(grid, *points, 1.0)?;
                    let v = det_interp_curve(&cb, &a, &s)?;
                    let ok = v.windows(2).all(|w| w[1] <= w[0] * (1.0 + DET_MONOTONE_RTOL));
                    let pts =
                        s.iter().zip(v).map(|(&x, value)| CurvePoint { x, value, stderr: 0.0, error: 0.0 }).collect();
                    ("s", pts, ok)
                }
                CurveKind::Prob => {
                    let sigma: SymMatrix = read_json(required(sigma, "--sigma")?)?;
                    let cfg: SetsConfig = read_json(required(sets, "--sets")?)?;
                    let cb = CovarianceBlocks::new(sigma, cfg.k.dim())?;
                    let s = parse_grid(grid, *points, 1.0)?;
                    let pts = prob_interp_curve(&cb, &cfg.k, &cfg.l, &s, meth)?;
                    let ok = is_monotone(&pts, true, CURVE_ATOL);
                    ("s", pts, ok)
                }
                CurveKind::Ou => {
                    let cfg: FunctionsConfig = read_json(required(f, "--f")?)?;
                    let mut t = parse_grid(grid, *points, 3.0)?;
                    if grid.is_none() {
                        t.push(f64::INFINITY);
                    }
                    let pts = ou_corr_curve(&cfg.f1, &cfg.f2, &t, meth)?;
                    let ok = is_monotone(&pts, false, CURVE_ATOL);
                    ("t", pts, ok)
                }
            };
            if !ok {
                eprintln!("curve is not monotone within tolerance");
            }
            Ok(Output { text: curve_csv(axis, &pts), code: if ok { 0 } else { 1 } })
        }
        Command::Counterexample { rho, expect_violation } => {
            let r = counterexample_demo(*rho)?;
            let code = flip(if r.certified { 1 } else { 0 }, *expect_violation);
            let config = json!({ "rho": rho, "expect_violation": expect_violation });
            Ok(Output { text: report("counterexample", config, to_value(&r)), code })
        }
        Command::Bl { check, problem, f, restarts, tol, i_ab, expect_violation } => {
            let cfg: ProblemConfig = read_json(problem)?;
            let p = cfg.build()?;
            let specs: Vec<FunctionSpec> = read_json(f)?;
            let fs = specs.iter().map(FunctionSpec::build).collect::<gclab::Result<Vec<GriddedFunction>>>()?;
            let opts = OptimizeOptions { restarts: *restarts, tol: *tol, seed, ..OptimizeOptions::default() };
            let (r, constant): (Report, Option<f64>) = match check {
                BlCheck::Inverse => {
                    let inf = infimum_gaussian(&p, None, &opts)?.value;
                    (check_inverse_bl(&p, &fs, inf)?, Some(inf))
                }
                BlCheck::Forward => (check_forward_bl(&p, &fs, &opts)?, None),
                BlCheck::Step2 => {
                    let c = match i_ab {
                        Some(c) => *c,
                        None => infimum_gaussian(&p, None, &opts)?.value,
                    };
                    (step2_inequality_check(&p, &fs, c)?, Some(c))
                }
            };
            let config = json!({ "check": format!("{check:?}").to_lowercase(), "problem": cfg, "functions": specs, "options": opts, "constant": constant });
            let code = flip(status_code(r.status), *expect_violation);
            Ok(Output { text: report("bl", config, to_value(&r)), code })
        }
    }
}

fn main() -> ExitCode {
    let mut cli = Cli::parse();
    // clap lets the flag win over the environment; here the environment wins.
    if let Ok(v) = std::env::var("GCLAB_SEED") {
        match v.parse() {
            Ok(seed) => cli.seed = seed,
            Err(e) => {
                eprintln!("gclab: GCLAB_SEED: {e}");
                return ExitCode::from(2);
            }
        }
    }
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("gclab: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(out) => {
            let written = match &cli.out {
                Some(path) => std::fs::write(path, &out.text).map_err(|e| format!("{}: {e}", path.display())),
                None => {
                    print!("{}", out.text);
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("gclab: {e}");
                return ExitCode::from(2);
            }
            ExitCode::from(out.code)
        }
        Err(f) => {
            eprintln!("gclab: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
