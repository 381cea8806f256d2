//! Gaussian Brascamp–Lieb ratios and their constrained infima.
//!
//! For centered Gaussian inputs `g_{B_i}` the functional has the closed form
//!
//! ```text
//! BL(g_B) = (2π)^{(N − Σ c_i n_i)/2} · Π det(B_i)^{c_i/2} / det(Q + ⊕ c_i B_i)^{1/2}
//! ```
//!
//! which is `+∞` as soon as `Q + ⊕ c_i B_i` fails to be positive definite.
//! All values are computed in log space and multiplied by the problem's
//! normalization constant (1 unless the problem was built by
//! [`BLProblem::gci`], where it turns the ratio into the probability ratio
//! `det(Id + A₁Σ₁)^{1/2} det(Id + A₂Σ₂)^{1/2} / det(Id + AΣ)^{1/2}`).

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{BlockStructure, CovarianceBlocks, SymMatrix};
use crate::random::{gaussian_matrix, seeded_rng};

/// Which matrix of a [`BLProblem`] the user supplied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    /// `Q̄` with weights `g_{Q_i}` in the denominator; inputs are the `h_i`.
    QBar,
    /// `Q = Q̄ − ⊕ c_i Q_i`; inputs are the `f_i = g_{Q_i} h_i`.
    Q,
}

/// One instance of the inverse Brascamp–Lieb inequality.
#[derive(Clone, Debug, PartialEq)]
pub struct BLProblem {
    blocks: BlockStructure,
    qbar: SymMatrix,
    q: SymMatrix,
    qi: Vec<SymMatrix>,
    form: Form,
    log_normalization: f64,
}

impl BLProblem {
    fn validate(blocks: &BlockStructure, full: &SymMatrix, qi: &[SymMatrix]) -> Result<()> {
        if full.dim() != blocks.total_dim() {
            return Err(Error::ShapeMismatch(format!(
                "quadratic form has dimension {} but the blocks sum to {}",
                full.dim(),
                blocks.total_dim()
            )));
        }
        if qi.len() != blocks.count() {
            return Err(Error::ShapeMismatch(format!("{} blocks but {} matrices Q_i", blocks.count(), qi.len())));
        }
        for (i, (q, &n)) in qi.iter().zip(blocks.sizes()).enumerate() {
            if q.dim() != n {
                return Err(Error::ShapeMismatch(format!("Q_{i} has dimension {} but n_{i} = {n}", q.dim())));
            }
            if !q.is_psd() {
                return Err(Error::ConstraintViolated(format!("Q_{i} must be positive semidefinite")));
            }
        }
        Ok(())
    }

    fn weighted_sum(blocks: &BlockStructure, mats: &[SymMatrix]) -> SymMatrix {
        let parts: Vec<SymMatrix> = mats.iter().zip(blocks.exponents()).map(|(m, &c)| m.scale(c)).collect();
        SymMatrix::direct_sum(&parts)
    }

    /// Problem given by `Q̄` (arbitrary signature) and PSD `Q_i`.
    pub fn from_qbar(blocks: BlockStructure, qbar: SymMatrix, qi: Vec<SymMatrix>) -> Result<Self> {
        Self::validate(&blocks, &qbar, &qi)?;
        let q = qbar.sub(&Self::weighted_sum(&blocks, &qi));
        Ok(Self { blocks, qbar, q, qi, form: Form::QBar, log_normalization: 0.0 })
    }

    /// Problem given by `Q` directly.
    pub fn from_q(blocks: BlockStructure, q: SymMatrix, qi: Vec<SymMatrix>) -> Result<Self> {
        Self::validate(&blocks, &q, &qi)?;
        let qbar = q.add(&Self::weighted_sum(&blocks, &qi));
        Ok(Self { blocks, qbar, q, qi, form: Form::Q, log_normalization: 0.0 })
    }

    /// The correlation instance: `Q̄ = Σ⁻¹`, `Q_i = Σ_i⁻¹`, `c_i = 1`,
    /// normalized so that the ratio at `A₁ = A₂ = 0` is exactly 1.
    pub fn gci(cb: &CovarianceBlocks) -> Result<Self> {
        let blocks = BlockStructure::unit(vec![cb.split(), cb.dim() - cb.split()])?;
        let qbar = cb.sigma().inverse_pd()?;
        let qi = vec![cb.sigma1().inverse_pd()?, cb.sigma2().inverse_pd()?];
        let mut p = Self::from_qbar(blocks, qbar, qi)?;
        let zeros: Vec<SymMatrix> = p.blocks.sizes().iter().map(|&n| SymMatrix::zeros(n)).collect();
        let raw = p.raw_log_ratio(&zeros, Convention::A);
        if !raw.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        p.log_normalization = -raw;
        Ok(p)
    }

    pub fn with_log_normalization(mut self, log_normalization: f64) -> Self {
        self.log_normalization = log_normalization;
        self
    }

    /// Same instance with the other matrix marked authoritative.
    pub fn with_form(mut self, form: Form) -> Self {
        self.form = form;
        self
    }

    pub fn blocks(&self) -> &BlockStructure {
        &self.blocks
    }

    pub fn qbar(&self) -> &SymMatrix {
        &self.qbar
    }

    pub fn q(&self) -> &SymMatrix {
        &self.q
    }

    pub fn qi(&self) -> &[SymMatrix] {
        &self.qi
    }

    pub fn form(&self) -> Form {
        self.form
    }

    pub fn log_normalization(&self) -> f64 {
        self.log_normalization
    }

    pub fn normalization(&self) -> f64 {
        self.log_normalization.exp()
    }

    /// The convention matching the problem's form.
    pub fn natural_convention(&self) -> Convention {
        match self.form {
            Form::QBar => Convention::A,
            Form::Q => Convention::B,
        }
    }

    /// Unnormalized log of the Gaussian ratio; `+∞` for a non-PD joint
    /// form, NaN when some `B_i` is not PD.
    fn raw_log_ratio(&self, mats: &[SymMatrix], convention: Convention) -> f64 {
        let c = self.blocks.exponents();
        let mut log_num = 0.0;
        for (i, m) in mats.iter().enumerate() {
            let b = match convention {
                Convention::A => m.add(&self.qi[i]),
                Convention::B => m.clone(),
            };
            match b.log_det_pd() {
                Ok(ld) => log_num += 0.5 * c[i] * ld,
                Err(_) => return f64::NAN,
            }
        }
        let joint = match convention {
            Convention::A => self.qbar.add(&Self::weighted_sum(&self.blocks, mats)),
            Convention::B => self.q.add(&Self::weighted_sum(&self.blocks, mats)),
        };
        let ld_joint = match joint.log_det_pd() {
            Ok(v) => v,
            Err(_) => return f64::INFINITY,
        };
        let n = self.blocks.total_dim() as f64;
        let weighted: f64 = self.blocks.sizes().iter().zip(c).map(|(&ni, &ci)| ni as f64 * ci).sum();
        0.5 * (n - weighted) * (2.0 * PI).ln() + log_num - 0.5 * ld_joint
    }

    fn log_ratio(&self, mats: &[SymMatrix], convention: Convention) -> f64 {
        self.raw_log_ratio(mats, convention) + self.log_normalization
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `A_i ≥ 0` with `A_i + Q_i > 0`; the Gaussian is `g_{A_i + Q_i}`.
    A,
    /// `B_i ≥ Q_i` with `B_i > 0`.
    B,
}

/// A tuple of Gaussian parameters in one of the two conventions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianTuple {
    pub convention: Convention,
    pub mats: Vec<SymMatrix>,
}

impl GaussianTuple {
    pub fn new(convention: Convention, mats: Vec<SymMatrix>) -> Self {
        Self { convention, mats }
    }

    /// The `B_i = A_i + Q_i` view of the tuple.
    pub fn to_b(&self, p: &BLProblem) -> GaussianTuple {
        match self.convention {
            Convention::B => self.clone(),
            Convention::A => GaussianTuple {
                convention: Convention::B,
                mats: self.mats.iter().zip(p.qi()).map(|(a, q)| a.add(q)).collect(),
            },
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mats.iter().map(|m| m.matrix().norm_squared()).sum::<f64>().sqrt()
    }

    fn check_shapes(&self, p: &BLProblem) -> Result<()> {
        if self.mats.len() != p.blocks().count() {
            return Err(Error::ShapeMismatch(format!(
                "tuple has {} matrices but the problem has {} blocks",
                self.mats.len(),
                p.blocks().count()
            )));
        }
        for (i, (m, &n)) in self.mats.iter().zip(p.blocks().sizes()).enumerate() {
            if m.dim() != n {
                return Err(Error::ShapeMismatch(format!("matrix {i} has dimension {} but n_{i} = {n}", m.dim())));
            }
        }
        Ok(())
    }

    /// Checks the constraint set of the tuple's convention.
    pub fn validate(&self, p: &BLProblem) -> Result<()> {
        self.check_shapes(p)?;
        for (i, (m, q)) in self.mats.iter().zip(p.qi()).enumerate() {
            match self.convention {
                Convention::A => {
                    if !m.is_psd() {
                        return Err(Error::ConstraintViolated(format!("A_{i} must be PSD")));
                    }
                    if !m.add(q).is_pd() {
                        return Err(Error::ConstraintViolated(format!("A_{i} + Q_{i} must be PD")));
                    }
                }
                Convention::B => {
                    if !m.is_pd() {
                        return Err(Error::ConstraintViolated(format!("B_{i} must be PD")));
                    }
                    if !q.psd_le(m) {
                        return Err(Error::ConstraintViolated(format!("B_{i} ≥ Q_{i} fails")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// `BL(g_{B₁}, …, g_{B_m})` for a feasible tuple; `+∞` when the numerator
/// integral diverges.
pub fn gaussian_ratio(p: &BLProblem, g: &GaussianTuple) -> Result<f64> {
    g.validate(p)?;
    Ok(p.log_ratio(&g.mats, g.convention).exp())
}

/// Same ratio without the constraint check; `NaN` if some `B_i` is not PD.
pub fn gaussian_ratio_unchecked(p: &BLProblem, g: &GaussianTuple) -> Result<f64> {
    g.check_shapes(p)?;
    Ok(p.log_ratio(&g.mats, g.convention).exp())
}

/// The symmetrized correlation ratio
/// `(det(Id + √A₁Σ₁√A₁) det(Id + √A₂Σ₂√A₂) / det(Id + √A Σ √A))^{1/2}`
/// with `A = A₁ ⊕ A₂`.
pub fn ratio_via_sqrt_form(cb: &CovarianceBlocks, a1: &SymMatrix, a2: &SymMatrix) -> Result<f64> {
    if a1.dim() != cb.split() || a2.dim() != cb.dim() - cb.split() {
        return Err(Error::ShapeMismatch(format!(
            "A₁, A₂ have dimensions {}, {} but the split is {} + {}",
            a1.dim(),
            a2.dim(),
            cb.split(),
            cb.dim() - cb.split()
        )));
    }
    let r1 = a1.sqrt_psd()?;
    let r2 = a2.sqrt_psd()?;
    let r = SymMatrix::direct_sum(&[r1.clone(), r2.clone()]);
    let one = |m: SymMatrix| SymMatrix::identity(m.dim()).add(&m);
    let d1 = one(cb.sigma1().congruence(r1.matrix())).log_det_pd()?;
    let d2 = one(cb.sigma2().congruence(r2.matrix())).log_det_pd()?;
    let d = one(cb.sigma().congruence(r.matrix())).log_det_pd()?;
    Ok((0.5 * (d1 + d2 - d)).exp())
}

/// Box constraints `lower_i ≤ C_i ≤ upper_i` in the optimization convention.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<SymMatrix>,
    #[serde(default)]
    pub upper: Option<Vec<SymMatrix>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizeStatus {
    Converged,
    Divergent,
    MaxIterations,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOptions {
    pub restarts: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self { restarts: 4, tol: 1e-8, max_iter: 400, seed: 42 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub value: f64,
    pub grad_norm: f64,
    /// Frobenius norm of the iterate.
    pub arg_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizeResult {
    pub value: f64,
    pub argmin: GaussianTuple,
    pub status: OptimizeStatus,
    pub restart: usize,
    pub trace: Vec<TraceRow>,
}

impl OptimizeResult {
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iter,value,grad_norm,arg_norm\n");
        for r in &self.trace {
            let _ = writeln!(out, "{},{:e},{:e},{:e}", r.iter, r.value, r.grad_norm, r.arg_norm);
        }
        out
    }
}

/// Ratios below this (above its reciprocal, when maximizing) with a growing
/// parameter norm are reported as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e-8;

const FD_STEP: f64 = 1e-6;

/// Relative difference below which two restarts count as equally good.
pub const RESTART_TIE_RTOL: f64 = 1e-12;

struct Objective<'a> {
    p: &'a BLProblem,
    convention: Convention,
    sense: Sense,
    lower: Vec<SymMatrix>,
    /// `(upper − lower)^{1/2}` per block when an upper bound is present.
    span_root: Option<Vec<SymMatrix>>,
    sizes: Vec<usize>,
}

impl Objective<'_> {
    fn n_params(&self) -> usize {
        self.sizes.iter().map(|n| n * n).sum()
    }

    fn factors(&self, theta: &[f64]) -> Vec<DMatrix<f64>> {
        let mut off = 0;
        self.sizes
            .iter()
            .map(|&n| {
                let f = DMatrix::from_column_slice(n, n, &theta[off..off + n * n]);
                off += n * n;
                f
            })
            .collect()
    }

    fn mats(&self, theta: &[f64]) -> Vec<SymMatrix> {
        self.factors(theta)
            .into_iter()
            .enumerate()
            .map(|(i, f)| {
                let s = SymMatrix::from_dmatrix(&f * f.transpose());
                match &self.span_root {
                    Some(roots) => {
                        let s = s.clamp_spectrum(0.0, 1.0);
                        self.lower[i].add(&s.congruence(roots[i].matrix()))
                    }
                    None => self.lower[i].add(&s),
                }
            })
            .collect()
    }

    /// Projects each `F Fᵀ` onto `[0, Id]` when bounded above.
    fn project(&self, theta: &mut [f64]) {
        if self.span_root.is_none() {
            return;
        }
        let mut off = 0;
        for (i, f) in self.factors(theta).into_iter().enumerate() {
            let n = self.sizes[i];
            let s = SymMatrix::from_dmatrix(&f * f.transpose());
            let (vals, vecs) = s.eigen();
            if vals.iter().any(|&v| v > 1.0) {
                let d =
                    DMatrix::from_diagonal(&DVector::from_iterator(n, vals.iter().map(|v| v.clamp(0.0, 1.0).sqrt())));
                let g = vecs * d;
                theta[off..off + n * n].copy_from_slice(g.as_slice());
            }
            off += n * n;
        }
    }

    /// Signed log objective: `±log ratio`, `+∞` when infeasible.
    fn eval(&self, theta: &[f64]) -> f64 {
        let lr = self.p.log_ratio(&self.mats(theta), self.convention);
        let v = match self.sense {
            Sense::Minimize => lr,
            Sense::Maximize => -lr,
        };
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    fn ratio_from_objective(&self, v: f64) -> f64 {
        match self.sense {
            Sense::Minimize => v.exp(),
            Sense::Maximize => (-v).exp(),
        }
    }

    fn gradient(&self, theta: &[f64], f0: f64) -> Vec<f64> {
        let mut x = theta.to_vec();
        (0..theta.len())
            .map(|j| {
                let h = FD_STEP * theta[j].abs().max(1.0);
                x[j] = theta[j] + h;
                let fp = self.eval(&x);
                x[j] = theta[j] - h;
                let fm = self.eval(&x);
                x[j] = theta[j];
                match (fp.is_finite(), fm.is_finite()) {
                    (true, true) => (fp - fm) / (2.0 * h),
                    (true, false) => (fp - f0) / h,
                    (false, true) => (f0 - fm) / h,
                    (false, false) => 0.0,
                }
            })
            .collect()
    }
}

struct Run {
    value: f64,
    theta: Vec<f64>,
    status: OptimizeStatus,
    trace: Vec<TraceRow>,
}

fn scaled_grad_norm(g: &[f64], theta: &[f64]) -> f64 {
    g.iter().zip(theta).fold(0.0_f64, |a, (gj, tj)| a.max(gj.abs() * tj.abs().max(1.0)))
}

fn run_bfgs(obj: &Objective<'_>, mut theta: Vec<f64>, opts: &OptimizeOptions) -> Option<Run> {
    obj.project(&mut theta);
    let mut f = obj.eval(&theta);
    if !f.is_finite() {
        return None;
    }
    let n = theta.len();
    let mut g = obj.gradient(&theta, f);
    let mut h_inv = DMatrix::<f64>::identity(n, n);
    let mut trace = Vec::new();
    let mut norms = Vec::new();
    let mut stalls = 0;
    let mut status = OptimizeStatus::MaxIterations;

    for iter in 0..opts.max_iter {
        let gnorm = scaled_grad_norm(&g, &theta);
        let arg_norm = GaussianTuple::new(obj.convention, obj.mats(&theta)).frobenius_norm();
        trace.push(TraceRow { iter, value: obj.ratio_from_objective(f), grad_norm: gnorm, arg_norm });
        norms.push(arg_norm);

        let ratio = obj.ratio_from_objective(f);
        let diverging = match obj.sense {
            Sense::Minimize => ratio < DIVERGENCE_THRESHOLD,
            Sense::Maximize => ratio > 1.0 / DIVERGENCE_THRESHOLD,
        };
        if diverging && norms.len() >= 2 && norms[norms.len() - 1] > norms[norms.len() - 2] {
            status = OptimizeStatus::Divergent;
            break;
        }
        if gnorm <= opts.tol || n == 0 {
            status = OptimizeStatus::Converged;
            break;
        }

        let gv = DVector::from_column_slice(&g);
        let mut d = -(&h_inv * &gv);
        if d.dot(&gv) >= 0.0 {
            h_inv = DMatrix::identity(n, n);
            d = -gv.clone();
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut trial: Vec<f64> = theta.iter().zip(d.iter()).map(|(t, di)| t + alpha * di).collect();
            obj.project(&mut trial);
            let ft = obj.eval(&trial);
            let step_dot: f64 = g.iter().zip(&trial).zip(&theta).map(|((gj, a), b)| gj * (a - b)).sum();
            if ft.is_finite() && ft <= f + 1e-4 * step_dot.min(0.0) && ft <= f {
                accepted = Some((trial, ft));
                break;
            }
            alpha *= 0.5;
        }
        let Some((new_theta, new_f)) = accepted else {
            status = OptimizeStatus::Converged;
            break;
        };
        let new_g = obj.gradient(&new_theta, new_f);
        let s = DVector::from_iterator(n, new_theta.iter().zip(&theta).map(|(a, b)| a - b));
        let y = DVector::from_iterator(n, new_g.iter().zip(&g).map(|(a, b)| a - b));
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if iter == 0 {
                h_inv = DMatrix::identity(n, n) * (sy / y.dot(&y));
            }
            let rho = 1.0 / sy;
            let id = DMatrix::<f64>::identity(n, n);
            let left = &id - &s * y.transpose() * rho;
            let right = &id - &y * s.transpose() * rho;
            h_inv = &left * &h_inv * &right + &s * s.transpose() * rho;
        }
        let improvement = f - new_f;
        theta = new_theta;
        f = new_f;
        g = new_g;
        if improvement <= 1e-3 * opts.tol * f.abs().max(1.0) {
            stalls += 1;
            if stalls >= 3 {
                status = OptimizeStatus::Converged;
                trace.push(TraceRow {
                    iter: iter + 1,
                    value: obj.ratio_from_objective(f),
                    grad_norm: scaled_grad_norm(&g, &theta),
                    arg_norm: GaussianTuple::new(obj.convention, obj.mats(&theta)).frobenius_norm(),
                });
                break;
            }
        } else {
            stalls = 0;
        }
    }
    Some(Run { value: obj.ratio_from_objective(f), theta, status, trace })
}

/// Best Gaussian value of the ratio over the constraint set (or the box
/// `bounds`), searched by multi-start quasi-Newton. The returned value is
/// attained by `argmin`, hence an upper bound on the true infimum.
pub fn infimum_gaussian(p: &BLProblem, bounds: Option<&Bounds>, opts: &OptimizeOptions) -> Result<OptimizeResult> {
    optimize_gaussian(p, bounds, Sense::Minimize, opts)
}

/// Largest Gaussian value over the constraint set; used for the forward
/// inequality over `0 < B_i ≤ Q_i`.
pub fn supremum_gaussian(p: &BLProblem, bounds: Option<&Bounds>, opts: &OptimizeOptions) -> Result<OptimizeResult> {
    optimize_gaussian(p, bounds, Sense::Maximize, opts)
}

pub fn optimize_gaussian(
    p: &BLProblem,
    bounds: Option<&Bounds>,
    sense: Sense,
    opts: &OptimizeOptions,
) -> Result<OptimizeResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    let convention = p.natural_convention();
    let sizes = p.blocks().sizes().to_vec();
    let (lower, span_root) = match bounds {
        None => {
            let lower = match convention {
                Convention::A => sizes.iter().map(|&n| SymMatrix::zeros(n)).collect(),
                Convention::B => p.qi().to_vec(),
            };
            (lower, None)
        }
        Some(b) => {
            GaussianTuple::new(convention, b.lower.clone()).check_shapes(p)?;
            let roots = match &b.upper {
                None => None,
                Some(upper) => {
                    GaussianTuple::new(convention, upper.clone()).check_shapes(p)?;
                    let mut roots = Vec::with_capacity(upper.len());
                    for (i, (lo, hi)) in b.lower.iter().zip(upper).enumerate() {
                        if !lo.psd_le(hi) {
                            return Err(Error::InfeasibleBounds(format!("lower_{i} ≰ upper_{i}")));
                        }
                        roots.push(hi.sub(lo).sqrt_psd()?);
                    }
                    Some(roots)
                }
            };
            (b.lower.clone(), roots)
        }
    };
    let obj = Objective { p, convention, sense, lower, span_root, sizes };
    let n_params = obj.n_params();

    let starts: Vec<Vec<f64>> = (0..opts.restarts.max(2))
        .map(|k| match k {
            0 => vec![0.0; n_params],
            1 => {
                let mut t = vec![0.0; n_params];
                let mut off = 0;
                for &n in &obj.sizes {
                    for i in 0..n {
                        t[off + i * n + i] = 1.0;
                    }
                    off += n * n;
                }
                t
            }
            _ => {
                let mut rng = seeded_rng(opts.seed.wrapping_add(k as u64));
                let scale: f64 = rng.random_range(0.1..2.0);
                gaussian_matrix(&mut rng, n_params, 1).iter().map(|v| v * scale).collect()
            }
        })
        .collect();

    let runs: Vec<Option<Run>> = starts.into_par_iter().map(|t| run_bfgs(&obj, t, opts)).collect();

    let mut best: Option<(usize, Run)> = None;
    for (k, run) in runs.into_iter().enumerate() {
        let Some(run) = run else { continue };
        let better = match &best {
            None => true,
            // Values within rounding of each other are ties; the earlier
            // restart wins.
            Some((_, b)) => match sense {
                Sense::Minimize => run.value < b.value * (1.0 - RESTART_TIE_RTOL),
                Sense::Maximize => run.value > b.value * (1.0 + RESTART_TIE_RTOL),
            },
        };
        if better {
            best = Some((k, run));
        }
    }
    let (restart, run) =
        best.ok_or_else(|| Error::InfeasibleBounds("no restart reached a point where the ratio is finite".into()))?;
    Ok(OptimizeResult {
        value: run.value,
        argmin: GaussianTuple::new(convention, obj.mats(&run.theta)),
        status: run.status,
        restart,
        trace: run.trace,
    })
}
