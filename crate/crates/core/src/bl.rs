//! The Brascamp–Lieb functional on gridded inputs and checks of the
//! inverse, forward and doubling inequalities.
//!
//! ```text
//! BL(f) = ∫ e^{−½⟨Qx,x⟩} Π f_i(x_i)^{c_i} dx / Π (∫ f_i)^{c_i}
//! ```
//!
//! For a problem given in the `Q̄` form the inputs are the `h_i` and the
//! functional is evaluated on `f_i = g_{Q_i} h_i`, which is the same number.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{supremum_gaussian, BLProblem, Bounds, Form, OptimizeOptions};
use crate::grid::{conv_step, ClassWitness, Direction, GriddedFunction, DECAY_RTOL};
use crate::linalg::SymMatrix;
use crate::numeric::NeumaierSum;

/// Largest joint dimension `Σ n_i` handled by tensor quadrature.
pub const MAX_JOINT_DIM: usize = 4;
/// Cap on the number of joint quadrature nodes.
pub const MAX_JOINT_POINTS: u128 = 1 << 34;
/// Relative tolerance of inequality checks on strictly positive inputs.
pub const SMOOTH_RTOL: f64 = 1e-6;
/// Relative tolerance when some input vanishes somewhere (edge bias).
pub const INDICATOR_RTOL: f64 = 1e-3;

const CHUNK: usize = 32;

struct BlockSamples {
    points: Vec<Vec<f64>>,
    /// `f^c` at active nodes.
    values: Vec<f64>,
    weights: Vec<f64>,
    boundary: Vec<bool>,
    range: std::ops::Range<usize>,
}

#[derive(Clone, Copy, Default)]
struct Partial {
    sum: NeumaierSum,
    max: f64,
    boundary_max: f64,
}

impl Partial {
    fn merge(mut self, other: Partial) -> Partial {
        self.sum.add(other.sum.sum());
        self.max = self.max.max(other.max);
        self.boundary_max = self.boundary_max.max(other.boundary_max);
        self
    }
}

/// The inputs in `Q`-form: `f_i` themselves, or `g_{Q_i} h_i` for a `Q̄`
/// problem.
pub fn q_form_inputs(p: &BLProblem, fs: &[GriddedFunction]) -> Result<Vec<GriddedFunction>> {
    check_shapes(p, fs)?;
    match p.form() {
        Form::Q => Ok(fs.to_vec()),
        Form::QBar => fs.iter().zip(p.qi()).map(|(h, q)| h.times_gaussian(q)).collect(),
    }
}

fn check_shapes(p: &BLProblem, fs: &[GriddedFunction]) -> Result<()> {
    let n = p.blocks().total_dim();
    if n > MAX_JOINT_DIM {
        return Err(Error::DimensionTooLarge { dim: n, max: MAX_JOINT_DIM });
    }
    if fs.len() != p.blocks().count() {
        return Err(Error::ShapeMismatch(format!("{} functions for {} blocks", fs.len(), p.blocks().count())));
    }
    for (i, (f, &ni)) in fs.iter().zip(p.blocks().sizes()).enumerate() {
        if f.dim() != ni {
            return Err(Error::ShapeMismatch(format!("f_{i} is {}-d but n_{i} = {ni}", f.dim())));
        }
    }
    Ok(())
}

/// `BL(f)` by tensor trapezoid quadrature on the joint grid, times the
/// problem's normalization. `+∞` when the numerator integrand is not
/// contained by the joint grid.
pub fn bl_value(p: &BLProblem, fs: &[GriddedFunction]) -> Result<f64> {
    let fs = q_form_inputs(p, fs)?;
    bl_value_q_form(p, &fs)
}

/// Depth-first traversal of the joint grid carrying `t = Q x_prefix` and
/// the partial quadratic form.
struct Walker<'a> {
    blocks: &'a [BlockSamples],
    q: &'a nalgebra::DMatrix<f64>,
}

impl Walker<'_> {
    #[allow(clippy::too_many_arguments)]
    fn walk(
        &self,
        level: usize,
        indices: std::ops::Range<usize>,
        t: &[f64],
        quad: f64,
        value: f64,
        weight: f64,
        boundary: bool,
        acc: &mut Partial,
    ) {
        let b = &self.blocks[level];
        let last = level + 1 == self.blocks.len();
        let mut t2 = t.to_vec();
        for k in indices {
            let x = &b.points[k];
            let mut qk = quad;
            for (a, &xa) in x.iter().enumerate() {
                let ra = b.range.start + a;
                qk += 2.0 * t[ra] * xa;
                for (bb, &xb) in x.iter().enumerate() {
                    qk += self.q[(ra, b.range.start + bb)] * xa * xb;
                }
            }
            let v = value * b.values[k];
            let w = weight * b.weights[k];
            let on_edge = boundary || b.boundary[k];
            if last {
                let integrand = (-0.5 * qk).exp() * v;
                acc.sum.add(w * integrand);
                acc.max = acc.max.max(integrand);
                if on_edge {
                    acc.boundary_max = acc.boundary_max.max(integrand);
                }
            } else {
                t2.copy_from_slice(t);
                for (a, &xa) in x.iter().enumerate() {
                    let ra = b.range.start + a;
                    for (r, tr) in t2.iter_mut().enumerate() {
                        *tr += self.q[(r, ra)] * xa;
                    }
                }
                let next = self.blocks[level + 1].points.len();
                self.walk(level + 1, 0..next, &t2, qk, v, w, on_edge, acc);
            }
        }
    }
}

fn bl_value_q_form(p: &BLProblem, fs: &[GriddedFunction]) -> Result<f64> {
    let c = p.blocks().exponents();
    let mut log_den = 0.0;
    for (i, f) in fs.iter().enumerate() {
        let m = f.mass();
        if !(m > 0.0) {
            return Err(Error::MassZero { index: i });
        }
        log_den += c[i] * m.ln();
    }

    let blocks: Vec<BlockSamples> = fs
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let mut b = BlockSamples {
                points: Vec::new(),
                values: Vec::new(),
                weights: Vec::new(),
                boundary: Vec::new(),
                range: p.blocks().range(i),
            };
            for (idx, &v) in f.values().iter().enumerate() {
                if v > 0.0 {
                    b.points.push(f.point(idx));
                    b.values.push(v.powf(c[i]));
                    b.weights.push(f.weight(idx));
                    b.boundary.push(f.on_boundary(idx));
                }
            }
            b
        })
        .collect();
    let nodes: u128 = blocks.iter().map(|b| b.points.len() as u128).product();
    if nodes > MAX_JOINT_POINTS {
        return Err(Error::InvalidArgument(format!(
            "joint grid has {nodes} active nodes, more than {MAX_JOINT_POINTS}; use coarser grids"
        )));
    }
    let q = p.q().matrix().clone();
    let n = p.blocks().total_dim();

    let first = blocks[0].points.len();
    let partials: Vec<Partial> = (0..first)
        .collect::<Vec<_>>()
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = Partial::default();
            let walker = Walker { blocks: &blocks, q: &q };
            walker.walk(0, chunk[0]..chunk[chunk.len() - 1] + 1, &vec![0.0; n], 0.0, 1.0, 1.0, false, &mut acc);
            acc
        })
        .collect();

    let total = partials.into_iter().fold(Partial::default(), Partial::merge);
    let num = total.sum.sum();
    if !num.is_finite() || total.boundary_max > DECAY_RTOL * total.max {
        return Ok(f64::INFINITY);
    }
    Ok((num.ln() - log_den + p.log_normalization()).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Holds,
    Violated,
    /// Some input fails the theorem's class hypothesis; the comparison is
    /// still reported.
    OutsideHypotheses,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputWitness {
    pub index: usize,
    pub direction: Direction,
    pub witness: ClassWitness,
}

/// Outcome of an inequality check `lhs ≥ rhs` (or `≤` for the forward
/// direction); `margin` is signed so that positive means the inequality
/// holds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub status: CheckStatus,
    pub tolerance: f64,
    pub witnesses: Vec<InputWitness>,
}

impl Report {
    fn new(lhs: f64, rhs: f64, margin: f64, tolerance: f64, witnesses: Vec<InputWitness>) -> Self {
        let status = if !witnesses.is_empty() {
            CheckStatus::OutsideHypotheses
        } else if margin >= -tolerance {
            CheckStatus::Holds
        } else {
            CheckStatus::Violated
        };
        Self { lhs, rhs, margin, status, tolerance, witnesses }
    }

    /// `Err(ClassViolation)` for reports outside the hypotheses.
    pub fn into_result(self) -> Result<Report> {
        if self.status == CheckStatus::OutsideHypotheses {
            return Err(Error::ClassViolation(format!("{} input(s) fail the class hypothesis", self.witnesses.len())));
        }
        Ok(self)
    }

    pub fn holds(&self) -> bool {
        self.margin >= -self.tolerance
    }
}

fn tolerance_for(fs: &[GriddedFunction], scale: f64) -> f64 {
    let rtol = if fs.iter().all(|f| f.is_positive()) { SMOOTH_RTOL } else { INDICATOR_RTOL };
    rtol * scale.abs().max(f64::MIN_POSITIVE)
}

fn class_witnesses(fs: &[GriddedFunction], mats: &[SymMatrix], direction: Direction) -> Result<Vec<InputWitness>> {
    let mut out = Vec::new();
    for (i, (f, a)) in fs.iter().zip(mats).enumerate() {
        let r = f.class_check(a, direction)?;
        if let Some(witness) = r.witness {
            out.push(InputWitness { index: i, direction, witness });
        }
    }
    Ok(out)
}

/// Checks `BL(f) ≥ inf_value` after testing that each `f_i` is more
/// log-concave than `g_{Q_i}` (each `h_i` log-concave in the `Q̄` form).
pub fn check_inverse_bl(p: &BLProblem, fs: &[GriddedFunction], inf_value: f64) -> Result<Report> {
    let qf = q_form_inputs(p, fs)?;
    let witnesses = class_witnesses(&qf, p.qi(), Direction::LogConcave)?;
    let lhs = bl_value_q_form(p, &qf)?;
    let tol = tolerance_for(&qf, inf_value);
    Ok(Report::new(lhs, inf_value, lhs - inf_value, tol, witnesses))
}

/// Checks `BL(f) ≤ sup_{0 < B_i ≤ Q_i} BL(g_B)` for `f_i` more log-convex
/// than `g_{Q_i}`, with `Q ⪰ 0`. The Gaussian side is attained at
/// `B_i = Q_i` whenever those are in the class.
pub fn check_forward_bl(p: &BLProblem, fs: &[GriddedFunction], opts: &OptimizeOptions) -> Result<Report> {
    if !p.q().is_psd() {
        return Err(Error::InvalidArgument("the forward inequality needs Q ⪰ 0".into()));
    }
    let qf = q_form_inputs(p, fs)?;
    let witnesses = class_witnesses(&qf, p.qi(), Direction::LogConvex)?;
    let lhs = bl_value_q_form(p, &qf)?;
    let q_problem = p.clone().with_form(Form::Q);
    let bounds =
        Bounds { lower: p.qi().iter().map(|q| SymMatrix::zeros(q.dim())).collect(), upper: Some(p.qi().to_vec()) };
    let rhs = supremum_gaussian(&q_problem, Some(&bounds), opts)?.value;
    let tol = tolerance_for(&qf, rhs);
    Ok(Report::new(lhs, rhs, rhs - lhs, tol, witnesses))
}

/// Checks the doubling inequality `BL(f)² ≥ I · BL(Conv f)`.
pub fn step2_inequality_check(p: &BLProblem, fs: &[GriddedFunction], i_ab: f64) -> Result<Report> {
    let qf = q_form_inputs(p, fs)?;
    let bl = bl_value_q_form(p, &qf)?;
    let conv = qf.iter().map(conv_step).collect::<Result<Vec<_>>>()?;
    let bl_conv = bl_value_q_form(p, &conv)?;
    let lhs = bl * bl;
    let rhs = i_ab * bl_conv;
    let tol = tolerance_for(&qf, rhs);
    Ok(Report::new(lhs, rhs, lhs - rhs, tol, Vec::new()))
}
