//! Even functions sampled on symmetric uniform grids in one or two
//! dimensions.
//!
//! The grid has an odd number `n` of points per axis, `x_k = (k − (n−1)/2)·h`
//! with `h = 2L/(n−1)`, so the origin is a grid point and the grid is closed
//! under `x ↦ −x`. Two-dimensional values are stored row-major, the first
//! coordinate indexing rows.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::numeric::NeumaierSum;

/// Default points per axis for one-dimensional grids.
pub const DEFAULT_POINTS_1D: usize = 1025;
/// Default points per axis for two-dimensional grids.
pub const DEFAULT_POINTS_2D: usize = 257;
/// Default halfwidth in units of the largest standard deviation.
pub const DEFAULT_HALFWIDTH_SIGMAS: f64 = 12.0;
/// Boundary values must stay below this fraction of the maximum.
pub const DECAY_RTOL: f64 = 1e-12;
/// Relative mass of the padded convolution allowed outside the output grid.
pub const ALIASING_RTOL: f64 = 1e-9;
/// Midpoint tests allow this slack times `max(1, max |φ|)`.
pub const MIDPOINT_SLACK: f64 = 1e-8;
/// Tolerance of the evenness check on user-supplied samples.
pub const EVENNESS_RTOL: f64 = 1e-12;
/// FFT convolution values below this fraction of the maximum are roundoff
/// and are set to 0.
pub const FFT_NOISE_RTOL: f64 = 1e-13;

/// Directions of the two-dimensional midpoint stencil; every multiple of
/// each direction is tested.
const STENCIL_2D: [(i64, i64); 8] = [(1, 0), (0, 1), (1, 1), (1, -1), (1, 2), (2, 1), (1, -2), (2, -1)];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GriddedFunction {
    dim: usize,
    halfwidth: f64,
    n: usize,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawGridded {
    dim: usize,
    halfwidth: f64,
    n: usize,
    values: Vec<f64>,
}

impl<'de> Deserialize<'de> for GriddedFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawGridded::deserialize(d)?;
        GriddedFunction::new(raw.dim, raw.halfwidth, raw.n, raw.values).map_err(serde::de::Error::custom)
    }
}

fn check_grid(dim: usize, halfwidth: f64, n: usize) -> Result<()> {
    if dim != 1 && dim != 2 {
        return Err(Error::InvalidArgument(format!("grid dimension must be 1 or 2, got {dim}")));
    }
    if !(halfwidth > 0.0 && halfwidth.is_finite()) {
        return Err(Error::InvalidArgument(format!("halfwidth must be positive, got {halfwidth}")));
    }
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("points per axis must be odd and ≥ 3, got {n}")));
    }
    Ok(())
}

/// Fraction of the cell `[x − h/2, x + h/2]` inside `[−r, r]`.
fn coverage(x: f64, h: f64, r: f64) -> f64 {
    let lo = (x - 0.5 * h).max(-r);
    let hi = (x + 0.5 * h).min(r);
    ((hi - lo) / h).clamp(0.0, 1.0)
}

/// Which side of `g_A` a class test compares against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `log f + ½⟨Ax,x⟩` concave.
    LogConcave,
    /// `log f + ½⟨Ax,x⟩` convex.
    LogConvex,
}

/// A failing midpoint triple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassWitness {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub mid: Vec<f64>,
    /// Amount by which the midpoint inequality fails; `+∞` for a zero
    /// midpoint between positive endpoints.
    pub defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassCheck {
    pub holds: bool,
    pub witness: Option<ClassWitness>,
}

/// Midpoint test over index triples `(i, m, j)` on the array `phi`.
struct MidpointScan {
    direction: Direction,
    slack: f64,
    worst: Option<(f64, usize, usize, usize)>,
}

impl MidpointScan {
    fn new(phi: &[f64], direction: Direction) -> Self {
        let scale = phi.iter().filter(|v| v.is_finite()).fold(1.0_f64, |a, v| a.max(v.abs()));
        Self { direction, slack: MIDPOINT_SLACK * scale, worst: None }
    }

    #[inline]
    fn test(&mut self, phi: &[f64], i: usize, m: usize, j: usize) {
        let (a, b, c) = (phi[i], phi[m], phi[j]);
        let defect = match self.direction {
            Direction::LogConcave => {
                if !(a.is_finite() && c.is_finite()) {
                    return;
                }
                if b == f64::NEG_INFINITY {
                    f64::INFINITY
                } else {
                    0.5 * (a + c) - b
                }
            }
            Direction::LogConvex => b - 0.5 * (a + c),
        };
        if defect > self.slack && self.worst.is_none_or(|w| defect > w.0) {
            self.worst = Some((defect, i, m, j));
        }
    }
}

impl GriddedFunction {
    /// Samples on the grid `(dim, halfwidth, n)`. Values must be finite,
    /// nonnegative, even to relative `1e-12` (then symmetrized exactly) and
    /// have positive mass.
    pub fn new(dim: usize, halfwidth: f64, n: usize, mut values: Vec<f64>) -> Result<Self> {
        check_grid(dim, halfwidth, n)?;
        let len = n.pow(dim as u32);
        if values.len() != len {
            return Err(Error::ShapeMismatch(format!("expected {len} values, got {}", values.len())));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument("values must be finite and nonnegative".into()));
        }
        let max = values.iter().fold(0.0_f64, |a, &v| a.max(v));
        for k in 0..len / 2 {
            let (a, b) = (values[k], values[len - 1 - k]);
            if (a - b).abs() > EVENNESS_RTOL * max {
                return Err(Error::InvalidArgument(format!("values are not even: {a} vs {b}")));
            }
            let avg = 0.5 * (a + b);
            values[k] = avg;
            values[len - 1 - k] = avg;
        }
        let f = Self { dim, halfwidth, n, values };
        if !(f.mass() > 0.0) {
            return Err(Error::MassZero { index: 0 });
        }
        Ok(f)
    }

    /// Samples `f` at the grid points and symmetrizes.
    pub fn from_fn(dim: usize, halfwidth: f64, n: usize, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        check_grid(dim, halfwidth, n)?;
        let h = 2.0 * halfwidth / (n - 1) as f64;
        let c = ((n - 1) / 2) as f64;
        let x = |k: usize| (k as f64 - c) * h;
        let mut values = Vec::with_capacity(n.pow(dim as u32));
        if dim == 1 {
            values.extend((0..n).map(|i| f(&[x(i)])));
        } else {
            for i in 0..n {
                values.extend((0..n).map(|j| f(&[x(i), x(j)])));
            }
        }
        let len = values.len();
        for k in 0..len / 2 {
            let avg = 0.5 * (values[k] + values[len - 1 - k]);
            values[k] = avg;
            values[len - 1 - k] = avg;
        }
        Self::new(dim, halfwidth, n, values)
    }

    /// Samples of `g_A(x) = exp(−½⟨Ax,x⟩)`.
    pub fn gaussian(a: &SymMatrix, halfwidth: f64, n: usize) -> Result<Self> {
        let dim = a.dim();
        check_grid(dim, halfwidth, n)?;
        if !a.is_pd() {
            return Err(Error::NotPositiveDefinite);
        }
        for j in 0..dim {
            let edge = (-0.5 * a.get(j, j) * halfwidth * halfwidth).exp();
            if edge > DECAY_RTOL {
                return Err(Error::GridTooSmall { boundary: edge, threshold: DECAY_RTOL });
            }
        }
        Self::from_fn(dim, halfwidth, n, |x| (-0.5 * quad(a, x)).exp())
    }

    /// `g_A` on the default grid: halfwidth 12 standard deviations.
    pub fn gaussian_default(a: &SymMatrix) -> Result<Self> {
        let n = if a.dim() == 1 { DEFAULT_POINTS_1D } else { DEFAULT_POINTS_2D };
        let sigma = a.inverse_pd()?.eigenvalues().last().copied().unwrap_or(1.0).sqrt();
        Self::gaussian(a, DEFAULT_HALFWIDTH_SIGMAS * sigma, n)
    }

    /// Indicator of `[−r, r]^dim`, edge cells weighted by their coverage.
    pub fn indicator_box(dim: usize, r: f64, halfwidth: f64, n: usize) -> Result<Self> {
        let h = 2.0 * halfwidth / (n - 1).max(1) as f64;
        Self::from_fn(dim, halfwidth, n, |x| x.iter().map(|&t| coverage(t, h, r)).product())
    }

    /// Indicator of the complement of `[−r, r]^dim`, truncated to the grid.
    pub fn box_complement(dim: usize, r: f64, halfwidth: f64, n: usize) -> Result<Self> {
        let h = 2.0 * halfwidth / (n - 1).max(1) as f64;
        Self::from_fn(dim, halfwidth, n, |x| 1.0 - x.iter().map(|&t| coverage(t, h, r)).product::<f64>())
    }

    /// Indicator of `{x : |w·x| ≤ 1 for all w}` in one dimension.
    pub fn polytope_1d(normals: &[f64], halfwidth: f64, n: usize) -> Result<Self> {
        let w = normals.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if w == 0.0 {
            return Err(Error::InvalidArgument("polytope needs a nonzero normal".into()));
        }
        Self::indicator_box(1, 1.0 / w, halfwidth, n)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.halfwidth / (self.n - 1) as f64
    }

    fn center(&self) -> usize {
        (self.n - 1) / 2
    }

    pub fn coord(&self, k: usize) -> f64 {
        (k as f64 - self.center() as f64) * self.spacing()
    }

    /// Grid point of a flat index.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        if self.dim == 1 {
            vec![self.coord(idx)]
        } else {
            vec![self.coord(idx / self.n), self.coord(idx % self.n)]
        }
    }

    pub fn same_grid(&self, other: &GriddedFunction) -> bool {
        self.dim == other.dim && self.n == other.n && self.halfwidth == other.halfwidth
    }

    fn trapezoid_weight(&self, idx: usize) -> f64 {
        let w1 = |k: usize| if k == 0 || k == self.n - 1 { 0.5 } else { 1.0 };
        let h = self.spacing();
        if self.dim == 1 {
            w1(idx) * h
        } else {
            w1(idx / self.n) * w1(idx % self.n) * h * h
        }
    }

    /// Trapezoid-rule integral of `g(x)·f(x)`.
    pub fn integrate_weighted(&self, g: impl Fn(&[f64]) -> f64) -> f64 {
        let mut acc = NeumaierSum::default();
        for (idx, &v) in self.values.iter().enumerate() {
            if v != 0.0 {
                acc.add(self.trapezoid_weight(idx) * v * g(&self.point(idx)));
            }
        }
        acc.sum()
    }

    pub fn mass(&self) -> f64 {
        let mut acc = NeumaierSum::default();
        for (idx, &v) in self.values.iter().enumerate() {
            acc.add(self.trapezoid_weight(idx) * v);
        }
        acc.sum()
    }

    /// Second-moment matrix of the normalized function (its mean is zero).
    pub fn covariance(&self) -> SymMatrix {
        let m = self.mass();
        let d = self.dim;
        let mut rows = vec![vec![0.0; d]; d];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, r) in row.iter_mut().enumerate() {
                *r = self.integrate_weighted(|x| x[i] * x[j]) / m;
            }
        }
        SymMatrix::from_rows(&rows).expect("square by construction")
    }

    pub fn scaled(&self, c: f64) -> GriddedFunction {
        GriddedFunction { values: self.values.iter().map(|v| v * c).collect(), ..self.clone() }
    }

    /// Rescaled to unit trapezoid mass.
    pub fn normalized(&self) -> GriddedFunction {
        self.scaled(1.0 / self.mass())
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(0.0, |a: f64, &v| a.max(v))
    }

    fn is_boundary(&self, idx: usize) -> bool {
        let edge = |k: usize| k == 0 || k == self.n - 1;
        if self.dim == 1 {
            edge(idx)
        } else {
            edge(idx / self.n) || edge(idx % self.n)
        }
    }

    /// Largest boundary value relative to the maximum.
    pub fn decay_ratio(&self) -> f64 {
        let b =
            self.values.iter().enumerate().filter(|(i, _)| self.is_boundary(*i)).fold(0.0_f64, |a, (_, &v)| a.max(v));
        b / self.max_value()
    }

    pub fn check_decay(&self) -> Result<()> {
        let r = self.decay_ratio();
        if r >= DECAY_RTOL {
            return Err(Error::GridTooSmall { boundary: r, threshold: DECAY_RTOL });
        }
        Ok(())
    }

    /// `∫ |f − g|` by the trapezoid rule on a shared grid.
    pub fn l1_distance(&self, other: &GriddedFunction) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::ShapeMismatch("functions live on different grids".into()));
        }
        let mut acc = NeumaierSum::default();
        for (idx, (a, b)) in self.values.iter().zip(&other.values).enumerate() {
            acc.add(self.trapezoid_weight(idx) * (a - b).abs());
        }
        Ok(acc.sum())
    }

    /// The centered normal density with covariance `cov` on this grid.
    pub fn normal_density_like(&self, cov: &SymMatrix) -> Result<GriddedFunction> {
        if cov.dim() != self.dim {
            return Err(Error::ShapeMismatch("covariance dimension differs from the grid".into()));
        }
        let prec = cov.inverse_pd()?;
        let norm = (2.0 * PI).powf(-0.5 * self.dim as f64) * (-0.5 * cov.log_det_pd()?).exp();
        let values = (0..self.values.len()).map(|idx| norm * (-0.5 * quad(&prec, &self.point(idx))).exp()).collect();
        Ok(GriddedFunction { values, ..self.clone() })
    }

    /// Pointwise product with `g_A`.
    pub fn times_gaussian(&self, a: &SymMatrix) -> Result<GriddedFunction> {
        if a.dim() != self.dim {
            return Err(Error::ShapeMismatch(format!("matrix dimension {} on a {}-d grid", a.dim(), self.dim)));
        }
        let values =
            self.values.iter().enumerate().map(|(idx, &v)| v * (-0.5 * quad(a, &self.point(idx))).exp()).collect();
        GriddedFunction::new(self.dim, self.halfwidth, self.n, values)
    }

    /// Whether every sample is strictly positive; functions with zeros are
    /// treated as indicator-like by the inequality checks.
    pub fn is_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }

    /// Trapezoid weight of a flat index.
    pub fn weight(&self, idx: usize) -> f64 {
        self.trapezoid_weight(idx)
    }

    pub fn on_boundary(&self, idx: usize) -> bool {
        self.is_boundary(idx)
    }

    /// `log f + ½⟨Ax,x⟩`. For the concave test subnormal samples count as 0:
    /// their logarithm carries no relative precision.
    fn phi(&self, a: &SymMatrix, direction: Direction) -> Vec<f64> {
        self.values
            .iter()
            .enumerate()
            .map(|(idx, &v)| {
                if direction == Direction::LogConcave && v < f64::MIN_POSITIVE {
                    f64::NEG_INFINITY
                } else {
                    v.ln() + 0.5 * quad(a, &self.point(idx))
                }
            })
            .collect()
    }

    /// Midpoint test of `log f + ½⟨Ax,x⟩` in the given direction.
    pub fn class_check(&self, a: &SymMatrix, direction: Direction) -> Result<ClassCheck> {
        if a.dim() != self.dim {
            return Err(Error::ShapeMismatch(format!("matrix dimension {} on a {}-d grid", a.dim(), self.dim)));
        }
        if direction == Direction::LogConvex {
            if let Some(idx) = self.values.iter().position(|&v| v == 0.0) {
                let p = self.point(idx);
                return Ok(ClassCheck {
                    holds: false,
                    witness: Some(ClassWitness { x: p.clone(), y: p.clone(), mid: p, defect: f64::INFINITY }),
                });
            }
        }
        let phi = self.phi(a, direction);
        let mut scan = MidpointScan::new(&phi, direction);
        let n = self.n;
        if self.dim == 1 {
            for m in 0..n {
                for d in 1..=m.min(n - 1 - m) {
                    scan.test(&phi, m - d, m, m + d);
                }
            }
        } else {
            let ni = n as i64;
            for r in 0..ni {
                for c in 0..ni {
                    let m = (r * ni + c) as usize;
                    for &(dr, dc) in &STENCIL_2D {
                        let mut t = 1;
                        loop {
                            let (r0, c0, r1, c1) = (r - t * dr, c - t * dc, r + t * dr, c + t * dc);
                            if [r0, c0, r1, c1].iter().any(|&k| k < 0 || k >= ni) {
                                break;
                            }
                            scan.test(&phi, (r0 * ni + c0) as usize, m, (r1 * ni + c1) as usize);
                            t += 1;
                        }
                    }
                }
            }
        }
        Ok(self.finish(scan))
    }

    fn finish(&self, scan: MidpointScan) -> ClassCheck {
        match scan.worst {
            None => ClassCheck { holds: true, witness: None },
            Some((defect, i, m, j)) => ClassCheck {
                holds: false,
                witness: Some(ClassWitness { x: self.point(i), y: self.point(j), mid: self.point(m), defect }),
            },
        }
    }

    /// Whether `f/g_A` is log-concave at grid resolution.
    pub fn is_more_logconcave_than(&self, a: &SymMatrix) -> Result<ClassCheck> {
        self.class_check(a, Direction::LogConcave)
    }

    /// Whether `f/g_A` is log-convex at grid resolution; requires `f > 0`.
    pub fn is_more_logconvex_than(&self, a: &SymMatrix) -> Result<ClassCheck> {
        self.class_check(a, Direction::LogConvex)
    }
}

fn quad(a: &SymMatrix, x: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            s += a.get(i, j) * x[i] * x[j];
        }
    }
    s
}

/// Points of the Lagrange stencil used for resampling.
const LAGRANGE_POINTS: usize = 6;

/// Cardinal weights at `t ∈ [0, 1]` for nodes `1 − P/2, …, P/2`.
fn lagrange(t: f64) -> [f64; LAGRANGE_POINTS] {
    let first = 1 - (LAGRANGE_POINTS / 2) as i64;
    let mut w = [0.0; LAGRANGE_POINTS];
    for (j, wj) in w.iter_mut().enumerate() {
        let oj = (first + j as i64) as f64;
        let mut v = 1.0;
        for i in 0..LAGRANGE_POINTS {
            if i != j {
                let oi = (first + i as i64) as f64;
                v *= (t - oi) / (oj - oi);
            }
        }
        *wj = v;
    }
    w
}

/// Sparse rows of the `√2`-rescaling operator in grid units:
/// `R_{km} = ∫ ℓ_m(√2 ξ) L_k(ξ) dξ`, where `ℓ_m` are the Lagrange
/// cardinal functions of the convolution grid and `L_k` those of the output
/// grid. Integrating against `L_k` instead of sampling reproduces the
/// moments of orders below `LAGRANGE_POINTS` exactly.
struct Rescale {
    rows: Vec<(i64, [f64; RESCALE_WIDTH])>,
}

const RESCALE_WIDTH: usize = 2 * LAGRANGE_POINTS + 6;

// Exact for the degree-10 products of two quintic cardinal functions.
const GL6: [(f64, f64); 6] = [
    (-0.932_469_514_203_152_0, 0.171_324_492_379_170_3),
    (-0.661_209_386_466_264_5, 0.360_761_573_048_138_6),
    (-0.238_619_186_083_196_9, 0.467_913_934_572_691_0),
    (0.238_619_186_083_196_9, 0.467_913_934_572_691_0),
    (0.661_209_386_466_264_5, 0.360_761_573_048_138_6),
    (0.932_469_514_203_152_0, 0.171_324_492_379_170_3),
];

impl Rescale {
    fn new(n: usize) -> Self {
        const HALF: usize = LAGRANGE_POINTS / 2;
        let c = ((n - 1) / 2) as f64;
        let off = (n - 1) as f64;
        let m_len = (2 * n - 1) as i64;
        let pos = |s: f64| SQRT_2 * (s - c) + off;
        let mut rows: Vec<(i64, [f64; RESCALE_WIDTH])> = (0..n)
            .map(|k| ((pos(k as f64 - HALF as f64)).floor() as i64 - HALF as i64, [0.0; RESCALE_WIDTH]))
            .collect();
        for i in 0..n - 1 {
            let (s0, s1) = (i as f64, (i + 1) as f64);
            let mut breaks = vec![s0];
            let mut j = pos(s0).floor() + 1.0;
            while j < pos(s1) {
                breaks.push(c + (j - off) / SQRT_2);
                j += 1.0;
            }
            breaks.push(s1);
            for w in breaks.windows(2) {
                let (a, b) = (w[0], w[1]);
                let half = 0.5 * (b - a);
                if half <= 0.0 {
                    continue;
                }
                let jm = pos(0.5 * (a + b)).floor();
                for &(g, wg) in &GL6 {
                    let s = 0.5 * (a + b) + half * g;
                    let lw = lagrange(s - s0);
                    let mw = lagrange(pos(s) - jm);
                    for (da, la) in lw.iter().enumerate() {
                        let k = i as i64 + 1 - HALF as i64 + da as i64;
                        if k < 0 || k >= n as i64 {
                            continue;
                        }
                        let (start, row) = &mut rows[k as usize];
                        for (db, mb) in mw.iter().enumerate() {
                            let m = jm as i64 + 1 - HALF as i64 + db as i64;
                            if m < 0 || m >= m_len {
                                continue;
                            }
                            row[(m - *start) as usize] += wg * half * la * mb;
                        }
                    }
                }
            }
        }
        Self { rows }
    }

    fn apply(&self, src: &[f64], stride: usize, base: usize) -> Vec<f64> {
        let len = src.len() as i64 / stride as i64;
        self.rows
            .iter()
            .map(|(start, w)| {
                let mut s = 0.0;
                for (t, wt) in w.iter().enumerate() {
                    let m = start + t as i64;
                    if *wt != 0.0 && m >= 0 && m < len {
                        s += wt * src[base + m as usize * stride];
                    }
                }
                s
            })
            .collect()
    }
}

fn fft_self_convolution(values: &[f64], n: usize, dim: usize, h: f64) -> Vec<f64> {
    let m = 2 * n - 1;
    let p = m.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(p);
    let inv = planner.plan_fft_inverse(p);
    if dim == 1 {
        let mut buf = vec![Complex::new(0.0, 0.0); p];
        for (b, &v) in buf.iter_mut().zip(values) {
            b.re = v;
        }
        fwd.process(&mut buf);
        for b in buf.iter_mut() {
            *b = *b * *b;
        }
        inv.process(&mut buf);
        let s = h / p as f64;
        buf[..m].iter().map(|c| c.re * s).collect()
    } else {
        let mut buf = vec![Complex::new(0.0, 0.0); p * p];
        for i in 0..n {
            for j in 0..n {
                buf[i * p + j].re = values[i * n + j];
            }
        }
        fft_2d(&mut buf, p, fwd.as_ref());
        for b in buf.iter_mut() {
            *b = *b * *b;
        }
        fft_2d(&mut buf, p, inv.as_ref());
        let s = h * h / (p * p) as f64;
        let mut out = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                out[i * m + j] = buf[i * p + j].re * s;
            }
        }
        out
    }
}

fn fft_2d(buf: &mut [Complex<f64>], p: usize, fft: &dyn rustfft::Fft<f64>) {
    for row in buf.chunks_mut(p) {
        fft.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); p];
    for j in 0..p {
        for i in 0..p {
            col[i] = buf[i * p + j];
        }
        fft.process(&mut col);
        for i in 0..p {
            buf[i * p + j] = col[i];
        }
    }
}

fn symmetrize(values: &mut [f64]) {
    let len = values.len();
    for k in 0..len / 2 {
        let avg = 0.5 * (values[k] + values[len - 1 - k]);
        values[k] = avg;
        values[len - 1 - k] = avg;
    }
}

/// Quadratic features `1, x_i x_j (i ≤ j)` whose moments a tilt restores.
fn moment_features(x: &[f64]) -> Vec<f64> {
    let mut phi = vec![1.0];
    for i in 0..x.len() {
        for j in i..x.len() {
            phi.push(x[i] * x[j]);
        }
    }
    phi
}

/// Clamps negative samples to zero, then multiplies by `exp(λ·φ(x))` with
/// `φ` the quadratic features so that mass and second moments equal those
/// of the unclamped samples. The tilt is the smallest change in relative
/// entropy achieving this and maps Gaussians to Gaussians.
fn clamp_preserving_moments(g: &GriddedFunction) -> Result<Vec<f64>> {
    if g.values.iter().all(|&v| v >= 0.0) {
        return Ok(g.values.clone());
    }
    let feats: Vec<Vec<f64>> = (0..g.values.len()).map(|k| moment_features(&g.point(k))).collect();
    let weights: Vec<f64> = (0..g.values.len()).map(|k| g.trapezoid_weight(k)).collect();
    let p = feats[0].len();
    let moments = |vals: &[f64]| {
        let mut acc = vec![NeumaierSum::default(); p];
        for ((v, w), phi) in vals.iter().zip(&weights).zip(&feats) {
            for (a, f) in acc.iter_mut().zip(phi) {
                a.add(v * w * f);
            }
        }
        DVector::from_iterator(p, acc.iter().map(|a| a.sum()))
    };
    let target = moments(&g.values);
    let base: Vec<f64> = g.values.iter().map(|v| v.max(0.0)).collect();
    let mut lambda = DVector::<f64>::zeros(p);
    let mut out = base.clone();
    for _ in 0..20 {
        out =
            base.iter()
                .zip(&feats)
                .map(|(b, phi)| {
                    if *b == 0.0 {
                        0.0
                    } else {
                        b * phi.iter().zip(lambda.iter()).map(|(f, l)| f * l).sum::<f64>().exp()
                    }
                })
                .collect();
        let resid = moments(&out) - &target;
        let mut jac = DMatrix::<f64>::zeros(p, p);
        for ((v, w), phi) in out.iter().zip(&weights).zip(&feats) {
            for a in 0..p {
                for b in 0..p {
                    jac[(a, b)] += v * w * phi[a] * phi[b];
                }
            }
        }
        let rel =
            resid.iter().zip(target.iter()).fold(0.0_f64, |m, (r, t)| m.max(r.abs() / t.abs().max(f64::MIN_POSITIVE)));
        if rel < 1e-14 {
            break;
        }
        let step = jac.lu().solve(&resid).ok_or(Error::MassZero { index: 0 })?;
        lambda -= step;
    }
    Ok(out)
}

/// `Conv f = 2^{d/2}·(f ∗ f)(√2·)`: FFT self-convolution on the zero-padded
/// grid, then Lagrange resampling at `√2·x` by the moment-exact operator above.
pub fn conv_step(f: &GriddedFunction) -> Result<GriddedFunction> {
    f.check_decay()?;
    let (n, dim, h) = (f.n, f.dim, f.spacing());
    let mut c = fft_self_convolution(&f.values, n, dim, h);
    let floor = FFT_NOISE_RTOL * c.iter().fold(0.0_f64, |a, &v| a.max(v));
    for v in c.iter_mut() {
        if *v <= floor {
            *v = 0.0;
        }
    }
    symmetrize(&mut c);
    let m = 2 * n - 1;
    let offset = (n - 1) as f64;
    let limit = SQRT_2 * f.halfwidth;
    let pos = |k: usize| (k as f64 - offset) * h;

    let mut total = NeumaierSum::default();
    let mut outside = NeumaierSum::default();
    for (idx, &v) in c.iter().enumerate() {
        total.add(v);
        let out =
            if dim == 1 { pos(idx).abs() > limit } else { pos(idx / m).abs() > limit || pos(idx % m).abs() > limit };
        if out {
            outside.add(v);
        }
    }
    let leak = outside.sum() / total.sum();
    if leak > ALIASING_RTOL {
        return Err(Error::AliasingDetected { leak });
    }

    let r = Rescale::new(n);
    let scale = 2f64.powf(0.5 * dim as f64);
    let mut values = if dim == 1 {
        r.apply(&c, 1, 0)
    } else {
        // Rows first, then columns: V = R C Rᵀ.
        let mut half = vec![0.0; n * m];
        for col in 0..m {
            for (row, v) in r.apply(&c, m, col).into_iter().enumerate() {
                half[row * m + col] = v;
            }
        }
        let mut out = vec![0.0; n * n];
        for row in 0..n {
            out[row * n..(row + 1) * n].copy_from_slice(&r.apply(&half[row * m..(row + 1) * m], 1, 0));
        }
        out
    };
    for v in values.iter_mut() {
        *v *= scale;
    }
    symmetrize(&mut values);
    let unclamped = GriddedFunction { values, ..f.clone() };
    let values = clamp_preserving_moments(&unclamped)?;
    let out = GriddedFunction { values, ..f.clone() };
    if !(out.mass() > 0.0) {
        return Err(Error::MassZero { index: 0 });
    }
    Ok(out)
}

/// Direct-sum convolution `(f₁ ∗ f₂)(x_k) = h Σ_j f₁(x_j) f₂(x_k − x_j)` on
/// the shared one-dimensional grid, truncated to the grid.
pub fn convolve_direct(f1: &GriddedFunction, f2: &GriddedFunction) -> Result<GriddedFunction> {
    if !f1.same_grid(f2) || f1.dim != 1 {
        return Err(Error::ShapeMismatch("direct convolution needs two functions on one 1-d grid".into()));
    }
    let (n, c, h) = (f1.n as i64, f1.center() as i64, f1.spacing());
    let values: Vec<f64> = (0..n)
        .map(|k| {
            let mut acc = NeumaierSum::default();
            for j in 0..n {
                let i2 = k - j + c;
                if (0..n).contains(&i2) {
                    acc.add(f1.values[j as usize] * f2.values[i2 as usize]);
                }
            }
            h * acc.sum()
        })
        .collect();
    GriddedFunction::new(1, f1.halfwidth, f1.n, values)
}

/// Iterates of the central-limit flow, one entry per iteration (including
/// the start).
#[derive(Clone, Debug, Serialize)]
pub struct FlowState {
    pub current: Vec<GriddedFunction>,
    pub iteration: usize,
    pub bl_values: Vec<f64>,
    pub covariances: Vec<Vec<SymMatrix>>,
    pub l1_to_gaussian: Vec<Vec<f64>>,
}

impl FlowState {
    /// Largest entrywise covariance change relative to the start, scaled by
    /// the starting spectral radius.
    pub fn covariance_drift(&self) -> f64 {
        let first = &self.covariances[0];
        self.covariances
            .iter()
            .flat_map(|row| row.iter().zip(first).map(|(c, c0)| c.sub(c0).max_abs() / c0.spectral_radius()))
            .fold(0.0, f64::max)
    }
}

fn flow_record(fs: &[GriddedFunction]) -> Result<(Vec<SymMatrix>, Vec<f64>)> {
    let mut covs = Vec::with_capacity(fs.len());
    let mut l1 = Vec::with_capacity(fs.len());
    for f in fs {
        let cov = f.covariance();
        l1.push(f.l1_distance(&f.normal_density_like(&cov)?)?);
        covs.push(cov);
    }
    Ok((covs, l1))
}

/// Runs `iters` steps of `f ↦ Conv f` renormalized to unit mass, calling
/// `observer` on every iterate to fill `bl_values`.
pub fn clt_flow_with(
    fs: &[GriddedFunction],
    iters: usize,
    mut observer: impl FnMut(&[GriddedFunction]) -> Result<f64>,
) -> Result<FlowState> {
    let mut current = Vec::with_capacity(fs.len());
    for (i, f) in fs.iter().enumerate() {
        if !(f.mass() > 0.0) {
            return Err(Error::MassZero { index: i });
        }
        current.push(f.normalized());
    }
    let (c0, l0) = flow_record(&current)?;
    let mut state = FlowState {
        bl_values: vec![observer(&current)?],
        current,
        iteration: 0,
        covariances: vec![c0],
        l1_to_gaussian: vec![l0],
    };
    for _ in 0..iters {
        let next = state.current.iter().map(|f| conv_step(f).map(|g| g.normalized())).collect::<Result<Vec<_>>>()?;
        let (c, l) = flow_record(&next)?;
        state.bl_values.push(observer(&next)?);
        state.covariances.push(c);
        state.l1_to_gaussian.push(l);
        state.current = next;
        state.iteration += 1;
    }
    Ok(state)
}

pub fn clt_flow(fs: &[GriddedFunction], iters: usize) -> Result<FlowState> {
    clt_flow_with(fs, iters, |_| Ok(f64::NAN))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitCheck {
    /// The requested `x` snapped to the lattice where `(x ± y)/√2` are grid
    /// points.
    pub x: f64,
    pub check: ClassCheck,
}

/// Checks that `y ↦ f₁((x+y)/√2)·f₂((x−y)/√2)` is more log-concave (or
/// log-convex) than `g_{(a₁+a₂)/2}`, after verifying the hypotheses on `f₁`
/// and `f₂`.
pub fn product_split_check(
    f1: &GriddedFunction,
    f2: &GriddedFunction,
    a1: f64,
    a2: f64,
    x: f64,
    direction: Direction,
) -> Result<SplitCheck> {
    if !f1.same_grid(f2) || f1.dim != 1 {
        return Err(Error::ShapeMismatch("product split needs two functions on one 1-d grid".into()));
    }
    for (i, (f, a)) in [(f1, a1), (f2, a2)].into_iter().enumerate() {
        if !f.class_check(&SymMatrix::scalar(a), direction)?.holds {
            return Err(Error::ClassViolation(format!("f{} fails its hypothesis", i + 1)));
        }
    }
    let h = f1.spacing();
    let c = f1.center() as i64;
    let p = ((x / (SQRT_2 * h)).round() as i64).clamp(-c, c);
    let span = c - p.abs();
    let len = (2 * span + 1) as usize;
    let mid_a = 0.5 * (a1 + a2);
    let ys: Vec<f64> = (-span..=span).map(|q| SQRT_2 * h * q as f64).collect();
    let phi: Vec<f64> = (-span..=span)
        .zip(&ys)
        .map(|(q, y)| {
            let v = f1.values[(c + p + q) as usize] * f2.values[(c + p - q) as usize];
            v.ln() + 0.5 * mid_a * y * y
        })
        .collect();
    let x_used = SQRT_2 * h * p as f64;
    let witness = |i: usize, m: usize, j: usize, defect: f64| ClassWitness {
        x: vec![ys[i]],
        y: vec![ys[j]],
        mid: vec![ys[m]],
        defect,
    };
    if direction == Direction::LogConvex {
        if let Some(i) = phi.iter().position(|v| !v.is_finite()) {
            let check = ClassCheck { holds: false, witness: Some(witness(i, i, i, f64::INFINITY)) };
            return Ok(SplitCheck { x: x_used, check });
        }
    }
    let mut scan = MidpointScan::new(&phi, direction);
    for m in 0..len {
        for d in 1..=m.min(len - 1 - m) {
            scan.test(&phi, m - d, m, m + d);
        }
    }
    let check = match scan.worst {
        None => ClassCheck { holds: true, witness: None },
        Some((defect, i, m, j)) => ClassCheck { holds: false, witness: Some(witness(i, m, j, defect)) },
    };
    Ok(SplitCheck { x: x_used, check })
}

/// `C` with `C⁻¹ = a₁⁻¹ + a₂⁻¹` (zero if either is zero).
pub fn harmonic_combination(a1: f64, a2: f64) -> f64 {
    if a1 == 0.0 || a2 == 0.0 {
        0.0
    } else {
        a1 * a2 / (a1 + a2)
    }
}

/// Checks that `f₁ ∗ f₂` is more log-concave than `g_C`, `C⁻¹ = a₁⁻¹ + a₂⁻¹`.
pub fn convolution_check(f1: &GriddedFunction, f2: &GriddedFunction, a1: f64, a2: f64) -> Result<ClassCheck> {
    convolve_direct(f1, f2)?.is_more_logconcave_than(&SymMatrix::scalar(harmonic_combination(a1, a2)))
}

/// Named constructors selectable from configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionSpec {
    Gaussian {
        a: SymMatrix,
        #[serde(default)]
        halfwidth: Option<f64>,
        #[serde(default)]
        n: Option<usize>,
    },
    Box {
        dim: usize,
        r: f64,
        #[serde(default)]
        halfwidth: Option<f64>,
        #[serde(default)]
        n: Option<usize>,
    },
    BoxComplement {
        dim: usize,
        r: f64,
        #[serde(default)]
        halfwidth: Option<f64>,
        #[serde(default)]
        n: Option<usize>,
    },
    Polytope1d {
        normals: Vec<f64>,
        #[serde(default)]
        halfwidth: Option<f64>,
        #[serde(default)]
        n: Option<usize>,
    },
    Samples(GriddedFunction),
}

fn default_n(dim: usize) -> usize {
    if dim == 1 {
        DEFAULT_POINTS_1D
    } else {
        DEFAULT_POINTS_2D
    }
}

impl FunctionSpec {
    pub fn build(&self) -> Result<GriddedFunction> {
        match self {
            FunctionSpec::Gaussian { a, halfwidth: None, n: None } => GriddedFunction::gaussian_default(a),
            FunctionSpec::Gaussian { a, halfwidth, n } => {
                let sigma = a.inverse_pd()?.eigenvalues().last().copied().unwrap_or(1.0).sqrt();
                let l = halfwidth.unwrap_or(DEFAULT_HALFWIDTH_SIGMAS * sigma);
                GriddedFunction::gaussian(a, l, n.unwrap_or(default_n(a.dim())))
            }
            // A box of radius r has standard deviation r/√3 per axis.
            FunctionSpec::Box { dim, r, halfwidth, n } => GriddedFunction::indicator_box(
                *dim,
                *r,
                halfwidth.unwrap_or(DEFAULT_HALFWIDTH_SIGMAS * r / 3f64.sqrt()),
                n.unwrap_or(default_n(*dim)),
            ),
            FunctionSpec::BoxComplement { dim, r, halfwidth, n } => {
                GriddedFunction::box_complement(*dim, *r, halfwidth.unwrap_or(2.0 * r), n.unwrap_or(default_n(*dim)))
            }
            FunctionSpec::Polytope1d { normals, halfwidth, n } => {
                let r = 1.0 / normals.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
                GriddedFunction::polytope_1d(
                    normals,
                    halfwidth.unwrap_or(DEFAULT_HALFWIDTH_SIGMAS * r / 3f64.sqrt()),
                    n.unwrap_or(DEFAULT_POINTS_1D),
                )
            }
            FunctionSpec::Samples(f) => Ok(f.clone()),
        }
    }
}
