//! Gaussian probabilities of origin-symmetric convex sets and direct checks
//! of the correlation inequality, its quasi-concave form, the `Σ^(s)`
//! probability curve and the Ornstein–Uhlenbeck correlation curve.
//!
//! Quadrature writes `X = F z` with `z` standard normal and integrates the
//! coordinates of `z` one at a time. Every constraint (a slab `|⟨v,z⟩| ≤ b`
//! or a quadric `zᵀMz ≤ 1`) is enforced at the last coordinate it involves,
//! where it cuts out an interval; the innermost coordinate is then a
//! difference of normal CDFs and the outer ones use adaptive Gauss–Kronrod.

use std::cell::Cell;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bl::bl_value;
use crate::error::{Error, Result};
use crate::gaussian::{infimum_gaussian, BLProblem, Form, OptimizeOptions};
use crate::grid::GriddedFunction;
use crate::linalg::{BlockStructure, CovarianceBlocks, SymMatrix};
use crate::mc;
use crate::numeric::{integrate, normal_interval, normal_pdf, NeumaierSum, Quadrature};

pub const MAX_QUAD_DIM: usize = 4;
/// Beyond this depth quadrature needs at most one constraint per coordinate
/// (boxes, a single ellipsoid).
pub const MAX_CROSSING_DEPTH: usize = 3;
pub const MAX_MC_DIM: usize = 32;
pub const MAX_LEVELS: usize = 64;
pub const DEFAULT_SEED: u64 = 42;
/// Outer coordinates are truncated to `[−9, 9]`; the dropped mass is below 3e-19 per axis.
const TRUNCATE: f64 = 9.0;
const OUTER_TOL: f64 = 2e-11;
const INNER_TOL: f64 = 1e-12;
const OUTER_PANELS: usize = 4000;
const INNER_PANELS: usize = 600;
/// Coefficients below this fraction of a constraint's largest are treated as zero.
const COEF_RTOL: f64 = 1e-13;
/// Statistical slack in multiples of the standard error.
pub const SIGMA_SLACK: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymmetricConvexSet {
    /// `|x_i| ≤ halfwidths[i]`.
    Box {
        halfwidths: Vec<f64>,
    },
    /// `xᵀ shape x ≤ 1`.
    Ellipsoid {
        shape: SymMatrix,
    },
    /// `|⟨a_j, x⟩| ≤ 1` for every normal.
    Polytope {
        normals: Vec<Vec<f64>>,
    },
    Whole {
        dim: usize,
    },
}

impl SymmetricConvexSet {
    pub fn cube(dim: usize, r: f64) -> Self {
        SymmetricConvexSet::Box { halfwidths: vec![r; dim] }
    }

    pub fn dim(&self) -> usize {
        match self {
            SymmetricConvexSet::Box { halfwidths } => halfwidths.len(),
            SymmetricConvexSet::Ellipsoid { shape } => shape.dim(),
            SymmetricConvexSet::Polytope { normals } => normals.first().map_or(0, Vec::len),
            SymmetricConvexSet::Whole { dim } => *dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::InvalidArgument("set has dimension 0".into()));
        }
        match self {
            SymmetricConvexSet::Box { halfwidths } => {
                if halfwidths.iter().any(|h| !(*h > 0.0)) {
                    return Err(Error::InvalidArgument("box halfwidths must be positive".into()));
                }
            }
            SymmetricConvexSet::Ellipsoid { shape } => {
                if !shape.is_pd() {
                    return Err(Error::NotPositiveDefinite);
                }
            }
            SymmetricConvexSet::Polytope { normals } => {
                let d = self.dim();
                for a in normals {
                    if a.len() != d {
                        return Err(Error::ShapeMismatch("polytope normals differ in length".into()));
                    }
                    if a.iter().any(|v| !v.is_finite()) || a.iter().all(|&v| v == 0.0) {
                        return Err(Error::InvalidArgument("polytope normals must be finite and nonzero".into()));
                    }
                }
            }
            SymmetricConvexSet::Whole { .. } => {}
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            SymmetricConvexSet::Box { halfwidths } => x.iter().zip(halfwidths).all(|(v, h)| v.abs() <= *h),
            SymmetricConvexSet::Ellipsoid { shape } => {
                let m = shape.matrix();
                let mut q = 0.0;
                for i in 0..x.len() {
                    for j in 0..x.len() {
                        q += x[i] * m[(i, j)] * x[j];
                    }
                }
                q <= 1.0
            }
            SymmetricConvexSet::Polytope { normals } => {
                normals.iter().all(|a| a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>().abs() <= 1.0)
            }
            SymmetricConvexSet::Whole { .. } => true,
        }
    }

    fn slab_normals(&self) -> Option<Vec<Vec<f64>>> {
        match self {
            SymmetricConvexSet::Box { halfwidths } => Some(
                (0..halfwidths.len())
                    .filter(|&i| halfwidths[i].is_finite())
                    .map(|i| {
                        let mut a = vec![0.0; halfwidths.len()];
                        a[i] = 1.0 / halfwidths[i];
                        a
                    })
                    .collect(),
            ),
            SymmetricConvexSet::Polytope { normals } => Some(normals.clone()),
            _ => None,
        }
    }

    /// Sufficient test for `self ⊆ other`. `None` when it cannot be decided
    /// without solving a linear program.
    pub fn is_subset_of(&self, other: &SymmetricConvexSet) -> Option<bool> {
        use SymmetricConvexSet as S;
        match (self, other) {
            (_, S::Whole { .. }) => Some(true),
            (S::Whole { .. }, _) => Some(false),
            (S::Box { halfwidths: a }, S::Box { halfwidths: b }) => Some(a.iter().zip(b).all(|(x, y)| x <= y)),
            (S::Ellipsoid { shape: a }, S::Ellipsoid { shape: b }) => Some(b.psd_le(a)),
            _ => {
                let mine = self.slab_normals()?;
                let theirs = other.slab_normals()?;
                // Every constraint of `other` must be implied by a parallel, tighter one of `self`.
                let implied = theirs.iter().all(|b| {
                    mine.iter().any(|a| {
                        let k = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / a.iter().map(|x| x * x).sum::<f64>();
                        k.abs() <= 1.0 && a.iter().zip(b).all(|(x, y)| (k * x - y).abs() <= 1e-12 * y.abs().max(1.0))
                    })
                });
                if implied {
                    Some(true)
                } else {
                    None
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    #[default]
    Quadrature,
    Mc {
        samples: u64,
        seed: u64,
    },
}

impl Method {
    pub fn mc(seed: u64) -> Self {
        Method::Mc { samples: mc::DEFAULT_SAMPLES, seed }
    }
}

/// A probability or expectation with its Monte Carlo standard error
/// (`0` for quadrature) and quadrature error bound (`0` for Monte Carlo).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub error: f64,
}

impl Estimate {
    fn exact(value: f64, error: f64) -> Self {
        Estimate { value, stderr: 0.0, error }
    }
}

enum Constraint {
    Slab { v: Vec<f64>, b: f64 },
    Quadric { m: DMatrix<f64> },
}

struct Nested {
    depth: usize,
    by_level: Vec<Vec<Constraint>>,
    inner_error: Vec<Cell<f64>>,
}

fn last_significant(v: impl Iterator<Item = f64> + Clone) -> Option<usize> {
    let scale = v.clone().fold(0.0_f64, |a, x| a.max(x.abs()));
    if scale == 0.0 {
        return None;
    }
    v.enumerate().filter(|(_, x)| x.abs() > COEF_RTOL * scale).map(|(i, _)| i).last()
}

/// `min_w [u;w]ᵀ M [u;w]` as a quadratic form in the first `k` coordinates,
/// where `w` ranges over coordinates `k..end`.
fn schur_prefix(m: &DMatrix<f64>, k: usize, end: usize) -> DMatrix<f64> {
    let a = m.view((0, 0), (k, k));
    let b = m.view((0, k), (k, end - k));
    let c = m.view((k, k), (end - k, end - k)).into_owned();
    let scale = c.diagonal().amax().max(f64::MIN_POSITIVE);
    let cinv = c.pseudo_inverse(1e-13 * scale).unwrap_or_else(|_| DMatrix::zeros(end - k, end - k));
    let s = a - b * cinv * b.transpose();
    (&s + s.transpose()) * 0.5
}

impl Nested {
    /// Constraints for `F z` lying in each placed set.
    fn new(factor: &DMatrix<f64>, placed: &[(&SymmetricConvexSet, usize)]) -> Result<Self> {
        let r = factor.ncols();
        let mut by_level: Vec<Vec<Constraint>> = (0..r).map(|_| Vec::new()).collect();
        for &(set, off) in placed {
            let d = set.dim();
            let rows = factor.rows(off, d);
            match set {
                SymmetricConvexSet::Whole { .. } => {}
                SymmetricConvexSet::Ellipsoid { shape } => {
                    let m = rows.transpose() * shape.matrix() * rows;
                    let diag: Vec<f64> = (0..r).map(|k| m[(k, k)]).collect();
                    if let Some(end) = last_significant(diag.into_iter()) {
                        // Earlier levels get the projection of the ellipsoid onto
                        // their prefix so outer ranges are exact.
                        for k in 0..end {
                            let p = schur_prefix(&m, k + 1, end + 1);
                            if p[(k, k)] > COEF_RTOL * m[(end, end)].max(p[(k, k)]) {
                                by_level[k].push(Constraint::Quadric { m: p });
                            }
                        }
                        by_level[end].push(Constraint::Quadric { m });
                    }
                }
                _ => {
                    for a in set.slab_normals().unwrap_or_default() {
                        let v: Vec<f64> = (0..r).map(|k| (0..d).map(|i| a[i] * rows[(i, k)]).sum()).collect();
                        if let Some(end) = last_significant(v.iter().copied()) {
                            by_level[end].push(Constraint::Slab { v, b: 1.0 });
                        }
                    }
                }
            }
        }
        let depth = by_level.iter().rposition(|c| !c.is_empty()).map_or(0, |k| k + 1);
        by_level.truncate(depth);
        if depth > MAX_CROSSING_DEPTH && by_level.iter().any(|c| c.len() > 1) {
            // Kinks from crossings two levels down are not located and the
            // adaptive error estimate misses them.
            return Err(Error::DimensionTooLarge { dim: depth, max: MAX_CROSSING_DEPTH });
        }
        let inner_error = (0..depth).map(|_| Cell::new(0.0)).collect();
        Ok(Nested { depth, by_level, inner_error })
    }

    fn interval(&self, k: usize, z: &[f64]) -> (f64, f64) {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for c in &self.by_level[k] {
            let (a, b) = match c {
                Constraint::Slab { v, b } => {
                    let s: f64 = (0..k).map(|j| v[j] * z[j]).sum();
                    let (p, q) = ((-b - s) / v[k], (b - s) / v[k]);
                    (p.min(q), p.max(q))
                }
                Constraint::Quadric { m } => {
                    let qa = m[(k, k)];
                    let mut qb = 0.0;
                    let mut qc = -1.0;
                    for i in 0..k {
                        qb += 2.0 * m[(k, i)] * z[i];
                        for j in 0..k {
                            qc += z[i] * m[(i, j)] * z[j];
                        }
                    }
                    let disc = qb * qb - 4.0 * qa * qc;
                    if disc < 0.0 {
                        return (0.0, 0.0);
                    }
                    let q = -0.5 * (qb + qb.signum() * disc.sqrt());
                    if q == 0.0 {
                        // qb = 0 and qc = 0: a single point.
                        return (0.0, 0.0);
                    }
                    let (p, r) = (q / qa, qc / q);
                    (p.min(r), p.max(r))
                }
            };
            lo = lo.max(a);
            hi = hi.min(b);
        }
        (lo, hi)
    }

    fn level(&self, k: usize, z: &mut [f64]) -> f64 {
        let (lo, hi) = self.interval(k, z);
        if k + 1 == self.depth {
            return normal_interval(lo, hi);
        }
        let q = self.integrate_level(k, z, lo, hi, INNER_TOL, INNER_PANELS);
        let e = &self.inner_error[k];
        e.set(e.get().max(q.error));
        q.value
    }

    /// Points in `(lo, hi)` where two slab endpoints at level `k + 1` cross
    /// as functions of `z_k`; the next integrand has kinks there.
    fn breakpoints(&self, k: usize, z: &[f64], lo: f64, hi: f64) -> Vec<f64> {
        // Endpoint lines `α + β z_k` of the slabs ending at level k + 1.
        let mut lines: Vec<(f64, f64, bool)> = Vec::new();
        for c in &self.by_level[k + 1] {
            if let Constraint::Slab { v, b } = c {
                let s0: f64 = (0..k).map(|j| v[j] * z[j]).sum();
                let a = v[k + 1];
                let beta = -v[k] / a;
                for sign in [-1.0, 1.0] {
                    let alpha = (sign * b - s0) / a;
                    lines.push((alpha, beta, (sign < 0.0) == (a > 0.0)));
                }
            }
        }
        let mut pts: Vec<f64> = Vec::new();
        for i in 0..lines.len() {
            for j in (i + 1)..lines.len() {
                let (a1, b1, _) = lines[i];
                let (a2, b2, _) = lines[j];
                if b1 != b2 {
                    let t = (a2 - a1) / (b1 - b2);
                    if t > lo && t < hi {
                        pts.push(t);
                    }
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
        pts
    }

    /// `∫ φ(t) level(k + 1, (z, t)) dt` over `[lo, hi] ∩ [−9, 9]`, split at
    /// the kinks of the integrand.
    fn integrate_level(&self, k: usize, z: &[f64], lo: f64, hi: f64, tol: f64, panels: usize) -> Quadrature {
        let (lo, hi) = (lo.max(-TRUNCATE), hi.min(TRUNCATE));
        if !(lo < hi) {
            return Quadrature { value: 0.0, error: 0.0 };
        }
        let mut cuts = vec![lo];
        cuts.extend(self.breakpoints(k, z, lo, hi));
        cuts.push(hi);
        let pieces = (cuts.len() - 1) as f64;
        let mut zz = z.to_vec();
        zz.resize(self.depth, 0.0);
        let mut value = NeumaierSum::default();
        let mut error = 0.0;
        for w in cuts.windows(2) {
            let q = integrate(
                |t| {
                    zz[k] = t;
                    normal_pdf(t) * self.level(k + 1, &mut zz)
                },
                w[0],
                w[1],
                tol / pieces,
                panels,
            );
            value.add(q.value);
            error += q.error;
        }
        Quadrature { value: value.sum(), error }
    }

    fn probability(&self) -> Estimate {
        if self.depth == 0 {
            return Estimate::exact(1.0, 0.0);
        }
        let (lo, hi) = self.interval(0, &[]);
        if self.depth == 1 {
            return Estimate::exact(normal_interval(lo, hi), 0.0);
        }
        let q = self.integrate_level(0, &[], lo, hi, OUTER_TOL, OUTER_PANELS);
        let inner: f64 = self.inner_error.iter().map(Cell::get).sum();
        let truncation = 2.0 * (self.depth - 1) as f64 * crate::numeric::normal_sf(TRUNCATE);
        Estimate::exact(q.value.clamp(0.0, 1.0), q.error + inner + truncation)
    }
}

fn quad_factor(sigma: &SymMatrix) -> Result<DMatrix<f64>> {
    let n = sigma.dim();
    if n > MAX_QUAD_DIM {
        return Err(Error::DimensionTooLarge { dim: n, max: MAX_QUAD_DIM });
    }
    Ok(sigma.cholesky()?.l)
}

fn mc_factor(sigma: &SymMatrix) -> Result<DMatrix<f64>> {
    let n = sigma.dim();
    if n > MAX_MC_DIM {
        return Err(Error::DimensionTooLarge { dim: n, max: MAX_MC_DIM });
    }
    Ok(sigma.cholesky()?.l)
}

fn check_placement(n: usize, placed: &[(&SymmetricConvexSet, usize)]) -> Result<()> {
    for &(s, off) in placed {
        s.validate()?;
        if off + s.dim() > n {
            return Err(Error::ShapeMismatch(format!(
                "{}-d set at offset {off} does not fit in dimension {n}",
                s.dim()
            )));
        }
    }
    Ok(())
}

/// `P(X ∈ set)` for `X ~ N(0, Σ)`.
pub fn gauss_prob(sigma: &SymMatrix, set: &SymmetricConvexSet, method: Method) -> Result<Estimate> {
    if set.dim() != sigma.dim() {
        return Err(Error::ShapeMismatch(format!("{}-d set for {}-d covariance", set.dim(), sigma.dim())));
    }
    check_placement(sigma.dim(), &[(set, 0)])?;
    match method {
        Method::Quadrature => Ok(Nested::new(&quad_factor(sigma)?, &[(set, 0)])?.probability()),
        Method::Mc { samples, seed } => {
            let f = mc_factor(sigma)?;
            let counts = mc::histogram(&f, samples, seed, 2, |x| set.contains(x) as usize);
            Ok(binomial(counts[1], samples))
        }
    }
}

fn binomial(hits: u64, n: u64) -> Estimate {
    let p = hits as f64 / n as f64;
    Estimate { value: p, stderr: (p * (1.0 - p) / n as f64).sqrt(), error: 0.0 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GciReport {
    pub method: Method,
    /// `P(P₁X ∈ K, P₂X ∈ L)`.
    pub p_joint: Estimate,
    pub p1: Estimate,
    pub p2: Estimate,
    /// `P(P₁X ∈ K, P₂X ∉ L)`.
    pub p_k_not_l: Estimate,
    pub product: f64,
    pub margin: f64,
    pub margin_stderr: f64,
    pub error: f64,
    pub holds: bool,
}

/// `γ(K × L) ≥ γ₁(K) γ₂(L)` for `X ~ N(0, Σ)` split after `n₁` coordinates.
pub fn gci_check(
    sigma: &SymMatrix,
    split: usize,
    k: &SymmetricConvexSet,
    l: &SymmetricConvexSet,
    method: Method,
) -> Result<GciReport> {
    let n = sigma.dim();
    if split == 0 || split >= n || k.dim() != split || l.dim() != n - split {
        return Err(Error::ShapeMismatch(format!(
            "sets of dimension {} and {} for split {split} of {n}",
            k.dim(),
            l.dim()
        )));
    }
    check_placement(n, &[(k, 0), (l, split)])?;
    match method {
        Method::Quadrature => {
            let f = quad_factor(sigma)?;
            let pj = Nested::new(&f, &[(k, 0), (l, split)])?.probability();
            let p1 = Nested::new(&f, &[(k, 0)])?.probability();
            let p2 = Nested::new(&f, &[(l, split)])?.probability();
            let product = p1.value * p2.value;
            let error = pj.error + p1.error + p2.error;
            let margin = pj.value - product;
            Ok(GciReport {
                method,
                p_joint: pj,
                p1,
                p2,
                p_k_not_l: Estimate::exact(p1.value - pj.value, p1.error + pj.error),
                product,
                margin,
                margin_stderr: 0.0,
                error,
                holds: margin >= -error,
            })
        }
        Method::Mc { samples, seed } => {
            let f = mc_factor(sigma)?;
            let counts = mc::histogram(&f, samples, seed, 4, |x| {
                k.contains(&x[..split]) as usize + 2 * l.contains(&x[split..]) as usize
            });
            let nk = counts[1] + counts[3];
            let nl = counts[2] + counts[3];
            let m = Moments::from_histogram(&counts, 2, 2, &[0.0, 1.0], &[0.0, 1.0], samples);
            Ok(GciReport {
                method,
                p_joint: binomial(counts[3], samples),
                p1: binomial(nk, samples),
                p2: binomial(nl, samples),
                p_k_not_l: binomial(counts[1], samples),
                product: m.e1 * m.e2,
                margin: m.margin(),
                margin_stderr: m.margin_stderr(),
                error: 0.0,
                holds: m.margin() >= -SIGMA_SLACK * m.margin_stderr(),
            })
        }
    }
}

/// Sample moments of `(f₁, f₂)` needed for the covariance and its
/// delta-method standard error.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    n: f64,
    e1: f64,
    e2: f64,
    e12: f64,
    e11: f64,
    e22: f64,
    e1122: f64,
    e112: f64,
    e122: f64,
}

impl Moments {
    fn from_sums(s: [f64; 8], n: u64) -> Self {
        let k = n as f64;
        Moments {
            n: k,
            e1: s[0] / k,
            e2: s[1] / k,
            e12: s[2] / k,
            e11: s[3] / k,
            e22: s[4] / k,
            e1122: s[5] / k,
            e112: s[6] / k,
            e122: s[7] / k,
        }
    }

    fn terms(f1: f64, f2: f64) -> [f64; 8] {
        let g = f1 * f2;
        [f1, f2, g, f1 * f1, f2 * f2, g * g, g * f1, g * f2]
    }

    /// `counts[i + b1·j]` is the number of samples with `f₁ = v1[i]`, `f₂ = v2[j]`.
    fn from_histogram(counts: &[u64], b1: usize, b2: usize, v1: &[f64], v2: &[f64], n: u64) -> Self {
        let mut s = [NeumaierSum::default(); 8];
        for j in 0..b2 {
            for i in 0..b1 {
                let c = counts[i + b1 * j] as f64;
                if c > 0.0 {
                    for (acc, t) in s.iter_mut().zip(Self::terms(v1[i], v2[j])) {
                        acc.add(c * t);
                    }
                }
            }
        }
        Self::from_sums(s.map(|a| a.sum()), n)
    }

    fn margin(&self) -> f64 {
        self.e12 - self.e1 * self.e2
    }

    /// Standard error of `Ê f₁f₂ − Ê f₁ Ê f₂` from its influence function
    /// `D = f₁f₂ − μ₂f₁ − μ₁f₂`.
    fn margin_stderr(&self) -> f64 {
        let (m1, m2) = (self.e1, self.e2);
        let ed2 = self.e1122 + m2 * m2 * self.e11 + m1 * m1 * self.e22 - 2.0 * m2 * self.e112 - 2.0 * m1 * self.e122
            + 2.0 * m1 * m2 * self.e12;
        let ed = self.e12 - 2.0 * m1 * m2;
        ((ed2 - ed * ed).max(0.0) / self.n).sqrt()
    }

    fn stderr1(&self) -> f64 {
        ((self.e11 - self.e1 * self.e1).max(0.0) / self.n).sqrt()
    }

    fn stderr2(&self) -> f64 {
        ((self.e22 - self.e2 * self.e2).max(0.0) / self.n).sqrt()
    }

    fn stderr12(&self) -> f64 {
        ((self.e1122 - self.e12 * self.e12).max(0.0) / self.n).sqrt()
    }
}

/// One level of a layered function: `f ≥ level` exactly on `set`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub level: f64,
    pub set: SymmetricConvexSet,
}

/// Even quasi-concave function given by its super-level sets, or sampled
/// on a grid (zero outside the grid, multilinear in between).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuasiConcaveFn {
    Layered { levels: Vec<Level> },
    Grid { function: GriddedFunction },
}

impl QuasiConcaveFn {
    pub fn indicator(set: SymmetricConvexSet) -> Self {
        QuasiConcaveFn::Layered { levels: vec![Level { level: 1.0, set }] }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        QuasiConcaveFn::Layered { levels: vec![Level { level: c, set: SymmetricConvexSet::Whole { dim } }] }
    }

    pub fn dim(&self) -> usize {
        match self {
            QuasiConcaveFn::Layered { levels } => levels.first().map_or(0, |l| l.set.dim()),
            QuasiConcaveFn::Grid { function } => function.dim(),
        }
    }

    /// Levels strictly decreasing and positive, at most [`MAX_LEVELS`], sets
    /// of one dimension and nested (`K₁ ⊆ K₂ ⊆ …`). Nesting between kinds
    /// that need a linear program to compare is rejected.
    pub fn validate(&self) -> Result<()> {
        let QuasiConcaveFn::Layered { levels } = self else {
            return Ok(());
        };
        if levels.is_empty() || levels.len() > MAX_LEVELS {
            return Err(Error::InvalidArgument(format!("need 1 to {MAX_LEVELS} levels, got {}", levels.len())));
        }
        let d = levels[0].set.dim();
        for (i, l) in levels.iter().enumerate() {
            l.set.validate()?;
            if l.set.dim() != d {
                return Err(Error::ShapeMismatch("level sets differ in dimension".into()));
            }
            if !(l.level > 0.0 && l.level.is_finite()) {
                return Err(Error::InvalidArgument("levels must be positive and finite".into()));
            }
            if i > 0 {
                if !(l.level < levels[i - 1].level) {
                    return Err(Error::InvalidArgument("levels must be strictly decreasing".into()));
                }
                match levels[i - 1].set.is_subset_of(&l.set) {
                    Some(true) => {}
                    Some(false) => {
                        return Err(Error::ConstraintViolated(format!(
                            "level set {} is not inside level set {i}",
                            i - 1
                        )))
                    }
                    None => {
                        return Err(Error::ConstraintViolated(format!(
                            "cannot verify that level set {} is inside level set {i}",
                            i - 1
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    fn layers(&self) -> Option<&[Level]> {
        match self {
            QuasiConcaveFn::Layered { levels } => Some(levels),
            QuasiConcaveFn::Grid { .. } => None,
        }
    }

    /// Values `a_1 > … > a_m > 0` followed by `0` for "outside every set".
    fn level_values(levels: &[Level]) -> Vec<f64> {
        levels.iter().map(|l| l.level).chain([0.0]).collect()
    }

    fn level_index(levels: &[Level], x: &[f64]) -> usize {
        levels.iter().position(|l| l.set.contains(x)).unwrap_or(levels.len())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            QuasiConcaveFn::Layered { levels } => Self::level_values(levels)[Self::level_index(levels, x)],
            QuasiConcaveFn::Grid { function } => grid_eval(function, x),
        }
    }
}

/// Multilinear interpolation, zero outside the grid.
pub fn grid_eval(f: &GriddedFunction, x: &[f64]) -> f64 {
    let l = f.halfwidth();
    let h = f.spacing();
    let n = f.points_per_axis();
    let mut base = 0usize;
    let mut stride = 1usize;
    let mut idx = [0usize; 2];
    let mut frac = [0.0; 2];
    for (a, &xa) in x.iter().enumerate().rev() {
        if !(xa.abs() <= l) {
            return 0.0;
        }
        let u = (xa + l) / h;
        let k = (u.floor() as usize).min(n - 2);
        idx[a] = k;
        frac[a] = u - k as f64;
        base += k * stride;
        stride *= n;
    }
    let d = x.len();
    let mut total = 0.0;
    for corner in 0..(1usize << d) {
        let mut w = 1.0;
        let mut off = 0;
        let mut s = 1;
        for a in (0..d).rev() {
            let bit = (corner >> a) & 1;
            w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            off += bit * s;
            s *= n;
        }
        if w != 0.0 {
            total += w * f.values()[base + off];
        }
    }
    total
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrReport {
    pub method: Method,
    /// `E f₁ f₂`.
    pub lhs: Estimate,
    pub mean1: Estimate,
    pub mean2: Estimate,
    /// `E f₁ · E f₂`.
    pub rhs: f64,
    pub margin: f64,
    pub margin_stderr: f64,
    pub error: f64,
    pub holds: bool,
}

/// `E f₁ f₂ ≥ E f₁ E f₂` for `X ~ N(0, Σ)`.
///
/// When `dim f₁ + dim f₂ = N` the functions act on the two coordinate
/// blocks, `f₁(P₁X) f₂(P₂X)`. When both have dimension `N` they act on the
/// whole vector, `f₁(X) f₂(X)`.
pub fn quasiconcave_corr_check(
    sigma: &SymMatrix,
    f1: &QuasiConcaveFn,
    f2: &QuasiConcaveFn,
    method: Method,
) -> Result<CorrReport> {
    f1.validate()?;
    f2.validate()?;
    let n = sigma.dim();
    let (o1, o2) = if f1.dim() + f2.dim() == n {
        (0, f1.dim())
    } else if f1.dim() == n && f2.dim() == n {
        (0, 0)
    } else {
        return Err(Error::ShapeMismatch(format!(
            "functions of dimension {} and {} for a {n}-d Gaussian",
            f1.dim(),
            f2.dim()
        )));
    };
    let factor = match method {
        Method::Quadrature => quad_factor(sigma)?,
        Method::Mc { .. } => mc_factor(sigma)?,
    };
    corr_with_factor(sigma, &factor, f1, f2, (o1, o2), method)
}

fn corr_with_factor(
    sigma: &SymMatrix,
    factor: &DMatrix<f64>,
    f1: &QuasiConcaveFn,
    f2: &QuasiConcaveFn,
    (o1, o2): (usize, usize),
    method: Method,
) -> Result<CorrReport> {
    let (d1, d2) = (f1.dim(), f2.dim());
    let finish = |lhs: Estimate, mean1: Estimate, mean2: Estimate, margin_stderr: f64| {
        let rhs = mean1.value * mean2.value;
        let margin = lhs.value - rhs;
        let error = lhs.error + mean1.error * mean2.value.abs() + mean2.error * mean1.value.abs();
        CorrReport {
            method,
            lhs,
            mean1,
            mean2,
            rhs,
            margin,
            margin_stderr,
            error,
            holds: margin >= -error - SIGMA_SLACK * margin_stderr,
        }
    };
    match method {
        Method::Quadrature => {
            let (lhs, mean1, mean2) = match (f1.layers(), f2.layers()) {
                (Some(l1), Some(l2)) => {
                    let w1 = layer_weights(l1);
                    let w2 = layer_weights(l2);
                    let mut lhs = (NeumaierSum::default(), 0.0);
                    let mut m1 = (NeumaierSum::default(), 0.0);
                    let mut m2 = (NeumaierSum::default(), 0.0);
                    for (a, la) in l1.iter().enumerate() {
                        let p = Nested::new(factor, &[(&la.set, o1)])?.probability();
                        m1.0.add(w1[a] * p.value);
                        m1.1 += w1[a] * p.error;
                    }
                    for (b, lb) in l2.iter().enumerate() {
                        let p = Nested::new(factor, &[(&lb.set, o2)])?.probability();
                        m2.0.add(w2[b] * p.value);
                        m2.1 += w2[b] * p.error;
                    }
                    for (a, la) in l1.iter().enumerate() {
                        for (b, lb) in l2.iter().enumerate() {
                            let p = Nested::new(factor, &[(&la.set, o1), (&lb.set, o2)])?.probability();
                            lhs.0.add(w1[a] * w2[b] * p.value);
                            lhs.1 += w1[a] * w2[b] * p.error;
                        }
                    }
                    (
                        Estimate::exact(lhs.0.sum(), lhs.1),
                        Estimate::exact(m1.0.sum(), m1.1),
                        Estimate::exact(m2.0.sum(), m2.1),
                    )
                }
                _ => grid_expectations(sigma, f1, f2, (o1, o2))?,
            };
            Ok(finish(lhs, mean1, mean2, 0.0))
        }
        Method::Mc { samples, seed } => {
            let m = match (f1.layers(), f2.layers()) {
                (Some(l1), Some(l2)) => {
                    let (b1, b2) = (l1.len() + 1, l2.len() + 1);
                    let counts = mc::histogram(factor, samples, seed, b1 * b2, |x| {
                        QuasiConcaveFn::level_index(l1, &x[o1..o1 + d1])
                            + b1 * QuasiConcaveFn::level_index(l2, &x[o2..o2 + d2])
                    });
                    let v1 = QuasiConcaveFn::level_values(l1);
                    let v2 = QuasiConcaveFn::level_values(l2);
                    Moments::from_histogram(&counts, b1, b2, &v1, &v2, samples)
                }
                _ => {
                    let s = mc::sums(factor, samples, seed, |x| {
                        Moments::terms(f1.eval(&x[o1..o1 + d1]), f2.eval(&x[o2..o2 + d2]))
                    });
                    Moments::from_sums(s, samples)
                }
            };
            let est = |v, se| Estimate { value: v, stderr: se, error: 0.0 };
            Ok(finish(est(m.e12, m.stderr12()), est(m.e1, m.stderr1()), est(m.e2, m.stderr2()), m.margin_stderr()))
        }
    }
}

/// Layer-cake weights `a_k − a_{k+1}` with `a_{m+1} = 0`.
fn layer_weights(levels: &[Level]) -> Vec<f64> {
    let v = QuasiConcaveFn::level_values(levels);
    (0..levels.len()).map(|k| v[k] - v[k + 1]).collect()
}

fn as_grid(f: &QuasiConcaveFn, dim: usize, halfwidth: f64, n: usize) -> Result<GriddedFunction> {
    match f {
        QuasiConcaveFn::Grid { function } => Ok(function.clone()),
        QuasiConcaveFn::Layered { .. } => GriddedFunction::from_fn(dim, halfwidth, n, |x| f.eval(x)),
    }
}

/// `E h(X)` for `X ~ N(0, Σ)` on the grids of `hs` (one per block) by the
/// Brascamp–Lieb functional with `Q = Σ⁻¹` and no input weights.
fn grid_expectation(sigma: &SymMatrix, hs: &[GriddedFunction]) -> Result<f64> {
    let sizes: Vec<usize> = hs.iter().map(GriddedFunction::dim).collect();
    let blocks = BlockStructure::unit(sizes.clone())?;
    let qi: Vec<SymMatrix> = sizes.iter().map(|&d| SymMatrix::zeros(d)).collect();
    let n = sigma.dim() as f64;
    let log_norm = -0.5 * n * (2.0 * std::f64::consts::PI).ln() - 0.5 * sigma.log_det_pd()?;
    let p = BLProblem::from_q(blocks, sigma.inverse_pd()?, qi)?.with_form(Form::Q).with_log_normalization(log_norm);
    let mass: f64 = hs.iter().map(GriddedFunction::mass).product();
    let v = bl_value(&p, hs)? * mass;
    if !v.is_finite() {
        let h = &hs[0];
        return Err(Error::GridTooSmall { boundary: h.halfwidth(), threshold: f64::INFINITY });
    }
    Ok(v)
}

fn grid_expectations(
    sigma: &SymMatrix,
    f1: &QuasiConcaveFn,
    f2: &QuasiConcaveFn,
    (o1, o2): (usize, usize),
) -> Result<(Estimate, Estimate, Estimate)> {
    // Layered partners are sampled on the grid partner's lattice.
    let template = match (f1, f2) {
        (QuasiConcaveFn::Grid { function }, _) | (_, QuasiConcaveFn::Grid { function }) => function.clone(),
        _ => unreachable!("grid path needs a gridded input"),
    };
    let (l, n) = (template.halfwidth(), template.points_per_axis());
    let g1 = as_grid(f1, f1.dim(), l, n)?;
    let g2 = as_grid(f2, f2.dim(), l, n)?;
    let s1 = sigma.principal(&(o1..o1 + g1.dim()).collect::<Vec<_>>());
    let s2 = sigma.principal(&(o2..o2 + g2.dim()).collect::<Vec<_>>());
    let m1 = grid_expectation(&s1, std::slice::from_ref(&g1))?;
    let m2 = grid_expectation(&s2, std::slice::from_ref(&g2))?;
    let lhs = if o1 == o2 {
        if !g1.same_grid(&g2) {
            return Err(Error::ShapeMismatch("full-space grid inputs must share a grid".into()));
        }
        let prod: Vec<f64> = g1.values().iter().zip(g2.values()).map(|(a, b)| a * b).collect();
        grid_expectation(sigma, &[GriddedFunction::new(g1.dim(), l, n, prod)?])?
    } else {
        grid_expectation(sigma, &[g1, g2])?
    };
    // Trapezoid error is not bounded a priori; report none.
    Ok((Estimate::exact(lhs, 0.0), Estimate::exact(m1, 0.0), Estimate::exact(m2, 0.0)))
}

/// One point of a probability or correlation curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub value: f64,
    pub stderr: f64,
    pub error: f64,
}

/// `s ↦ P(X^(s) ∈ K × L)` where `X^(s)` has covariance `Σ^(s)`.
pub fn prob_interp_curve(
    cb: &CovarianceBlocks,
    k: &SymmetricConvexSet,
    l: &SymmetricConvexSet,
    s_grid: &[f64],
    method: Method,
) -> Result<Vec<CurvePoint>> {
    let split = cb.split();
    if k.dim() != split || l.dim() != cb.dim() - split {
        return Err(Error::ShapeMismatch("set dimensions do not match the split".into()));
    }
    check_placement(cb.dim(), &[(k, 0), (l, split)])?;
    s_grid
        .iter()
        .map(|&s| {
            let sig = cb.interpolate(s)?;
            let e = match method {
                Method::Quadrature => Nested::new(&quad_factor(&sig)?, &[(k, 0), (l, split)])?.probability(),
                Method::Mc { samples, seed } => {
                    let f = mc_factor(&sig)?;
                    let c = mc::histogram(&f, samples, seed, 2, |x| {
                        (k.contains(&x[..split]) && l.contains(&x[split..])) as usize
                    });
                    binomial(c[1], samples)
                }
            };
            Ok(CurvePoint { x: s, value: e.value, stderr: e.stderr, error: e.error })
        })
        .collect()
}

/// `t ↦ E f₁(Y) f₂(Z)` for `Z = e^{−t} Y + √(1 − e^{−2t}) Z₀`, i.e.
/// `∫ f₁ P_t f₂ dγ`. `t = ∞` gives the product of the means.
pub fn ou_corr_curve(
    f1: &QuasiConcaveFn,
    f2: &QuasiConcaveFn,
    t_grid: &[f64],
    method: Method,
) -> Result<Vec<CurvePoint>> {
    f1.validate()?;
    f2.validate()?;
    let n = f1.dim();
    if f2.dim() != n {
        return Err(Error::ShapeMismatch("OU curve needs functions of equal dimension".into()));
    }
    if matches!(method, Method::Quadrature) && 2 * n > MAX_QUAD_DIM {
        return Err(Error::DimensionTooLarge { dim: 2 * n, max: MAX_QUAD_DIM });
    }
    t_grid
        .iter()
        .map(|&t| {
            if !(t >= 0.0) {
                return Err(Error::InvalidArgument(format!("t must be nonnegative, got {t}")));
            }
            let s = (-t).exp();
            let sigma = SymMatrix::from_dmatrix(DMatrix::from_fn(2 * n, 2 * n, |i, j| {
                if i == j {
                    1.0
                } else if i % n == j % n {
                    s
                } else {
                    0.0
                }
            }));
            let r = if s == 1.0 {
                // Degenerate endpoint: Z = Y, so evaluate both functions on Y.
                let id = SymMatrix::identity(n);
                let factor = DMatrix::identity(n, n);
                corr_with_factor(&id, &factor, f1, f2, (0, 0), method)?
            } else {
                let factor = sigma.cholesky()?.l;
                corr_with_factor(&sigma, &factor, f1, f2, (0, n), method)?
            };
            Ok(CurvePoint { x: t, value: r.lhs.value, stderr: r.lhs.stderr, error: r.lhs.error })
        })
        .collect()
}

/// Adjacent points never move against `direction` by more than
/// `abs_tol + 3·√(se_k² + se_{k+1}²) + error_k + error_{k+1}`.
pub fn is_monotone(points: &[CurvePoint], increasing: bool, abs_tol: f64) -> bool {
    points.windows(2).all(|w| {
        let d = if increasing { w[1].value - w[0].value } else { w[0].value - w[1].value };
        let slack = abs_tol + SIGMA_SLACK * w[0].stderr.hypot(w[1].stderr) + w[0].error + w[1].error;
        d >= -slack
    })
}

/// CSV with header `<axis>,value,stderr`.
pub fn curve_csv(axis: &str, points: &[CurvePoint]) -> String {
    let mut out = format!("{axis},value,stderr\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.x, p.value, p.stderr));
    }
    out
}

/// The two-dimensional instance where one input is the complement of a box,
/// which is even but not log-concave.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub rho: f64,
    /// Brascamp–Lieb ratio on the grid for `h₁ = 1_{[−1,1]}`, `h₂ = 1_{ℝ∖[−1,1]}`.
    pub lhs_grid: f64,
    /// `P(|X₁|≤1, |X₂|>1) / (P(|X₁|≤1) P(|X₂|>1))` by quadrature.
    pub lhs_quadrature: f64,
    pub quadrature_error: f64,
    /// Largest of the quadrature error and the grid/quadrature discrepancy.
    pub numerical_error: f64,
    pub gaussian_infimum: f64,
    /// `gaussian_infimum − lhs_quadrature`.
    pub margin: f64,
    /// Ratio for the box/box pair on the same covariance.
    pub companion_ratio: f64,
    pub certified: bool,
}

/// Grid used for the counterexample: `±1` fall on nodes and the Gaussian
/// weight is below `1e-13` at the edge.
const DEMO_HALFWIDTH: f64 = 8.0;
const DEMO_POINTS: usize = 1025;

pub fn counterexample_demo(rho: f64) -> Result<CounterexampleReport> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!("rho must lie in (0, 1), got {rho}")));
    }
    let sigma = SymMatrix::from_rows(&[vec![1.0, rho], vec![rho, 1.0]])?;
    let cb = CovarianceBlocks::new(sigma.clone(), 1)?;
    let p = BLProblem::gci(&cb)?;
    let h1 = GriddedFunction::indicator_box(1, 1.0, DEMO_HALFWIDTH, DEMO_POINTS)?;
    let h2 = GriddedFunction::box_complement(1, 1.0, DEMO_HALFWIDTH, DEMO_POINTS)?;
    let lhs_grid = bl_value(&p, &[h1, h2])?;

    let unit = SymmetricConvexSet::cube(1, 1.0);
    let joint = Nested::new(&sigma.cholesky()?.l, &[(&unit, 0), (&unit, 1)])?.probability();
    let pa = normal_interval(-1.0, 1.0);
    let pb = pa;
    let lhs_quadrature = (pa - joint.value) / (pa * (1.0 - pb));
    let quadrature_error = joint.error / (pa * (1.0 - pb));
    let companion_ratio = joint.value / (pa * pb);

    let gaussian_infimum = infimum_gaussian(&p, None, &OptimizeOptions::default())?.value;
    let numerical_error = quadrature_error.max((lhs_grid - lhs_quadrature).abs());
    let margin = gaussian_infimum - lhs_quadrature;
    Ok(CounterexampleReport {
        rho,
        lhs_grid,
        lhs_quadrature,
        quadrature_error,
        numerical_error,
        gaussian_infimum,
        margin,
        companion_ratio,
        certified: margin > 100.0 * numerical_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rho2(r: f64) -> SymMatrix {
        SymMatrix::from_rows(&[vec![1.0, r], vec![r, 1.0]]).unwrap()
    }

    fn mc(samples: u64) -> Method {
        Method::Mc { samples, seed: DEFAULT_SEED }
    }

    /// `P(|X₁|≤1, |X₂|≤1)` for unit variances and correlation `r`, written
    /// as a one-dimensional integral over `X₁` by Simpson's rule.
    fn rect_oracle(r: f64) -> f64 {
        let m = 20_000;
        let h = 2.0 / m as f64;
        let c = (1.0 - r * r).sqrt();
        let g = |x: f64| {
            normal_pdf(x)
                * (crate::numeric::normal_cdf((1.0 - r * x) / c) - crate::numeric::normal_cdf((-1.0 - r * x) / c))
        };
        let mut s = g(-1.0) + g(1.0);
        for i in 1..m {
            s += g(-1.0 + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn one_and_two_dimensional_boxes() {
        let p = gauss_prob(&SymMatrix::identity(1), &SymmetricConvexSet::cube(1, 1.0), Method::Quadrature).unwrap();
        assert_relative_eq!(p.value, 0.682_689_492_137_085_9, max_relative = 1e-14);
        let p = gauss_prob(&SymMatrix::identity(2), &SymmetricConvexSet::cube(2, 1.0), Method::Quadrature).unwrap();
        assert_relative_eq!(p.value, 0.682_689_492_137_085_9_f64.powi(2), epsilon = 1e-11);
        assert!(p.error < 1e-10);
    }

    #[test]
    fn correlated_box_matches_oracle_and_mc() {
        let s = rho2(0.5);
        let q = gauss_prob(&s, &SymmetricConvexSet::cube(2, 1.0), Method::Quadrature).unwrap();
        assert_relative_eq!(q.value, rect_oracle(0.5), epsilon = 1e-11);
        let m = gauss_prob(&s, &SymmetricConvexSet::cube(2, 1.0), mc(400_000)).unwrap();
        assert!((m.value - q.value).abs() < 3.0 * m.stderr);
    }

    #[test]
    fn ellipsoid_and_polytope_quadrature() {
        // The disc of radius 2 under Id₂ is χ²₂ ≤ 4.
        let disc = SymmetricConvexSet::Ellipsoid { shape: SymMatrix::diagonal(&[0.25, 0.25]) };
        let p = gauss_prob(&SymMatrix::identity(2), &disc, Method::Quadrature).unwrap();
        assert_relative_eq!(p.value, 1.0 - (-2.0f64).exp(), epsilon = 1e-10);
        // A polytope with normals e₁, e₂ is the unit square.
        let sq = SymmetricConvexSet::Polytope { normals: vec![vec![1.0, 0.0], vec![0.0, 1.0]] };
        let s = rho2(0.3);
        let a = gauss_prob(&s, &sq, Method::Quadrature).unwrap().value;
        let b = gauss_prob(&s, &SymmetricConvexSet::cube(2, 1.0), Method::Quadrature).unwrap().value;
        assert_relative_eq!(a, b, epsilon = 1e-12);
        // Three-dimensional ellipsoid against MC.
        let s3 = SymMatrix::from_rows(&[vec![1.0, 0.3, 0.1], vec![0.3, 1.5, -0.2], vec![0.1, -0.2, 0.8]]).unwrap();
        let e = SymmetricConvexSet::Ellipsoid {
            shape: SymMatrix::from_rows(&[vec![1.0, 0.2, 0.0], vec![0.2, 0.5, 0.1], vec![0.0, 0.1, 2.0]]).unwrap(),
        };
        let q = gauss_prob(&s3, &e, Method::Quadrature).unwrap();
        let m = gauss_prob(&s3, &e, mc(400_000)).unwrap();
        assert!((q.value - m.value).abs() < 4.0 * m.stderr, "{q:?} {m:?}");
    }

    #[test]
    fn quadrature_is_invariant_under_reordering() {
        use crate::random::{random_correlation, seeded_rng};
        use rand::Rng;
        let mut rng = seeded_rng(11);
        let s = random_correlation(&mut rng, 3);
        let normals: Vec<Vec<f64>> = (0..4).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let rev = [2, 1, 0];
        let sr = SymMatrix::from_dmatrix(DMatrix::from_fn(3, 3, |i, j| s.get(rev[i], rev[j])));
        let nr: Vec<Vec<f64>> = normals.iter().map(|a| rev.iter().map(|&i| a[i]).collect()).collect();
        let a = gauss_prob(&s, &SymmetricConvexSet::Polytope { normals }, Method::Quadrature).unwrap();
        let b = gauss_prob(&sr, &SymmetricConvexSet::Polytope { normals: nr }, Method::Quadrature).unwrap();
        assert!((a.value - b.value).abs() < 1e-10, "{a:?} {b:?}");
        assert!(a.error < 1e-10);
    }

    #[test]
    fn four_dimensional_polytopes_need_mc() {
        let normals = vec![
            vec![1.0, 0.5, 0.0, 0.2],
            vec![0.3, -1.0, 0.4, 0.0],
            vec![0.0, 0.2, 0.1, 1.0],
            vec![0.5, 0.5, 0.5, 0.5],
            vec![1.0, 0.0, 0.0, -1.0],
        ];
        let p = SymmetricConvexSet::Polytope { normals };
        let r = gauss_prob(&SymMatrix::identity(4), &p, Method::Quadrature);
        assert!(matches!(r, Err(Error::DimensionTooLarge { dim: 4, max: 3 })));
        assert!(gauss_prob(&SymMatrix::identity(4), &SymmetricConvexSet::cube(4, 1.0), Method::Quadrature).is_ok());
    }

    #[test]
    fn gci_check_examples() {
        let r = gci_check(
            &rho2(0.5),
            1,
            &SymmetricConvexSet::cube(1, 1.0),
            &SymmetricConvexSet::cube(1, 1.0),
            Method::Quadrature,
        )
        .unwrap();
        assert!(r.holds && r.margin > 1e-3);
        assert!(r.error < 1e-10);
        let whole = SymmetricConvexSet::Whole { dim: 1 };
        for m in [Method::Quadrature, mc(100_000)] {
            let r = gci_check(&rho2(0.5), 1, &whole, &SymmetricConvexSet::cube(1, 1.0), m).unwrap();
            assert_eq!(r.margin, 0.0);
        }
        let r = gci_check(
            &SymMatrix::identity(2),
            1,
            &SymmetricConvexSet::cube(1, 1.0),
            &SymmetricConvexSet::cube(1, 0.5),
            Method::Quadrature,
        )
        .unwrap();
        assert!(r.margin.abs() < 1e-10);
        let r =
            gci_check(&rho2(0.5), 1, &SymmetricConvexSet::cube(1, 1.0), &SymmetricConvexSet::cube(1, 1.0), mc(200_000))
                .unwrap();
        assert!(r.holds);
        assert_eq!(r.p_joint.value + r.p_k_not_l.value, r.p1.value);
    }

    #[test]
    fn layered_functions() {
        let s = rho2(0.5);
        let two = QuasiConcaveFn::Layered {
            levels: vec![
                Level { level: 2.0, set: SymmetricConvexSet::cube(1, 0.5) },
                Level { level: 1.0, set: SymmetricConvexSet::cube(1, 1.5) },
            ],
        };
        let r = quasiconcave_corr_check(&s, &two, &two, Method::Quadrature).unwrap();
        assert!(r.holds && r.margin > 0.0);
        let c = quasiconcave_corr_check(&s, &two, &QuasiConcaveFn::constant(1, 3.0), Method::Quadrature).unwrap();
        assert!(c.margin.abs() < 1e-10);
        let ind = QuasiConcaveFn::indicator(SymmetricConvexSet::cube(1, 1.0));
        let a = quasiconcave_corr_check(&s, &ind, &ind, Method::Quadrature).unwrap();
        let b =
            gci_check(&s, 1, &SymmetricConvexSet::cube(1, 1.0), &SymmetricConvexSet::cube(1, 1.0), Method::Quadrature)
                .unwrap();
        assert_relative_eq!(a.margin, b.margin, epsilon = 1e-14);
        let m = quasiconcave_corr_check(&s, &two, &two, mc(200_000)).unwrap();
        assert!((m.lhs.value - r.lhs.value).abs() < 4.0 * m.lhs.stderr);
        let bad = QuasiConcaveFn::Layered {
            levels: vec![
                Level { level: 2.0, set: SymmetricConvexSet::cube(1, 2.0) },
                Level { level: 1.0, set: SymmetricConvexSet::cube(1, 1.0) },
            ],
        };
        assert!(matches!(bad.validate(), Err(Error::ConstraintViolated(_))));
    }

    #[test]
    fn grid_evaluator_agrees_with_layers() {
        let s = rho2(0.4);
        let f = QuasiConcaveFn::Layered { levels: vec![Level { level: 1.0, set: SymmetricConvexSet::cube(1, 1.0) }] };
        let g = GriddedFunction::from_fn(1, 8.0, 1025, |x| (-x[0] * x[0]).exp()).unwrap();
        let gf = QuasiConcaveFn::Grid { function: g };
        let q = quasiconcave_corr_check(&s, &gf, &f, Method::Quadrature).unwrap();
        let m = quasiconcave_corr_check(&s, &gf, &f, mc(400_000)).unwrap();
        assert!((q.lhs.value - m.lhs.value).abs() < 4.0 * m.lhs.stderr + 1e-4, "{q:?} {m:?}");
        // E e^{−X²} = 1/√3 for a standard normal.
        assert_relative_eq!(q.mean1.value, 1.0 / 3f64.sqrt(), max_relative = 1e-9);
    }

    #[test]
    fn interpolation_curve() {
        let cb = CovarianceBlocks::new(rho2(0.8), 1).unwrap();
        let k = SymmetricConvexSet::cube(1, 1.0);
        let c = prob_interp_curve(&cb, &k, &k, &[0.0, 0.5, 1.0], Method::Quadrature).unwrap();
        let pa = normal_interval(-1.0, 1.0);
        assert_relative_eq!(c[0].value, pa * pa, epsilon = 1e-11);
        assert_relative_eq!(c[1].value, rect_oracle(0.4), epsilon = 1e-11);
        assert_relative_eq!(c[2].value, rect_oracle(0.8), epsilon = 1e-11);
        assert!(c[0].value < c[1].value && c[1].value < c[2].value);
        assert!(is_monotone(&c, true, 1e-8));
        assert!(curve_csv("s", &c).starts_with("s,value,stderr\n"));
    }

    #[test]
    fn ou_curve() {
        let f = QuasiConcaveFn::indicator(SymmetricConvexSet::cube(1, 1.0));
        let ts = [0.0, 0.5, 1.0, 2.0, f64::INFINITY];
        let c = ou_corr_curve(&f, &f, &ts, Method::Quadrature).unwrap();
        let pa = normal_interval(-1.0, 1.0);
        assert_relative_eq!(c[0].value, pa, epsilon = 1e-12);
        assert_relative_eq!(c[1].value, rect_oracle((-0.5f64).exp()), epsilon = 1e-11);
        assert_relative_eq!(c[4].value, pa * pa, epsilon = 1e-12);
        assert!(is_monotone(&c, false, 1e-8));
        assert!(c.windows(2).all(|w| w[1].value < w[0].value));
        let m = ou_corr_curve(&f, &f, &ts, mc(100_000)).unwrap();
        assert!(is_monotone(&m, false, 0.0));
    }

    #[test]
    fn counterexample() {
        let r = counterexample_demo(0.5).unwrap();
        assert!(r.lhs_quadrature < 0.99);
        assert!(r.certified, "{r:?}");
        assert!(r.companion_ratio > 1.0);
        assert!((r.gaussian_infimum - 1.0).abs() < 1e-6);
        let small = counterexample_demo(1e-3).unwrap();
        assert!((small.lhs_quadrature - 1.0).abs() < 1e-5);
        assert!(counterexample_demo(1.0).is_err());
    }

    #[test]
    fn sets_serialize_as_tagged_unions() {
        let b = SymmetricConvexSet::cube(2, 1.0);
        assert_eq!(serde_json::to_string(&b).unwrap(), r#"{"kind":"box","halfwidths":[1.0,1.0]}"#);
        let e: SymmetricConvexSet =
            serde_json::from_str(r#"{"kind":"ellipsoid","shape":[[2.0,0.0],[0.0,1.0]]}"#).unwrap();
        assert!(e.contains(&[0.7, 0.0]) && !e.contains(&[0.71, 0.0]));
        let p: SymmetricConvexSet = serde_json::from_str(r#"{"kind":"polytope","normals":[[1.0,1.0]]}"#).unwrap();
        assert!(p.contains(&[0.5, 0.5]) && !p.contains(&[0.5, 0.51]));
    }

    #[test]
    fn dimension_limits() {
        let s5 = SymMatrix::identity(5);
        assert!(matches!(
            gauss_prob(&s5, &SymmetricConvexSet::cube(5, 1.0), Method::Quadrature),
            Err(Error::DimensionTooLarge { .. })
        ));
        assert!(gauss_prob(&s5, &SymmetricConvexSet::cube(5, 1.0), mc(1000)).is_ok());
        let bad = rho2(1.5);
        assert!(matches!(
            gauss_prob(&bad, &SymmetricConvexSet::cube(2, 1.0), Method::Quadrature),
            Err(Error::NotPositiveDefinite)
        ));
    }
}
