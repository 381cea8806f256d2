//! Dense symmetric matrix algebra for the Gaussian ratio computations.
//!
//! Everything here works on small (N ≤ 64) dense matrices. Positive definite
//! determinants go through a triangular factorization and are accumulated in
//! log space; indefinite symmetric matrices fall back to the symmetric
//! eigendecomposition.

use std::fmt;
use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;

/// A pivot of the triangular factorization must exceed this fraction of
/// `trace / dim` for the matrix to count as positive definite.
pub const PD_PIVOT_RTOL: f64 = 1e-12;

/// Eigenvalues down to `-PSD_EIG_RTOL * spectral_radius` still count as PSD.
pub const PSD_EIG_RTOL: f64 = 1e-10;

/// Relative Fischer gap below which the two sides count as equal.
pub const FISCHER_EQUALITY_RTOL: f64 = 1e-9;

/// Largest dimension accepted by [`minor_expansion`] (2^N principal minors).
pub const MAX_MINOR_EXPANSION_DIM: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Definiteness {
    PositiveDefinite,
    PositiveSemidefinite,
    Indefinite,
}

/// Dense real symmetric matrix.
///
/// Entries are symmetrized on construction, so `get(i, j) == get(j, i)`
/// holds bit-for-bit. The definiteness class is computed lazily and cached.
#[derive(Clone)]
pub struct SymMatrix {
    m: DMatrix<f64>,
    class: OnceLock<Definiteness>,
}

impl PartialEq for SymMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymMatrix").field("dim", &self.dim()).field("rows", &self.rows()).finish()
    }
}

/// Lower triangular factor `L` with `L Lᵀ = M`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    pub l: DMatrix<f64>,
}

impl Cholesky {
    pub fn log_det(&self) -> f64 {
        let mut acc = NeumaierSum::default();
        for i in 0..self.l.nrows() {
            acc.add(self.l[(i, i)].ln());
        }
        2.0 * acc.sum()
    }

    /// Solves `M x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.nrows();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }
}

impl SymMatrix {
    /// Builds a symmetric matrix from rows, replacing `M` with `(M + Mᵀ)/2`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::ShapeMismatch("matrix must have at least one row".into()));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::ShapeMismatch(format!(
                "row {bad} has length {} but the matrix has {n} rows",
                rows[bad].len()
            )));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("matrix entries must be finite".into()));
        }
        Ok(Self::from_dmatrix(DMatrix::from_fn(n, n, |i, j| rows[i][j])))
    }

    pub fn from_dmatrix(m: DMatrix<f64>) -> Self {
        assert!(m.is_square(), "SymMatrix requires a square matrix");
        let n = m.nrows();
        let sym = DMatrix::from_fn(n, n, |i, j| if i == j { m[(i, i)] } else { 0.5 * (m[(i, j)] + m[(j, i)]) });
        Self { m: sym, class: OnceLock::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_dmatrix(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_dmatrix(DMatrix::zeros(n, n))
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self::from_dmatrix(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)))
    }

    pub fn scalar(v: f64) -> Self {
        Self::diagonal(&[v])
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|i| (0..self.dim()).map(|j| self.m[(i, j)]).collect()).collect()
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        Self::from_dmatrix(&self.m + &other.m)
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        Self::from_dmatrix(&self.m - &other.m)
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        Self::from_dmatrix(&self.m * c)
    }

    /// `X M Xᵀ` for an arbitrary (possibly rectangular) `X`.
    pub fn congruence(&self, x: &DMatrix<f64>) -> SymMatrix {
        Self::from_dmatrix(x * &self.m * x.transpose())
    }

    /// Principal submatrix on the given (0-based) index set.
    pub fn principal(&self, idx: &[usize]) -> SymMatrix {
        Self::from_dmatrix(DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.m[(idx[i], idx[j])]))
    }

    /// Rectangular block with the given row and column index sets.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.m[(rows[i], cols[j])])
    }

    /// Block-diagonal direct sum `M₁ ⊕ … ⊕ M_m`.
    pub fn direct_sum(parts: &[SymMatrix]) -> SymMatrix {
        let n: usize = parts.iter().map(SymMatrix::dim).sum();
        let mut m = DMatrix::zeros(n, n);
        let mut off = 0;
        for p in parts {
            let k = p.dim();
            m.view_mut((off, off), (k, k)).copy_from(&p.m);
            off += k;
        }
        Self::from_dmatrix(m)
    }

    /// Triangular factorization with the scale-aware pivot test.
    pub fn cholesky(&self) -> Result<Cholesky> {
        let n = self.dim();
        let trace = self.trace();
        if !(trace > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        let floor = PD_PIVOT_RTOL * trace / n as f64;
        let mut l = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut d = self.m[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > floor) {
                return Err(Error::NotPositiveDefinite);
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = self.m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Cholesky { l })
    }

    /// Factor `F` (N × r) with `F Fᵀ = M` for a PSD matrix, dropping columns
    /// whose pivot falls below the PSD tolerance. Used for degenerate
    /// covariances such as the `t = 0` end of the Ornstein–Uhlenbeck curve.
    pub fn semidefinite_factor(&self) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let scale = (0..n).fold(0.0_f64, |a, i| a.max(self.m[(i, i)].abs()));
        if scale == 0.0 {
            return Ok(DMatrix::zeros(n, 0));
        }
        let tol = PSD_EIG_RTOL * scale * n as f64;
        let mut cols: Vec<Vec<f64>> = Vec::new();
        for j in 0..n {
            let mut d = self.m[(j, j)];
            for c in &cols {
                d -= c[j] * c[j];
            }
            if d < -tol {
                return Err(Error::ConstraintViolated("covariance is not positive semidefinite".into()));
            }
            if d <= tol {
                continue;
            }
            let djj = d.sqrt();
            let mut col = vec![0.0; n];
            col[j] = djj;
            for (i, slot) in col.iter_mut().enumerate().skip(j + 1) {
                let mut s = self.m[(i, j)];
                for c in &cols {
                    s -= c[i] * c[j];
                }
                *slot = s / djj;
            }
            cols.push(col);
        }
        Ok(DMatrix::from_fn(n, cols.len(), |i, k| cols[k][i]))
    }

    pub fn eigen(&self) -> (Vec<f64>, DMatrix<f64>) {
        let eig = SymmetricEigen::new(self.m.clone());
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v = self.eigen().0;
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    pub fn definiteness(&self) -> Definiteness {
        *self.class.get_or_init(|| {
            if self.cholesky().is_ok() {
                return Definiteness::PositiveDefinite;
            }
            let eig = self.eigenvalues();
            let radius = eig.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            if eig.iter().all(|&l| l >= -PSD_EIG_RTOL * radius) {
                Definiteness::PositiveSemidefinite
            } else {
                Definiteness::Indefinite
            }
        })
    }

    pub fn is_pd(&self) -> bool {
        self.definiteness() == Definiteness::PositiveDefinite
    }

    pub fn is_psd(&self) -> bool {
        self.definiteness() != Definiteness::Indefinite
    }

    /// `self ≤ other` in the PSD order.
    pub fn psd_le(&self, other: &SymMatrix) -> bool {
        other.sub(self).is_psd()
    }

    pub fn log_det_pd(&self) -> Result<f64> {
        Ok(self.cholesky()?.log_det())
    }

    /// Determinant: triangular factorization when PD, eigenvalue product otherwise.
    pub fn det(&self) -> f64 {
        match self.cholesky() {
            Ok(c) => c.log_det().exp(),
            Err(_) => self.eigen().0.iter().product(),
        }
    }

    pub fn inverse_pd(&self) -> Result<SymMatrix> {
        let c = self.cholesky()?;
        let n = self.dim();
        let mut inv = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let x = c.solve(&e);
            for i in 0..n {
                inv[(i, j)] = x[i];
            }
        }
        Ok(Self::from_dmatrix(inv))
    }

    /// Applies `g` to the spectrum.
    pub fn spectral_map(&self, g: impl Fn(f64) -> f64) -> SymMatrix {
        let (vals, vecs) = self.eigen();
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(vals.len(), vals.iter().map(|&v| g(v))));
        Self::from_dmatrix(&vecs * d * vecs.transpose())
    }

    /// PSD square root; eigenvalues inside the PSD tolerance are clamped to 0.
    pub fn sqrt_psd(&self) -> Result<SymMatrix> {
        if !self.is_psd() {
            return Err(Error::ConstraintViolated("square root of a non-PSD matrix".into()));
        }
        Ok(self.spectral_map(|v| v.max(0.0).sqrt()))
    }

    pub fn inv_sqrt_pd(&self) -> Result<SymMatrix> {
        if !self.is_pd() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(self.spectral_map(|v| 1.0 / v.sqrt()))
    }

    /// Clamps the spectrum into `[lo, hi]`.
    pub fn clamp_spectrum(&self, lo: f64, hi: f64) -> SymMatrix {
        self.spectral_map(|v| v.clamp(lo, hi))
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    dim: usize,
    rows: Vec<Vec<f64>>,
}

/// Accepted on input: `{"dim": n, "rows": [...]}` or the bare row list.
#[derive(Deserialize)]
#[serde(untagged)]
enum MatrixRepr {
    Rows(Vec<Vec<f64>>),
    Object(MatrixJson),
}

impl Serialize for SymMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson { dim: self.dim(), rows: self.rows() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = match MatrixRepr::deserialize(d)? {
            MatrixRepr::Rows(rows) => MatrixJson { dim: rows.len(), rows },
            MatrixRepr::Object(m) => m,
        };
        if raw.rows.len() != raw.dim {
            return Err(serde::de::Error::custom(format!("dim is {} but {} rows were given", raw.dim, raw.rows.len())));
        }
        SymMatrix::from_rows(&raw.rows).map_err(serde::de::Error::custom)
    }
}

/// Decomposition `ℝ^N = ⊕ ℝ^{n_i}` together with the exponents `c_i`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockStructure {
    sizes: Vec<usize>,
    exponents: Vec<f64>,
}

impl BlockStructure {
    pub fn new(sizes: Vec<usize>, exponents: Vec<f64>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidArgument("need at least one block".into()));
        }
        if sizes.len() != exponents.len() {
            return Err(Error::ShapeMismatch(format!("{} block sizes but {} exponents", sizes.len(), exponents.len())));
        }
        if sizes.contains(&0) {
            return Err(Error::InvalidArgument("block sizes must be positive".into()));
        }
        if exponents.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(Error::InvalidArgument("exponents must be positive and finite".into()));
        }
        Ok(Self { sizes, exponents })
    }

    /// All exponents equal to one.
    pub fn unit(sizes: Vec<usize>) -> Result<Self> {
        let c = vec![1.0; sizes.len()];
        Self::new(sizes, c)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn total_dim(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn offset(&self, i: usize) -> usize {
        self.sizes[..i].iter().sum()
    }

    pub fn range(&self, i: usize) -> std::ops::Range<usize> {
        let o = self.offset(i);
        o..o + self.sizes[i]
    }

    /// Coordinate projection `P_i x = x_i`.
    pub fn project<'a>(&self, x: &'a [f64], i: usize) -> &'a [f64] {
        &x[self.range(i)]
    }
}

/// A PD covariance split into the 2×2 block form `(Σ₁ Σ_o; Σ_oᵀ Σ₂)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceBlocks {
    sigma: SymMatrix,
    split: usize,
}

impl CovarianceBlocks {
    pub fn new(sigma: SymMatrix, split: usize) -> Result<Self> {
        let n = sigma.dim();
        if split == 0 || split >= n {
            return Err(Error::InvalidArgument(format!("split must satisfy 0 < split < {n}, got {split}")));
        }
        if !sigma.is_pd() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self { sigma, split })
    }

    pub fn sigma(&self) -> &SymMatrix {
        &self.sigma
    }

    pub fn split(&self) -> usize {
        self.split
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    pub fn first_indices(&self) -> Vec<usize> {
        (0..self.split).collect()
    }

    pub fn second_indices(&self) -> Vec<usize> {
        (self.split..self.dim()).collect()
    }

    pub fn sigma1(&self) -> SymMatrix {
        self.sigma.principal(&self.first_indices())
    }

    pub fn sigma2(&self) -> SymMatrix {
        self.sigma.principal(&self.second_indices())
    }

    pub fn off_block(&self) -> DMatrix<f64> {
        self.sigma.block(&self.first_indices(), &self.second_indices())
    }

    pub fn is_decoupled(&self) -> bool {
        self.off_block().iter().all(|&v| v == 0.0)
    }

    /// `Σ^(s) = (1 − s)(Σ₁ ⊕ Σ₂) + sΣ`: the off-diagonal block scaled by `s`.
    pub fn interpolate(&self, s: f64) -> Result<SymMatrix> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidArgument(format!("s must lie in [0, 1], got {s}")));
        }
        let n = self.dim();
        let k = self.split;
        let m = self.sigma.matrix();
        Ok(SymMatrix::from_dmatrix(DMatrix::from_fn(
            n,
            n,
            |i, j| {
                if (i < k) != (j < k) {
                    s * m[(i, j)]
                } else {
                    m[(i, j)]
                }
            },
        )))
    }
}

/// Both sides of Fischer's inequality `det M ≤ det M₁ det M₂`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FischerGap {
    pub det_full: f64,
    pub det_product: f64,
    /// `max |M_o|` over the off-diagonal block.
    pub offblock_max: f64,
}

impl FischerGap {
    pub fn relative_gap(&self) -> f64 {
        (self.det_product - self.det_full) / self.det_product
    }

    pub fn is_equality(&self) -> bool {
        self.relative_gap().abs() <= FISCHER_EQUALITY_RTOL
    }
}

pub fn fischer_gap(m: &SymMatrix, split: usize) -> Result<FischerGap> {
    let n = m.dim();
    if split == 0 || split >= n {
        return Err(Error::InvalidArgument(format!("split must satisfy 0 < split < {n}, got {split}")));
    }
    let first: Vec<usize> = (0..split).collect();
    let second: Vec<usize> = (split..n).collect();
    let full = m.log_det_pd()?;
    let d1 = m.principal(&first).log_det_pd()?;
    let d2 = m.principal(&second).log_det_pd()?;
    let offblock_max = m.block(&first, &second).iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    Ok(FischerGap { det_full: full.exp(), det_product: (d1 + d2).exp(), offblock_max })
}

fn check_block_diagonal(a: &SymMatrix, split: usize) -> Result<()> {
    let n = a.dim();
    for i in 0..split {
        for j in split..n {
            if a.get(i, j) != 0.0 {
                return Err(Error::ShapeMismatch(format!(
                    "matrix is not block-diagonal for split {split}: entry ({i}, {j}) = {}",
                    a.get(i, j)
                )));
            }
        }
    }
    Ok(())
}

/// `det(Id_N + A Σ^(s))` for each `s`, evaluated as `det(Id + √A Σ^(s) √A)`.
pub fn det_interp_curve(cb: &CovarianceBlocks, a: &SymMatrix, s_grid: &[f64]) -> Result<Vec<f64>> {
    if a.dim() != cb.dim() {
        return Err(Error::ShapeMismatch(format!("A has dimension {} but Σ has dimension {}", a.dim(), cb.dim())));
    }
    check_block_diagonal(a, cb.split())?;
    let root = a.sqrt_psd()?;
    let id = SymMatrix::identity(cb.dim());
    s_grid
        .iter()
        .map(|&s| {
            let sig = cb.interpolate(s)?;
            Ok(id.add(&sig.congruence(root.matrix())).log_det_pd()?.exp())
        })
        .collect()
}

/// `det(Id + A Σ) = 1 + Σ_{∅≠J} |A_J| |Σ_J|` for diagonal `A`.
pub fn minor_expansion(a: &SymMatrix, sigma: &SymMatrix) -> Result<f64> {
    let n = a.dim();
    if sigma.dim() != n {
        return Err(Error::ShapeMismatch(format!("A has dimension {n} but Σ has dimension {}", sigma.dim())));
    }
    if n > MAX_MINOR_EXPANSION_DIM {
        return Err(Error::DimensionTooLarge { dim: n, max: MAX_MINOR_EXPANSION_DIM });
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && a.get(i, j) != 0.0 {
                return Err(Error::ShapeMismatch("A must be diagonal".into()));
            }
        }
    }
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    if diag.iter().any(|&v| v < 0.0) {
        return Err(Error::ConstraintViolated("A must be PSD".into()));
    }
    let mut acc = NeumaierSum::default();
    acc.add(1.0);
    let mut idx = Vec::with_capacity(n);
    for mask in 1u32..(1u32 << n) {
        idx.clear();
        idx.extend((0..n).filter(|&i| mask & (1 << i) != 0));
        let weight: f64 = idx.iter().map(|&i| diag[i]).product();
        if weight == 0.0 {
            continue;
        }
        acc.add(weight * sigma.principal(&idx).det());
    }
    Ok(acc.sum())
}

/// Both sides of `|Σ^(s)_J| = |Σ_{J₁}| |Σ_{J₂}| |Id − s²M|` plus the spectrum
/// range of `M`, which must lie in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinorFactorization {
    pub lhs: f64,
    pub rhs: f64,
    pub m_min_eig: f64,
    pub m_max_eig: f64,
}

impl MinorFactorization {
    pub fn relative_error(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.lhs.abs().max(self.rhs.abs()).max(f64::MIN_POSITIVE)
    }

    pub fn m_in_unit_interval(&self, tol: f64) -> bool {
        self.m_min_eig >= -tol && self.m_max_eig <= 1.0 + tol
    }
}

pub fn minor_factorization(cb: &CovarianceBlocks, j: &[usize], s: f64) -> Result<MinorFactorization> {
    let n = cb.dim();
    let mut idx = j.to_vec();
    idx.sort_unstable();
    idx.dedup();
    if idx.len() != j.len() {
        return Err(Error::InvalidIndexSet("index set contains duplicates".into()));
    }
    if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidIndexSet(format!("index {bad} out of range for N = {n}")));
    }
    let (j1, j2): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| i < cb.split());
    if j1.is_empty() || j2.is_empty() {
        return Err(Error::InvalidIndexSet("J must meet both blocks; otherwise the minor does not depend on s".into()));
    }
    let lhs = cb.interpolate(s)?.principal(&idx).det();

    let sigma = cb.sigma();
    let s1 = sigma.principal(&j1);
    let s2 = sigma.principal(&j2);
    let s12 = sigma.block(&j1, &j2);
    let s1_isqrt = s1.inv_sqrt_pd()?;
    let s2_inv = s2.inverse_pd()?;
    let inner = SymMatrix::from_dmatrix(&s12 * s2_inv.matrix() * s12.transpose());
    let m = inner.congruence(s1_isqrt.matrix());
    let eig = m.eigenvalues();
    let id_minus = SymMatrix::identity(j1.len()).sub(&m.scale(s * s));
    let rhs = s1.det() * s2.det() * id_minus.det();
    Ok(MinorFactorization { lhs, rhs, m_min_eig: eig[0], m_max_eig: eig[eig.len() - 1] })
}
