//! Dense and sparse linear-algebra primitives: truncated SVD, numeric rank,
//! nullspace bases, and subspace-distance metrics.
//!
//! Everything here is pure and reentrant; matrices are real (`f64`) and all
//! entries must be finite.

mod lanczos;
pub mod sparse;

pub use sparse::SparseMatrix;

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::backend;
use crate::error::{Error, Result};

/// A subspace of ℝ^ambient represented by a matrix with orthonormal columns.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    basis: Array2<f64>,
}

impl SubspaceBasis {
    /// Wraps a matrix after verifying its columns are orthonormal
    /// (`‖BᵀB − I‖_F ≤ 1e-10 · max(1, dim)`).
    pub fn new(basis: Array2<f64>) -> Result<Self> {
        ensure_finite("subspace basis", basis.view())?;
        if basis.ncols() > basis.nrows() {
            return Err(Error::dim(format!(
                "a {}-dimensional space admits at most {} orthonormal columns, got {}",
                basis.nrows(),
                basis.nrows(),
                basis.ncols()
            )));
        }
        let defect = orthonormality_defect(&basis);
        let tol = 1e-10 * (basis.ncols().max(1) as f64);
        if defect > tol {
            return Err(Error::Parameter(format!(
                "columns are not orthonormal: ‖BᵀB − I‖_F = {defect:.3e} exceeds {tol:.3e}"
            )));
        }
        Ok(SubspaceBasis { basis })
    }

    /// Wraps columns that are orthonormal by construction (e.g. SVD output).
    pub(crate) fn from_orthonormal(basis: Array2<f64>) -> Self {
        debug_assert!(
            orthonormality_defect(&basis) <= 1e-8 * (basis.ncols().max(1) as f64),
            "internal basis lost orthonormality"
        );
        SubspaceBasis { basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &Array2<f64> {
        &self.basis
    }

    pub fn into_matrix(self) -> Array2<f64> {
        self.basis
    }

    /// The orthogonal projector `B·Bᵀ` onto the subspace.
    pub fn projector(&self) -> Array2<f64> {
        self.basis.dot(&self.basis.t())
    }
}

/// Dominant singular triplets of a matrix: `A ≈ U · diag(σ) · Vᵀ`. Both
/// factor matrices have orthonormal columns.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: Array2<f64>,
    /// Nonincreasing, nonnegative.
    pub singular_values: Array1<f64>,
    pub v: Array2<f64>,
}

/// A borrowed dense or sparse matrix, for operations accepting either.
#[derive(Debug, Clone, Copy)]
pub enum MatrixRef<'a> {
    Dense(ArrayView2<'a, f64>),
    Sparse(&'a SparseMatrix),
}

impl<'a> MatrixRef<'a> {
    pub fn nrows(&self) -> usize {
        match self {
            MatrixRef::Dense(a) => a.nrows(),
            MatrixRef::Sparse(s) => s.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            MatrixRef::Dense(a) => a.ncols(),
            MatrixRef::Sparse(s) => s.ncols(),
        }
    }
}

/// Rank-decision threshold applied to a singular-value spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankPolicy {
    /// `τ = max(rows, cols) · ε · σ_1`, the classical relative convention.
    Relative,
    /// A caller-supplied absolute threshold.
    Absolute(f64),
}

impl RankPolicy {
    pub(crate) fn threshold(&self, rows: usize, cols: usize, sigma_1: f64) -> f64 {
        match *self {
            RankPolicy::Relative => rows.max(cols) as f64 * f64::EPSILON * sigma_1,
            RankPolicy::Absolute(tau) => tau,
        }
    }
}

/// The `k` dominant singular triplets of a dense or sparse matrix.
///
/// Dense inputs use a full decomposition followed by truncation; sparse
/// inputs use a restarted bidiagonalization that verifies the residual
/// contract `‖A·v_i − σ_i·u_i‖ ≤ tol·σ_1` explicitly.
pub fn truncated_svd(a: MatrixRef<'_>, k: usize, tol: f64) -> Result<SvdResult> {
    if tol <= 0.0 || !tol.is_finite() {
        return Err(Error::Parameter(format!(
            "svd tolerance must be positive and finite, got {tol}"
        )));
    }
    let max_k = a.nrows().min(a.ncols());
    if k < 1 || k > max_k {
        return Err(Error::dim(format!(
            "requested {k} singular triplets of a {}x{} matrix (valid range 1..={max_k})",
            a.nrows(),
            a.ncols()
        )));
    }
    let factors = match a {
        MatrixRef::Dense(view) => {
            ensure_finite("svd input", view)?;
            let mut f = backend::svd_thin(view)?;
            f.u = f.u.slice_axis(Axis(1), (0..k).into()).to_owned();
            f.v = f.v.slice_axis(Axis(1), (0..k).into()).to_owned();
            f.s = f.s.slice(ndarray::s![0..k]).to_owned();
            f
        }
        MatrixRef::Sparse(s) => lanczos::truncated_svd_sparse(s, k, tol)?,
    };
    Ok(SvdResult {
        u: factors.u,
        singular_values: factors.s,
        v: factors.v,
    })
}

/// Convenience wrapper of [`truncated_svd`] for dense inputs.
pub fn truncated_svd_dense(a: ArrayView2<'_, f64>, k: usize, tol: f64) -> Result<SvdResult> {
    truncated_svd(MatrixRef::Dense(a), k, tol)
}

/// The full singular-value spectrum of a dense matrix (length `min(m, n)`).
pub fn singular_values(a: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    ensure_finite("spectrum input", a)?;
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Array1::zeros(0));
    }
    Ok(backend::svd_thin(a)?.s)
}

/// Number of singular values exceeding the policy threshold.
pub fn numeric_rank(a: ArrayView2<'_, f64>, policy: RankPolicy) -> Result<usize> {
    let s = singular_values(a)?;
    if s.is_empty() {
        return Ok(0);
    }
    let tau = policy.threshold(a.nrows(), a.ncols(), s[0]);
    Ok(s.iter().filter(|&&x| x > tau).count())
}

/// The trailing (smallest-σ) right singular vectors of a matrix, plus the
/// full spectrum for gap diagnostics.
#[derive(Debug, Clone)]
pub struct NullspaceResult {
    /// Orthonormal columns, width `d`: the right singular vectors of
    /// smallest σ.
    pub basis: Array2<f64>,
    /// All `cols(A)` singular values, nonincreasing; when `rows < cols` the
    /// trailing `cols − rows` entries are exact zeros (structural kernel).
    pub spectrum: Array1<f64>,
}

/// The `d` right singular vectors of `A` with the smallest singular values.
pub fn nullspace_basis(a: ArrayView2<'_, f64>, d: usize) -> Result<NullspaceResult> {
    ensure_finite("nullspace input", a)?;
    let n = a.ncols();
    if d < 1 || d > n {
        return Err(Error::dim(format!(
            "nullspace width {d} out of range for a matrix with {n} columns"
        )));
    }
    let f = backend::svd_full(a)?;
    let mut spectrum = Array1::zeros(n);
    for (i, &s) in f.s.iter().enumerate() {
        spectrum[i] = s;
    }
    let basis = f.v.slice_axis(Axis(1), ((n - d)..n).into()).to_owned();
    Ok(NullspaceResult { basis, spectrum })
}

/// Orthonormal basis of the range of `A`: left singular vectors with σ above
/// the policy threshold. A zero matrix yields a zero-dimensional basis.
pub fn range_basis(a: ArrayView2<'_, f64>, policy: RankPolicy) -> Result<SubspaceBasis> {
    ensure_finite("range input", a)?;
    if a.ncols() == 0 {
        return Ok(SubspaceBasis::from_orthonormal(Array2::zeros((
            a.nrows(),
            0,
        ))));
    }
    let f = backend::svd_thin(a)?;
    let tau = policy.threshold(a.nrows(), a.ncols(), f.s[0]);
    let rank = f.s.iter().filter(|&&x| x > tau).count();
    Ok(SubspaceBasis::from_orthonormal(
        f.u.slice_axis(Axis(1), (0..rank).into()).to_owned(),
    ))
}

/// Distance `‖P_1 − P_2‖_2` between two equal-dimension subspaces: the sine
/// of their largest principal angle, in `[0, 1]`.
///
/// Computed as `max over both directions of σ_max(B_j − B_i(B_iᵀB_j))`, i.e.
/// from the orthogonal complement directly — numerically stable for nearly
/// identical subspaces, where forming `√(1 − cos²θ)` would lose half the
/// significant digits.
pub fn subspace_angle(b1: &SubspaceBasis, b2: &SubspaceBasis) -> Result<f64> {
    if b1.ambient_dim() != b2.ambient_dim() {
        return Err(Error::dim(format!(
            "ambient dimensions differ: {} vs {}",
            b1.ambient_dim(),
            b2.ambient_dim()
        )));
    }
    if b1.dim() != b2.dim() {
        return Err(Error::dim(format!(
            "subspace dimensions differ: {} vs {} (the metric compares equal-dimension subspaces)",
            b1.dim(),
            b2.dim()
        )));
    }
    if b1.dim() == 0 {
        return Ok(0.0);
    }
    let s1 = residual_sine(b1, b2)?;
    let s2 = residual_sine(b2, b1)?;
    Ok(s1.max(s2).clamp(0.0, 1.0))
}

/// `σ_max(B_to − B_from·(B_fromᵀ·B_to))`: the largest sine of the principal
/// angles from `from` to `to`.
fn residual_sine(from: &SubspaceBasis, to: &SubspaceBasis) -> Result<f64> {
    let cross = from.basis().t().dot(to.basis());
    let residual = to.basis() - &from.basis().dot(&cross);
    let s = backend::svd_thin(residual.view())?.s;
    Ok(if s.is_empty() { 0.0 } else { s[0] })
}

/// Principal angles between two subspaces of the same ambient space, in
/// nondecreasing order within `[0, π/2]`: the arc-cosines of the singular
/// values of `B_1ᵀ·B_2` (clamped to `[−1, 1]`).
pub fn principal_angles(b1: &SubspaceBasis, b2: &SubspaceBasis) -> Result<Array1<f64>> {
    if b1.ambient_dim() != b2.ambient_dim() {
        return Err(Error::dim(format!(
            "ambient dimensions differ: {} vs {}",
            b1.ambient_dim(),
            b2.ambient_dim()
        )));
    }
    if b1.dim() == 0 || b2.dim() == 0 {
        return Ok(Array1::zeros(0));
    }
    let cross = b1.basis().t().dot(b2.basis());
    let s = backend::svd_thin(cross.view())?.s;
    Ok(s.mapv(|c| c.clamp(-1.0, 1.0).acos()))
}

/// Frobenius distance of `BᵀB` from the identity.
pub fn orthonormality_defect(b: &Array2<f64>) -> f64 {
    let g = b.t().dot(b);
    let mut acc = 0.0;
    for ((i, j), &v) in g.indexed_iter() {
        let target = if i == j { 1.0 } else { 0.0 };
        acc += (v - target) * (v - target);
    }
    acc.sqrt()
}

pub(crate) fn ensure_finite(context: &'static str, a: ArrayView2<'_, f64>) -> Result<()> {
    for ((row, col), &value) in a.indexed_iter() {
        if !value.is_finite() {
            return Err(Error::NonFinite {
                context,
                row,
                col,
                value,
            });
        }
    }
    Ok(())
}

/// Frobenius norm of a dense matrix.
pub fn frobenius(a: ArrayView2<'_, f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}
