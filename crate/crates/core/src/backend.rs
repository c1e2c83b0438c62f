//! Bridge between the `ndarray` types used in the public API and the pure-Rust
//! `faer` decompositions that do the heavy lifting.

use faer::linalg::solvers::{SelfAdjointEigen, Svd};
use faer::{Mat, MatRef, Side};
use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};

pub(crate) fn to_faer(a: ArrayView2<'_, f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub(crate) fn from_faer(m: MatRef<'_, f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Dense singular value decomposition, `A = U · diag(s) · Vᵀ`.
///
/// Singular values come back nonincreasing. `thin` keeps `min(m, n)` columns
/// in `U` and `V`; the full variant pads both to square (needed when the
/// trailing nullspace of a wide matrix is wanted).
pub(crate) struct SvdFactors {
    pub u: Array2<f64>,
    pub s: Array1<f64>,
    pub v: Array2<f64>,
}

pub(crate) fn svd_thin(a: ArrayView2<'_, f64>) -> Result<SvdFactors> {
    svd_impl(a, true)
}

pub(crate) fn svd_full(a: ArrayView2<'_, f64>) -> Result<SvdFactors> {
    svd_impl(a, false)
}

fn svd_impl(a: ArrayView2<'_, f64>, thin: bool) -> Result<SvdFactors> {
    let m = to_faer(a);
    let svd = if thin {
        Svd::new_thin(m.as_ref())
    } else {
        Svd::new(m.as_ref())
    }
    .map_err(|_| Error::Convergence {
        max_iterations: 0,
        achieved: f64::NAN,
        required: 0.0,
    })?;
    let k = a.nrows().min(a.ncols());
    let s = Array1::from_shape_fn(k, |i| svd.S()[i]);
    Ok(SvdFactors {
        u: from_faer(svd.U()),
        s,
        v: from_faer(svd.V()),
    })
}

/// Eigendecomposition of a symmetric matrix; eigenvalues ascending, paired
/// column-for-column with the orthonormal eigenvectors.
pub(crate) fn eigh(a: ArrayView2<'_, f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    if a.nrows() != a.ncols() {
        return Err(Error::dim(format!(
            "symmetric eigendecomposition needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let m = to_faer(a);
    let eig = SelfAdjointEigen::new(m.as_ref(), Side::Lower).map_err(|_| Error::Convergence {
        max_iterations: 0,
        achieved: f64::NAN,
        required: 0.0,
    })?;
    let n = a.nrows();
    let values = Array1::from_shape_fn(n, |i| eig.S()[i]);
    Ok((values, from_faer(eig.U())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn svd_descending_and_reconstructs() {
        let a = array![[3.0, 0.0], [0.0, 2.0], [0.0, 0.0]];
        let f = svd_thin(a.view()).unwrap();
        assert!(f.s[0] >= f.s[1]);
        assert!((f.s[0] - 3.0).abs() < 1e-12);
        let recon = f.u.dot(&Array2::from_diag(&f.s)).dot(&f.v.t());
        let err = (&recon - &a).mapv(f64::abs).sum();
        assert!(err < 1e-12);
    }

    #[test]
    fn eigh_ascending() {
        let a = array![[2.0, 0.0], [0.0, 5.0]];
        let (vals, _) = eigh(a.view()).unwrap();
        assert!(vals[0] <= vals[1]);
        assert!((vals[1] - 5.0).abs() < 1e-12);
    }
}
