//! Reference methods for common-subspace recovery: classical two-view CCA
//! and the exact MAXVAR solution via eigendecomposition of a projector sum.
//!
//! Both methods whiten each view through a truncated (signal-rank)
//! pseudoinverse. Passing full view ranks instead reproduces the classical
//! behavior — including its failure to find the common subspace when views
//! are noisy and genuinely low rank.

use ndarray::{s, Array1, Array2, ArrayView2};

use crate::backend;
use crate::error::{Error, Result};
use crate::linalg::{truncated_svd, RankPolicy, SubspaceBasis, SvdResult};
use crate::model::ViewMatrix;

/// Internal SVD tolerance for iterative factorization of sparse views.
const SVD_TOL: f64 = 1e-10;

/// Two-view canonical correlation analysis output.
#[derive(Debug, Clone)]
pub struct CcaResult {
    /// `K_1 × R`; `X^(1) Q^(1)` has orthonormal columns.
    pub q1: Array2<f64>,
    /// `K_2 × R`.
    pub q2: Array2<f64>,
    /// Top `R` canonical correlations, nonincreasing, in `[0, 1+ε]`.
    pub correlations: Array1<f64>,
}

struct WhitenedView {
    /// Orthonormal range basis, truncated to the effective rank.
    u: Array2<f64>,
    s: Array1<f64>,
    v: Array2<f64>,
    effective_rank: usize,
}

/// Factorizes a view and keeps `min(requested, numeric rank)` directions:
/// the declared signal rank caps the basis, and numerically-zero directions
/// inside the cap are dropped rather than amplified.
fn whiten(x: ArrayView2<'_, f64>, requested: Option<usize>) -> Result<WhitenedView> {
    let f = backend::svd_thin(x)?;
    let tau = RankPolicy::Relative.threshold(x.nrows(), x.ncols(), f.s[0]);
    let numeric = f.s.iter().take_while(|&&v| v > tau).count();
    let cap = requested
        .unwrap_or(numeric)
        .min(x.nrows().min(x.ncols()));
    let effective_rank = cap.min(numeric);
    Ok(WhitenedView {
        u: f.u.slice(s![.., 0..effective_rank]).to_owned(),
        s: f.s.slice(s![0..effective_rank]).to_owned(),
        v: f.v.slice(s![.., 0..effective_rank]).to_owned(),
        effective_rank,
    })
}

/// Classical two-view CCA through orthonormal range bases.
///
/// Whitens both views (truncating to `signal_ranks` when given), takes the
/// SVD `U_1ᵀU_2 = A Σ Bᵀ`, and returns the top-`R` canonical correlations
/// `Σ` together with maps `Q^(n)` such that `X^(n) Q^(n)` has orthonormal
/// columns (`X^(1)Q^(1) = U_1 A_R`, `X^(2)Q^(2) = U_2 B_R`). On noiseless
/// views sharing an `R`-dimensional range intersection the top `R`
/// correlations equal 1 and the two projections coincide.
pub fn cca_two_view(
    x1: ArrayView2<'_, f64>,
    x2: ArrayView2<'_, f64>,
    r: usize,
    signal_ranks: Option<(usize, usize)>,
) -> Result<CcaResult> {
    if x1.nrows() != x2.nrows() {
        return Err(Error::dim(format!(
            "views have {} and {} rows",
            x1.nrows(),
            x2.nrows()
        )));
    }
    if r < 1 {
        return Err(Error::Parameter(
            "requested dimension must be at least 1".to_string(),
        ));
    }
    let (r1, r2) = match signal_ranks {
        Some((a, b)) => (Some(a), Some(b)),
        None => (None, None),
    };
    let w1 = whiten(x1, r1)?;
    let w2 = whiten(x2, r2)?;
    for (idx, w) in [(1, &w1), (2, &w2)] {
        if w.effective_rank < r {
            return Err(Error::Rank(format!(
                "view {idx} has effective rank {}, below the requested {r}",
                w.effective_rank
            )));
        }
    }

    let cross = w1.u.t().dot(&w2.u);
    let SvdResult {
        u: a,
        singular_values,
        v: b,
    } = crate::linalg::truncated_svd_dense(cross.view(), r, SVD_TOL)?;

    Ok(CcaResult {
        q1: back_map(&w1, &a),
        q2: back_map(&w2, &b),
        correlations: singular_values,
    })
}

/// `Q = V Σ⁻¹ G` for a rotation `G` expressed in the whitened basis; all
/// retained singular values are positive by construction of [`whiten`].
fn back_map(w: &WhitenedView, g: &Array2<f64>) -> Array2<f64> {
    let mut scaled = g.clone();
    for i in 0..w.effective_rank {
        scaled.row_mut(i).mapv_inplace(|x| x / w.s[i]);
    }
    w.v.dot(&scaled)
}

/// Exact MAXVAR output.
#[derive(Debug, Clone)]
pub struct MaxvarResult {
    /// Orthonormal basis of the estimated common subspace, `I × R`.
    pub m_hat: SubspaceBasis,
    /// Per-view least-squares maps onto the estimate, `K_n × R`.
    pub q: Vec<Array2<f64>>,
    /// Full spectrum of the projector sum, nonincreasing, within `[0, N]`.
    pub eigenvalues: Array1<f64>,
}

/// Exact MAXVAR: eigendecomposition of the whitened projector sum.
///
/// Each view contributes the orthogonal projector onto its leading
/// `signal_ranks[n]` range directions; `M̂` is spanned by the top-`R`
/// eigenvectors of the sum. Directions common to all views reach the
/// maximal eigenvalue `N`. The per-view maps are truncated least-squares
/// solutions `Q^(n) = X^(n)⁺ M̂`.
///
/// Setting `signal_ranks[n] = min(I, K_n)` whitens against the full view
/// rank — the classical formulation, which degrades sharply when views are
/// noisy and low rank.
pub fn maxvar(views: &[ViewMatrix], r: usize, signal_ranks: &[usize]) -> Result<MaxvarResult> {
    let n = views.len();
    if n < 2 {
        return Err(Error::dim(format!("need at least 2 views, got {n}")));
    }
    if signal_ranks.len() != n {
        return Err(Error::dim(format!(
            "{} signal ranks for {n} views",
            signal_ranks.len()
        )));
    }
    if r < 1 {
        return Err(Error::Parameter(
            "requested dimension must be at least 1".to_string(),
        ));
    }
    let rows = views[0].nrows();
    if r > rows {
        return Err(Error::Rank(format!(
            "requested dimension {r} exceeds the entity count {rows}"
        )));
    }
    let mut factors = Vec::with_capacity(n);
    let mut projector_sum = Array2::<f64>::zeros((rows, rows));
    for (idx, view) in views.iter().enumerate() {
        if view.nrows() != rows {
            return Err(Error::dim(format!(
                "view {idx} has {} rows, expected {rows}",
                view.nrows()
            )));
        }
        let keep = signal_ranks[idx].min(view.nrows().min(view.ncols()));
        if keep < r {
            return Err(Error::Rank(format!(
                "view {idx}: whitening rank {keep} is below the requested {r}"
            )));
        }
        let f = truncated_svd(view.as_ref(), keep, SVD_TOL)?;
        projector_sum += &f.u.dot(&f.u.t());
        factors.push(f);
    }

    let (lambda, vectors) = backend::eigh(projector_sum.view())?;
    let eigenvalues = Array1::from_shape_fn(rows, |i| lambda[rows - 1 - i]);
    let mut m_cols = Array2::zeros((rows, r));
    for j in 0..r {
        m_cols.column_mut(j).assign(&vectors.column(rows - 1 - j));
    }
    let m_hat = SubspaceBasis::from_orthonormal(m_cols);

    let q = factors
        .iter()
        .zip(views.iter())
        .map(|(f, view)| {
            let tau =
                RankPolicy::Relative.threshold(view.nrows(), view.ncols(), f.singular_values[0]);
            let mut coeffs = f.u.t().dot(m_hat.basis());
            for i in 0..f.singular_values.len() {
                let inv = if f.singular_values[i] > tau {
                    1.0 / f.singular_values[i]
                } else {
                    0.0
                };
                coeffs.row_mut(i).mapv_inplace(|x| x * inv);
            }
            f.v.dot(&coeffs)
        })
        .collect();

    Ok(MaxvarResult {
        m_hat,
        q,
        eigenvalues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, range_basis, subspace_angle};
    use crate::model::{synthesize, ModelDims, SynthesisMode};
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((rows, cols), |_| rng.sample::<f64, _>(StandardNormal))
    }

    fn whitening_defect(x: &Array2<f64>, q: &Array2<f64>) -> f64 {
        let p = x.dot(q);
        let g = p.t().dot(&p);
        frobenius((&g - &Array2::<f64>::eye(g.nrows())).view())
    }

    #[test]
    fn self_correlation_is_one() {
        let x = gaussian(12, 4, 1);
        let res = cca_two_view(x.view(), x.view(), 4, None).unwrap();
        for &c in res.correlations.iter() {
            assert_abs_diff_eq!(c, 1.0, epsilon = 1e-10);
        }
        assert!(whitening_defect(&x, &res.q1) <= 1e-8);
    }

    #[test]
    fn explicit_one_dimensional_intersection() {
        let x1 = array![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]];
        let x2 = array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let res = cca_two_view(x1.view(), x2.view(), 1, None).unwrap();
        assert_abs_diff_eq!(res.correlations[0], 1.0, epsilon = 1e-10);
        let common = x1.dot(&res.q1);
        // the shared direction is e_2
        assert_abs_diff_eq!(common[(0, 0)].abs(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(common[(1, 0)].abs(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(common[(2, 0)].abs(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn noiseless_two_view_model_recovery() {
        let dims = ModelDims::for_mode(60, 5, vec![20, 20], SynthesisMode::FullRank).unwrap();
        let (model, views) = synthesize(&dims, 5, SynthesisMode::FullRank).unwrap();
        let x1 = views.x[0].to_dense();
        let x2 = views.x[1].to_dense();
        let res = cca_two_view(x1.view(), x2.view(), 5, Some((25, 25))).unwrap();
        for &c in res.correlations.iter() {
            assert_abs_diff_eq!(c, 1.0, epsilon = 1e-8);
        }
        let recovered = range_basis(x1.dot(&res.q1).view(), RankPolicy::Relative).unwrap();
        let truth = model.common_basis().unwrap();
        let angle = subspace_angle(&truth, &recovered).unwrap();
        assert!(angle <= 1e-6, "angle {angle:.3e}");
        assert!(whitening_defect(&x1, &res.q1) <= 1e-8);
        assert!(whitening_defect(&x2, &res.q2) <= 1e-8);
    }

    #[test]
    fn correlations_invariant_to_invertible_mixing() {
        let dims = ModelDims::for_mode(30, 3, vec![5, 5], SynthesisMode::FullRank).unwrap();
        let (_, views) = synthesize(&dims, 9, SynthesisMode::FullRank).unwrap();
        let x1 = views.x[0].to_dense();
        let x2 = views.x[1].to_dense();
        let base = cca_two_view(x1.view(), x2.view(), 3, None).unwrap();
        let a = gaussian(8, 8, 33) + Array2::<f64>::eye(8) * 3.0;
        let mixed = x2.dot(&a);
        let remix = cca_two_view(x1.view(), mixed.view(), 3, None).unwrap();
        for (c1, c2) in base.correlations.iter().zip(remix.correlations.iter()) {
            assert_abs_diff_eq!(c1, c2, epsilon = 1e-8);
        }
    }

    #[test]
    fn rank_error_when_views_cannot_support_request() {
        let x1 = gaussian(10, 2, 3);
        let x2 = gaussian(10, 5, 4);
        assert!(matches!(
            cca_two_view(x1.view(), x2.view(), 3, None),
            Err(Error::Rank(_))
        ));
    }

    #[test]
    fn maxvar_on_identical_views_without_individual_parts() {
        let dims = ModelDims::for_mode(12, 3, vec![0, 0], SynthesisMode::FullRank).unwrap();
        let (model, views) = synthesize(&dims, 2, SynthesisMode::FullRank).unwrap();
        let res = maxvar(&views.x, 3, &[3, 3]).unwrap();
        let truth = model.common_basis().unwrap();
        let angle = subspace_angle(&truth, &res.m_hat).unwrap();
        assert!(angle <= 1e-9, "angle {angle:.3e}");
    }

    #[test]
    fn maxvar_recovers_noiseless_identifiable_instance() {
        let dims = ModelDims::for_mode(60, 5, vec![20, 20, 20], SynthesisMode::FullRank).unwrap();
        let (model, views) = synthesize(&dims, 4, SynthesisMode::FullRank).unwrap();
        let res = maxvar(&views.x, 5, &[25, 25, 25]).unwrap();
        let truth = model.common_basis().unwrap();
        let angle = subspace_angle(&truth, &res.m_hat).unwrap();
        assert!(angle <= 1e-6, "angle {angle:.3e}");
        // common directions are in every projector: eigenvalue N
        for j in 0..5 {
            assert_abs_diff_eq!(res.eigenvalues[j], 3.0, epsilon = 1e-8);
        }
        for &ev in res.eigenvalues.iter() {
            assert!((-1e-10..=3.0 + 1e-10).contains(&ev), "eigenvalue {ev}");
        }
    }

    #[test]
    fn maxvar_projection_consistency() {
        let dims = ModelDims::for_mode(40, 4, vec![8, 8, 8], SynthesisMode::FullRank).unwrap();
        let (_, views) = synthesize(&dims, 21, SynthesisMode::FullRank).unwrap();
        let res = maxvar(&views.x, 4, &[12, 12, 12]).unwrap();
        // X Q ≈ projection of M̂ onto each view's range = M̂ itself noiselessly
        for n in 0..3 {
            let p = views.x[n].to_dense().dot(&res.q[n]);
            let diff = frobenius((&p - res.m_hat.basis()).view());
            assert!(diff <= 1e-8, "view {n}: residual {diff:.3e}");
        }
    }

    #[test]
    fn maxvar_rejects_insufficient_whitening_rank() {
        let dims = ModelDims::for_mode(12, 3, vec![2, 2], SynthesisMode::FullRank).unwrap();
        let (_, views) = synthesize(&dims, 6, SynthesisMode::FullRank).unwrap();
        assert!(matches!(
            maxvar(&views.x, 3, &[2, 5]),
            Err(Error::Rank(_))
        ));
    }
}
