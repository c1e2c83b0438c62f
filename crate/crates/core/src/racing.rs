//! Common-subspace recovery by range intersection.
//!
//! Given views `X^(n)` sharing an entity dimension, the algorithm finds the
//! subspace common to all view ranges in three steps:
//!
//! 1. per-view truncated SVD `X^(n) ≈ U_n Σ_n V_nᵀ` at the view's signal
//!    rank `R + L_n`;
//! 2. a stacked pairwise-difference system `Θ` over the orthonormal bases
//!    `U_n`, whose trailing right singular vectors `Φ` encode, per view, the
//!    coordinates of the shared directions;
//! 3. a merged SVD of `[U_1 Φ^(1), …, U_N Φ^(N)]` whose leading left
//!    singular vectors give the common-subspace estimate `M̂`.
//!
//! The module also produces per-view reduction maps `Q^(n)` with
//! `range(X^(n) Q^(n)) ≈ range(M̂)` and a spectral gap diagnostic flagging
//! instances where the intersection is not well defined.

use ndarray::{concatenate, s, Array1, Array2, Axis};

use crate::backend;
use crate::error::{Error, Result};
use crate::linalg::{nullspace_basis, RankPolicy, SubspaceBasis, SvdResult};
use crate::model::ViewMatrix;

/// How the pairwise-difference system is factorized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaMode {
    /// Pick [`ThetaMode::Gram`] when the explicit stacked matrix would exceed
    /// roughly 4·10⁶ entries, [`ThetaMode::Dense`] otherwise.
    Auto,
    /// Materialize `Θ` and take its full SVD.
    Dense,
    /// Never materialize `Θ`: use `ΘᵀΘ = N·I − BᵀB` with `B = [U_1, …, U_N]`
    /// and solve a `W × W` symmetric eigenproblem instead.
    Gram,
}

/// How the per-view reduction maps `Q^(n)` are scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QScaling {
    /// `Q^(n) = V_n Σ_n⁺ Φ^(n)`. Projections `X^(n) Q^(n) = U_n Φ^(n)` agree
    /// across views column by column, so this is the default.
    PseudoInverse,
    /// `Q^(n) = V_n Φ^(n)`. Projections span per-view tilted copies of the
    /// common subspace (`U_n Σ_n Φ^(n)`); they need not agree across views.
    Raw,
    /// [`QScaling::Raw`] with each column rescaled so `X^(n) Q^(n)` has
    /// unit-norm columns.
    UnitColumns,
}

/// Parameters of the recovery run. `individual_dims[n]` is the view's
/// individual dimension `L_n`; the per-view truncation rank is `R + L_n`.
#[derive(Debug, Clone)]
pub struct RacingConfig {
    pub common_dim: usize,
    pub individual_dims: Vec<usize>,
    /// Relative residual tolerance for iterative (sparse) truncated SVDs.
    pub svd_tol: f64,
    /// When set, the result carries all intermediate spectra.
    pub report_spectra: bool,
    pub theta_mode: ThetaMode,
    pub q_scaling: QScaling,
}

impl RacingConfig {
    pub fn new(common_dim: usize, individual_dims: Vec<usize>) -> Self {
        RacingConfig {
            common_dim,
            individual_dims,
            svd_tol: 1e-10,
            report_spectra: false,
            theta_mode: ThetaMode::Auto,
            q_scaling: QScaling::PseudoInverse,
        }
    }
}

/// Intermediate spectra, reported when [`RacingConfig::report_spectra`] is set.
#[derive(Debug, Clone)]
pub struct RacingSpectra {
    /// Retained singular values of each view, descending.
    pub view: Vec<Array1<f64>>,
    /// Full spectrum of the pairwise-difference system, descending,
    /// zero-padded to the column count `W` when `Θ` is wide.
    pub theta: Array1<f64>,
    /// Singular values of the merged consensus matrix, descending.
    pub merged: Array1<f64>,
}

/// Output of [`racing`].
#[derive(Debug, Clone)]
pub struct RacingResult {
    /// Orthonormal basis of the estimated common subspace, `I × R`.
    pub m_hat: SubspaceBasis,
    /// Per-view reduction maps, `K_n × R`.
    pub q: Vec<Array2<f64>>,
    /// `σ_{W-R+1} / σ_{W-R}` of the pairwise-difference spectrum: the largest
    /// singular value treated as nullspace over the smallest one kept above
    /// it. Near 0 means a clean intersection; `1.0` is substituted when the
    /// denominator vanishes. Values ≥ 0.5 add an ill-posedness warning.
    pub gap_ratio: f64,
    /// Human-readable diagnostics. Never silently empty on suspicious input,
    /// and never promoted to a hard failure.
    pub warnings: Vec<String>,
    pub spectra: Option<RacingSpectra>,
}

/// Gap ratio at or above this level flags the instance as ill posed.
pub const GAP_RATIO_WARN: f64 = 0.5;

const AUTO_GRAM_ENTRY_LIMIT: usize = 4_000_000;

/// Column offset of each view's slot in the stacked system: view `n` starts
/// at `Σ_{i<n} w_i` where `w_i` is the retained rank of view `i`.
fn slot_offsets(widths: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(widths.len());
    let mut acc = 0;
    for &w in widths {
        offsets.push(acc);
        acc += w;
    }
    offsets
}

/// Stacks every view pair `(n1, n2)`, `n1 < n2` in lexicographic order, into
/// the difference system `Θ`: the pair's row block holds `+B_{n1}` in view
/// `n1`'s column slot and `−B_{n2}` in view `n2`'s.
///
/// With `N` bases of shape `I × w_n`, the result is
/// `(N(N−1)/2 · I) × (Σ w_n)`. A stacked vector `[φ^(1); …; φ^(N)]` lies in
/// the nullspace exactly when all `B_n φ^(n)` coincide.
pub fn assemble_theta(bases: &[Array2<f64>]) -> Result<Array2<f64>> {
    let n = bases.len();
    if n < 2 {
        return Err(Error::dim(format!(
            "pairwise difference system needs at least 2 bases, got {n}"
        )));
    }
    let rows = bases[0].nrows();
    if bases.iter().any(|b| b.nrows() != rows) {
        return Err(Error::dim(
            "all bases must share the same row count".to_string(),
        ));
    }
    let widths: Vec<usize> = bases.iter().map(Array2::ncols).collect();
    let offsets = slot_offsets(&widths);
    let total_width: usize = widths.iter().sum();
    let n_pairs = n * (n - 1) / 2;

    let mut theta = Array2::zeros((n_pairs * rows, total_width));
    let mut pair = 0;
    for n1 in 0..n {
        for n2 in (n1 + 1)..n {
            let row0 = pair * rows;
            theta
                .slice_mut(s![row0..row0 + rows, offsets[n1]..offsets[n1] + widths[n1]])
                .assign(&bases[n1]);
            let mut neg = theta.slice_mut(s![
                row0..row0 + rows,
                offsets[n2]..offsets[n2] + widths[n2]
            ]);
            neg.assign(&bases[n2]);
            neg *= -1.0;
            pair += 1;
        }
    }
    Ok(theta)
}

/// Estimates the common dimension from a difference-system spectrum
/// (descending): the number of trailing singular values at or below
/// `tol · σ_max`. An all-zero spectrum yields its full length.
pub fn estimate_common_dim(spectrum: &[f64], tol: f64) -> usize {
    if spectrum.is_empty() || spectrum[0] == 0.0 {
        return spectrum.len();
    }
    let cutoff = tol * spectrum[0];
    spectrum.iter().rev().take_while(|&&s| s <= cutoff).count()
}

struct ViewFactors {
    u: Array2<f64>,
    s: Array1<f64>,
    v: Array2<f64>,
}

/// Recovers the common subspace shared by the views' ranges.
///
/// Views may be dense or sparse; sparse views are factorized iteratively
/// without densification. Returns the basis estimate, per-view reduction
/// maps, the nullspace gap diagnostic, and any warnings. Ill-posedness is
/// reported through `warnings` and `gap_ratio`, never as an `Err`.
pub fn racing(views: &[ViewMatrix], config: &RacingConfig) -> Result<RacingResult> {
    let n = views.len();
    let r = config.common_dim;
    if n < 2 {
        return Err(Error::dim(format!("need at least 2 views, got {n}")));
    }
    if config.individual_dims.len() != n {
        return Err(Error::dim(format!(
            "{} individual dimensions for {} views",
            config.individual_dims.len(),
            n
        )));
    }
    if r < 1 {
        return Err(Error::Parameter(
            "common dimension must be at least 1".to_string(),
        ));
    }
    if config.svd_tol <= 0.0 || !config.svd_tol.is_finite() {
        return Err(Error::Parameter(format!(
            "svd tolerance must be positive and finite, got {}",
            config.svd_tol
        )));
    }
    let rows = views[0].nrows();
    let mut warnings = Vec::new();

    // Step 1: per-view truncated SVD at the declared signal rank.
    let mut factors = Vec::with_capacity(n);
    for (idx, view) in views.iter().enumerate() {
        if view.nrows() != rows {
            return Err(Error::dim(format!(
                "view {idx} has {} rows, expected {rows}",
                view.nrows()
            )));
        }
        let rank = r + config.individual_dims[idx];
        if rank > view.nrows().min(view.ncols()) {
            return Err(Error::dim(format!(
                "view {idx}: signal rank {rank} exceeds its {}x{} shape",
                view.nrows(),
                view.ncols()
            )));
        }
        let SvdResult {
            u,
            singular_values,
            v,
        } = crate::linalg::truncated_svd(view.as_ref(), rank, config.svd_tol)?;
        let tau =
            RankPolicy::Relative.threshold(view.nrows(), view.ncols(), singular_values[0]);
        let smallest = singular_values[rank - 1];
        if smallest <= tau {
            warnings.push(format!(
                "view {idx}: declared signal rank {rank}, but retained singular value {smallest:.3e} \
                 is at noise level {tau:.3e}; the view looks rank deficient"
            ));
        }
        factors.push(ViewFactors {
            u,
            s: singular_values,
            v,
        });
    }

    let widths: Vec<usize> = config.individual_dims.iter().map(|&l| r + l).collect();
    let offsets = slot_offsets(&widths);
    let total_width: usize = widths.iter().sum();
    if r >= total_width {
        return Err(Error::dim(format!(
            "common dimension {r} must be smaller than the stacked width {total_width}"
        )));
    }

    // Step 2: trailing right singular vectors of the difference system.
    let n_pairs = n * (n - 1) / 2;
    let theta_entries = n_pairs * rows * total_width;
    let use_gram = match config.theta_mode {
        ThetaMode::Dense => false,
        ThetaMode::Gram => true,
        ThetaMode::Auto => theta_entries > AUTO_GRAM_ENTRY_LIMIT,
    };
    let bases: Vec<Array2<f64>> = factors.iter().map(|f| f.u.clone()).collect();
    let (phi_stack, theta_spectrum) = if use_gram {
        gram_nullspace(&bases, total_width, r)?
    } else {
        let theta = assemble_theta(&bases)?;
        let ns = nullspace_basis(theta.view(), r)?;
        (ns.basis, ns.spectrum)
    };

    let gap_ratio = spectral_gap_ratio(&theta_spectrum, r);
    if gap_ratio >= GAP_RATIO_WARN {
        warnings.push(format!(
            "intersection is ill posed: nullspace gap ratio {gap_ratio:.3} ≥ {GAP_RATIO_WARN} \
             (no clear separation between common and residual directions)"
        ));
    }

    // Step 3: consensus across the per-view images of the shared directions.
    let projected: Vec<Array2<f64>> = (0..n)
        .map(|idx| {
            let phi_n = phi_stack.slice(s![offsets[idx]..offsets[idx] + widths[idx], ..]);
            factors[idx].u.dot(&phi_n)
        })
        .collect();
    let projected_views: Vec<ndarray::ArrayView2<'_, f64>> =
        projected.iter().map(Array2::view).collect();
    let merged = concatenate(Axis(1), &projected_views)
        .map_err(|e| Error::dim(format!("merging projected bases failed: {e}")))?;
    let merged_svd = backend::svd_thin(merged.view())?;
    let tau = RankPolicy::Relative.threshold(merged.nrows(), merged.ncols(), merged_svd.s[0]);
    if merged_svd.s[r - 1] <= tau {
        warnings.push(format!(
            "consensus matrix is rank deficient: σ_{r} = {:.3e} at noise level {tau:.3e}",
            merged_svd.s[r - 1]
        ));
    }
    let m_hat = SubspaceBasis::from_orthonormal(merged_svd.u.slice(s![.., 0..r]).to_owned());

    // Per-view reduction maps.
    let q = (0..n)
        .map(|idx| {
            let phi_n = phi_stack
                .slice(s![offsets[idx]..offsets[idx] + widths[idx], ..])
                .to_owned();
            reduction_map(&factors[idx], phi_n, views[idx].ncols(), config.q_scaling)
        })
        .collect::<Result<Vec<_>>>()?;

    let spectra = config.report_spectra.then(|| RacingSpectra {
        view: factors.iter().map(|f| f.s.clone()).collect(),
        theta: theta_spectrum,
        merged: merged_svd.s,
    });

    Ok(RacingResult {
        m_hat,
        q,
        gap_ratio,
        warnings,
        spectra,
    })
}

/// Trailing-subspace extraction without materializing `Θ`, via
/// `ΘᵀΘ = N·I_W − BᵀB` for `B = [U_1, …, U_N]`: ascending eigenvalues `μ` of
/// `BᵀB` map to descending singular values `σ_i = sqrt(max(N − μ_i, 0))`,
/// and the last `R` eigenvector columns span the trailing subspace.
fn gram_nullspace(
    bases: &[Array2<f64>],
    total_width: usize,
    r: usize,
) -> Result<(Array2<f64>, Array1<f64>)> {
    let n = bases.len();
    let base_views: Vec<ndarray::ArrayView2<'_, f64>> =
        bases.iter().map(Array2::view).collect();
    let b = concatenate(Axis(1), &base_views)
        .map_err(|e| Error::dim(format!("stacking view bases failed: {e}")))?;
    let gram = b.t().dot(&b);
    let (mu, vectors) = backend::eigh(gram.view())?;
    let spectrum = Array1::from_shape_fn(total_width, |i| (n as f64 - mu[i]).max(0.0).sqrt());
    let phi = vectors.slice(s![.., total_width - r..]).to_owned();
    Ok((phi, spectrum))
}

fn spectral_gap_ratio(spectrum: &Array1<f64>, r: usize) -> f64 {
    let w = spectrum.len();
    let kept = spectrum[w - r];
    let discarded = spectrum[w - r - 1];
    let floor = f64::EPSILON * spectrum[0].max(1.0);
    if discarded <= floor {
        1.0
    } else {
        (kept / discarded).clamp(0.0, 1.0)
    }
}

fn reduction_map(
    factors: &ViewFactors,
    phi_n: Array2<f64>,
    view_cols: usize,
    scaling: QScaling,
) -> Result<Array2<f64>> {
    let rank = phi_n.nrows();
    debug_assert_eq!(factors.v.ncols(), rank);
    let tau = RankPolicy::Relative.threshold(factors.u.nrows(), view_cols, factors.s[0]);
    match scaling {
        QScaling::PseudoInverse => {
            let mut scaled = phi_n;
            for i in 0..rank {
                let inv = if factors.s[i] > tau {
                    1.0 / factors.s[i]
                } else {
                    0.0
                };
                scaled.row_mut(i).mapv_inplace(|x| x * inv);
            }
            Ok(factors.v.dot(&scaled))
        }
        QScaling::Raw => Ok(factors.v.dot(&phi_n)),
        QScaling::UnitColumns => {
            // ‖X q_j‖ = ‖Σ φ_j‖ because the left factor is orthonormal.
            let mut q = factors.v.dot(&phi_n);
            for j in 0..q.ncols() {
                let mut norm_sq = 0.0;
                for i in 0..rank {
                    let t = factors.s[i] * phi_n[(i, j)];
                    norm_sq += t * t;
                }
                let norm = norm_sq.sqrt();
                if norm > tau {
                    q.column_mut(j).mapv_inplace(|x| x / norm);
                }
            }
            Ok(q)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, range_basis, subspace_angle};
    use crate::model::{synthesize, ModelDims, SynthesisMode, ViewMatrix};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn orthobasis(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        use rand_distr::StandardNormal;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Array2::from_shape_fn((rows, cols), |_| rng.sample::<f64, _>(StandardNormal));
        range_basis(a.view(), RankPolicy::Relative)
            .unwrap()
            .into_matrix()
    }

    #[test]
    fn theta_two_views_layout() {
        let b1 = array![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]];
        let b2 = array![[0.0], [0.0], [1.0]];
        let theta = assemble_theta(&[b1.clone(), b2.clone()]).unwrap();
        assert_eq!(theta.shape(), &[3, 3]);
        assert_eq!(theta.slice(s![.., 0..2]), b1);
        assert_eq!(theta.slice(s![.., 2..3]).to_owned(), -b2);
    }

    #[test]
    fn theta_three_views_block_structure() {
        let i = 6;
        let widths = [2usize, 3, 4];
        let bases: Vec<Array2<f64>> = widths
            .iter()
            .enumerate()
            .map(|(k, &w)| orthobasis(i, w, 100 + k as u64))
            .collect();
        let theta = assemble_theta(&bases).unwrap();
        assert_eq!(theta.shape(), &[3 * i, 9]);
        // pair order (0,1), (0,2), (1,2)
        assert_eq!(theta.slice(s![0..i, 0..2]).to_owned(), bases[0]);
        assert_eq!(theta.slice(s![0..i, 2..5]).to_owned(), -bases[1].clone());
        assert_eq!(theta.slice(s![0..i, 5..9]).sum(), 0.0);
        assert_eq!(theta.slice(s![i..2 * i, 0..2]).to_owned(), bases[0]);
        assert_eq!(theta.slice(s![i..2 * i, 2..5]).sum(), 0.0);
        assert_eq!(
            theta.slice(s![i..2 * i, 5..9]).to_owned(),
            -bases[2].clone()
        );
        assert_eq!(theta.slice(s![2 * i..3 * i, 0..2]).sum(), 0.0);
        assert_eq!(theta.slice(s![2 * i..3 * i, 2..5]).to_owned(), bases[1]);
        assert_eq!(
            theta.slice(s![2 * i..3 * i, 5..9]).to_owned(),
            -bases[2].clone()
        );
    }

    fn run_noiseless(
        i: usize,
        r: usize,
        l: Vec<usize>,
        seed: u64,
        mode: ThetaMode,
    ) -> (crate::model::GccaModel, RacingResult) {
        let dims = ModelDims::for_mode(i, r, l.clone(), SynthesisMode::FullRank).unwrap();
        let (model, views) = synthesize(&dims, seed, SynthesisMode::FullRank).unwrap();
        let mut config = RacingConfig::new(r, l);
        config.theta_mode = mode;
        config.report_spectra = true;
        let result = racing(&views.x, &config).unwrap();
        (model, result)
    }

    #[test]
    fn recovers_common_subspace_noiseless() {
        let (model, result) = run_noiseless(20, 2, vec![4, 4, 4], 42, ThetaMode::Dense);
        let truth = model.common_basis().unwrap();
        let angle = subspace_angle(&truth, &result.m_hat).unwrap();
        assert!(angle <= 1e-9, "angle {angle:.3e}");
        assert!(result.gap_ratio <= 1e-6, "gap {:.3e}", result.gap_ratio);
        assert!(result.warnings.is_empty(), "{:?}", result.warnings);
    }

    #[test]
    fn projections_agree_across_views_with_default_scaling() {
        let dims = ModelDims::for_mode(20, 2, vec![4, 4, 4], SynthesisMode::FullRank).unwrap();
        let (_, views) = synthesize(&dims, 7, SynthesisMode::FullRank).unwrap();
        let config = RacingConfig::new(2, vec![4, 4, 4]);
        let result = racing(&views.x, &config).unwrap();
        let proj: Vec<Array2<f64>> = (0..3)
            .map(|n| views.x[n].to_dense().dot(&result.q[n]))
            .collect();
        for n in 1..3 {
            let rel = frobenius((&proj[n] - &proj[0]).view()) / frobenius(proj[0].view());
            assert!(rel <= 1e-8, "view {n} projection disagreement {rel:.3e}");
        }
    }

    #[test]
    fn raw_scaling_breaks_projection_agreement() {
        let dims = ModelDims::for_mode(20, 2, vec![4, 4], SynthesisMode::FullRank).unwrap();
        let (_, views) = synthesize(&dims, 3, SynthesisMode::FullRank).unwrap();
        let mut config = RacingConfig::new(2, vec![4, 4]);
        config.q_scaling = QScaling::Raw;
        let result = racing(&views.x, &config).unwrap();
        let p0 = views.x[0].to_dense().dot(&result.q[0]);
        let p1 = views.x[1].to_dense().dot(&result.q[1]);
        let rel = frobenius((&p1 - &p0).view()) / frobenius(p0.view());
        assert!(rel > 1e-4, "raw scaling unexpectedly agreed: {rel:.3e}");
    }

    #[test]
    fn unit_column_scaling_normalizes_projections() {
        let dims = ModelDims::for_mode(20, 2, vec![4, 4], SynthesisMode::FullRank).unwrap();
        let (_, views) = synthesize(&dims, 5, SynthesisMode::FullRank).unwrap();
        let mut config = RacingConfig::new(2, vec![4, 4]);
        config.q_scaling = QScaling::UnitColumns;
        let result = racing(&views.x, &config).unwrap();
        for n in 0..2 {
            let p = views.x[n].to_dense().dot(&result.q[n]);
            for j in 0..p.ncols() {
                let norm = p.column(j).dot(&p.column(j)).sqrt();
                assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn gram_and_dense_paths_agree() {
        let (_, dense) = run_noiseless(24, 3, vec![5, 4, 6], 11, ThetaMode::Dense);
        let (_, gram) = run_noiseless(24, 3, vec![5, 4, 6], 11, ThetaMode::Gram);
        let angle = subspace_angle(&dense.m_hat, &gram.m_hat).unwrap();
        assert!(angle <= 1e-8, "paths disagree: {angle:.3e}");
        let sd = dense.spectra.unwrap().theta;
        let sg = gram.spectra.unwrap().theta;
        assert_eq!(sd.len(), sg.len());
        for (a, b) in sd.iter().zip(sg.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
    }

    #[test]
    fn no_individual_components_still_works() {
        let (model, result) = run_noiseless(15, 3, vec![0, 0], 9, ThetaMode::Dense);
        let truth = model.common_basis().unwrap();
        let angle = subspace_angle(&truth, &result.m_hat).unwrap();
        assert!(angle <= 1e-9, "angle {angle:.3e}");
    }

    #[test]
    fn ill_posed_two_view_instance_is_flagged() {
        // Two views, I=20, R=5, L=10: the difference system is 20×30, so at
        // least 10 extra nullspace directions mix with the intended 5.
        let (_, result) = run_noiseless(20, 5, vec![10, 10], 21, ThetaMode::Dense);
        assert!(
            result.gap_ratio >= GAP_RATIO_WARN,
            "gap {:.3}",
            result.gap_ratio
        );
        assert!(
            result
                .warnings
                .iter()
                .any(|w| w.contains("ill posed")),
            "missing warning: {:?}",
            result.warnings
        );
    }

    #[test]
    fn sparse_views_match_dense_views() {
        let dims = ModelDims::for_mode(18, 2, vec![3, 3], SynthesisMode::FullRank).unwrap();
        let (_, views) = synthesize(&dims, 31, SynthesisMode::FullRank).unwrap();
        let sparse: Vec<ViewMatrix> = views
            .x
            .iter()
            .map(|x| {
                ViewMatrix::Sparse(
                    crate::linalg::SparseMatrix::from_dense(&x.to_dense()).unwrap(),
                )
            })
            .collect();
        let config = RacingConfig::new(2, vec![3, 3]);
        let from_dense = racing(&views.x, &config).unwrap();
        let from_sparse = racing(&sparse, &config).unwrap();
        let angle = subspace_angle(&from_dense.m_hat, &from_sparse.m_hat).unwrap();
        assert!(angle <= 1e-7, "angle {angle:.3e}");
    }

    #[test]
    fn estimates_common_dim_from_spectrum() {
        let spectrum = [5.0, 4.0, 3.0, 1e-12, 1e-13];
        assert_eq!(estimate_common_dim(&spectrum, 1e-8), 2);
        assert_eq!(estimate_common_dim(&[0.0, 0.0], 1e-8), 2);
        assert_eq!(estimate_common_dim(&[3.0, 2.0, 1.0], 1e-8), 0);
        assert_eq!(estimate_common_dim(&[], 1e-8), 0);
    }

    #[test]
    fn rejects_bad_configurations() {
        let dims = ModelDims::for_mode(10, 2, vec![2, 2], SynthesisMode::FullRank).unwrap();
        let (_, views) = synthesize(&dims, 1, SynthesisMode::FullRank).unwrap();
        // wrong number of individual dims
        let config = RacingConfig::new(2, vec![2, 2, 2]);
        assert!(racing(&views.x, &config).is_err());
        // rank exceeding the view shape
        let config = RacingConfig::new(9, vec![2, 2]);
        assert!(racing(&views.x, &config).is_err());
        // single view
        let config = RacingConfig::new(2, vec![2]);
        assert!(racing(&views.x[0..1], &config).is_err());
    }
}
