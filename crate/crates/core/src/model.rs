//! The multi-view generative model: `X^(n) = [M, C^(n)] · S^(n)ᵀ`, where `M`
//! spans the common subspace shared by all views and each `C^(n)` spans the
//! view's individual directions.
//!
//! This module synthesizes ground-truth factors, injects SNR-controlled
//! Gaussian noise, and canonicalizes factor matrices into the
//! full-column-rank form the identifiability theory assumes.

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{
    ensure_finite, frobenius, numeric_rank, range_basis, RankPolicy, SparseMatrix,
};

/// Problem dimensions: `n_entities` rows shared by all views (`I`), a
/// `common_dim`-dimensional shared subspace (`R`), and per-view individual
/// dimensions (`L_n`) and feature counts (`K_n`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelDims {
    pub n_entities: usize,
    pub common_dim: usize,
    pub individual_dims: Vec<usize>,
    pub feature_dims: Vec<usize>,
}

impl ModelDims {
    pub fn new(
        n_entities: usize,
        common_dim: usize,
        individual_dims: Vec<usize>,
        feature_dims: Vec<usize>,
    ) -> Result<Self> {
        if individual_dims.len() != feature_dims.len() {
            return Err(Error::dim(format!(
                "{} individual dimensions vs {} feature dimensions",
                individual_dims.len(),
                feature_dims.len()
            )));
        }
        if individual_dims.len() < 2 {
            return Err(Error::dim(format!(
                "at least 2 views required, got {}",
                individual_dims.len()
            )));
        }
        if common_dim < 1 || n_entities < 1 {
            return Err(Error::dim(
                "entity count and common dimension must both be at least 1".to_string(),
            ));
        }
        if feature_dims.iter().any(|&k| k < 1) {
            return Err(Error::dim("every view needs at least 1 feature".to_string()));
        }
        Ok(ModelDims {
            n_entities,
            common_dim,
            individual_dims,
            feature_dims,
        })
    }

    /// Builds dimensions with feature counts derived from the synthesis mode:
    /// `K_n = R + L_n` for [`SynthesisMode::FullRank`], and
    /// `K_n = ceil(K_factor · (R + L_n))` for [`SynthesisMode::LowRank`].
    pub fn for_mode(
        n_entities: usize,
        common_dim: usize,
        individual_dims: Vec<usize>,
        mode: SynthesisMode,
    ) -> Result<Self> {
        let feature_dims = individual_dims
            .iter()
            .map(|&l| mode.feature_dim(common_dim + l))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n_entities, common_dim, individual_dims, feature_dims)
    }

    pub fn n_views(&self) -> usize {
        self.individual_dims.len()
    }

    /// Per-view signal ranks `R + L_n`.
    pub fn signal_ranks(&self) -> Vec<usize> {
        self.individual_dims
            .iter()
            .map(|&l| self.common_dim + l)
            .collect()
    }
}

/// How feature counts relate to signal ranks during synthesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SynthesisMode {
    /// `K_n = R + L_n`: every view has exactly full column rank.
    FullRank,
    /// `K_n = ceil(K_factor · (R + L_n))` with `K_factor > 1`: views are wide
    /// with rank `R + L_n` strictly below their column count.
    LowRank { k_factor: f64 },
}

impl SynthesisMode {
    fn feature_dim(&self, signal_rank: usize) -> Result<usize> {
        match *self {
            SynthesisMode::FullRank => Ok(signal_rank),
            SynthesisMode::LowRank { k_factor } => {
                if k_factor <= 1.0 || !k_factor.is_finite() {
                    return Err(Error::Parameter(format!(
                        "low-rank K_factor must be finite and > 1, got {k_factor}"
                    )));
                }
                Ok((k_factor * signal_rank as f64).ceil() as usize)
            }
        }
    }
}

/// Ground-truth factors of the generative model.
#[derive(Debug, Clone)]
pub struct GccaModel {
    pub dims: ModelDims,
    /// `I × R`, spans the common subspace.
    pub m: Array2<f64>,
    /// Per view, `I × L_n`: individual components.
    pub c: Vec<Array2<f64>>,
    /// Per view, `K_n × (R + L_n)`: mixing coefficients.
    pub s: Vec<Array2<f64>>,
}

impl GccaModel {
    /// Reconstructs view `n` as `[M, C^(n)] · S^(n)ᵀ`.
    pub fn view(&self, n: usize) -> Array2<f64> {
        let mc = concatenate![Axis(1), self.m.view(), self.c[n].view()];
        mc.dot(&self.s[n].t())
    }

    /// Orthonormal basis of the ground-truth common subspace `range(M)`.
    pub fn common_basis(&self) -> Result<crate::linalg::SubspaceBasis> {
        range_basis(self.m.view(), RankPolicy::Relative)
    }
}

/// A view matrix, stored dense or sparse.
#[derive(Debug, Clone)]
pub enum ViewMatrix {
    Dense(Array2<f64>),
    Sparse(SparseMatrix),
}

impl ViewMatrix {
    pub fn nrows(&self) -> usize {
        match self {
            ViewMatrix::Dense(a) => a.nrows(),
            ViewMatrix::Sparse(s) => s.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            ViewMatrix::Dense(a) => a.ncols(),
            ViewMatrix::Sparse(s) => s.ncols(),
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        match self {
            ViewMatrix::Dense(a) => a.clone(),
            ViewMatrix::Sparse(s) => s.to_dense(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        match self {
            ViewMatrix::Dense(a) => frobenius(a.view()),
            ViewMatrix::Sparse(s) => s.frobenius_norm(),
        }
    }

    pub fn as_ref(&self) -> crate::linalg::MatrixRef<'_> {
        match self {
            ViewMatrix::Dense(a) => crate::linalg::MatrixRef::Dense(a.view()),
            ViewMatrix::Sparse(s) => crate::linalg::MatrixRef::Sparse(s),
        }
    }
}

/// The observed matrices, one `I × K_n` view per feature space.
#[derive(Debug, Clone)]
pub struct ViewSet {
    pub dims: ModelDims,
    pub x: Vec<ViewMatrix>,
    /// Declared information-bearing rank `R + L_n` of each view.
    pub signal_ranks: Vec<usize>,
}

impl ViewSet {
    pub fn new(dims: ModelDims, x: Vec<ViewMatrix>, signal_ranks: Vec<usize>) -> Result<Self> {
        if x.len() != dims.n_views() || signal_ranks.len() != dims.n_views() {
            return Err(Error::dim(format!(
                "expected {} views, got {} matrices and {} signal ranks",
                dims.n_views(),
                x.len(),
                signal_ranks.len()
            )));
        }
        for (n, view) in x.iter().enumerate() {
            if view.nrows() != dims.n_entities || view.ncols() != dims.feature_dims[n] {
                return Err(Error::dim(format!(
                    "view {} is {}x{}, expected {}x{}",
                    n,
                    view.nrows(),
                    view.ncols(),
                    dims.n_entities,
                    dims.feature_dims[n]
                )));
            }
        }
        Ok(ViewSet {
            dims,
            x,
            signal_ranks,
        })
    }

    pub fn n_views(&self) -> usize {
        self.x.len()
    }
}

/// The noise realization behind a noisy view set.
#[derive(Debug, Clone)]
pub struct NoiseRecord {
    pub w: Vec<Array2<f64>>,
    pub target_snr_db: f64,
    pub seed: u64,
}

/// Deterministically mixes a base seed with a stream index, so per-factor,
/// per-trial, and per-noise generators are independent yet reproducible.
///
/// This is the SplitMix64 finalizer applied to `base XOR (stream · φ)` where
/// φ is the 64-bit golden-ratio constant; documented so other implementations
/// can reproduce the stream layout (bit-exactness is only promised within
/// this implementation).
pub fn mix_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_COMMON: u64 = 1;
const STREAM_INDIVIDUAL: u64 = 1000;
const STREAM_MIXING: u64 = 2000;
const STREAM_RETRY: u64 = 3000;
const STREAM_NOISE: u64 = 4000;
const MAX_SYNTHESIS_ATTEMPTS: usize = 8;

fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| rng.sample::<f64, _>(StandardNormal))
}

/// Draws ground-truth factors with i.i.d. standard Gaussian entries and forms
/// the views `X^(n) = [M, C^(n)] · S^(n)ᵀ`.
///
/// Identical `(dims, seed, mode)` inputs produce bit-identical output. On the
/// measure-zero event that a drawn factor is rank deficient, the whole draw
/// is retried with a derived seed, a bounded number of times.
pub fn synthesize(dims: &ModelDims, seed: u64, mode: SynthesisMode) -> Result<(GccaModel, ViewSet)> {
    let n = dims.n_views();
    let (i, r) = (dims.n_entities, dims.common_dim);
    for (view, (&l, &k)) in dims
        .individual_dims
        .iter()
        .zip(dims.feature_dims.iter())
        .enumerate()
    {
        let expected = mode.feature_dim(r + l)?;
        if k != expected {
            return Err(Error::dim(format!(
                "view {view}: feature count {k} does not match the synthesis mode (expected {expected})"
            )));
        }
        if r + l > i {
            return Err(Error::dim(format!(
                "view {view}: signal rank {} exceeds entity count {i}, so [M, C] cannot have full column rank",
                r + l
            )));
        }
    }

    let mut attempt_seed = seed;
    for attempt in 0..MAX_SYNTHESIS_ATTEMPTS {
        let m = gaussian_matrix(i, r, mix_seed(attempt_seed, STREAM_COMMON));
        let c: Vec<Array2<f64>> = (0..n)
            .map(|v| {
                gaussian_matrix(
                    i,
                    dims.individual_dims[v],
                    mix_seed(attempt_seed, STREAM_INDIVIDUAL + v as u64),
                )
            })
            .collect();
        let s: Vec<Array2<f64>> = (0..n)
            .map(|v| {
                gaussian_matrix(
                    dims.feature_dims[v],
                    r + dims.individual_dims[v],
                    mix_seed(attempt_seed, STREAM_MIXING + v as u64),
                )
            })
            .collect();

        let model = GccaModel {
            dims: dims.clone(),
            m,
            c,
            s,
        };
        if factors_full_rank(&model)? {
            let views: Vec<ViewMatrix> = (0..n).map(|v| ViewMatrix::Dense(model.view(v))).collect();
            let view_set = ViewSet::new(dims.clone(), views, dims.signal_ranks())?;
            return Ok((model, view_set));
        }
        attempt_seed = mix_seed(seed, STREAM_RETRY + attempt as u64);
    }
    Err(Error::DegenerateSample {
        attempts: MAX_SYNTHESIS_ATTEMPTS,
    })
}

fn factors_full_rank(model: &GccaModel) -> Result<bool> {
    let r = model.dims.common_dim;
    for n in 0..model.dims.n_views() {
        let l = model.dims.individual_dims[n];
        let mc = concatenate![Axis(1), model.m.view(), model.c[n].view()];
        if numeric_rank(mc.view(), RankPolicy::Relative)? != r + l {
            return Ok(false);
        }
        if numeric_rank(model.s[n].view(), RankPolicy::Relative)? != r + l {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Adds white Gaussian noise scaled so the aggregate SNR across all views,
/// `20·log10(Σ_n ‖X^(n)‖_F / Σ_n ‖W^(n)‖_F)`, equals `snr_db` exactly.
///
/// One scalar scales every `W^(n)`; noise is never balanced per view. The
/// noiseless case is not expressible here (`snr_db` must be finite); callers
/// wanting it should use the clean views directly.
pub fn add_noise(views: &ViewSet, snr_db: f64, seed: u64) -> Result<(ViewSet, NoiseRecord)> {
    if !snr_db.is_finite() {
        return Err(Error::Parameter(format!(
            "snr must be finite, got {snr_db} dB (use the noiseless views directly instead)"
        )));
    }
    let signal_norm: f64 = views.x.iter().map(|x| x.frobenius_norm()).sum();
    if signal_norm == 0.0 {
        return Err(Error::SignalPower);
    }
    let raw: Vec<Array2<f64>> = views
        .x
        .iter()
        .enumerate()
        .map(|(n, x)| gaussian_matrix(x.nrows(), x.ncols(), mix_seed(seed, STREAM_NOISE + n as u64)))
        .collect();
    let raw_norm: f64 = raw.iter().map(|w| frobenius(w.view())).sum();
    let scale = signal_norm / raw_norm * 10f64.powf(-snr_db / 20.0);
    let w: Vec<Array2<f64>> = raw.into_iter().map(|m| m * scale).collect();
    let noisy: Vec<ViewMatrix> = views
        .x
        .iter()
        .zip(w.iter())
        .map(|(x, wn)| ViewMatrix::Dense(x.to_dense() + wn))
        .collect();
    let noisy_set = ViewSet::new(views.dims.clone(), noisy, views.signal_ranks.clone())?;
    Ok((
        noisy_set,
        NoiseRecord {
            w,
            target_snr_db: snr_db,
            seed,
        },
    ))
}

/// The aggregate SNR in dB: `20·log10(Σ_n ‖X^(n)‖_F / Σ_n ‖W^(n)‖_F)`.
///
/// Zero noise returns `+∞` (a sentinel, not an error).
pub fn measure_snr(signal: &ViewSet, noise: &[Array2<f64>]) -> Result<f64> {
    if noise.len() != signal.n_views() {
        return Err(Error::dim(format!(
            "{} noise matrices for {} views",
            noise.len(),
            signal.n_views()
        )));
    }
    for (n, (x, w)) in signal.x.iter().zip(noise.iter()).enumerate() {
        if x.nrows() != w.nrows() || x.ncols() != w.ncols() {
            return Err(Error::dim(format!(
                "noise {} is {}x{}, view is {}x{}",
                n,
                w.nrows(),
                w.ncols(),
                x.nrows(),
                x.ncols()
            )));
        }
        ensure_finite("noise", w.view())?;
    }
    let signal_norm: f64 = signal.x.iter().map(|x| x.frobenius_norm()).sum();
    let noise_norm: f64 = noise.iter().map(|w| frobenius(w.view())).sum();
    if noise_norm == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * (signal_norm / noise_norm).log10())
}

/// What [`canonicalize_factors`] absorbed, by original column index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CanonicalizationReport {
    /// Columns of `M` that were linear combinations of earlier columns.
    pub dropped_common: Vec<usize>,
    /// Per view, columns of `C^(n)` that already lay in the span of `M` and
    /// the view's surviving individual columns.
    pub dropped_individual: Vec<Vec<usize>>,
}

impl CanonicalizationReport {
    pub fn total_dropped(&self) -> usize {
        self.dropped_common.len() + self.dropped_individual.iter().map(Vec::len).sum::<usize>()
    }
}

/// Rewrites the model into the equivalent canonical form in which `M` and
/// every `[M, C^(n)]` have full column rank, absorbing dependent columns into
/// the mixing coefficients so all `X^(n)` are preserved.
///
/// Dependent columns are absorbed in ascending column order (a deterministic
/// tie-break). The operation is idempotent: a second application reports zero
/// reductions. `tol` is the relative residual below which a column counts as
/// lying in a span.
pub fn canonicalize_factors(
    model: &GccaModel,
    tol: f64,
) -> Result<(GccaModel, CanonicalizationReport)> {
    if tol <= 0.0 || !tol.is_finite() {
        return Err(Error::Parameter(format!(
            "canonicalization tolerance must be positive and finite, got {tol}"
        )));
    }
    let n_views = model.dims.n_views();
    let r = model.dims.common_dim;
    let mut report = CanonicalizationReport {
        dropped_common: Vec::new(),
        dropped_individual: vec![Vec::new(); n_views],
    };

    // Pass 1: make M full column rank. A dependent column m_j = (kept)·β is
    // removed, and its mixing row is redistributed onto the kept columns'
    // rows in every view: s_t += β_t · s_j.
    let mut kept_m: Vec<usize> = Vec::with_capacity(r);
    let mut s_m: Vec<Array2<f64>> = (0..n_views)
        .map(|n| model.s[n].slice(s![.., 0..r]).to_owned())
        .collect();
    let mut s_c: Vec<Array2<f64>> = (0..n_views)
        .map(|n| model.s[n].slice(s![.., r..]).to_owned())
        .collect();

    for j in 0..r {
        let col = model.m.column(j).to_owned();
        let kept = select_columns(&model.m, &kept_m);
        match in_span_coefficients(kept.view(), col.view(), tol)? {
            Some(beta) => {
                for s in s_m.iter_mut() {
                    let source = s.column(j).to_owned();
                    for (t, &kept_j) in kept_m.iter().enumerate() {
                        let mut target = s.column_mut(kept_j);
                        target.scaled_add(beta[t], &source);
                    }
                }
                report.dropped_common.push(j);
            }
            None => kept_m.push(j),
        }
    }

    let new_m = select_columns(&model.m, &kept_m);
    let new_r = kept_m.len();

    // Pass 2: per view, absorb individual columns lying in span(M ∪ kept C).
    let mut new_c: Vec<Array2<f64>> = Vec::with_capacity(n_views);
    let mut new_s: Vec<Array2<f64>> = Vec::with_capacity(n_views);
    for n in 0..n_views {
        let l = model.dims.individual_dims[n];
        let mut kept_c: Vec<usize> = Vec::with_capacity(l);
        for q in 0..l {
            let col = model.c[n].column(q).to_owned();
            let kept_c_mat = select_columns(&model.c[n], &kept_c);
            let span = concatenate![Axis(1), new_m.view(), kept_c_mat.view()];
            match in_span_coefficients(span.view(), col.view(), tol)? {
                Some(beta) => {
                    let source = s_c[n].column(q).to_owned();
                    for (t, &kept_j) in kept_m.iter().enumerate() {
                        let mut target = s_m[n].column_mut(kept_j);
                        target.scaled_add(beta[t], &source);
                    }
                    for (t, &kept_q) in kept_c.iter().enumerate() {
                        let mut target = s_c[n].column_mut(kept_q);
                        target.scaled_add(beta[new_r + t], &source);
                    }
                    report.dropped_individual[n].push(q);
                }
                None => kept_c.push(q),
            }
        }
        new_c.push(select_columns(&model.c[n], &kept_c));
        let s_m_kept = select_columns(&s_m[n], &kept_m);
        let s_c_kept = select_columns(&s_c[n], &kept_c);
        new_s.push(concatenate![Axis(1), s_m_kept.view(), s_c_kept.view()]);
    }

    let new_dims = ModelDims {
        n_entities: model.dims.n_entities,
        common_dim: new_r,
        individual_dims: new_c.iter().map(Array2::ncols).collect(),
        feature_dims: model.dims.feature_dims.clone(),
    };
    Ok((
        GccaModel {
            dims: new_dims,
            m: new_m,
            c: new_c,
            s: new_s,
        },
        report,
    ))
}

fn select_columns(a: &Array2<f64>, indices: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((a.nrows(), indices.len()));
    for (slot, &j) in indices.iter().enumerate() {
        out.column_mut(slot).assign(&a.column(j));
    }
    out
}

/// If `col` lies in the column span of `basis` (relative residual ≤ tol),
/// returns the least-squares coefficients expressing it; otherwise `None`.
fn in_span_coefficients(
    basis: ArrayView2<'_, f64>,
    col: ndarray::ArrayView1<'_, f64>,
    tol: f64,
) -> Result<Option<Array1<f64>>> {
    let col_norm = col.dot(&col).sqrt();
    if col_norm == 0.0 {
        // the zero column contributes nothing: absorb with zero coefficients
        return Ok(Some(Array1::zeros(basis.ncols())));
    }
    if basis.ncols() == 0 {
        return Ok(None);
    }
    let f = crate::backend::svd_thin(basis)?;
    let tau = RankPolicy::Relative.threshold(basis.nrows(), basis.ncols(), f.s[0]);
    // truncated pseudoinverse: β = V·Σ⁺·Uᵀ·col
    let utc = f.u.t().dot(&col);
    let mut scaled = Array1::zeros(f.s.len());
    for i in 0..f.s.len() {
        if f.s[i] > tau {
            scaled[i] = utc[i] / f.s[i];
        }
    }
    let beta = f.v.dot(&scaled);
    let residual = &col.to_owned() - &basis.dot(&beta);
    let rel = residual.dot(&residual).sqrt() / col_norm;
    if rel <= tol {
        Ok(Some(beta))
    } else {
        Ok(None)
    }
}
