//! Algebraic identifiability checks for the multi-view model.
//!
//! Two sufficient conditions are verified directly on factor matrices:
//!
//! * **kernel dimension** — the stacked pairwise difference system on the
//!   factor blocks `[M, C^(n)]` has an `R`-dimensional nullspace exactly
//!   when the view ranges intersect in `range(M)` alone
//!   ([`check_theorem1`]);
//! * **staircase rank** — the staircase matrix `Γ` built from `C^(1)`, `M`,
//!   and the remaining individual factors has full column rank
//!   ([`check_theorem2`]).
//!
//! The module also computes the intersection dimension of arbitrary view
//! ranges through a rank identity ([`intersection_dim`]), checks the integer
//! necessary conditions ([`check_necessary`]), and constructs an explicit
//! zero-one factor family whose staircase matrix is provably full rank
//! ([`certificate_gamma3`]) — the witness that full rank holds generically.

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::linalg::{numeric_rank, singular_values, RankPolicy};
use crate::model::ModelDims;
use crate::racing::assemble_theta;

/// The staircase matrix whose full column rank certifies identifiability.
///
/// For `N` views it has `N−1` row blocks of `I` rows. Every row block has
/// `C^(1)` in the leading column slot (width `L_1`); row block `j−1`
/// (for `j = 2..N`) additionally holds `[−M, −C^(j)]` in view `j`'s slot
/// (width `R + L_j`). Shape: `(N−1)·I × ((N−1)·R + Σ L_n)`.
#[derive(Debug, Clone)]
pub struct GammaMatrix {
    pub matrix: Array2<f64>,
    pub n_views: usize,
    pub n_entities: usize,
    pub common_dim: usize,
    pub individual_dims: Vec<usize>,
}

/// A rank decision with the evidence behind it: the smallest singular value
/// that was still counted toward the rank, and the cutoff it had to clear.
#[derive(Debug, Clone, PartialEq)]
pub struct RankMargin {
    pub rank: usize,
    /// `0.0` when the rank is zero.
    pub smallest_retained: f64,
    pub threshold: f64,
}

/// Result of the kernel-dimension check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Theorem1Check {
    /// Nullity of the stacked pairwise factor system.
    pub z_dim: usize,
    /// `z_dim == R` and every mixing matrix has full column rank.
    pub holds: bool,
}

/// Result of the staircase-rank check.
#[derive(Debug, Clone, PartialEq)]
pub struct Theorem2Check {
    pub gamma_rank: usize,
    pub gamma_full_rank: bool,
    pub s_ranks: Vec<usize>,
    /// `gamma_full_rank` and every mixing matrix has full column rank.
    pub holds: bool,
    pub gamma_margin: RankMargin,
    pub s_margins: Vec<RankMargin>,
}

/// Result of the integer necessary conditions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NecessaryCheck {
    /// `R + (Σ L_n)/(N−1) ≤ I`, evaluated exactly in integers as
    /// `R·(N−1) + Σ L_n ≤ I·(N−1)`.
    pub row_bound_ok: bool,
    /// Per view, `R + L_n ≤ K_n`.
    pub col_bounds_ok: Vec<bool>,
}

impl NecessaryCheck {
    pub fn holds(&self) -> bool {
        self.row_bound_ok && self.col_bounds_ok.iter().all(|&b| b)
    }
}

/// Everything the checks can say about one instance; fields are `None` when
/// the corresponding inputs (factors, views, dims) were not supplied.
#[derive(Debug, Clone, Default)]
pub struct IdentifiabilityReport {
    pub theorem1: Option<Theorem1Check>,
    pub theorem2: Option<Theorem2Check>,
    pub necessary: Option<NecessaryCheck>,
    pub intersection_dim: Option<usize>,
}

fn rank_margin(a: ArrayView2<'_, f64>, policy: RankPolicy) -> Result<RankMargin> {
    let sv = singular_values(a)?;
    if sv.is_empty() {
        return Ok(RankMargin {
            rank: 0,
            smallest_retained: 0.0,
            threshold: 0.0,
        });
    }
    let threshold = policy.threshold(a.nrows(), a.ncols(), sv[0]);
    let rank = sv.iter().take_while(|&&s| s > threshold).count();
    Ok(RankMargin {
        rank,
        smallest_retained: if rank > 0 { sv[rank - 1] } else { 0.0 },
        threshold,
    })
}

/// Rescales every nonzero column to unit 2-norm, so rank verdicts do not
/// depend on per-column scaling of the inputs.
fn normalize_columns(a: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = a.to_owned();
    for mut col in out.columns_mut() {
        let norm = col.dot(&col).sqrt();
        if norm > 0.0 {
            col.mapv_inplace(|x| x / norm);
        }
    }
    out
}

fn validate_factor_rows(m: &Array2<f64>, c: &[Array2<f64>]) -> Result<usize> {
    if c.len() < 2 {
        return Err(Error::dim(format!(
            "need at least 2 individual factors, got {}",
            c.len()
        )));
    }
    let rows = m.nrows();
    for (n, cn) in c.iter().enumerate() {
        if cn.nrows() != rows {
            return Err(Error::dim(format!(
                "individual factor {n} has {} rows, common factor has {rows}",
                cn.nrows()
            )));
        }
    }
    Ok(rows)
}

/// Builds the staircase matrix from the common factor `M` (shape `I × R`)
/// and individual factors `C^(n)` (shape `I × L_n`). For `N = 2` this is the
/// single block row `[C^(1), −M, −C^(2)]`.
pub fn build_gamma(m: &Array2<f64>, c: &[Array2<f64>]) -> Result<GammaMatrix> {
    let i = validate_factor_rows(m, c)?;
    let n = c.len();
    let r = m.ncols();
    let l: Vec<usize> = c.iter().map(Array2::ncols).collect();
    let cols = (n - 1) * r + l.iter().sum::<usize>();
    let mut matrix = Array2::zeros(((n - 1) * i, cols));

    // leading slot: C^(1) repeated down every row block
    for block in 0..(n - 1) {
        matrix
            .slice_mut(s![block * i..(block + 1) * i, 0..l[0]])
            .assign(&c[0]);
    }
    // view slots j = 2..N: [−M, −C^(j)] in row block j−2 (zero-based)
    let mut offset = l[0];
    for j in 1..n {
        let block = j - 1;
        let rows = s![block * i..(block + 1) * i, offset..offset + r];
        let mut mm = matrix.slice_mut(rows);
        mm.assign(m);
        mm *= -1.0;
        let rows = s![block * i..(block + 1) * i, offset + r..offset + r + l[j]];
        let mut cc = matrix.slice_mut(rows);
        cc.assign(&c[j]);
        cc *= -1.0;
        offset += r + l[j];
    }

    Ok(GammaMatrix {
        matrix,
        n_views: n,
        n_entities: i,
        common_dim: r,
        individual_dims: l,
    })
}

/// Dimension of the intersection of the views' column spans, via the rank
/// identity `dim(∩_n range(X^(n))) = Σ_n rank(X^(n)) − rank(𝚪)`, where `𝚪`
/// stacks the difference blocks `[X^(1), 0, …, −X^(j)‚ …, 0]` for
/// `j = 2..N`. Ranks use the relative tolerance policy.
pub fn intersection_dim(views: &[Array2<f64>]) -> Result<usize> {
    if views.is_empty() {
        return Err(Error::dim("need at least one view".to_string()));
    }
    let i = views[0].nrows();
    for (n, x) in views.iter().enumerate() {
        if x.nrows() != i {
            return Err(Error::dim(format!(
                "view {n} has {} rows, view 0 has {i}",
                x.nrows()
            )));
        }
    }
    let n = views.len();
    let rank_sum: usize = views
        .iter()
        .map(|x| numeric_rank(x.view(), RankPolicy::Relative))
        .sum::<Result<usize>>()?;

    let widths: Vec<usize> = views.iter().map(Array2::ncols).collect();
    let total: usize = widths.iter().sum();
    let mut stacked = Array2::zeros(((n - 1) * i, total));
    let mut offset = widths[0];
    for j in 1..n {
        let block = j - 1;
        stacked
            .slice_mut(s![block * i..(block + 1) * i, 0..widths[0]])
            .assign(&views[0]);
        let mut neg = stacked.slice_mut(s![
            block * i..(block + 1) * i,
            offset..offset + widths[j]
        ]);
        neg.assign(&views[j]);
        neg *= -1.0;
        offset += widths[j];
    }
    let stacked_rank = numeric_rank(stacked.view(), RankPolicy::Relative)?;
    Ok(rank_sum - stacked_rank)
}

/// Kernel-dimension identifiability check.
///
/// Builds the pairwise difference system over the factor blocks
/// `[M, C^(n)]` (all view pairs), computes its nullity `z_dim`, and decides
/// `holds ⇔ z_dim = R and every S^(n) has full column rank`. Inputs are
/// column-normalized first, so the verdict is invariant to column scaling.
pub fn check_theorem1(
    m: &Array2<f64>,
    c: &[Array2<f64>],
    s: &[Array2<f64>],
    r: usize,
) -> Result<Theorem1Check> {
    validate_factor_rows(m, c)?;
    if m.ncols() != r {
        return Err(Error::dim(format!(
            "common factor has {} columns, expected R = {r}",
            m.ncols()
        )));
    }
    if s.len() != c.len() {
        return Err(Error::dim(format!(
            "{} mixing matrices for {} views",
            s.len(),
            c.len()
        )));
    }
    let m_unit = normalize_columns(m.view());
    let blocks: Vec<Array2<f64>> = c
        .iter()
        .map(|cn| {
            let cn_unit = normalize_columns(cn.view());
            concatenate![Axis(1), m_unit.view(), cn_unit.view()]
        })
        .collect();
    let z = assemble_theta(&blocks)?;
    let width = z.ncols();
    let z_dim = width - numeric_rank(z.view(), RankPolicy::Relative)?;

    let mut s_full = true;
    for (n, sn) in s.iter().enumerate() {
        let expected = r + c[n].ncols();
        if sn.ncols() != expected {
            return Err(Error::dim(format!(
                "mixing matrix {n} has {} columns, expected R + L_{n} = {expected}",
                sn.ncols()
            )));
        }
        let sn_unit = normalize_columns(sn.view());
        if numeric_rank(sn_unit.view(), RankPolicy::Relative)? != expected {
            s_full = false;
        }
    }
    Ok(Theorem1Check {
        z_dim,
        holds: z_dim == r && s_full,
    })
}

/// Staircase-rank identifiability check: `holds ⇔` the staircase matrix of
/// [`build_gamma`] and every `S^(n)` have full column rank. Ranks and
/// margins are always reported so borderline verdicts stay visible.
pub fn check_theorem2(
    m: &Array2<f64>,
    c: &[Array2<f64>],
    s: &[Array2<f64>],
) -> Result<Theorem2Check> {
    if s.len() != c.len() {
        return Err(Error::dim(format!(
            "{} mixing matrices for {} views",
            s.len(),
            c.len()
        )));
    }
    let gamma = build_gamma(m, c)?;
    let gamma_margin = rank_margin(gamma.matrix.view(), RankPolicy::Relative)?;
    let gamma_full_rank = gamma_margin.rank == gamma.matrix.ncols();

    let r = m.ncols();
    let mut s_margins = Vec::with_capacity(s.len());
    let mut s_full = true;
    for (n, sn) in s.iter().enumerate() {
        let expected = r + c[n].ncols();
        if sn.ncols() != expected {
            return Err(Error::dim(format!(
                "mixing matrix {n} has {} columns, expected R + L_{n} = {expected}",
                sn.ncols()
            )));
        }
        let margin = rank_margin(sn.view(), RankPolicy::Relative)?;
        if margin.rank != expected {
            s_full = false;
        }
        s_margins.push(margin);
    }
    Ok(Theorem2Check {
        gamma_rank: gamma_margin.rank,
        gamma_full_rank,
        s_ranks: s_margins.iter().map(|m| m.rank).collect(),
        holds: gamma_full_rank && s_full,
        gamma_margin,
        s_margins,
    })
}

/// Integer necessary conditions on the dimensions alone: the averaged row
/// bound `R + (Σ L_n)/(N−1) ≤ I` and the per-view column bounds
/// `R + L_n ≤ K_n`. Evaluated exactly — no floating point.
pub fn check_necessary(dims: &ModelDims) -> NecessaryCheck {
    let n = dims.n_views();
    let r = dims.common_dim;
    let l_sum: usize = dims.individual_dims.iter().sum();
    let row_bound_ok = r * (n - 1) + l_sum <= dims.n_entities * (n - 1);
    let col_bounds_ok = dims
        .individual_dims
        .iter()
        .zip(dims.feature_dims.iter())
        .map(|(&l, &k)| r + l <= k)
        .collect();
    NecessaryCheck {
        row_bound_ok,
        col_bounds_ok,
    }
}

/// The explicit zero-one factors behind [`certificate_gamma3`]: `M` and
/// three individual factors for the parameter family `I = R + 3L/2`, `L`
/// even. Useful when the factor matrices themselves are needed (for mixing
/// with identity `S^(n)` or for the staircase-rank check).
pub fn certificate_factors(i: usize, r: usize, l: usize) -> Result<(Array2<f64>, Vec<Array2<f64>>)> {
    if !l.is_multiple_of(2) {
        return Err(Error::dim(format!(
            "certificate family needs an even individual dimension, got L = {l}"
        )));
    }
    if r < 1 {
        return Err(Error::dim(
            "certificate family needs a common dimension of at least 1".to_string(),
        ));
    }
    if i != r + 3 * l / 2 {
        return Err(Error::dim(format!(
            "certificate family requires I = R + 3L/2 = {}, got I = {i}",
            r + 3 * l / 2
        )));
    }
    let half = l / 2;

    // C^(1): the first L columns of the I×I identity.
    let mut c1 = Array2::zeros((i, l));
    for j in 0..l {
        c1[(j, j)] = 1.0;
    }
    // M: identity block on rows L..L+R−1.
    let mut m = Array2::zeros((i, r));
    for t in 0..r {
        m[(l + t, t)] = 1.0;
    }
    // C^(2): identity blocks at rows L/2..L−1 (columns L/2..L−1)
    // and rows I−L/2..I−1 (columns 0..L/2−1).
    let mut c2 = Array2::zeros((i, l));
    for t in 0..half {
        c2[(half + t, half + t)] = 1.0;
        c2[(i - half + t, t)] = 1.0;
    }
    // C^(3): identity blocks at rows 0..L/2−1 (columns L/2..L−1)
    // and rows I−L/2..I−1 (columns 0..L/2−1).
    let mut c3 = Array2::zeros((i, l));
    for t in 0..half {
        c3[(t, half + t)] = 1.0;
        c3[(i - half + t, t)] = 1.0;
    }
    Ok((m, vec![c1, c2, c3]))
}

/// Constructs the three-view zero-one certificate family (`I = R + 3L/2`,
/// `L` even), builds its staircase matrix — square, of side `2I` — and
/// verifies full column rank before returning it.
///
/// The existence of one full-rank member means the full-rank event is
/// generic: the deficient set is a proper algebraic subvariety, hence of
/// measure zero over continuous factor distributions.
pub fn certificate_gamma3(i: usize, r: usize, l: usize) -> Result<GammaMatrix> {
    let (m, c) = certificate_factors(i, r, l)?;
    let gamma = build_gamma(&m, &c)?;
    let rank = numeric_rank(gamma.matrix.view(), RankPolicy::Relative)?;
    if rank != gamma.matrix.ncols() {
        return Err(Error::Rank(format!(
            "certificate staircase matrix is rank deficient: rank {rank} of {} columns",
            gamma.matrix.ncols()
        )));
    }
    Ok(gamma)
}
