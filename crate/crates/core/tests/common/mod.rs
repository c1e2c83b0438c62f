//! Shared helpers for the integration suites: deterministic Gaussian
//! matrices and an intersection-dimension oracle that is independent of the
//! rank identity under test.
#![allow(dead_code)] // each test target uses a different subset

use gcca_core::linalg::{range_basis, truncated_svd_dense, RankPolicy};
use ndarray::{s, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| rng.sample::<f64, _>(StandardNormal))
}

/// A Haar-ish random orthogonal matrix: orthonormal range basis of a square
/// Gaussian draw (full rank with probability 1).
pub fn random_orthogonal(n: usize, seed: u64) -> Array2<f64> {
    range_basis(gaussian(n, n, seed).view(), RankPolicy::Relative)
        .unwrap()
        .into_matrix()
}

/// Dimension of the intersection of the views' ranges, computed by iterated
/// pairwise intersection through principal directions: directions whose
/// principal cosine reaches 1 (within 1e-8) are kept and intersected with
/// the next view. Never builds the stacked difference system, so it is an
/// independent oracle for the rank-identity route.
pub fn oracle_intersection_dim(views: &[Array2<f64>]) -> usize {
    let mut basis = range_basis(views[0].view(), RankPolicy::Relative)
        .unwrap()
        .into_matrix();
    for x in &views[1..] {
        if basis.ncols() == 0 {
            return 0;
        }
        let other = range_basis(x.view(), RankPolicy::Relative)
            .unwrap()
            .into_matrix();
        basis = intersect_orthonormal(&basis, &other);
    }
    basis.ncols()
}

fn intersect_orthonormal(b1: &Array2<f64>, b2: &Array2<f64>) -> Array2<f64> {
    if b1.ncols() == 0 || b2.ncols() == 0 {
        return Array2::zeros((b1.nrows(), 0));
    }
    let cross = b1.t().dot(b2);
    let k = cross.nrows().min(cross.ncols());
    let f = truncated_svd_dense(cross.view(), k, 1e-12).unwrap();
    let keep = f
        .singular_values
        .iter()
        .take_while(|&&c| c >= 1.0 - 1e-8)
        .count();
    b1.dot(&f.u.slice(s![.., 0..keep]))
}
