//! Property suites for the shared linear-algebra kernels.

mod common;

use common::{gaussian, random_orthogonal};
use gcca_core::linalg::{
    frobenius, nullspace_basis, numeric_rank, orthonormality_defect, range_basis,
    singular_values, subspace_angle, truncated_svd_dense, RankPolicy, SubspaceBasis,
};
use ndarray::{Array2, Axis};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn returned_bases_are_orthonormal(seed in 0u64..u64::MAX / 2, rows in 4usize..20, cols in 1usize..8) {
        let cols = cols.min(rows);
        let a = gaussian(rows, cols, seed);
        let b = range_basis(a.view(), RankPolicy::Relative).unwrap();
        prop_assert!(orthonormality_defect(b.basis()) <= 1e-10 * b.dim().max(1) as f64);

        let f = truncated_svd_dense(a.view(), cols, 1e-10).unwrap();
        prop_assert!(orthonormality_defect(&f.u) <= 1e-10 * cols as f64);
        prop_assert!(orthonormality_defect(&f.v) <= 1e-10 * cols as f64);
    }

    #[test]
    fn full_truncation_reconstructs(seed in 0u64..u64::MAX / 2, rows in 3usize..16, cols in 3usize..16) {
        let a = gaussian(rows, cols, seed);
        let k = rows.min(cols);
        let f = truncated_svd_dense(a.view(), k, 1e-10).unwrap();
        let recon = f.u.dot(&Array2::from_diag(&f.singular_values)).dot(&f.v.t());
        prop_assert!(frobenius((&a - &recon).view()) <= 1e-10 * frobenius(a.view()));
    }

    #[test]
    fn angle_metric_axioms(seed in 0u64..u64::MAX / 2, rows in 4usize..16, dim in 1usize..4) {
        let dim = dim.min(rows - 1);
        let b1 = range_basis(gaussian(rows, dim, seed).view(), RankPolicy::Relative).unwrap();
        let b2 = range_basis(gaussian(rows, dim, seed ^ 0x5bd1e995).view(), RankPolicy::Relative).unwrap();
        let fwd = subspace_angle(&b1, &b2).unwrap();
        let back = subspace_angle(&b2, &b1).unwrap();
        // symmetric, bounded, zero on itself
        prop_assert!((fwd - back).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&fwd));
        prop_assert!(subspace_angle(&b1, &b1).unwrap() <= 1e-12);
    }

    #[test]
    fn angle_invariant_under_basis_rotation(seed in 0u64..u64::MAX / 2, rows in 4usize..16, dim in 1usize..4) {
        let dim = dim.min(rows - 1);
        let b1 = range_basis(gaussian(rows, dim, seed).view(), RankPolicy::Relative).unwrap();
        let b2 = range_basis(gaussian(rows, dim, seed ^ 0xff51afd7).view(), RankPolicy::Relative).unwrap();
        let rot = random_orthogonal(dim, seed ^ 0xc4ceb9fe);
        let rotated = SubspaceBasis::new(b2.basis().dot(&rot)).unwrap();
        let base = subspace_angle(&b1, &b2).unwrap();
        let after = subspace_angle(&b1, &rotated).unwrap();
        prop_assert!((base - after).abs() <= 1e-10);
    }

    #[test]
    fn nullspace_columns_satisfy_residual_contract(
        seed in 0u64..u64::MAX / 2,
        rows in 3usize..14,
        cols in 3usize..14,
        d in 1usize..4,
    ) {
        let d = d.min(cols);
        let a = gaussian(rows, cols, seed);
        let r = nullspace_basis(a.view(), d).unwrap();
        let sigma_1 = r.spectrum[0];
        // largest singular value among the kept trailing directions
        let bound = r.spectrum[cols - d] + 1e-12 * sigma_1;
        for j in 0..d {
            let col = r.basis.column(j).to_owned();
            let image = a.dot(&col);
            prop_assert!(image.dot(&image).sqrt() <= bound + 1e-12);
        }
    }

    #[test]
    fn rank_invariances(seed in 0u64..u64::MAX / 2, rows in 3usize..12, inner in 1usize..6, scale in 1u32..1000) {
        let inner = inner.min(rows);
        let a = gaussian(rows, inner, seed).dot(&gaussian(inner, rows + 1, seed ^ 0x9e3779b9));
        let base = numeric_rank(a.view(), RankPolicy::Relative).unwrap();
        prop_assert_eq!(base, inner);

        let scaled = &a * (scale as f64 / 17.0);
        prop_assert_eq!(numeric_rank(scaled.view(), RankPolicy::Relative).unwrap(), base);

        let mut permuted = a.clone();
        permuted.invert_axis(Axis(0));
        permuted.invert_axis(Axis(1));
        prop_assert_eq!(numeric_rank(permuted.view(), RankPolicy::Relative).unwrap(), base);
    }

    #[test]
    fn spectrum_is_nonincreasing_and_nonnegative(seed in 0u64..u64::MAX / 2, rows in 2usize..14, cols in 2usize..14) {
        let a = gaussian(rows, cols, seed);
        let s = singular_values(a.view()).unwrap();
        for i in 1..s.len() {
            prop_assert!(s[i] <= s[i - 1] + 1e-14);
            prop_assert!(s[i] >= 0.0);
        }
    }
}
