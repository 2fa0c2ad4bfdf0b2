//! Dense kernels, truncated SVD backends and best-fit-subspace projection.
//!
//! Points are stored one per row, so the right singular vectors of a data
//! matrix span its best-fit subspace.

mod matrix;
mod svd;

pub use matrix::{dist_sq, dot, norm_sq, Matrix};
pub use svd::{
    compare_svd_backends, exact_truncated_svd, exact_truncated_svd_with_limit, principal_angles,
    project, randomized_truncated_svd, reconstruction_error, spectrum, truncated_svd,
    weighted_best_fit, Projector, SvdBackend, SvdComparison, SvdTruncation, DEFAULT_OVERSAMPLE,
    DEFAULT_POWER_ITERATIONS, EXACT_ENTRY_LIMIT,
};
