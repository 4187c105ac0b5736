//! Convergence diagnostics: eigenvector min-max estimates, the one-step
//! residual bound, and convergence benchmarks.

mod bench;
mod eig;
mod minmax;

pub use bench::{
    bench_convergence, bench_matrix_vs_vector, branch_counts, gaussian_matrix, gaussian_vector,
    kronecker_operator, write_bench_csv, BenchConfig, BenchRecord, MatrixVsVector,
};
pub use eig::{orthogonal_eigenvectors, RealEigenvectors};
pub use minmax::{
    evaluation_dim, minmax_eig_estimate, minmax_eig_search, minmax_table, minmax_table_for, step_bound, EigSearch,
    MinMaxEstimate, NEGLIGIBLE_REAL_PART,
};

use crate::ortho::TransformKind;

/// Per-(family, trial) seed so trials are independent of scheduling order.
pub fn derive_seed(base: u64, kind: TransformKind, trial: u64) -> u64 {
    // splitmix64 finalizer over the combined key
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(trial + 1))
        .wrapping_add((kind.code() as u64) << 56);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
