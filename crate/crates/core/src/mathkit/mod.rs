//! Deterministic numerical primitives: dense linear algebra, distribution
//! functions, PSD factorization, seedable random streams and sample moments.

mod dist;
mod linalg;
mod psd;
mod rng;
mod stats;

use thiserror::Error;

pub use dist::{
    chi_square_cdf, chi_square_quantile, regularized_lower_gamma, std_normal_cdf,
    std_normal_quantile,
};
pub use linalg::{axpy, dot, norm2, norm_inf, scaled, Matrix, Vector};
pub use psd::{cholesky_psd, sample_mvn, PsdFactor, RepairPolicy, MAX_CLIPPED_FRACTION};
pub use rng::RngStream;
pub use stats::{empirical_quantile, mean_and_cov, order_statistic_index};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MathError {
    #[error("{context}: dimension mismatch (expected {expected}, found {found})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("PSD repair clipped eigenvalue mass {clipped_mass:e} (trace {trace:e})")]
    RepairExceeded { clipped_mass: f64, trace: f64 },
    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("{0}: empty input")]
    Empty(&'static str),
    #[error("{0}: non-finite entries")]
    NonFinite(&'static str),
}
