//! Complex dense linear algebra: the matrix arithmetic, LU machinery and
//! Hermitian eigenvalue solver that every cone monitor and trace identity
//! in this crate rests on.
//!
//! Everything here works on small dense `n x n` matrices (`n` up to a few
//! hundred). The Frobenius norm is the one norm used for envelopes,
//! tolerances and condition estimates throughout the crate.

mod eigen;
mod lu;
mod matrix;

pub use eigen::EigenResult;
pub use lu::LuFactors;
pub use matrix::{CMatrix, HermitianMatrix};

use thiserror::Error;

/// Relative symmetry defect allowed when a matrix is treated as Hermitian.
pub const HERMITIAN_DEFECT_TOL: f64 = 1e-12;

/// Iteration budget multiplier for the eigenvalue iteration (`30 * n` total,
/// i.e. 30 QL sweeps per eigenvalue).
pub const EIGEN_ITER_BUDGET: usize = 30;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix entries must be finite (found NaN or infinity at row {row}, col {col})")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: {left}x{left} vs {right}x{right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("matrix is not Hermitian within tolerance (symmetry defect {defect:.3e})")]
    NotHermitian { defect: f64 },
    #[error("eigenvalue iteration failed to converge within {iterations} sweeps")]
    ConvergenceFailure { iterations: usize },
    #[error("matrix too ill-conditioned to invert (condition estimate {cond:.3e} exceeds cap {cap:.3e})")]
    IllConditioned { cond: f64, cap: f64 },
}
