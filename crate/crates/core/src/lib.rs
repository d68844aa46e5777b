//! Numerical laboratory for quasi-linear Hamiltonian systems and their
//! matrix Riccati reduction.
//!
//! The crate integrates the coupled first-order system for a vector pair
//! (phi, psi) with state-dependent coefficient matrices, freezes those
//! coefficients along a solution, runs the associated matrix Riccati flow
//! and its companion linear system, and checks — as numerical residuals —
//! the determinant identities, positive-semidefinite cone invariance and
//! finite-horizon non-oscillation verdicts that tie the three together.
//!
//! Layout:
//! - [`linalg`]: complex dense matrices, LU, Hermitian eigensolver.
//! - [`integrate`]: adaptive embedded Runge-Kutta with dense output,
//!   event location and blow-up detection.
//! - [`quad`]: adaptive Simpson quadrature for the trace integrals.
//! - [`system`]: the coefficient-family catalog, envelopes and hypothesis
//!   sampling.
//! - [`riccati`]: frozen coefficients, the Riccati and companion linear
//!   flows, and the identity residual checks.
//! - [`oscillation`]: conjoined initial data, zero monitoring, the
//!   delta-regularization experiment and the end-to-end verification
//!   pipeline.
//! - [`scenario`]: JSON scenario files, run reports and CSV artifacts.

pub mod integrate;
pub mod linalg;
pub mod oscillation;
pub mod quad;
pub mod riccati;
pub mod scenario;
pub mod system;

pub use num_complex::Complex64;

/// Crate version reported in run artifacts.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Version of the scenario/report JSON contract.
pub const SCHEMA_VERSION: u32 = 1;
