//! Dense real linear algebra at desk scale (n up to ~20).
//!
//! Everything here is written for small matrices where robustness and
//! testability matter more than asymptotics: LU with partial pivoting,
//! one-sided Jacobi SVD, a real Hessenberg QR eigensolver, and a Jordan
//! decomposition built from generalized-eigenvector chains.

mod eig;
mod jordan;
mod matrix;
mod svd;

pub use eig::{eigen_real, Spectrum};
pub use jordan::{
    jordan_decompose, krylov_det, matrix_fractional_root, orthant_signature, CanonicalStructure,
    JordanBlock, JordanForm, Sign,
};
pub use matrix::Matrix;

pub(crate) use eig::eigenvalues_complex;

use thiserror::Error;

/// Errors produced by the linear-algebra layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("matrix must be square")]
    NotSquare,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("eigenvalue iteration failed to converge")]
    NoConvergence,
    #[error("matrix has complex eigenvalues (max |Im| = {max_imag:.3e}); only real spectra are supported")]
    ComplexSpectrum { max_imag: f64 },
    #[error("rank decisions are ambiguous at the configured tolerance: {0}")]
    IllConditioned(String),
    #[error("state lies on the removed hypersurface (J-coordinate {coordinate})")]
    OnHypersurface { coordinate: usize },
    #[error("block diagonal entry {index} is not strictly positive")]
    NonPositiveDiagonal { index: usize },
    #[error("matrix is not in the expected canonical form: {0}")]
    NotCanonical(String),
}
