//! Near-controllability analysis and control synthesis for discrete-time
//! bilinear systems of the form `x(k+1) = (I + u(k) B) x(k)`.
//!
//! The crate is organized in four layers:
//!
//! * [`linalg`] - dense real linear algebra at desk scale: spectra, Jordan
//!   decomposition, Krylov determinants, orthant signatures, and block-wise
//!   fractional matrix powers.
//! * [`poly`] - real polynomial construction, root finding, elementary
//!   symmetric functions, and the confluent-Vandermonde solver used by the
//!   gain sweep.
//! * [`structure`] - near-controllability verdicts, the near-controllability
//!   index, and enumeration of nearly-controllable subspaces.
//! * [`synthesis`] - the root-locus synthesis core: identity-return loops,
//!   transition matrices, gain sweeps, orthant connection, the full steering
//!   pipeline, and trajectory simulation.
//!
//! All operations are pure functions of their inputs; values are immutable
//! after construction and safe to share across threads.

pub mod linalg;
pub mod poly;
pub mod structure;
pub mod synthesis;

mod tolerances;

pub use tolerances::Tolerances;
