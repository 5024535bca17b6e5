//! Root-locus control synthesis for `x(k+1) = (I + u(k) B) x(k)`:
//! identity-return loops, transition matrices and their fractional roots,
//! gain sweeps over the closed-loop polynomial, orthant connection, the full
//! steering pipeline, and trajectory simulation.

mod locus;
mod loops;
mod refine;
mod steer;

pub use locus::{
    default_k_grid, gain_search_real_roots, locus_trace, GainSearchOutcome, LocusProblem,
    LocusRow,
};
pub use loops::identity_loop;
pub use steer::{
    connect_orthant, mu_coefficients, steer, steer_in_subspace, transition_matrix, Endpoint,
    Endpoints, SteerOptions, SteeringPlan, TransitionMatrix,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{LinalgError, Matrix};
use crate::poly::PolyError;
use crate::structure::FailureReason;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthesisError {
    #[error("a Jordan block of dimension {size} exceeds two; identity-return loops do not exist")]
    BigJordanBlock { size: usize },
    #[error("B has a zero eigenvalue")]
    ZeroEigenvalue,
    #[error("no gain in the sweep grid produced admissible real roots")]
    GainSearchFailed,
    #[error("no gain in the grid yields all-real, nonzero, pairwise distinct roots")]
    Infeasible,
    #[error("states lie in different orthants")]
    OrthantMismatch,
    #[error("orthant connection search exhausted without reaching the target signature")]
    ConnectFailed,
    #[error("system is not nearly controllable: {reasons:?}")]
    NotNearlyControllable { reasons: Vec<FailureReason> },
    #[error("{endpoint} endpoint lies on the removed hypersurface")]
    EndpointOnHypersurface { endpoint: Endpoint },
    #[error("q schedule exhausted at q = {q_max} without a verified plan")]
    QExhausted { q_max: u64 },
    #[error("state has support outside the subspace (J-coordinate {coordinate})")]
    SupportMismatch { coordinate: usize },
    #[error("auxiliary poles violate the ordering condition")]
    InvalidAuxPoles,
    #[error("synthesized plan failed verification (residual {residual:.3e})")]
    VerificationFailed { residual: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Ordered nonzero real controls `u(0), u(1), ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ControlSequence {
    values: Vec<f64>,
}

impl ControlSequence {
    /// Wrap synthesized controls; every value must be nonzero and finite.
    pub fn new(values: Vec<f64>) -> Result<Self, SynthesisError> {
        if values.iter().any(|v| !v.is_finite() || *v == 0.0) {
            return Err(SynthesisError::GainSearchFailed);
        }
        Ok(ControlSequence { values })
    }

    pub fn empty() -> Self {
        ControlSequence { values: Vec::new() }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// The two auxiliary poles `(lambda_{m+1}, lambda_{m+2})` appended to the
/// spectrum before the gain sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxPoles {
    pub lam_m1: f64,
    pub lam_m2: f64,
}

impl AuxPoles {
    /// `0 < |lam_m1| < min |lambda_i|` and `max |lambda_i| < -lam_m2`.
    pub fn satisfies_condition(&self, lams: &[f64]) -> bool {
        let min = lams.iter().fold(f64::INFINITY, |a, l| a.min(l.abs()));
        let max = lams.iter().fold(0.0f64, |a, l| a.max(l.abs()));
        self.lam_m1 != 0.0 && self.lam_m1.abs() < min && max < -self.lam_m2
    }
}

/// Default auxiliary-pole rule `(min |lambda| / 2, -2 max |lambda|)`, which
/// satisfies the ordering condition strictly for any nonzero spectrum.
pub fn choose_aux_poles(lams: &[f64]) -> AuxPoles {
    let min = lams.iter().fold(f64::INFINITY, |a, l| a.min(l.abs()));
    let max = lams.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    AuxPoles { lam_m1: min / 2.0, lam_m2: -2.0 * max }
}

/// Run the system law from `x0` under `controls`; the trajectory includes
/// the initial state, so its length is `controls.len() + 1`.
pub fn simulate(b: &Matrix, x0: &[f64], controls: &[f64]) -> Vec<Vec<f64>> {
    assert_eq!(b.n(), x0.len(), "state dimension mismatch");
    let mut traj = Vec::with_capacity(controls.len() + 1);
    traj.push(x0.to_vec());
    let mut x = x0.to_vec();
    for &u in controls {
        let mut next = b.matvec(&x);
        for (n, xi) in next.iter_mut().zip(&x) {
            *n = xi + u * *n;
        }
        x = next.clone();
        traj.push(next);
    }
    traj
}

/// `|| prod_k (I + u_k J) - target ||_F`.
pub(crate) fn product_residual(j: &Matrix, controls: &[f64], target: &Matrix) -> f64 {
    let mut acc = Matrix::identity(j.n());
    for &u in controls {
        acc = j.step_matrix(u).matmul(&acc);
    }
    acc.sub(target).frobenius_norm()
}


/// `|| prod_k (I + u_k J) - I ||_F` - the verification residual of an
/// identity-return loop.
pub fn identity_product_residual(j: &Matrix, controls: &[f64]) -> f64 {
    product_residual(j, controls, &Matrix::identity(j.n()))
}
