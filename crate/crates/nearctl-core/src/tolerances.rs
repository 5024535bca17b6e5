use serde::{Deserialize, Serialize};

/// Numerical thresholds shared across the whole pipeline.
///
/// Every threshold is relative to a problem-dependent scale (matrix norm,
/// root magnitude, ...) chosen at the point of use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative gap below which two eigenvalues are clustered into one.
    pub eig_cluster: f64,
    /// Singular-value threshold for nullspace/rank decisions.
    pub rank_tol: f64,
    /// Max |imaginary part| relative to root magnitude for a root to count
    /// as real.
    pub real_root_tol: f64,
    /// Minimum relative pairwise gap (and minimum relative magnitude) for
    /// the roots accepted by the gain sweep.
    pub distinct_tol: f64,
    /// Relative trajectory-endpoint error bound for plan verification.
    pub verify_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eig_cluster: 1e-6,
            rank_tol: 1e-8,
            real_root_tol: 1e-9,
            distinct_tol: 1e-7,
            verify_tol: 1e-6,
        }
    }
}

impl Tolerances {
    /// Check the internal ordering constraints. Returns a description of the
    /// first violated constraint, if any.
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("eig_cluster", self.eig_cluster),
            ("rank_tol", self.rank_tol),
            ("real_root_tol", self.real_root_tol),
            ("distinct_tol", self.distinct_tol),
            ("verify_tol", self.verify_tol),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(format!("tolerance {name} must be strictly positive, got {v}"));
            }
        }
        if !(self.real_root_tol < self.distinct_tol) {
            return Err(format!(
                "real_root_tol ({}) must be smaller than distinct_tol ({})",
                self.real_root_tol, self.distinct_tol
            ));
        }
        if !(self.distinct_tol < 1.0) {
            return Err(format!("distinct_tol ({}) must be below 1", self.distinct_tol));
        }
        Ok(())
    }
}
