//! Real-coefficient polynomials: construction from roots, root finding
//! (Aberth-Ehrlich with a companion-matrix fallback), elementary symmetric
//! functions, and the confluent-Vandermonde solver behind the gain sweep.

mod roots;
mod vandermonde;

pub use roots::{poly_roots, RootSet};
pub use vandermonde::{build_confluent_vandermonde, symmetric_function_rhs, solve_confluent_system};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("root finding did not converge")]
    NoConvergence,
    #[error("nodes must be nonzero, real, and pairwise distinct")]
    DegenerateNodes,
    #[error("linear system is singular")]
    Singular,
    #[error("coefficients must be finite")]
    NonFinite,
}

/// Real polynomial as descending coefficients (leading coefficient first).
///
/// The leading coefficient is nonzero unless this is the zero polynomial,
/// which is represented as `[0.0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Normalizing constructor: trims leading zeros.
    pub fn new(coeffs: Vec<f64>) -> Self {
        let first = coeffs.iter().position(|&c| c != 0.0).unwrap_or(coeffs.len());
        let trimmed: Vec<f64> = if first == coeffs.len() {
            vec![0.0]
        } else {
            coeffs[first..].to_vec()
        };
        Polynomial { coeffs: trimmed }
    }

    pub fn one() -> Self {
        Polynomial { coeffs: vec![1.0] }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs == [0.0]
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[0]
    }

    /// Monic polynomial with exactly the given real roots (with
    /// multiplicity).
    pub fn from_roots(roots: &[f64]) -> Self {
        Polynomial { coeffs: expand_roots(roots) }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Polynomial {
        let d = self.degree();
        if d == 0 {
            return Polynomial::new(vec![0.0]);
        }
        let coeffs = self
            .coeffs
            .iter()
            .take(d)
            .enumerate()
            .map(|(i, &c)| c * (d - i) as f64)
            .collect();
        Polynomial::new(coeffs)
    }

    /// `self + k * other`, aligning by degree.
    pub fn scaled_add(&self, k: f64, other: &Polynomial) -> Polynomial {
        let len = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![0.0; len];
        for (i, &c) in self.coeffs.iter().enumerate() {
            out[len - self.coeffs.len() + i] += c;
        }
        for (i, &c) in other.coeffs.iter().enumerate() {
            out[len - other.coeffs.len() + i] += k * c;
        }
        Polynomial::new(out)
    }
}

/// Monic expansion of `prod (s - r_i)` as descending coefficients. This is
/// the single code path shared by `Polynomial::from_roots` and
/// `elementary_symmetric`, so the two agree bit for bit.
fn expand_roots(roots: &[f64]) -> Vec<f64> {
    let mut coeffs = vec![1.0];
    for &r in roots {
        let mut next = vec![0.0; coeffs.len() + 1];
        for (i, &c) in coeffs.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        coeffs = next;
    }
    coeffs
}

/// Signed elementary symmetric functions `(z_1, ..., z_d)` with
/// `prod (s - v_i) = s^d + z_1 s^{d-1} + ... + z_d`, i.e.
/// `z_k = (-1)^k e_k(values)`.
pub fn elementary_symmetric(values: &[f64]) -> Vec<f64> {
    expand_roots(values)[1..].to_vec()
}
