//! Identity-return control loops: `2m+3` pairwise-distinct nonzero reals
//! with `prod_k (I + u_k J) = I`.
//!
//! The construction solves `D(s) + K = 0` for a small feasible gain; its
//! roots are the reciprocals of the controls. Because the denominator
//! doubles every distinct eigenvalue, the same controls close the loop for
//! any block layout with sizes at most two - cyclic or not - so noncyclic
//! forms need no separate path: their largest cyclic submatrix sees the same
//! eigenvalues.

use super::locus::{default_k_grid, gain_search_real_roots, ladder_skip, LocusProblem};
use super::refine::{refine_controls, NodeCondition};
use super::{choose_aux_poles, product_residual, ControlSequence, SynthesisError};
use crate::linalg::{JordanForm, Matrix};
use crate::Tolerances;

/// Absolute bound on `||prod (I + u_k J) - I||_F` for a returned loop.
const LOOP_RESIDUAL_BOUND: f64 = 1e-8;

/// Compute an identity-return loop for the Jordan form `jf`.
pub fn identity_loop(
    jf: &JordanForm,
    tol: &Tolerances,
) -> Result<ControlSequence, SynthesisError> {
    let largest = jf.largest_block_size();
    if largest > 2 {
        return Err(SynthesisError::BigJordanBlock { size: largest });
    }
    if jf.has_zero_eigenvalue() {
        return Err(SynthesisError::ZeroEigenvalue);
    }
    let lams = jf.distinct_eigenvalues();
    let aux = choose_aux_poles(&lams);
    let problem = LocusProblem::identity_return(&lams, aux);
    let grid = default_k_grid(&problem);

    let conds: Vec<NodeCondition> = lams
        .iter()
        .map(|&l| NodeCondition { lambda: l, diag: 1.0, off: Some(0.0) })
        .chain(
            [aux.lam_m1, aux.lam_m2]
                .iter()
                .map(|&a| NodeCondition { lambda: a, diag: 1.0, off: None }),
        )
        .collect();

    let mut offset = 0;
    while offset < grid.len() {
        match gain_search_real_roots(&problem, &grid[offset..], tol) {
            Ok(out) => {
                offset += out.grid_index + 1;
                let mut u = out.controls.values().to_vec();
                if !refine_controls(&mut u, &conds) || !distinct_nonzero(&u, tol) {
                    u = out.controls.values().to_vec();
                }
                let residual = product_residual(&jf.j, &u, &identity(jf));
                if residual <= LOOP_RESIDUAL_BOUND {
                    return ControlSequence::new(u);
                }
                log::debug!(
                    "identity loop at gain {:.3e} verified poorly ({residual:.3e}), trying larger gains",
                    out.gain
                );
                offset += ladder_skip(residual, LOOP_RESIDUAL_BOUND);
            }
            Err(SynthesisError::Infeasible) => break,
            Err(e) => return Err(e),
        }
    }
    Err(SynthesisError::GainSearchFailed)
}

fn distinct_nonzero(u: &[f64], tol: &crate::Tolerances) -> bool {
    let scale = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if u.iter().any(|v| v.abs() <= f64::MIN_POSITIVE) {
        return false;
    }
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            if (u[i] - u[j]).abs() <= tol.real_root_tol * scale {
                return false;
            }
        }
    }
    true
}

fn identity(jf: &JordanForm) -> Matrix {
    Matrix::identity(jf.n())
}
