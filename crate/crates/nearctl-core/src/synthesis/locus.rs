//! The closed-loop polynomial `D(s) + K N(s)` and the gain sweep that looks
//! for a gain at which every root is real, nonzero, and pairwise distinct.
//!
//! `D(s) = s (s+l_1)^2 ... (s+l_m)^2 (s+l_{m+1}) (s+l_{m+2})` doubles every
//! distinct eigenvalue regardless of its block size; the two simple factors
//! come from the auxiliary poles. The numerator is the constant 1 for
//! identity-return loops and the mu-built polynomial for steering.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{AuxPoles, ControlSequence, SynthesisError};
use crate::poly::{poly_roots, PolyError, Polynomial};
use crate::Tolerances;

/// Denominator/numerator pair of the open-loop transfer function `K G(s)`;
/// the gain is supplied separately. The denominator's pole multiset is kept
/// alongside its expansion: expanded coefficients are what the root finder
/// wants, while the factored form evaluates without the cancellation noise
/// of the expansion and is used to polish roots to full accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocusProblem {
    pub denominator: Polynomial,
    pub numerator: Polynomial,
    /// Negated roots of the denominator: `0, l_1, l_1, ..., l_{m+1}, l_{m+2}`.
    poles: Vec<f64>,
}

impl LocusProblem {
    /// Identity-return problem: no finite zeros.
    pub fn identity_return(lams: &[f64], aux: AuxPoles) -> Self {
        let poles = pole_multiset(lams, aux);
        LocusProblem {
            denominator: denominator(&poles),
            numerator: Polynomial::one(),
            poles,
        }
    }

    /// Steering problem with the mu-built numerator
    /// `sum_j (-1)^{2m+3-j} mu_j s^{2m+3-j} + 1`.
    pub fn with_mu(lams: &[f64], aux: AuxPoles, mu: &[f64]) -> Self {
        assert_eq!(mu.len(), 2 * lams.len() + 2, "mu must have 2m+2 entries");
        let d = mu.len();
        let mut coeffs = vec![0.0; d + 1];
        for (j0, &m) in mu.iter().enumerate() {
            let power = d + 1 - (j0 + 1); // 2m+3-j for j = j0+1
            let sign = if power % 2 == 0 { 1.0 } else { -1.0 };
            coeffs[j0] = sign * m;
        }
        coeffs[d] = 1.0;
        let poles = pole_multiset(lams, aux);
        LocusProblem {
            denominator: denominator(&poles),
            numerator: Polynomial::new(coeffs),
            poles,
        }
    }

    pub fn closed_loop(&self, gain: f64) -> Polynomial {
        self.denominator.scaled_add(gain, &self.numerator)
    }

    /// `D(z) + K N(z)` with the denominator evaluated in factored form.
    fn eval_factored(&self, gain: f64, z: Complex64) -> Complex64 {
        let mut d = Complex64::new(1.0, 0.0);
        for &p in &self.poles {
            d *= z + p;
        }
        d + gain * self.numerator.eval_complex(z)
    }

    /// Derivative of `eval_factored` via leave-one-out products.
    fn eval_factored_derivative(&self, gain: f64, z: Complex64) -> Complex64 {
        let k = self.poles.len();
        let mut prefix = vec![Complex64::new(1.0, 0.0); k + 1];
        for (i, &p) in self.poles.iter().enumerate() {
            prefix[i + 1] = prefix[i] * (z + p);
        }
        let mut suffix = Complex64::new(1.0, 0.0);
        let mut dsum = Complex64::new(0.0, 0.0);
        for i in (0..k).rev() {
            dsum += prefix[i] * suffix;
            suffix *= z + self.poles[i];
        }
        dsum + gain * self.numerator.derivative().eval_complex(z)
    }

    /// A few Newton steps on the factored closed loop. The expanded
    /// polynomial's coefficient rounding perturbs roots enough to break the
    /// exact-cancellation identities downstream; the factored evaluation
    /// restores them.
    fn polish_root(&self, gain: f64, mut z: Complex64) -> Complex64 {
        for _ in 0..3 {
            let f = self.eval_factored(gain, z);
            let df = self.eval_factored_derivative(gain, z);
            if df.norm() == 0.0 {
                break;
            }
            let step = f / df;
            if !step.is_finite() {
                break;
            }
            z -= step;
        }
        z
    }
}

fn pole_multiset(lams: &[f64], aux: AuxPoles) -> Vec<f64> {
    let mut poles = vec![0.0];
    for &l in lams {
        poles.push(l);
        poles.push(l);
    }
    poles.push(aux.lam_m1);
    poles.push(aux.lam_m2);
    poles
}

fn denominator(poles: &[f64]) -> Polynomial {
    let roots: Vec<f64> = poles.iter().map(|p| -p).collect();
    Polynomial::from_roots(&roots)
}

/// Geometric gain grid `1e-8 * S, ..., 1e6 * S`, where `S` is the magnitude
/// of the denominator's s^1 coefficient (its last nonzero coefficient by
/// construction). The ratio is `2^(1/4)`: clustered spectra open feasibility
/// windows narrower than a factor of two, which a coarser grid steps over.
pub fn default_k_grid(problem: &LocusProblem) -> Vec<f64> {
    let coeffs = problem.denominator.coeffs();
    let mut s = if coeffs.len() >= 2 { coeffs[coeffs.len() - 2].abs() } else { 0.0 };
    if s == 0.0 {
        s = coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    }
    let ratio = 2f64.powf(0.25);
    let mut grid = Vec::new();
    let mut k = 1e-8 * s;
    let top = 1e6 * s;
    while k <= top {
        grid.push(k);
        k *= ratio;
    }
    grid
}

/// The first admissible gain of a sweep and the controls it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSearchOutcome {
    pub gain: f64,
    /// Index of the accepted gain within the grid that was scanned.
    pub grid_index: usize,
    /// Accepted roots, ascending.
    pub roots: Vec<f64>,
    /// Reciprocals of the roots, in root order.
    pub controls: ControlSequence,
}

/// Scan `k_grid` in order and return the first gain whose closed-loop roots
/// are all real, at least `distinct_tol * scale` in magnitude, and pairwise
/// separated by at least `distinct_tol * scale` (`scale` = largest root
/// magnitude). Gains where the root finder stalls are skipped.
pub fn gain_search_real_roots(
    problem: &LocusProblem,
    k_grid: &[f64],
    tol: &Tolerances,
) -> Result<GainSearchOutcome, SynthesisError> {
    // at small gains the branch leaving s = 0 sits at roughly
    // -K N(0) / D'(0); gains that cannot clear the magnitude floor are
    // skipped without root finding (conservative factor on the estimate)
    let dcoeffs = problem.denominator.coeffs();
    let s1 = if dcoeffs.len() >= 2 { dcoeffs[dcoeffs.len() - 2].abs() } else { 0.0 };
    let pole_scale = problem.poles.iter().fold(0.0f64, |a, p| a.max(p.abs()));
    let n0 = problem.numerator.coeffs().last().copied().unwrap_or(1.0).abs();

    for (idx, &gain) in k_grid.iter().enumerate() {
        if s1 > 0.0 && n0 > 0.0 {
            let origin_root_estimate = gain * n0 / s1;
            if origin_root_estimate < 0.25 * tol.distinct_tol * pole_scale {
                continue;
            }
        }
        let closed = problem.closed_loop(gain);
        let roots = match poly_roots(&closed, tol) {
            Ok(rs) => rs,
            Err(PolyError::NoConvergence) => {
                log::debug!("gain {gain:.3e}: root finder did not converge, skipping");
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let polished = polish_and_classify(problem, gain, &roots.roots, tol);
        if polished.iter().any(|z| z.im != 0.0) {
            continue;
        }
        let mut reals: Vec<f64> = polished.iter().map(|z| z.re).collect();
        reals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let scale = reals.iter().fold(0.0f64, |a, r| a.max(r.abs()));
        let floor = tol.distinct_tol * scale;
        if reals.iter().any(|r| r.abs() < floor) {
            continue;
        }
        if reals.windows(2).any(|w| (w[1] - w[0]).abs() < floor) {
            continue;
        }
        let controls = ControlSequence::new(reals.iter().map(|r| 1.0 / r).collect())?;
        return Ok(GainSearchOutcome { gain, grid_index: idx, roots: reals, controls });
    }
    Err(SynthesisError::Infeasible)
}

/// Newton-polish every root on the factored closed loop, then flag/zero the
/// near-real ones.
fn polish_and_classify(
    problem: &LocusProblem,
    gain: f64,
    roots: &[Complex64],
    tol: &Tolerances,
) -> Vec<Complex64> {
    roots
        .iter()
        .map(|&z| {
            let p = problem.polish_root(gain, z);
            if p.im.abs() <= tol.real_root_tol * p.norm().max(1.0) {
                Complex64::new(p.re, 0.0)
            } else {
                p
            }
        })
        .collect()
}

/// How many extra grid points to skip after a verification failure: the
/// endpoint error shrinks with the largest control, which shrinks with the
/// gain, so a residual far above the bound licenses a proportional jump
/// (half the log-estimate, capped).
pub(crate) fn ladder_skip(residual: f64, bound: f64) -> usize {
    if !(residual > bound) || !residual.is_finite() {
        return 0;
    }
    let per_step = 0.25 * std::f64::consts::LN_2; // grid ratio 2^(1/4)
    let steps = 0.5 * (residual / bound).ln() / per_step;
    (steps.max(0.0) as usize).min(24)
}

/// One sampled gain of a root-locus trace.
#[derive(Debug, Clone, PartialEq)]
pub struct LocusRow {
    pub gain: f64,
    /// Roots sorted by (re, im).
    pub roots: Vec<Complex64>,
}

/// Roots of `D(s) + K N(s)` for each sampled gain, for external plotting.
pub fn locus_trace(
    problem: &LocusProblem,
    k_samples: &[f64],
    tol: &Tolerances,
) -> Result<Vec<LocusRow>, SynthesisError> {
    let mut rows = Vec::with_capacity(k_samples.len());
    for &gain in k_samples {
        let raw = poly_roots(&problem.closed_loop(gain), tol)?;
        let mut roots = polish_and_classify(problem, gain, &raw.roots, tol);
        roots.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        rows.push(LocusRow { gain, roots });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthesis::choose_aux_poles;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn fixture_problem() -> LocusProblem {
        LocusProblem::identity_return(&[2.0, -2.0], AuxPoles { lam_m1: 1.0, lam_m2: -4.0 })
    }

    #[test]
    fn denominator_matches_expansion() {
        // s (s+2)^2 (s-2)^2 (s+1) (s-4)
        let p = fixture_problem().denominator;
        assert_eq!(
            p.coeffs(),
            &[1.0, -3.0, -12.0, 24.0, 48.0, -48.0, -64.0, 0.0]
        );
    }

    #[test]
    fn numerator_sign_convention() {
        // m=1: numerator = mu_1 s^4 - mu_2 s^3 + mu_3 s^2 - mu_4 s + 1
        let p = LocusProblem::with_mu(
            &[1.0],
            choose_aux_poles(&[1.0]),
            &[1.0, 2.0, 3.0, 4.0],
        );
        assert_eq!(p.numerator.coeffs(), &[1.0, -2.0, 3.0, -4.0, 1.0]);
    }

    #[test]
    fn grid_is_geometric_and_scale_aware() {
        let grid = default_k_grid(&fixture_problem());
        assert!((grid[0] - 64.0 * 1e-8).abs() < 1e-18);
        assert!((grid[1] / grid[0] - 2f64.powf(0.25)).abs() < 1e-12);
        assert!(*grid.last().unwrap() <= 64.0 * 1e6);
    }

    #[test]
    fn small_gain_is_feasible_without_zeros() {
        let problem = fixture_problem();
        let grid = default_k_grid(&problem);
        let out = gain_search_real_roots(&problem, &grid, &tol()).unwrap();
        assert_eq!(out.roots.len(), 7);
        assert_eq!(out.controls.len(), 7);
        // roots perturb away from the poles 0, -2, -2, 2, 2, -1, 4 and
        // respect the magnitude floor of the contract
        let scale = out.roots.iter().fold(0.0f64, |a, r| a.max(r.abs()));
        assert!(out
            .roots
            .iter()
            .all(|r| r.abs() >= tol().distinct_tol * scale));
    }

    #[test]
    fn infeasible_when_numerator_forces_complex_branches() {
        // a numerator that is negative at both double poles: the loci leave
        // the real axis directly at the poles for every positive gain, so no
        // grid point can qualify
        let lams = [2.0, -2.0];
        let aux = AuxPoles { lam_m1: 1.0, lam_m2: -4.0 };
        let mu = [0.0, 0.0, 0.0, 0.0, -0.5, 0.0]; // numerator 1 - s^2/2
        let problem = LocusProblem::with_mu(&lams, aux, &mu);
        assert!(problem.numerator.eval(-2.0) < 0.0);
        assert!(problem.numerator.eval(2.0) < 0.0);
        let grid = default_k_grid(&problem);
        match gain_search_real_roots(&problem, &grid, &tol()) {
            Err(SynthesisError::Infeasible) => {}
            other => panic!("expected Infeasible, got {other:?}"),
        }
    }

    #[test]
    fn trace_reciprocals_at_reference_gain() {
        // the steering numerator at q = 4 for the 3x3 fixture: the K = 10
        // row is all-real and its reciprocals are the reference controls
        let mu = [
            0.00074229464332885449,
            -0.0051083982912930809,
            -0.039301197669880321,
            0.064757229270254707,
            0.29248854278084602,
            -0.31357847073325618,
        ];
        let problem =
            LocusProblem::with_mu(&[2.0, -2.0], AuxPoles { lam_m1: 1.0, lam_m2: -4.0 }, &mu);
        let rows = locus_trace(&problem, &[10.0], &tol()).unwrap();
        let roots = &rows[0].roots;
        assert!(roots.iter().all(|z| z.im == 0.0));
        let mut recip: Vec<f64> = roots.iter().map(|z| 1.0 / z.re).collect();
        recip.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let reference = [-0.770, -0.643, -0.452, 0.250, 0.439, 0.612, 6.650];
        for (r, e) in recip.iter().zip(&reference) {
            assert!((r - e).abs() <= 0.005, "{r} vs {e}");
        }
    }

    #[test]
    fn trace_rows_approach_poles_for_small_gains() {
        let problem = fixture_problem();
        let rows = locus_trace(&problem, &[1e-9, 1e-6], &tol()).unwrap();
        assert_eq!(rows.len(), 2);
        let mut expected = vec![0.0, -2.0, -2.0, 2.0, 2.0, -1.0, 4.0];
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (root, e) in rows[0].roots.iter().zip(&expected) {
            assert!((root.re - e).abs() < 1e-3, "{root} vs {e}");
            assert!(root.im.abs() < 1e-3);
        }
    }
}
