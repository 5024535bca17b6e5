//! The steering pipeline: transform to Jordan coordinates, connect the
//! initial state into the terminal state's orthant, build the transition
//! matrix and its q-th root, solve for the numerator coefficients, sweep the
//! gain, and verify the assembled control sequence by simulation before
//! returning it.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::locus::{default_k_grid, gain_search_real_roots, ladder_skip, LocusProblem};
use super::refine::{refine_controls, NodeCondition};
use super::{choose_aux_poles, simulate, AuxPoles, ControlSequence, SynthesisError};
use crate::linalg::{
    jordan_decompose, matrix_fractional_root, orthant_signature, CanonicalStructure, JordanForm,
    LinalgError, Matrix, Sign,
};
use crate::poly::{build_confluent_vandermonde, solve_confluent_system};
use crate::structure::{failure_reasons, SubspaceDescriptor};
use crate::Tolerances;

/// Which endpoint of a steering request failed a precondition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Initial,
    Terminal,
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Initial => write!(f, "initial"),
            Endpoint::Terminal => write!(f, "terminal"),
        }
    }
}

/// The block-structured matrix `T` with `T zeta = eta`, equal positive
/// diagonal entries within each block, commuting with `J`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    pub matrix: Matrix,
}

/// Build the transition matrix for two states of the same open orthant
/// (J-coordinates).
pub fn transition_matrix(
    zeta: &[f64],
    eta: &[f64],
    cs: &CanonicalStructure,
    tol: &Tolerances,
) -> Result<TransitionMatrix, SynthesisError> {
    let sig_z = orthant_signature(zeta, cs, tol)?;
    let sig_e = orthant_signature(eta, cs, tol)?;
    if sig_z != sig_e {
        return Err(SynthesisError::OrthantMismatch);
    }
    let mut t = Matrix::zeros(cs.n());
    for i in 0..cs.r() {
        let (d0, d1) = (2 * i, 2 * i + 1);
        let a = eta[d1] / zeta[d1];
        let b = eta[d0] / zeta[d1] - zeta[d0] * eta[d1] / (zeta[d1] * zeta[d1]);
        t.set(d0, d0, a);
        t.set(d1, d1, a);
        t.set(d0, d1, b);
    }
    for j in 2 * cs.r()..cs.n() {
        t.set(j, j, eta[j] / zeta[j]);
    }
    Ok(TransitionMatrix { matrix: t })
}

/// Numerator coefficients: solve `C mu = d` where `C` is the confluent
/// Vandermonde on the eigenvalues plus auxiliary poles and `d` stacks, per
/// size-2 block, `(T^{1/q}(2i,2i) - 1, T^{1/q}(2i-1,2i))`; per size-1 block,
/// `(T^{1/q}(j,j) - 1, 0)`; then `(0, 0)` for the auxiliary poles.
pub fn mu_coefficients(
    t_root: &Matrix,
    cs: &CanonicalStructure,
    aux: AuxPoles,
) -> Result<Vec<f64>, SynthesisError> {
    let c = build_confluent_vandermonde(cs.eigenvalues(), (aux.lam_m1, aux.lam_m2))?;
    let mut d = Vec::with_capacity(2 * cs.m() + 2);
    for i in 0..cs.r() {
        let (d0, d1) = (2 * i, 2 * i + 1);
        d.push(t_root.get(d1, d1) - 1.0);
        d.push(t_root.get(d0, d1));
    }
    for j in 2 * cs.r()..cs.n() {
        d.push(t_root.get(j, j) - 1.0);
        d.push(0.0);
    }
    d.push(0.0);
    d.push(0.0);
    Ok(solve_confluent_system(&c, &d)?)
}

/// Drive `x` into the orthant with signature `target` by a bounded
/// breadth-first search over the dyadic control grid
/// `{+-2^k / max|lambda| : k = -3..3}`. Returns the prefix controls and the
/// reached state.
pub fn connect_orthant(
    x: &[f64],
    target: &[Sign],
    cs: &CanonicalStructure,
    tol: &Tolerances,
    max_steps: usize,
) -> Result<(ControlSequence, Vec<f64>), SynthesisError> {
    let sig = orthant_signature(x, cs, tol)?;
    if sig == target {
        return Ok((ControlSequence::empty(), x.to_vec()));
    }
    let j = cs.j_matrix();
    let lmax = cs.eigenvalues().iter().fold(0.0f64, |a, l| a.max(l.abs()));
    let mut candidates = Vec::with_capacity(20);
    for k in -3i32..=3 {
        let u = 2f64.powi(k) / lmax;
        candidates.push(u);
        candidates.push(-u);
    }
    // a control flips exactly the coordinates with |lambda| > 1/|u| of one
    // sign; the dyadic ladder cannot separate eigenvalue magnitudes closer
    // than a factor of two, so add a candidate at the geometric midpoint of
    // every adjacent magnitude pair
    let mut mags: Vec<f64> = cs.eigenvalues().iter().map(|l| l.abs()).collect();
    mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
    mags.dedup();
    for pair in mags.windows(2) {
        let u = 1.0 / (pair[0] * pair[1]).sqrt();
        candidates.push(u);
        candidates.push(-u);
    }

    let mut frontier: Vec<(Vec<f64>, Vec<f64>)> = vec![(x.to_vec(), Vec::new())];
    for _depth in 1..=max_steps {
        let mut next = Vec::with_capacity(frontier.len() * candidates.len());
        for (state, controls) in &frontier {
            for &u in &candidates {
                let step = j.step_matrix(u);
                let y = step.matvec(state);
                if y.iter().any(|v| !v.is_finite()) {
                    continue;
                }
                match orthant_signature(&y, cs, tol) {
                    Ok(sig) if sig == target => {
                        let mut ctrl = controls.clone();
                        ctrl.push(u);
                        return Ok((ControlSequence::new(ctrl)?, y));
                    }
                    Ok(_) => {
                        let mut ctrl = controls.clone();
                        ctrl.push(u);
                        next.push((y, ctrl));
                    }
                    Err(_) => {} // landed on the hypersurface, drop
                }
            }
        }
        frontier = next;
    }
    Err(SynthesisError::ConnectFailed)
}

/// Knobs and pins for [`steer`]. Defaults run the fully automatic pipeline;
/// the overrides exist to reproduce externally chosen witnesses and gains
/// exactly.
#[derive(Debug, Clone, Default)]
pub struct SteerOptions {
    /// q schedule is `2^0, 2^1, ..., 2^q_max_exp` (default 16).
    pub q_max_exp: Option<u32>,
    /// Depth bound of the orthant-connection search (default 4).
    pub max_connect_steps: Option<usize>,
    /// Pin the auxiliary poles instead of the default rule.
    pub aux: Option<AuxPoles>,
    /// Pin q instead of the doubling schedule.
    pub q: Option<u64>,
    /// Pin the gain instead of sweeping the grid.
    pub gain: Option<f64>,
    /// Pin the orthant-connection prefix controls.
    pub prefix: Option<Vec<f64>>,
    /// Pin the Jordan witness (J, P) instead of decomposing.
    pub jordan: Option<JordanForm>,
}

impl SteerOptions {
    fn q_schedule(&self) -> Vec<u64> {
        match self.q {
            Some(q) => vec![q],
            None => {
                let top = self.q_max_exp.unwrap_or(16);
                (0..=top).map(|e| 1u64 << e).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Endpoints {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
}

/// A verified steering plan: `prefix` followed by `q` copies of `group`
/// moves `xi` to `eta` on the original system.
#[derive(Debug, Clone, Serialize)]
pub struct SteeringPlan {
    pub prefix: ControlSequence,
    pub q: u64,
    pub group: ControlSequence,
    #[serde(rename = "K")]
    pub gain: f64,
    pub aux: AuxPoles,
    pub full_sequence: ControlSequence,
    pub endpoints: Endpoints,
    pub verification_residual: f64,
    /// The Jordan witness used by the pipeline (not serialized).
    #[serde(skip)]
    pub jordan: JordanForm,
}

/// Steer `xi` to `eta` for a nearly controllable system, both endpoints off
/// the removed hypersurface. The returned plan has been verified by
/// simulation in original coordinates.
pub fn steer(
    b: &Matrix,
    xi: &[f64],
    eta: &[f64],
    tol: &Tolerances,
    opts: &SteerOptions,
) -> Result<SteeringPlan, SynthesisError> {
    let n = b.n();
    if xi.len() != n || eta.len() != n {
        return Err(LinalgError::DimensionMismatch { expected: n, got: xi.len().max(eta.len()) }
            .into());
    }
    if xi.iter().chain(eta).any(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite.into());
    }

    let jf = match &opts.jordan {
        Some(jf) => jf.clone(),
        None => jordan_decompose(b, tol)?,
    };
    let reasons = failure_reasons(&jf);
    if !reasons.is_empty() {
        return Err(SynthesisError::NotNearlyControllable { reasons });
    }
    let cs = CanonicalStructure::try_from_jordan(&jf)?;

    let p_xi = jf.p.matvec(xi);
    let p_eta = jf.p.matvec(eta);
    let sig_eta = orthant_signature(&p_eta, &cs, tol).map_err(|e| on_hypersurface(e, Endpoint::Terminal))?;
    orthant_signature(&p_xi, &cs, tol).map_err(|e| on_hypersurface(e, Endpoint::Initial))?;

    let (prefix, zeta) = match &opts.prefix {
        Some(values) => {
            let prefix = ControlSequence::new(values.clone())?;
            let mut state = p_xi.clone();
            let j = &jf.j;
            for &u in prefix.values() {
                state = j.step_matrix(u).matvec(&state);
            }
            let sig = orthant_signature(&state, &cs, tol).map_err(|_| SynthesisError::ConnectFailed)?;
            if sig != sig_eta {
                return Err(SynthesisError::ConnectFailed);
            }
            (prefix, state)
        }
        None => connect_orthant(
            &p_xi,
            &sig_eta,
            &cs,
            tol,
            opts.max_connect_steps.unwrap_or(4),
        )?,
    };

    let aux = match opts.aux {
        Some(a) => {
            if !a.satisfies_condition(cs.eigenvalues()) {
                return Err(SynthesisError::InvalidAuxPoles);
            }
            a
        }
        None => choose_aux_poles(cs.eigenvalues()),
    };

    let t = transition_matrix(&zeta, &p_eta, &cs, tol)?;
    let schedule = opts.q_schedule();
    let mut last_q = 1;
    for &q in &schedule {
        last_q = q;
        let t_root = matrix_fractional_root(&t.matrix, q, &cs)?;
        let mu = mu_coefficients(&t_root, &cs, aux)?;
        let problem = LocusProblem::with_mu(cs.eigenvalues(), aux, &mu);
        let grid = match opts.gain {
            Some(g) => vec![g],
            None => default_k_grid(&problem),
        };
        let conds = steering_conditions(&t_root, &cs, aux);
        // walk the feasible gains in ascending order until one verifies;
        // each step up the grid shrinks the largest control
        let mut offset = 0;
        while offset < grid.len() {
            let outcome = match gain_search_real_roots(&problem, &grid[offset..], tol) {
                Ok(o) => o,
                Err(SynthesisError::Infeasible) => break,
                Err(e) => return Err(e),
            };
            offset += outcome.grid_index + 1;

            let mut group = outcome.controls.values().to_vec();
            if !refine_controls(&mut group, &conds)
                || group.iter().any(|v| !v.is_finite() || *v == 0.0)
            {
                group = outcome.controls.values().to_vec();
            }
            let mut full = prefix.values().to_vec();
            for _ in 0..q {
                full.extend_from_slice(&group);
            }
            let traj = simulate(b, xi, &full);
            let end = traj.last().unwrap();
            let err: f64 = end
                .iter()
                .zip(eta)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let scale = eta.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
            let residual = err / scale;
            if residual > tol.verify_tol {
                log::debug!(
                    "q = {q}, K = {:.3e}: plan verified poorly (residual {residual:.3e})",
                    outcome.gain
                );
                offset += ladder_skip(residual, tol.verify_tol);
                continue;
            }
            return Ok(SteeringPlan {
                prefix,
                q,
                group: ControlSequence::new(group)?,
                gain: outcome.gain,
                aux,
                full_sequence: ControlSequence::new(full)?,
                endpoints: Endpoints { xi: xi.to_vec(), eta: eta.to_vec() },
                verification_residual: residual,
                jordan: jf,
            });
        }
        log::debug!("q = {q}: no verifying gain, increasing q");
    }
    Err(SynthesisError::QExhausted { q_max: last_q })
}

/// Per-node product conditions satisfied by the group controls: on each
/// size-2 block `prod = T^{1/q}(2i,2i)` with derivative `T^{1/q}(2i-1,2i)`;
/// on singles `prod = T^{1/q}(j,j)` with zero derivative; on the auxiliary
/// poles `prod = 1`.
fn steering_conditions(
    t_root: &Matrix,
    cs: &CanonicalStructure,
    aux: AuxPoles,
) -> Vec<NodeCondition> {
    let mut conds = Vec::with_capacity(cs.m() + 2);
    let eigs = cs.eigenvalues();
    for i in 0..cs.r() {
        conds.push(NodeCondition {
            lambda: eigs[i],
            diag: t_root.get(2 * i + 1, 2 * i + 1),
            off: Some(t_root.get(2 * i, 2 * i + 1)),
        });
    }
    for (k, j) in (2 * cs.r()..cs.n()).enumerate() {
        conds.push(NodeCondition {
            lambda: eigs[cs.r() + k],
            diag: t_root.get(j, j),
            off: Some(0.0),
        });
    }
    conds.push(NodeCondition { lambda: aux.lam_m1, diag: 1.0, off: None });
    conds.push(NodeCondition { lambda: aux.lam_m2, diag: 1.0, off: None });
    conds
}

fn on_hypersurface(e: LinalgError, endpoint: Endpoint) -> SynthesisError {
    match e {
        LinalgError::OnHypersurface { .. } => SynthesisError::EndpointOnHypersurface { endpoint },
        other => other.into(),
    }
}

/// Steer within a nearly-controllable subspace. `xi` and `eta` are full
/// J-coordinate states supported only on `desc.indices`; the plan's controls
/// move the full system between them (off-subspace coordinates stay zero)
/// and are verified against the full Jordan form before returning.
pub fn steer_in_subspace(
    b: &Matrix,
    desc: &SubspaceDescriptor,
    xi: &[f64],
    eta: &[f64],
    tol: &Tolerances,
    opts: &SteerOptions,
) -> Result<SteeringPlan, SynthesisError> {
    let n = b.n();
    if xi.len() != n || eta.len() != n {
        return Err(LinalgError::DimensionMismatch { expected: n, got: xi.len().max(eta.len()) }
            .into());
    }
    let jf = match &opts.jordan {
        Some(jf) => jf.clone(),
        None => jordan_decompose(b, tol)?,
    };
    for (i, (&a, &e)) in xi.iter().zip(eta.iter()).enumerate() {
        if desc.indices.contains(&(i + 1)) {
            continue;
        }
        let bound = tol.rank_tol;
        if a.abs() > bound || e.abs() > bound {
            return Err(SynthesisError::SupportMismatch { coordinate: i + 1 });
        }
    }
    let idx0: Vec<usize> = desc.indices.iter().map(|i| i - 1).collect();
    let j_sub = jf.j.submatrix(&idx0);
    let xi_sub: Vec<f64> = idx0.iter().map(|&i| xi[i]).collect();
    let eta_sub: Vec<f64> = idx0.iter().map(|&i| eta[i]).collect();

    let mut sub_opts = opts.clone();
    sub_opts.jordan = None; // the subsystem gets its own decomposition
    sub_opts.prefix = None;
    let plan = steer(&j_sub, &xi_sub, &eta_sub, tol, &sub_opts)?;

    // verify the same controls on the full Jordan form
    let traj = simulate(&jf.j, xi, plan.full_sequence.values());
    let end = traj.last().unwrap();
    let err: f64 = end.iter().zip(eta).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let scale = eta.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    let residual = err / scale;
    if residual > tol.verify_tol {
        return Err(SynthesisError::VerificationFailed { residual });
    }
    Ok(SteeringPlan {
        prefix: plan.prefix,
        q: plan.q,
        group: plan.group,
        gain: plan.gain,
        aux: plan.aux,
        full_sequence: plan.full_sequence,
        endpoints: Endpoints { xi: xi.to_vec(), eta: eta.to_vec() },
        verification_residual: residual,
        jordan: jf,
    })
}
