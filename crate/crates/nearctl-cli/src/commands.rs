//! Subcommand implementations and the exit-code contract:
//! 0 = verified success, 2 = documented infeasibility, 3 = invalid input.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use nearctl_core::linalg::{
    jordan_decompose, matrix_fractional_root, orthant_signature, CanonicalStructure, JordanForm,
    LinalgError,
};
use nearctl_core::poly::PolyError;
use nearctl_core::structure::{
    check_near_controllability, enumerate_subspaces, near_controllability_index,
    NearControllabilityReport, SubspaceDescriptor, Verdict,
};

use nearctl_core::synthesis::{
    choose_aux_poles, connect_orthant, identity_loop, identity_product_residual, locus_trace,
    mu_coefficients, simulate, steer, transition_matrix, AuxPoles, ControlSequence, LocusProblem,
    SynthesisError,
};

use crate::output::{emit_json, write_locus_csv, write_trajectory_csv, OutputRecord};
use crate::problem::LoadedProblem;

/// Command failure with its exit code.
pub enum CmdError {
    /// Exit 3: the input cannot be processed.
    Invalid(String),
    /// Exit 2: well-formed input, documented infeasibility or unsupported
    /// system class.
    Infeasible(String),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Invalid(_) => 3,
            CmdError::Infeasible(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CmdError::Invalid(m) | CmdError::Infeasible(m) => m,
        }
    }
}

fn map_synthesis(e: SynthesisError) -> CmdError {
    use SynthesisError::*;
    match &e {
        Linalg(le) => map_linalg_ref(le, e.to_string()),
        Poly(PolyError::DegenerateNodes | PolyError::NonFinite) => CmdError::Invalid(e.to_string()),
        InvalidAuxPoles => CmdError::Invalid(e.to_string()),
        _ => CmdError::Infeasible(e.to_string()),
    }
}

fn map_linalg(e: LinalgError) -> CmdError {
    let msg = e.to_string();
    map_linalg_ref(&e, msg)
}

fn map_linalg_ref(e: &LinalgError, msg: String) -> CmdError {
    use LinalgError::*;
    match e {
        NonFinite | NotSquare | DimensionMismatch { .. } | NotCanonical(_) => {
            CmdError::Invalid(msg)
        }
        _ => CmdError::Infeasible(msg),
    }
}

type CmdResult = Result<(), CmdError>;

fn jordan_of(problem: &LoadedProblem) -> Result<JordanForm, CmdError> {
    match &problem.pinned {
        Some(jf) => Ok(jf.clone()),
        None => jordan_decompose(&problem.file.b, &problem.tolerances).map_err(map_linalg),
    }
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct AnalyzePayload {
    report: NearControllabilityReport,
    subspaces: Vec<SubspaceDescriptor>,
}

pub fn cmd_analyze(problem: &LoadedProblem, seed: Option<u64>, out: Option<&Path>) -> CmdResult {
    let start = Instant::now();
    let report = check_near_controllability(&problem.file.b, &problem.tolerances)
        .map_err(map_linalg)?;
    let mut residuals = BTreeMap::new();
    let subspaces = if report.verdict == Verdict::UnsupportedComplexSpectrum {
        Vec::new()
    } else {
        let jf = jordan_of(problem)?;
        residuals.insert(
            "jordan_reconstruction".to_string(),
            jf.p
                .matmul(&problem.file.b)
                .matmul(&jf.p_inv)
                .sub(&jf.j)
                .frobenius_norm(),
        );
        // cross-check the report's index against the decomposition we hand
        // to the enumerator
        if report.index_h != near_controllability_index(&jf) {
            return Err(CmdError::Infeasible(
                "internal inconsistency between verdict and decomposition".to_string(),
            ));
        }
        enumerate_subspaces(&jf)
    };
    let record = OutputRecord {
        command: "analyze".to_string(),
        inputs_digest: problem.digest.clone(),
        seed,
        result: AnalyzePayload { report, subspaces },
        residuals,
        timing_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    emit_json(&record, out).map_err(|e| CmdError::Invalid(e.to_string()))
}

// ---------------------------------------------------------------------------
// steer
// ---------------------------------------------------------------------------

pub fn cmd_steer(
    problem: &LoadedProblem,
    seed: Option<u64>,
    out: Option<&Path>,
    csv: Option<&Path>,
) -> CmdResult {
    let start = Instant::now();
    let (xi, eta) = endpoints(problem)?;
    let plan = steer(
        &problem.file.b,
        &xi,
        &eta,
        &problem.tolerances,
        &problem.steer_options(),
    )
    .map_err(map_synthesis)?;
    let mut residuals = BTreeMap::new();
    residuals.insert("verification".to_string(), plan.verification_residual);
    if let Some(path) = csv {
        let traj = simulate(&problem.file.b, &xi, plan.full_sequence.values());
        write_trajectory_csv(&traj, Some(path)).map_err(|e| CmdError::Invalid(e.to_string()))?;
    }
    let record = OutputRecord {
        command: "steer".to_string(),
        inputs_digest: problem.digest.clone(),
        seed,
        result: plan,
        residuals,
        timing_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    emit_json(&record, out).map_err(|e| CmdError::Invalid(e.to_string()))
}

fn endpoints(problem: &LoadedProblem) -> Result<(Vec<f64>, Vec<f64>), CmdError> {
    match (&problem.file.xi, &problem.file.eta) {
        (Some(xi), Some(eta)) => Ok((xi.clone(), eta.clone())),
        _ => Err(CmdError::Invalid(
            "this command requires both xi and eta in the problem file".to_string(),
        )),
    }
}

// ---------------------------------------------------------------------------
// subspaces
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SubspacesPayload {
    index_h: usize,
    subspaces: Vec<SubspaceDescriptor>,
}

pub fn cmd_subspaces(problem: &LoadedProblem, seed: Option<u64>, out: Option<&Path>) -> CmdResult {
    let start = Instant::now();
    let jf = jordan_of(problem)?;
    let record = OutputRecord {
        command: "subspaces".to_string(),
        inputs_digest: problem.digest.clone(),
        seed,
        result: SubspacesPayload {
            index_h: near_controllability_index(&jf),
            subspaces: enumerate_subspaces(&jf),
        },
        residuals: BTreeMap::new(),
        timing_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    emit_json(&record, out).map_err(|e| CmdError::Invalid(e.to_string()))
}

// ---------------------------------------------------------------------------
// locus
// ---------------------------------------------------------------------------

pub fn cmd_locus(
    problem: &LoadedProblem,
    k_min: Option<f64>,
    k_max: Option<f64>,
    samples: usize,
    csv: Option<&Path>,
) -> CmdResult {
    let jf = jordan_of(problem)?;
    let cs = CanonicalStructure::try_from_jordan(&jf)
        .map_err(|e| CmdError::Infeasible(format!("root locus needs a nearly controllable system: {e}")))?;
    let tol = &problem.tolerances;
    let aux = match problem.file.options.aux {
        Some([a, b]) => AuxPoles { lam_m1: a, lam_m2: b },
        None => choose_aux_poles(cs.eigenvalues()),
    };
    if !aux.satisfies_condition(cs.eigenvalues()) {
        return Err(CmdError::Invalid(
            "auxiliary poles violate the ordering condition".to_string(),
        ));
    }

    // with endpoints present, trace the steering numerator; otherwise the
    // identity-return locus
    let locus = match (&problem.file.xi, &problem.file.eta) {
        (Some(xi), Some(eta)) => {
            let p_xi = jf.p.matvec(xi);
            let p_eta = jf.p.matvec(eta);
            let target = orthant_signature(&p_eta, &cs, tol).map_err(map_linalg)?;
            let zeta = match &problem.file.options.u0 {
                Some(prefix) => {
                    let mut state = p_xi;
                    for &u in prefix {
                        state = jf.j.step_matrix(u).matvec(&state);
                    }
                    state
                }
                None => {
                    connect_orthant(&p_xi, &target, &cs, tol, 4)
                        .map_err(map_synthesis)?
                        .1
                }
            };
            let t = transition_matrix(&zeta, &p_eta, &cs, tol).map_err(map_synthesis)?;
            let q = problem.file.options.q.unwrap_or(1);
            let t_root = matrix_fractional_root(&t.matrix, q, &cs).map_err(map_linalg)?;
            let mu = mu_coefficients(&t_root, &cs, aux).map_err(map_synthesis)?;
            LocusProblem::with_mu(cs.eigenvalues(), aux, &mu)
        }
        _ => LocusProblem::identity_return(cs.eigenvalues(), aux),
    };

    let grid = nearctl_core::synthesis::default_k_grid(&locus);
    let lo = k_min.unwrap_or_else(|| grid.first().copied().unwrap_or(1e-6));
    let hi = k_max.unwrap_or_else(|| grid.last().copied().unwrap_or(1e6));
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(CmdError::Invalid("bad K range".to_string()));
    }
    let ks: Vec<f64> = if samples <= 1 || lo == hi {
        vec![lo]
    } else if lo > 0.0 {
        let ratio = (hi / lo).powf(1.0 / (samples as f64 - 1.0));
        (0..samples).map(|i| lo * ratio.powi(i as i32)).collect()
    } else {
        let step = (hi - lo) / (samples as f64 - 1.0);
        (0..samples).map(|i| lo + step * i as f64).collect()
    };

    let rows = locus_trace(&locus, &ks, tol).map_err(map_synthesis)?;
    let table: Vec<(f64, Vec<num_complex::Complex64>)> =
        rows.into_iter().map(|r| (r.gain, r.roots)).collect();
    write_locus_csv(&table, csv).map_err(|e| CmdError::Invalid(e.to_string()))
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

pub fn cmd_simulate(
    problem: &LoadedProblem,
    controls_path: &Path,
    csv: Option<&Path>,
) -> CmdResult {
    let xi = problem
        .file
        .xi
        .clone()
        .ok_or_else(|| CmdError::Invalid("simulate requires xi in the problem file".to_string()))?;
    let controls = read_controls(controls_path)?;
    if controls.iter().any(|u| !u.is_finite()) {
        return Err(CmdError::Invalid("controls must be finite".to_string()));
    }
    let traj = simulate(&problem.file.b, &xi, &controls);
    if let Some(eta) = &problem.file.eta {
        let end = traj.last().unwrap();
        let err: f64 = end
            .iter()
            .zip(eta)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = eta.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
        log::info!("endpoint residual relative to eta: {:.3e}", err / scale);
    }
    write_trajectory_csv(&traj, csv).map_err(|e| CmdError::Invalid(e.to_string()))
}

/// Accept a bare JSON array of controls, a steering-plan object, or a full
/// `steer` output record.
fn read_controls(path: &Path) -> Result<Vec<f64>, CmdError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CmdError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_slice(&bytes)
        .map_err(|e| CmdError::Invalid(format!("controls file is not JSON: {e}")))?;
    let candidate = if value.is_array() {
        value.clone()
    } else if let Some(seq) = value.get("full_sequence") {
        seq.clone()
    } else if let Some(seq) = value.get("result").and_then(|r| r.get("full_sequence")) {
        seq.clone()
    } else {
        return Err(CmdError::Invalid(
            "controls file must be an array, a plan, or a steer output record".to_string(),
        ));
    };
    serde_json::from_value(candidate)
        .map_err(|e| CmdError::Invalid(format!("controls are not numbers: {e}")))
}

// ---------------------------------------------------------------------------
// identity-loop
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct IdentityLoopPayload {
    controls: ControlSequence,
    product_residual: f64,
}

pub fn cmd_identity_loop(
    problem: &LoadedProblem,
    seed: Option<u64>,
    out: Option<&Path>,
) -> CmdResult {
    let start = Instant::now();
    let jf = jordan_of(problem)?;
    let controls = identity_loop(&jf, &problem.tolerances).map_err(map_synthesis)?;
    let residual = identity_product_residual(&jf.j, controls.values());
    let mut residuals = BTreeMap::new();
    residuals.insert("identity_product".to_string(), residual);
    let record = OutputRecord {
        command: "identity-loop".to_string(),
        inputs_digest: problem.digest.clone(),
        seed,
        result: IdentityLoopPayload { controls, product_residual: residual },
        residuals,
        timing_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    emit_json(&record, out).map_err(|e| CmdError::Invalid(e.to_string()))
}
