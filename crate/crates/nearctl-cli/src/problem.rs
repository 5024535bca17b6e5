//! Problem-file ingestion and validation.

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use nearctl_core::linalg::{JordanForm, Matrix};
use nearctl_core::synthesis::{AuxPoles, SteerOptions};
use nearctl_core::Tolerances;

/// One self-contained problem: the system matrix, optional endpoints, an
/// optional pinned Jordan witness, and solver options.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(rename = "B")]
    pub b: Matrix,
    pub xi: Option<Vec<f64>>,
    pub eta: Option<Vec<f64>>,
    pub jordan: Option<PinnedJordan>,
    #[serde(default)]
    pub options: ProblemOptions,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinnedJordan {
    #[serde(rename = "J")]
    pub j: Matrix,
    #[serde(rename = "P")]
    pub p: Matrix,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemOptions {
    pub tolerances: Option<Tolerances>,
    /// Auxiliary pole override `[lam_m1, lam_m2]`.
    pub aux: Option<[f64; 2]>,
    pub q: Option<u64>,
    #[serde(rename = "K")]
    pub gain: Option<f64>,
    /// Orthant-connection prefix override `u(0), u(1), ...`.
    pub u0: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub q_max_exp: Option<u32>,
    pub max_connect_steps: Option<usize>,
}

/// A loaded and validated problem plus the digest of its source bytes.
pub struct LoadedProblem {
    pub file: ProblemFile,
    pub digest: String,
    pub tolerances: Tolerances,
    pub pinned: Option<JordanForm>,
}

pub fn load_problem(path: &std::path::Path) -> Result<LoadedProblem> {
    let bytes = std::fs::read(path)
        .with_context(|| format!("cannot read problem file {}", path.display()))?;
    let digest = hex_digest(&bytes);
    let file: ProblemFile =
        serde_json::from_slice(&bytes).context("problem file is not valid JSON for this schema")?;

    let n = file.b.n();
    for (name, v) in [("xi", &file.xi), ("eta", &file.eta)] {
        if let Some(v) = v {
            if v.len() != n {
                bail!("{name} has length {} but B is {n}x{n}", v.len());
            }
            if v.iter().any(|x| !x.is_finite()) {
                bail!("{name} contains non-finite entries");
            }
        }
    }
    let tolerances = file.options.tolerances.unwrap_or_default();
    tolerances
        .validate()
        .map_err(|e| anyhow::anyhow!("invalid tolerances: {e}"))?;
    if let Some(u0) = &file.options.u0 {
        if u0.iter().any(|u| !u.is_finite() || *u == 0.0) {
            bail!("u0 prefix controls must be nonzero and finite");
        }
    }

    let pinned = match &file.jordan {
        Some(pin) => Some(
            JordanForm::from_pinned(&pin.j, &pin.p, &file.b, &tolerances)
                .map_err(|e| anyhow::anyhow!("pinned (J, P) pair rejected: {e}"))?,
        ),
        None => None,
    };

    Ok(LoadedProblem { file, digest, tolerances, pinned })
}

impl LoadedProblem {
    pub fn steer_options(&self) -> SteerOptions {
        let opts = &self.file.options;
        SteerOptions {
            q_max_exp: opts.q_max_exp,
            max_connect_steps: opts.max_connect_steps,
            aux: opts.aux.map(|[a, b]| AuxPoles { lam_m1: a, lam_m2: b }),
            q: opts.q,
            gain: opts.gain,
            prefix: opts.u0.clone(),
            jordan: self.pinned.clone(),
        }
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}
