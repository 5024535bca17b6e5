//! Near-controllability verdicts, the near-controllability index, and
//! enumeration of nearly-controllable subspaces.
//!
//! A system `x(k+1) = (I + u(k) B) x(k)` with real spectrum is nearly
//! controllable iff `B` is nonsingular, cyclic, and has no Jordan block of
//! dimension greater than two. For systems that fail the test, controllable
//! regions survive on coordinate subspaces picked from the first one or two
//! rows of Jordan blocks with nonzero eigenvalue, and the index `h` is the
//! largest dimension such a selection can reach.

use serde::{Deserialize, Serialize};

use crate::linalg::{
    eigen_real, jordan_decompose, JordanBlock, JordanForm, LinalgError, Matrix,
};
use crate::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    NearlyControllable,
    NotNearlyControllable,
    UnsupportedComplexSpectrum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    /// `B` has a zero eigenvalue.
    Singular,
    /// Some eigenvalue has at least two Jordan blocks.
    Noncyclic,
    /// Some Jordan block has dimension three or more.
    #[serde(rename = "jordan_block_dim_gt_2")]
    JordanBlockDimGt2,
}

/// Description of the removed set `E = F`, reported both as the J-coordinate
/// product condition and as the Krylov determinant in original coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypersurfaceDescription {
    /// 1-based J-coordinates whose product must be nonzero.
    pub j_coordinates: Vec<usize>,
    pub j_condition: String,
    pub krylov_condition: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearControllabilityReport {
    pub verdict: Verdict,
    pub reasons: Vec<FailureReason>,
    pub index_h: usize,
    pub hypersurface: Option<HypersurfaceDescription>,
}

/// Decide near-controllability of `B` and compute the index.
///
/// A complex spectrum yields the `unsupported_complex_spectrum` verdict with
/// `index_h = 0` rather than an error.
pub fn check_near_controllability(
    b: &Matrix,
    tol: &Tolerances,
) -> Result<NearControllabilityReport, LinalgError> {
    if !b.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let spectrum = eigen_real(b, tol)?;
    if !spectrum.all_real {
        return Ok(NearControllabilityReport {
            verdict: Verdict::UnsupportedComplexSpectrum,
            reasons: Vec::new(),
            index_h: 0,
            hypersurface: None,
        });
    }
    let jf = jordan_decompose(b, tol)?;
    let reasons = failure_reasons(&jf);
    let index_h = near_controllability_index(&jf);
    let verdict = if reasons.is_empty() {
        Verdict::NearlyControllable
    } else {
        Verdict::NotNearlyControllable
    };
    let hypersurface = if verdict == Verdict::NearlyControllable {
        let coords: Vec<usize> = jf
            .blocks
            .iter()
            .map(|blk| blk.start + blk.size - 1) // second row of a 2-block, the row itself for a 1-block
            .collect();
        Some(HypersurfaceDescription {
            j_condition: product_condition(&coords),
            j_coordinates: coords,
            krylov_condition: format!(
                "det [x, Bx, ..., B^{} x] != 0 (original coordinates)",
                jf.n() - 1
            ),
        })
    } else {
        None
    };
    Ok(NearControllabilityReport { verdict, reasons, index_h, hypersurface })
}

fn product_condition(coords: &[usize]) -> String {
    let product = coords
        .iter()
        .map(|c| format!("xi_{c}"))
        .collect::<Vec<_>>()
        .join(" * ");
    format!("{product} != 0 (J-coordinates)")
}

pub(crate) fn failure_reasons(jf: &JordanForm) -> Vec<FailureReason> {
    let mut reasons = Vec::new();
    if jf.has_zero_eigenvalue() {
        reasons.push(FailureReason::Singular);
    }
    if !jf.is_cyclic() {
        reasons.push(FailureReason::Noncyclic);
    }
    if jf.largest_block_size() > 2 {
        reasons.push(FailureReason::JordanBlockDimGt2);
    }
    reasons
}

/// The near-controllability index: dimension of the largest main submatrix
/// of `J` that is nonsingular, cyclic, and free of blocks larger than two.
/// Each distinct nonzero eigenvalue contributes `min(2, largest block)`.
pub fn near_controllability_index(jf: &JordanForm) -> usize {
    jf.eigenvalue_groups()
        .iter()
        .filter(|(lam, _)| *lam != 0.0)
        .map(|(_, blocks)| blocks.iter().map(|b| b.size).max().unwrap_or(0).min(2))
        .sum()
}

/// One admissible coordinate selection and the subsystem it induces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceDescriptor {
    /// 1-based J-coordinate positions, strictly increasing.
    pub indices: Vec<usize>,
    pub dimension: usize,
    pub eigenvalues_used: Vec<f64>,
    /// Human-readable description of the removed set within the subspace.
    pub removed_set: String,
    /// The main submatrix `J_{i_1..i_e}`.
    pub submatrix: Matrix,
}

/// All admissible index selections: per distinct nonzero eigenvalue at most
/// one block, and from it either its first index or its first two indices.
/// Sorted by (dimension, lexicographic indices).
pub fn enumerate_subspaces(jf: &JordanForm) -> Vec<SubspaceDescriptor> {
    let groups: Vec<(f64, Vec<JordanBlock>)> = jf
        .eigenvalue_groups()
        .into_iter()
        .filter(|(lam, _)| *lam != 0.0)
        .collect();

    // options per eigenvalue: skip, or take [start] / [start, start+1] of one block
    let mut selections: Vec<Vec<usize>> = vec![Vec::new()];
    for (_, blocks) in &groups {
        let mut options: Vec<Vec<usize>> = vec![Vec::new()];
        for blk in blocks {
            options.push(vec![blk.start]);
            if blk.size >= 2 {
                options.push(vec![blk.start, blk.start + 1]);
            }
        }
        let mut next = Vec::with_capacity(selections.len() * options.len());
        for sel in &selections {
            for opt in &options {
                let mut s = sel.clone();
                s.extend(opt);
                next.push(s);
            }
        }
        selections = next;
    }

    let mut out: Vec<SubspaceDescriptor> = selections
        .into_iter()
        .filter(|sel| !sel.is_empty())
        .map(|mut indices| {
            indices.sort_unstable();
            descriptor_for(jf, &indices)
        })
        .collect();
    out.sort_by(|a, b| a.dimension.cmp(&b.dimension).then(a.indices.cmp(&b.indices)));
    out
}

fn descriptor_for(jf: &JordanForm, indices: &[usize]) -> SubspaceDescriptor {
    let zero_based: Vec<usize> = indices.iter().map(|i| i - 1).collect();
    let submatrix = jf.j.submatrix(&zero_based);
    let mut eigenvalues_used = Vec::new();
    let mut relevant = Vec::new();
    for &i in indices {
        let blk = jf
            .blocks
            .iter()
            .find(|b| i >= b.start && i < b.start + b.size)
            .expect("index within a block");
        if !eigenvalues_used.contains(&blk.eigenvalue) {
            eigenvalues_used.push(blk.eigenvalue);
        }
        // the deepest selected coordinate of each block carries the sign
        let deepest = indices
            .iter()
            .filter(|&&x| x >= blk.start && x < blk.start + blk.size)
            .max()
            .unwrap();
        if *deepest == i {
            relevant.push(i);
        }
    }
    SubspaceDescriptor {
        dimension: indices.len(),
        indices: indices.to_vec(),
        eigenvalues_used,
        removed_set: product_condition(&relevant),
        submatrix,
    }
}

/// Admissibility of an index set per the selection rules, with the first
/// violated rule when inadmissible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub admissible: bool,
    pub reason: Option<String>,
}

impl Admissibility {
    fn ok() -> Self {
        Admissibility { admissible: true, reason: None }
    }

    fn fail(reason: String) -> Self {
        Admissibility { admissible: false, reason: Some(reason) }
    }
}

/// Check whether `indices` (1-based, strictly increasing) selects a
/// nonsingular, cyclic submatrix with no block of dimension greater than
/// two, using only first or first-two rows of blocks.
pub fn is_admissible_index_set(jf: &JordanForm, indices: &[usize]) -> Admissibility {
    let n = jf.n();
    if indices.is_empty() {
        return Admissibility::fail("empty index set".into());
    }
    if indices.windows(2).any(|w| w[0] >= w[1]) || indices[0] < 1 || *indices.last().unwrap() > n {
        return Admissibility::fail(format!("indices must be strictly increasing within 1..={n}"));
    }
    let mut touched: Vec<(f64, usize)> = Vec::new(); // (eigenvalue, block start)
    for (pos, &i) in indices.iter().enumerate() {
        let blk = jf
            .blocks
            .iter()
            .find(|b| i >= b.start && i < b.start + b.size)
            .expect("index within a block");
        if blk.eigenvalue == 0.0 {
            return Admissibility::fail(format!(
                "index {i} belongs to a zero-eigenvalue block (singular submatrix)"
            ));
        }
        let offset = i - blk.start; // 0 = first row, 1 = second row
        if offset >= 2 {
            return Admissibility::fail(format!(
                "index {i} is row {} of its Jordan block; only the first two rows are usable",
                offset + 1
            ));
        }
        if offset == 1 {
            let prev_ok = pos > 0 && indices[pos - 1] == blk.start;
            if !prev_ok {
                return Admissibility::fail(format!(
                    "index {i} is a second row whose block's first row {} is not selected immediately before it",
                    blk.start
                ));
            }
        }
        if touched
            .iter()
            .any(|&(lam, start)| lam == blk.eigenvalue && start != blk.start)
        {
            return Admissibility::fail(format!(
                "eigenvalue {} is selected from two different blocks (noncyclic submatrix)",
                blk.eigenvalue
            ));
        }
        if !touched.contains(&(blk.eigenvalue, blk.start)) {
            touched.push((blk.eigenvalue, blk.start));
        }
    }
    Admissibility::ok()
}
