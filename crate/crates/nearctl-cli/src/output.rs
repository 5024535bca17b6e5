//! Output record envelope and CSV emission.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use num_complex::Complex64;
use serde::Serialize;

/// Envelope for every JSON-producing subcommand. Deterministic given the
/// problem file and seed, except for `timing_ms`.
#[derive(Debug, Serialize)]
pub struct OutputRecord<T: Serialize> {
    pub command: String,
    pub inputs_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub result: T,
    pub residuals: BTreeMap<String, f64>,
    pub timing_ms: f64,
}

pub fn emit_json<T: Serialize>(record: &OutputRecord<T>, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(record)?;
    match out {
        Some(path) => std::fs::write(path, text.as_bytes())
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

/// Render a float with 17 significant digits so that readers round-trip the
/// exact bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trajectory_csv(traj: &[Vec<f64>], out: Option<&Path>) -> Result<()> {
    let n = traj.first().map(|x| x.len()).unwrap_or(0);
    let mut text = String::from("k");
    for i in 1..=n {
        text.push_str(&format!(",x_{i}"));
    }
    text.push('\n');
    for (k, state) in traj.iter().enumerate() {
        text.push_str(&k.to_string());
        for v in state {
            text.push(',');
            text.push_str(&fmt_f64(*v));
        }
        text.push('\n');
    }
    write_text(&text, out)
}

pub fn write_locus_csv(rows: &[(f64, Vec<Complex64>)], out: Option<&Path>) -> Result<()> {
    let d = rows.first().map(|(_, r)| r.len()).unwrap_or(0);
    let mut text = String::from("K");
    for i in 1..=d {
        text.push_str(&format!(",re_{i},im_{i}"));
    }
    text.push('\n');
    for (gain, roots) in rows {
        text.push_str(&fmt_f64(*gain));
        for z in roots {
            text.push(',');
            text.push_str(&fmt_f64(z.re));
            text.push(',');
            text.push_str(&fmt_f64(z.im));
        }
        text.push('\n');
    }
    write_text(&text, out)
}

fn write_text(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text.as_bytes())
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}
