//! Polynomial root finding: simultaneous Aberth-Ehrlich iteration with a
//! companion-matrix eigenvalue fallback, Newton polish, and a backward-error
//! residual gate.

use num_complex::Complex64;

use super::{PolyError, Polynomial};
use crate::linalg::{eigenvalues_complex, Matrix};
use crate::Tolerances;

/// Roots of a polynomial with per-root residuals.
///
/// Roots whose imaginary part is within `real_root_tol * max(1, |root|)` are
/// flagged real by zeroing the imaginary part exactly. Roots are sorted by
/// (re, im); residuals are `|p(root)|` relative to the evaluated coefficient
/// scale at the root.
#[derive(Debug, Clone)]
pub struct RootSet {
    pub roots: Vec<Complex64>,
    pub residuals: Vec<f64>,
}

impl RootSet {
    /// All roots flagged real? (exact zero imaginary part after
    /// classification)
    pub fn all_real(&self) -> bool {
        self.roots.iter().all(|z| z.im == 0.0)
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.roots.iter().map(|z| z.re).collect()
    }
}

/// Find all roots of `p`.
pub fn poly_roots(p: &Polynomial, tol: &Tolerances) -> Result<RootSet, PolyError> {
    if p.coeffs().iter().any(|c| !c.is_finite()) {
        return Err(PolyError::NonFinite);
    }
    if p.is_zero() || p.degree() == 0 {
        return Ok(RootSet { roots: Vec::new(), residuals: Vec::new() });
    }

    // exact roots at the origin come from trailing zero coefficients
    let mut coeffs = p.coeffs().to_vec();
    let mut zero_roots = 0usize;
    while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
        coeffs.pop();
        zero_roots += 1;
    }
    let lead = coeffs[0];
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();

    let mut roots = solve_monic(&monic)?;
    roots.extend(std::iter::repeat(Complex64::new(0.0, 0.0)).take(zero_roots));

    // classify near-real roots and polish the survivors once more
    for z in roots.iter_mut() {
        if z.im.abs() <= tol.real_root_tol * z.norm().max(1.0) {
            *z = Complex64::new(z.re, 0.0);
        }
    }
    roots.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());

    let mut residuals = Vec::with_capacity(roots.len());
    for &z in &roots {
        let (val, scale) = eval_with_scale(p.coeffs(), z);
        let res = val.norm();
        if res > 1e-8 * scale.max(f64::MIN_POSITIVE) {
            return Err(PolyError::NoConvergence);
        }
        residuals.push(res);
    }
    Ok(RootSet { roots, residuals })
}

/// `p(z)` together with `sum |c_i| |z|^(d-i)`, the natural backward-error
/// scale at `z`.
fn eval_with_scale(coeffs: &[f64], z: Complex64) -> (Complex64, f64) {
    let mut val = Complex64::new(0.0, 0.0);
    let mut scale = 0.0f64;
    let az = z.norm();
    for &c in coeffs {
        val = val * z + c;
        scale = scale * az + c.abs();
    }
    (val, scale)
}

fn solve_monic(monic: &[f64]) -> Result<Vec<Complex64>, PolyError> {
    let d = monic.len() - 1;
    match d {
        0 => Ok(Vec::new()),
        1 => Ok(vec![Complex64::new(-monic[1], 0.0)]),
        2 => Ok(quadratic(monic[1], monic[2])),
        _ => {
            if let Some(roots) = aberth(monic) {
                return Ok(roots);
            }
            log::debug!("aberth failed to converge, falling back to companion matrix");
            companion_roots(monic)
        }
    }
}

/// Numerically stable quadratic formula for `s^2 + b s + c`.
fn quadratic(b: f64, c: f64) -> Vec<Complex64> {
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let q = -0.5 * (b + disc.sqrt().copysign(b));
        let r1 = if q != 0.0 { Complex64::new(q, 0.0) } else { Complex64::new(0.0, 0.0) };
        let r2 = if q != 0.0 {
            Complex64::new(c / q, 0.0)
        } else {
            Complex64::new(-b / 2.0, 0.0)
        };
        vec![r1, r2]
    } else {
        let re = -b / 2.0;
        let im = (-disc).sqrt() / 2.0;
        vec![Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

/// Aberth-Ehrlich simultaneous iteration on a monic polynomial.
fn aberth(monic: &[f64]) -> Option<Vec<Complex64>> {
    let d = monic.len() - 1;
    let radius = 1.0 + monic.iter().skip(1).fold(0.0f64, |a, c| a.max(c.abs()));
    let mut z: Vec<Complex64> = (0..d)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / d as f64 + 0.4;
            // staggered radii break symmetric stalls
            let r = radius * (0.5 + 0.5 * (k as f64 + 1.0) / d as f64);
            Complex64::new(r * angle.cos(), r * angle.sin())
        })
        .collect();

    let deriv: Vec<f64> = monic
        .iter()
        .take(d)
        .enumerate()
        .map(|(i, &c)| c * (d - i) as f64)
        .collect();

    // clustered roots converge only linearly, so don't chase the last few
    // bits here; callers polish roots against their own structure
    for _iter in 0..150 {
        let mut max_step = 0.0f64;
        for k in 0..d {
            let zk = z[k];
            let pv = horner(monic, zk);
            let dv = horner(&deriv, zk);
            if !pv.is_finite() || !dv.is_finite() {
                return None;
            }
            if pv.norm() == 0.0 {
                continue;
            }
            let w = if dv.norm() == 0.0 {
                Complex64::new(1e-8, 1e-8)
            } else {
                pv / dv
            };
            let mut sum = Complex64::new(0.0, 0.0);
            for (j, &zj) in z.iter().enumerate() {
                if j != k {
                    let diff = zk - zj;
                    if diff.norm() == 0.0 {
                        return None;
                    }
                    sum += diff.inv();
                }
            }
            let denom = Complex64::new(1.0, 0.0) - w * sum;
            let delta = if denom.norm() == 0.0 { w } else { w / denom };
            z[k] = zk - delta;
            max_step = max_step.max(delta.norm() / (1.0 + z[k].norm()));
        }
        if max_step <= 3e-13 {
            return Some(z);
        }
    }
    None
}

fn horner(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Companion-matrix eigenvalues plus a few Newton steps.
fn companion_roots(monic: &[f64]) -> Result<Vec<Complex64>, PolyError> {
    let d = monic.len() - 1;
    let c = Matrix::from_fn(d, |i, j| {
        if i == 0 {
            -monic[j + 1]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let mut roots = eigenvalues_complex(&c, 0.0).map_err(|_| PolyError::NoConvergence)?;
    let deriv: Vec<f64> = monic
        .iter()
        .take(d)
        .enumerate()
        .map(|(i, &cc)| cc * (d - i) as f64)
        .collect();
    for z in roots.iter_mut() {
        for _ in 0..3 {
            let pv = horner(monic, *z);
            let dv = horner(&deriv, *z);
            if dv.norm() == 0.0 {
                break;
            }
            let step = pv / dv;
            if !step.is_finite() {
                break;
            }
            *z -= step;
        }
    }
    Ok(roots)
}
