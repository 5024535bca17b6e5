//! Real dense eigensolver: Householder reduction to Hessenberg form followed
//! by the shifted double-step QR iteration (EISPACK `hqr` lineage), plus the
//! eigenvalue clustering used everywhere downstream.

use num_complex::Complex64;

use super::matrix::Matrix;
use super::LinalgError;
use crate::Tolerances;

/// Eigenvalues of a real matrix grouped by algebraic multiplicity.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// `(value, algebraic multiplicity)` pairs, values ascending and pairwise
    /// distinct after clustering. When `all_real` is false these are the
    /// clustered real parts, kept so that multiplicities still sum to n.
    pub eigenvalues: Vec<(f64, usize)>,
    /// True iff every eigenvalue's imaginary part is below
    /// `rank_tol * ||B||_F`.
    pub all_real: bool,
    /// Largest |imaginary part| seen before clustering.
    pub max_imag: f64,
}

impl Spectrum {
    pub fn total_multiplicity(&self) -> usize {
        self.eigenvalues.iter().map(|(_, m)| m).sum()
    }
}

/// Compute the clustered real spectrum of `b`.
///
/// Eigenvalues closer than `eig_cluster * ||B||_F` are merged into their
/// mean; a cluster mean within the same distance of zero is snapped to an
/// exact zero so that singularity checks downstream are crisp.
pub fn eigen_real(b: &Matrix, tol: &Tolerances) -> Result<Spectrum, LinalgError> {
    if !b.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = b.n();
    let scale = b.frobenius_norm();
    if scale == 0.0 {
        return Ok(Spectrum { eigenvalues: vec![(0.0, n)], all_real: true, max_imag: 0.0 });
    }

    let eigs = eigenvalues_complex(b, tol.eig_cluster * scale)?;
    let max_imag = eigs.iter().fold(0.0f64, |acc, z| acc.max(z.im.abs()));
    let all_real = max_imag <= tol.rank_tol * scale;

    let mut re: Vec<f64> = eigs.iter().map(|z| z.re).collect();
    re.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let gap = tol.eig_cluster * scale;
    let mut clusters: Vec<(f64, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=re.len() {
        if i == re.len() || re[i] - re[i - 1] > gap {
            let members = &re[start..i];
            let mut mean = members.iter().sum::<f64>() / members.len() as f64;
            if mean.abs() <= gap {
                mean = 0.0;
            }
            clusters.push((mean, members.len()));
            start = i;
        }
    }
    Ok(Spectrum { eigenvalues: clusters, all_real, max_imag })
}

/// All eigenvalues of `a` as complex numbers.
///
/// A converged 2x2 trailing block whose discriminant is negative but within
/// `snap_tol^2` of zero is resolved as a numerically defective real pair
/// rather than a complex pair: at that distance the real/complex question is
/// below the data's noise floor and the real reading keeps genuinely
/// real-spectrum inputs (the only ones supported downstream) on the real
/// path.
pub(crate) fn eigenvalues_complex(
    a: &Matrix,
    snap_tol: f64,
) -> Result<Vec<Complex64>, LinalgError> {
    let n = a.n();
    if n == 0 {
        return Ok(Vec::new());
    }
    if let Some(diag) = exact_triangular_diagonal(a) {
        return Ok(diag.into_iter().map(|v| Complex64::new(v, 0.0)).collect());
    }
    let mut h = hessenberg(a);
    hqr(&mut h, snap_tol)
}

/// Diagonal of `a` if it is exactly upper or lower triangular.
fn exact_triangular_diagonal(a: &Matrix) -> Option<Vec<f64>> {
    let n = a.n();
    let upper = (0..n).all(|i| (0..i).all(|j| a.get(i, j) == 0.0));
    let lower = (0..n).all(|i| (i + 1..n).all(|j| a.get(i, j) == 0.0));
    if upper || lower {
        Some((0..n).map(|i| a.get(i, i)).collect())
    } else {
        None
    }
}

/// Householder similarity reduction to upper Hessenberg form.
fn hessenberg(a: &Matrix) -> Matrix {
    let n = a.n();
    let mut h = a.clone();
    for k in 0..n.saturating_sub(2) {
        let norm: f64 = (k + 1..n).map(|i| h.get(i, k).powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if h.get(k + 1, k) > 0.0 { -norm } else { norm };
        let mut v = vec![0.0; n];
        v[k + 1] = h.get(k + 1, k) - alpha;
        for i in k + 2..n {
            v[i] = h.get(i, k);
        }
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        if vtv <= f64::MIN_POSITIVE {
            continue;
        }
        let beta = 2.0 / vtv;
        // H A: rows
        for j in 0..n {
            let s: f64 = (k + 1..n).map(|i| v[i] * h.get(i, j)).sum();
            let s = beta * s;
            for i in k + 1..n {
                h.set(i, j, h.get(i, j) - s * v[i]);
            }
        }
        // A H: columns
        for i in 0..n {
            let s: f64 = (k + 1..n).map(|j| v[j] * h.get(i, j)).sum();
            let s = beta * s;
            for j in k + 1..n {
                h.set(i, j, h.get(i, j) - s * v[j]);
            }
        }
        for i in k + 2..n {
            h.set(i, k, 0.0);
        }
    }
    h
}

/// Double-shift QR iteration on an upper Hessenberg matrix, eigenvalues only.
fn hqr(h: &mut Matrix, snap_tol: f64) -> Result<Vec<Complex64>, LinalgError> {
    let n = h.n();
    let mut eig = vec![Complex64::new(0.0, 0.0); n];
    let eps = f64::EPSILON;
    let anorm: f64 = (0..n)
        .map(|i| (i.saturating_sub(1)..n).map(|j| h.get(i, j).abs()).sum::<f64>())
        .sum();
    let mut t = 0.0;
    let mut nn = n as isize - 1;

    while nn >= 0 {
        let mut its = 0;
        loop {
            // look for a single small subdiagonal element
            let mut l = nn;
            while l >= 1 {
                let s = h.get((l - 1) as usize, (l - 1) as usize).abs()
                    + h.get(l as usize, l as usize).abs();
                let s = if s == 0.0 { anorm } else { s };
                if h.get(l as usize, (l - 1) as usize).abs() <= eps * s {
                    h.set(l as usize, (l - 1) as usize, 0.0);
                    break;
                }
                l -= 1;
            }
            let x = h.get(nn as usize, nn as usize);
            if l == nn {
                eig[nn as usize] = Complex64::new(x + t, 0.0);
                nn -= 1;
                break;
            }
            let y = h.get((nn - 1) as usize, (nn - 1) as usize);
            let w = h.get(nn as usize, (nn - 1) as usize) * h.get((nn - 1) as usize, nn as usize);
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                let x = x + t;
                if q >= 0.0 {
                    let z = p + z.copysign(p);
                    eig[(nn - 1) as usize] = Complex64::new(x + z, 0.0);
                    eig[nn as usize] = if z == 0.0 {
                        Complex64::new(x, 0.0)
                    } else {
                        Complex64::new(x - w / z, 0.0)
                    };
                } else if z <= snap_tol {
                    // numerically defective real pair
                    eig[(nn - 1) as usize] = Complex64::new(x + p, 0.0);
                    eig[nn as usize] = Complex64::new(x + p, 0.0);
                } else {
                    eig[(nn - 1) as usize] = Complex64::new(x + p, z);
                    eig[nn as usize] = Complex64::new(x + p, -z);
                }
                nn -= 2;
                break;
            }
            if its == 40 {
                return Err(LinalgError::NoConvergence);
            }
            let (mut x, mut y, mut w) = (x, y, w);
            if its == 10 || its == 20 || its == 30 {
                // exceptional shift
                t += x;
                for i in 0..=nn as usize {
                    h.set(i, i, h.get(i, i) - x);
                }
                let s = h.get(nn as usize, (nn - 1) as usize).abs()
                    + h.get((nn - 1) as usize, (nn - 2) as usize).abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            // form the first column of (H - aI)(H - bI) and chase the bulge
            let mut m = nn - 2;
            let (mut p, mut q, mut r) = (0.0, 0.0, 0.0);
            while m >= l {
                let z = h.get(m as usize, m as usize);
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / h.get((m + 1) as usize, m as usize)
                    + h.get(m as usize, (m + 1) as usize);
                q = h.get((m + 1) as usize, (m + 1) as usize) - z - rr - ss;
                r = h.get((m + 2) as usize, (m + 1) as usize);
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = h.get(m as usize, (m - 1) as usize).abs() * (q.abs() + r.abs());
                let v = p.abs()
                    * (h.get((m - 1) as usize, (m - 1) as usize).abs()
                        + z.abs()
                        + h.get((m + 1) as usize, (m + 1) as usize).abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nn {
                h.set(i as usize, (i - 2) as usize, 0.0);
                if i > m + 2 {
                    h.set(i as usize, (i - 3) as usize, 0.0);
                }
            }
            for k in m..=nn - 1 {
                if k != m {
                    p = h.get(k as usize, (k - 1) as usize);
                    q = h.get((k + 1) as usize, (k - 1) as usize);
                    r = if k != nn - 1 { h.get((k + 2) as usize, (k - 1) as usize) } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s == 0.0 {
                    continue;
                }
                if k == m {
                    if l != m {
                        h.set(k as usize, (k - 1) as usize, -h.get(k as usize, (k - 1) as usize));
                    }
                } else {
                    h.set(k as usize, (k - 1) as usize, -s * x);
                }
                p += s;
                let px = p / s;
                let qy = q / s;
                let rz = r / s;
                let qp = q / p;
                let rp = r / p;
                // row modification
                for j in k as usize..=nn as usize {
                    let mut pp = h.get(k as usize, j) + qp * h.get((k + 1) as usize, j);
                    if k != nn - 1 {
                        pp += rp * h.get((k + 2) as usize, j);
                        h.set((k + 2) as usize, j, h.get((k + 2) as usize, j) - pp * rz);
                    }
                    h.set((k + 1) as usize, j, h.get((k + 1) as usize, j) - pp * qy);
                    h.set(k as usize, j, h.get(k as usize, j) - pp * px);
                }
                let mmin = if nn < k + 3 { nn } else { k + 3 };
                // column modification
                for i in l as usize..=mmin as usize {
                    let mut pp = px * h.get(i, k as usize) + qy * h.get(i, (k + 1) as usize);
                    if k != nn - 1 {
                        pp += rz * h.get(i, (k + 2) as usize);
                        h.set(i, (k + 2) as usize, h.get(i, (k + 2) as usize) - pp * rp);
                    }
                    h.set(i, (k + 1) as usize, h.get(i, (k + 1) as usize) - pp * qp);
                    h.set(i, k as usize, h.get(i, k as usize) - pp);
                }
            }
        }
    }
    Ok(eig)
}
