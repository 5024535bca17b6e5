//! One-sided Jacobi SVD, used for rank and nullspace decisions.
//!
//! For the matrix sizes in this crate (n <= ~20) the one-sided Jacobi
//! iteration is simple, accurate for small singular values, and has no
//! failure modes worth handling beyond the sweep cap.

use super::matrix::Matrix;

/// Singular values (descending) and right singular vectors (columns of V)
/// of a square matrix, so that `A = U diag(sigma) V^T`.
pub(crate) fn svd_values_v(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.n();
    let mut g = a.clone();
    let mut v = Matrix::identity(n);
    let eps = f64::EPSILON;

    for _sweep in 0..60 {
        let mut off = 0usize;
        for p in 0..n {
            for q in p + 1..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for i in 0..n {
                    let gp = g.get(i, p);
                    let gq = g.get(i, q);
                    alpha += gp * gp;
                    beta += gq * gq;
                    gamma += gp * gq;
                }
                if gamma.abs() <= eps * (alpha * beta).sqrt() + f64::MIN_POSITIVE {
                    continue;
                }
                off += 1;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let gp = g.get(i, p);
                    let gq = g.get(i, q);
                    g.set(i, p, c * gp - s * gq);
                    g.set(i, q, s * gp + c * gq);
                    let vp = v.get(i, p);
                    let vq = v.get(i, q);
                    v.set(i, p, c * vp - s * vq);
                    v.set(i, q, s * vp + c * vq);
                }
            }
        }
        if off == 0 {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let sigmas: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|i| g.get(i, j).powi(2)).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&x, &y| sigmas[y].partial_cmp(&sigmas[x]).unwrap());
    let sorted: Vec<f64> = order.iter().map(|&j| sigmas[j]).collect();
    let v_sorted = Matrix::from_fn(n, |i, j| v.get(i, order[j]));
    (sorted, v_sorted)
}

/// Orthonormal basis of the numerical nullspace of `a`: right singular
/// vectors whose singular value is at most `thresh`.
pub(crate) fn nullspace_basis(a: &Matrix, thresh: f64) -> Vec<Vec<f64>> {
    let n = a.n();
    let (sigma, v) = svd_values_v(a);
    let mut basis = Vec::new();
    for j in 0..n {
        if sigma[j] <= thresh {
            basis.push((0..n).map(|i| v.get(i, j)).collect());
        }
    }
    basis
}
