//! Gauss-Newton refinement of synthesized controls against the exact
//! per-eigenvalue product conditions. The gain sweep's roots satisfy these
//! conditions only as accurately as the closed-loop polynomial could be
//! solved; a couple of least-norm Newton steps in control space squeezes the
//! remaining error down to the evaluation noise of the conditions
//! themselves.

use crate::linalg::Matrix;

/// One scalar condition set at a node `lambda`:
/// `prod_k (1 + u_k lambda) = diag` and, when `off` is present,
/// `sum_k u_k prod_{j != k} (1 + u_j lambda) = off`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct NodeCondition {
    pub lambda: f64,
    pub diag: f64,
    pub off: Option<f64>,
}

/// Refine `controls` in place. Returns false (leaving the input untouched)
/// if the step computation breaks down; the caller's verification decides
/// what to do with the result either way.
pub(crate) fn refine_controls(controls: &mut [f64], conds: &[NodeCondition]) -> bool {
    let d = controls.len();
    let mut u = controls.to_vec();
    for _ in 0..3 {
        let (f, jac) = conditions_and_jacobian(&u, conds);
        let rows = f.len();
        // row equilibration before the normal equations
        let mut scale = vec![1.0; rows];
        for (i, row) in jac.iter().enumerate() {
            let m = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if m > 0.0 {
                scale[i] = m;
            }
        }
        let mut jjt = Matrix::zeros(rows);
        for i in 0..rows {
            for j in 0..rows {
                let dot: f64 = jac[i]
                    .iter()
                    .zip(&jac[j])
                    .map(|(a, b)| (a / scale[i]) * (b / scale[j]))
                    .sum();
                jjt.set(i, j, dot);
            }
        }
        let rhs: Vec<f64> = f.iter().zip(&scale).map(|(v, s)| v / s).collect();
        let y = match jjt.lu() {
            Ok(lu) if !lu.is_singular() => lu.solve(&rhs),
            _ => return false,
        };
        if y.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let mut max_step = 0.0f64;
        for k in 0..d {
            let delta: f64 = (0..rows).map(|i| jac[i][k] / scale[i] * y[i]).sum();
            u[k] -= delta;
            max_step = max_step.max(delta.abs());
        }
        if u.iter().any(|v| !v.is_finite() || *v == 0.0) {
            return false;
        }
        if max_step == 0.0 {
            break;
        }
    }
    controls.copy_from_slice(&u);
    true
}

fn conditions_and_jacobian(u: &[f64], conds: &[NodeCondition]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = u.len();
    let mut f = Vec::new();
    let mut jac: Vec<Vec<f64>> = Vec::new();
    for c in conds {
        let a: Vec<f64> = u.iter().map(|&uk| 1.0 + uk * c.lambda).collect();
        // leave-one-out products via prefix/suffix
        let mut pre = vec![1.0; d + 1];
        for i in 0..d {
            pre[i + 1] = pre[i] * a[i];
        }
        let mut suf = vec![1.0; d + 1];
        for i in (0..d).rev() {
            suf[i] = suf[i + 1] * a[i];
        }
        let p = pre[d];
        let q: Vec<f64> = (0..d).map(|i| pre[i] * suf[i + 1]).collect();
        f.push(p - c.diag);
        jac.push(q.iter().map(|qi| c.lambda * qi).collect());
        if let Some(off) = c.off {
            let h: f64 = u.iter().zip(&q).map(|(uk, qk)| uk * qk).sum();
            // dH/du_l = Q_l + lambda * sum_{k != l} u_k Q_{k,l}
            let mut row = vec![0.0; d];
            for l in 0..d {
                // leave-two-out sums on the array without index l
                let mut ax = Vec::with_capacity(d - 1);
                let mut ux = Vec::with_capacity(d - 1);
                for i in 0..d {
                    if i != l {
                        ax.push(a[i]);
                        ux.push(u[i]);
                    }
                }
                let e = ax.len();
                let mut prex = vec![1.0; e + 1];
                for i in 0..e {
                    prex[i + 1] = prex[i] * ax[i];
                }
                let mut sufx = vec![1.0; e + 1];
                for i in (0..e).rev() {
                    sufx[i] = sufx[i + 1] * ax[i];
                }
                let inner: f64 = (0..e).map(|i| ux[i] * prex[i] * sufx[i + 1]).sum();
                row[l] = q[l] + c.lambda * inner;
            }
            f.push(h - off);
            jac.push(row);
        }
    }
    (f, jac)
}
