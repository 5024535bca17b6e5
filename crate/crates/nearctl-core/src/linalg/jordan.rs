//! Jordan canonical form, generalized-eigenvector chains, and the structural
//! queries built on top of it: orthant signatures, Krylov determinants, and
//! block-wise fractional matrix powers.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::eig::eigen_real;
use super::matrix::{vec_norm, Matrix};
use super::svd::nullspace_basis;
use super::LinalgError;

use crate::Tolerances;

/// One Jordan block of `J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JordanBlock {
    pub eigenvalue: f64,
    pub size: usize,
    /// 1-based position of the block's first row within `J`.
    pub start: usize,
}

/// Jordan canonical form `J = P B P^{-1}` together with the witness `P`.
///
/// Blocks for equal eigenvalues are adjacent. Distinct eigenvalues are
/// ordered so that eigenvalues whose largest block has size >= 2 come first
/// (ascending eigenvalue within each class), matching the canonical shape
/// used by the synthesis pipeline.
#[derive(Debug, Clone)]
pub struct JordanForm {
    pub j: Matrix,
    pub p: Matrix,
    pub p_inv: Matrix,
    pub blocks: Vec<JordanBlock>,
    /// Number of distinct eigenvalues.
    pub m: usize,
    /// Number of distinct eigenvalues whose largest block has size >= 2.
    pub r: usize,
}

impl JordanForm {
    pub fn n(&self) -> usize {
        self.j.n()
    }

    /// Distinct eigenvalues in block order.
    pub fn distinct_eigenvalues(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for b in &self.blocks {
            if !out.contains(&b.eigenvalue) {
                out.push(b.eigenvalue);
            }
        }
        out
    }

    /// Blocks grouped per distinct eigenvalue, preserving block order.
    pub fn eigenvalue_groups(&self) -> Vec<(f64, Vec<JordanBlock>)> {
        let mut out: Vec<(f64, Vec<JordanBlock>)> = Vec::new();
        for b in &self.blocks {
            match out.iter_mut().find(|(lam, _)| *lam == b.eigenvalue) {
                Some((_, v)) => v.push(*b),
                None => out.push((b.eigenvalue, vec![*b])),
            }
        }
        out
    }

    pub fn largest_block_size(&self) -> usize {
        self.blocks.iter().map(|b| b.size).max().unwrap_or(0)
    }

    /// One Jordan block per eigenvalue?
    pub fn is_cyclic(&self) -> bool {
        self.eigenvalue_groups().iter().all(|(_, v)| v.len() == 1)
    }

    pub fn has_zero_eigenvalue(&self) -> bool {
        self.blocks.iter().any(|b| b.eigenvalue == 0.0)
    }

    /// Accept a user-supplied `(J, P)` pair as the decomposition of `b`,
    /// validating the Jordan pattern of `J` and the similarity
    /// `P B P^{-1} = J`.
    pub fn from_pinned(
        j: &Matrix,
        p: &Matrix,
        b: &Matrix,
        tol: &Tolerances,
    ) -> Result<Self, LinalgError> {
        let n = b.n();
        if j.n() != n || p.n() != n {
            return Err(LinalgError::DimensionMismatch { expected: n, got: j.n().max(p.n()) });
        }
        let blocks = parse_jordan_pattern(j)
            .ok_or_else(|| LinalgError::NotCanonical("pinned J is not in Jordan form".into()))?;
        // equal eigenvalues must occupy adjacent blocks
        let mut seen: Vec<f64> = Vec::new();
        for blk in &blocks {
            if seen.last() != Some(&blk.eigenvalue) && seen.contains(&blk.eigenvalue) {
                return Err(LinalgError::NotCanonical(
                    "pinned J has non-adjacent blocks for one eigenvalue".into(),
                ));
            }
            if seen.last() != Some(&blk.eigenvalue) {
                seen.push(blk.eigenvalue);
            }
        }
        let p_inv = p.inverse().map_err(|_| {
            LinalgError::NotCanonical("pinned P is not invertible".into())
        })?;
        let residual = p.matmul(b).matmul(&p_inv).sub(j).frobenius_norm();
        let bound = 100.0 * tol.rank_tol * b.frobenius_norm().max(1.0);
        if residual > bound {
            return Err(LinalgError::NotCanonical(format!(
                "pinned pair fails P*B*P^-1 = J (residual {residual:.3e} > {bound:.3e})"
            )));
        }
        let (m, r) = count_m_r(&blocks);
        Ok(JordanForm { j: j.clone(), p: p.clone(), p_inv, blocks, m, r })
    }
}

fn count_m_r(blocks: &[JordanBlock]) -> (usize, usize) {
    let mut lams: Vec<f64> = Vec::new();
    let mut max_size: Vec<usize> = Vec::new();
    for b in blocks {
        match lams.iter().position(|&l| l == b.eigenvalue) {
            Some(i) => max_size[i] = max_size[i].max(b.size),
            None => {
                lams.push(b.eigenvalue);
                max_size.push(b.size);
            }
        }
    }
    let r = max_size.iter().filter(|&&s| s >= 2).count();
    (lams.len(), r)
}

/// Read the block structure off a matrix that is exactly in Jordan form
/// (diagonal plus a 0/1 superdiagonal, zeros elsewhere).
fn parse_jordan_pattern(a: &Matrix) -> Option<Vec<JordanBlock>> {
    let n = a.n();
    for i in 0..n {
        for j in 0..n {
            let v = a.get(i, j);
            if i == j {
                continue;
            }
            if j == i + 1 {
                if v != 0.0 && v != 1.0 {
                    return None;
                }
            } else if v != 0.0 {
                return None;
            }
        }
    }
    // superdiagonal 1 links rows into a block only when the eigenvalues agree
    let mut blocks = Vec::new();
    let mut start = 0usize;
    for i in 0..n {
        let linked = i + 1 < n && a.get(i, i + 1) == 1.0;
        if linked && a.get(i, i) != a.get(i + 1, i + 1) {
            return None;
        }
        if !linked {
            blocks.push(JordanBlock {
                eigenvalue: a.get(start, start),
                size: i - start + 1,
                start: start + 1,
            });
            start = i + 1;
        }
    }
    Some(blocks)
}

/// Canonical block order: group blocks by eigenvalue (largest block first
/// within a group); groups with a block of size >= 2 precede all-size-1
/// groups, ties broken by ascending eigenvalue.
fn canonical_block_order(mut groups: Vec<(f64, Vec<usize>)>) -> Vec<(f64, usize)> {
    for (_, sizes) in groups.iter_mut() {
        sizes.sort_unstable_by(|a, b| b.cmp(a));
    }
    groups.sort_by(|(la, sa), (lb, sb)| {
        let ca = sa[0].min(2);
        let cb = sb[0].min(2);
        cb.cmp(&ca).then(la.partial_cmp(lb).unwrap())
    });
    let mut out = Vec::new();
    for (lam, sizes) in groups {
        for s in sizes {
            out.push((lam, s));
        }
    }
    out
}

fn build_j(order: &[(f64, usize)]) -> (Matrix, Vec<JordanBlock>) {
    let n: usize = order.iter().map(|(_, s)| s).sum();
    let mut j = Matrix::zeros(n);
    let mut blocks = Vec::new();
    let mut pos = 0;
    for &(lam, size) in order {
        for k in 0..size {
            j.set(pos + k, pos + k, lam);
            if k + 1 < size {
                j.set(pos + k, pos + k + 1, 1.0);
            }
        }
        blocks.push(JordanBlock { eigenvalue: lam, size, start: pos + 1 });
        pos += size;
    }
    (j, blocks)
}

/// Jordan decomposition of a real matrix with real spectrum.
///
/// Matrices that are already exactly in Jordan form are handled by a
/// permutation into canonical order; everything else goes through the
/// eigensolver, nullity jumps of `(B - lambda I)^k`, and generalized
/// eigenvector chains. The result is verified against
/// `||P B P^{-1} - J|| <= 1e-8 * max(1, ||B||)` before it is returned.
pub fn jordan_decompose(b: &Matrix, tol: &Tolerances) -> Result<JordanForm, LinalgError> {
    if !b.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = b.n();

    if let Some(raw) = parse_jordan_pattern(b) {
        // permutation into canonical order; P is orthogonal
        let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
        for blk in &raw {
            match groups.iter_mut().find(|(l, _)| *l == blk.eigenvalue) {
                Some((_, v)) => v.push(blk.size),
                None => groups.push((blk.eigenvalue, vec![blk.size])),
            }
        }
        let order = canonical_block_order(groups);
        let (j, blocks) = build_j(&order);
        let mut p = Matrix::zeros(n);
        let mut used = vec![false; raw.len()];
        let mut new_pos = 0;
        for &(lam, size) in &order {
            let idx = raw
                .iter()
                .enumerate()
                .position(|(i, blk)| !used[i] && blk.eigenvalue == lam && blk.size == size)
                .expect("matching source block");
            used[idx] = true;
            let old_start = raw[idx].start - 1;
            for k in 0..size {
                p.set(new_pos + k, old_start + k, 1.0);
            }
            new_pos += size;
        }
        let p_inv = p.transpose();
        let (m, r) = count_m_r(&blocks);
        return Ok(JordanForm { j, p, p_inv, blocks, m, r });
    }

    let spectrum = eigen_real(b, tol)?;
    if !spectrum.all_real {
        return Err(LinalgError::ComplexSpectrum { max_imag: spectrum.max_imag });
    }

    // chains per distinct eigenvalue
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut chain_store: Vec<(f64, Vec<Vec<Vec<f64>>>)> = Vec::new();
    for &(lam, mult) in &spectrum.eigenvalues {
        let chains = eigen_chains(b, lam, mult, tol)?;
        let sizes: Vec<usize> = chains.iter().map(|c| c.len()).collect();
        groups.push((lam, sizes));
        chain_store.push((lam, chains));
    }
    let order = canonical_block_order(groups);
    let (j, blocks) = build_j(&order);

    // assemble V column-by-column in canonical order; chains within one
    // eigenvalue are consumed largest-first, matching canonical_block_order
    let mut v = Matrix::zeros(n);
    let mut col = 0;
    for &(lam, size) in &order {
        let store = chain_store
            .iter_mut()
            .find(|(l, _)| *l == lam)
            .map(|(_, chains)| chains)
            .expect("chain group");
        let idx = store
            .iter()
            .position(|c| c.len() == size)
            .expect("chain of the requested size");
        let chain = store.remove(idx);
        for vec in chain {
            for i in 0..n {
                v.set(i, col, vec[i]);
            }
            col += 1;
        }
    }

    let p = v.inverse().map_err(|_| {
        LinalgError::IllConditioned("generalized eigenvector basis is numerically singular".into())
    })?;
    let residual = p.matmul(b).matmul(&v).sub(&j).frobenius_norm();
    let bound = 1e-8 * b.frobenius_norm().max(1.0);
    if residual > bound {
        return Err(LinalgError::IllConditioned(format!(
            "reconstruction residual {residual:.3e} exceeds {bound:.3e}"
        )));
    }
    let (m, r) = count_m_r(&blocks);
    Ok(JordanForm { j, p, p_inv: v, blocks, m, r })
}

/// Generalized eigenvector chains for one clustered eigenvalue. Each chain is
/// returned as `[v_1, ..., v_k]` with `v_1` the eigenvector, `N v_{j+1} = v_j`
/// and `N = B - lambda I`.
fn eigen_chains(
    b: &Matrix,
    lam: f64,
    mult: usize,
    tol: &Tolerances,
) -> Result<Vec<Vec<Vec<f64>>>, LinalgError> {
    let n = b.n();
    let nmat = b.shifted(lam);
    let scale = nmat.frobenius_norm();
    if scale == 0.0 {
        // B = lambda I: n trivial chains
        return Ok((0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                vec![e]
            })
            .collect());
    }
    let normalized = {
        let mut m = nmat.clone();
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, m.get(i, j) / scale);
            }
        }
        m
    };

    // nullspaces of the normalized powers; nu[k] = dim ker N^{k+1}
    let mut bases: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut power = Matrix::identity(n);
    let mut nu_prev = 0usize;
    loop {
        power = power.matmul(&normalized);
        let basis = nullspace_basis(&power, tol.rank_tol);
        let nu = basis.len();
        if nu < nu_prev || (bases.len() >= mult && nu != mult) {
            return Err(LinalgError::IllConditioned(format!(
                "nullity sequence for eigenvalue {lam} is inconsistent"
            )));
        }
        bases.push(basis);
        if nu == mult {
            break;
        }
        if nu > mult || bases.len() > n {
            return Err(LinalgError::IllConditioned(format!(
                "nullity of (B - {lam} I)^k disagrees with multiplicity {mult}"
            )));
        }
        nu_prev = nu;
    }
    let p = bases.len();
    let nu = |k: usize| -> usize {
        if k == 0 {
            0
        } else if k <= p {
            bases[k - 1].len()
        } else {
            mult
        }
    };

    let mut chains: Vec<(usize, Vec<f64>)> = Vec::new(); // (size, generator)
    for k in (1..=p).rev() {
        let exactly_k = (nu(k) - nu(k - 1)) - (nu(k + 1) - nu(k));
        if exactly_k == 0 {
            continue;
        }
        // avoid U_{k-1} plus the depth-k members of taller chains
        let mut avoid: Vec<Vec<f64>> = if k >= 2 { bases[k - 2].clone() } else { Vec::new() };
        for (size, w) in &chains {
            if *size > k {
                avoid.push(apply_power(&nmat, size - k, w));
            }
        }
        let mut q = orthonormalize(&avoid);
        let candidates = &bases[k - 1];
        for _ in 0..exactly_k {
            let mut best: Option<(f64, Vec<f64>)> = None;
            for cand in candidates {
                let res = project_out(cand, &q);
                let norm = vec_norm(&res);
                if best.as_ref().map_or(true, |(b, _)| norm > *b) {
                    best = Some((norm, res));
                }
            }
            let (norm, res) = best.expect("nonempty candidate basis");
            if norm <= 1e-6 {
                return Err(LinalgError::IllConditioned(format!(
                    "chain generator selection degenerate for eigenvalue {lam}"
                )));
            }
            let w: Vec<f64> = res.iter().map(|v| v / norm).collect();
            q.push(w.clone());
            chains.push((k, w));
        }
    }

    // realize chains with the unnormalized N and rescale each chain so the
    // eigenvector has unit norm
    let mut out = Vec::new();
    for (size, w) in chains {
        let mut vs: Vec<Vec<f64>> = Vec::with_capacity(size);
        let mut cur = w;
        vs.push(cur.clone());
        for _ in 1..size {
            cur = nmat.matvec(&cur);
            vs.push(cur.clone());
        }
        vs.reverse(); // [N^{k-1} w, ..., w]
        let head = vec_norm(&vs[0]);
        if head == 0.0 {
            return Err(LinalgError::IllConditioned(format!(
                "zero chain head for eigenvalue {lam}"
            )));
        }
        for v in vs.iter_mut() {
            for x in v.iter_mut() {
                *x /= head;
            }
        }
        out.push(vs);
    }
    // largest chains first, deterministic
    out.sort_by(|a, b| b.len().cmp(&a.len()));
    Ok(out)
}

fn apply_power(m: &Matrix, k: usize, x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    for _ in 0..k {
        v = m.matvec(&v);
    }
    v
}

fn orthonormalize(vecs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = Vec::new();
    for v in vecs {
        let mut r = project_out(v, &q);
        let norm = vec_norm(&r);
        if norm > 1e-12 {
            for x in r.iter_mut() {
                *x /= norm;
            }
            q.push(r);
        }
    }
    q
}

fn project_out(v: &[f64], q: &[Vec<f64>]) -> Vec<f64> {
    let mut r = v.to_vec();
    // twice for stability
    for _ in 0..2 {
        for col in q {
            let dot: f64 = r.iter().zip(col).map(|(a, b)| a * b).sum();
            for (x, c) in r.iter_mut().zip(col) {
                *x -= dot * c;
            }
        }
    }
    r
}

// ---------------------------------------------------------------------------
// canonical structure, signatures, Krylov determinant, fractional powers
// ---------------------------------------------------------------------------

/// Sign of one relevant J-coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Pos,
    #[serde(rename = "-")]
    Neg,
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::Pos => write!(f, "+"),
            Sign::Neg => write!(f, "-"),
        }
    }
}

/// Structure of a Jordan form that is nonsingular, cyclic, with all blocks of
/// size <= 2 and size-2 blocks leading: the shape every synthesis step
/// assumes. Constructing this type is the proof that a given `JordanForm`
/// has that shape.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalStructure {
    n: usize,
    r: usize,
    /// Distinct eigenvalues, the `r` size-2 eigenvalues first.
    eigs: Vec<f64>,
}

impl CanonicalStructure {
    pub fn try_from_jordan(jf: &JordanForm) -> Result<Self, LinalgError> {
        if jf.has_zero_eigenvalue() {
            return Err(LinalgError::NotCanonical("zero eigenvalue (singular B)".into()));
        }
        if !jf.is_cyclic() {
            return Err(LinalgError::NotCanonical(
                "an eigenvalue has more than one Jordan block (noncyclic B)".into(),
            ));
        }
        if jf.largest_block_size() > 2 {
            return Err(LinalgError::NotCanonical(
                "a Jordan block has dimension greater than two".into(),
            ));
        }
        let mut seen_single = false;
        for b in &jf.blocks {
            if b.size == 1 {
                seen_single = true;
            } else if seen_single {
                return Err(LinalgError::NotCanonical(
                    "size-2 blocks must precede size-1 blocks".into(),
                ));
            }
        }
        let r = jf.blocks.iter().filter(|b| b.size == 2).count();
        let eigs = jf.blocks.iter().map(|b| b.eigenvalue).collect();
        Ok(CanonicalStructure { n: jf.n(), r, eigs })
    }

    /// Structure of a bare canonical Jordan matrix (used in tests and for
    /// subsystems that are constructed to be canonical).
    pub fn from_parts(eigs: Vec<f64>, r: usize) -> Self {
        let n = 2 * r + (eigs.len() - r);
        CanonicalStructure { n, r, eigs }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of distinct eigenvalues.
    pub fn m(&self) -> usize {
        self.eigs.len()
    }

    /// Number of size-2 blocks.
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigs
    }

    /// The canonical `J` matrix this structure describes.
    pub fn j_matrix(&self) -> Matrix {
        let order: Vec<(f64, usize)> = self
            .eigs
            .iter()
            .enumerate()
            .map(|(i, &l)| (l, if i < self.r { 2 } else { 1 }))
            .collect();
        build_j(&order).0
    }

    /// 0-based indices of the coordinates whose signs define the orthant:
    /// the second coordinate of each size-2 block, then every size-1
    /// coordinate.
    pub fn relevant_coords(&self) -> Vec<usize> {
        let mut v: Vec<usize> = (0..self.r).map(|i| 2 * i + 1).collect();
        v.extend(2 * self.r..self.n);
        v
    }
}

/// Signs of the orthant-defining coordinates of `x` (one per distinct
/// eigenvalue). Errors with the 1-based offending coordinate when `x` lies
/// on the removed hypersurface.
pub fn orthant_signature(
    x: &[f64],
    cs: &CanonicalStructure,
    tol: &Tolerances,
) -> Result<Vec<Sign>, LinalgError> {
    assert_eq!(x.len(), cs.n(), "state dimension mismatch");
    let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut sig = Vec::with_capacity(cs.m());
    for c in cs.relevant_coords() {
        let v = x[c];
        if v.abs() <= tol.rank_tol * scale.max(1e-300) || v == 0.0 {
            return Err(LinalgError::OnHypersurface { coordinate: c + 1 });
        }
        sig.push(if v > 0.0 { Sign::Pos } else { Sign::Neg });
    }
    Ok(sig)
}

/// `det [x, Bx, ..., B^{n-1} x]` - nonzero exactly on the controllable
/// region.
pub fn krylov_det(b: &Matrix, x: &[f64]) -> Result<f64, LinalgError> {
    let n = b.n();
    if x.len() != n {
        return Err(LinalgError::DimensionMismatch { expected: n, got: x.len() });
    }
    let mut k = Matrix::zeros(n);
    let mut col = x.to_vec();
    for j in 0..n {
        for i in 0..n {
            k.set(i, j, col[i]);
        }
        if j + 1 < n {
            col = b.matvec(&col);
        }
    }
    Ok(k.det())
}

/// Principal q-th root of a transition matrix with the canonical block
/// pattern: `[a, b; 0, a] -> [a^{1/q}, b / (q a^{(q-1)/q}); 0, a^{1/q}]` on
/// size-2 blocks and `a -> a^{1/q}` on size-1 blocks.
pub fn matrix_fractional_root(
    t: &Matrix,
    q: u64,
    cs: &CanonicalStructure,
) -> Result<Matrix, LinalgError> {
    assert!(q >= 1, "q must be positive");
    assert_eq!(t.n(), cs.n(), "dimension mismatch");
    let qf = q as f64;
    let mut out = Matrix::zeros(t.n());
    for i in 0..cs.r() {
        let (d0, d1) = (2 * i, 2 * i + 1);
        let a = t.get(d1, d1);
        if a <= 0.0 {
            return Err(LinalgError::NonPositiveDiagonal { index: d1 + 1 });
        }
        let b = t.get(d0, d1);
        let ar = a.powf(1.0 / qf);
        out.set(d0, d0, ar);
        out.set(d1, d1, ar);
        out.set(d0, d1, b / (qf * a.powf((qf - 1.0) / qf)));
    }
    for j in 2 * cs.r()..cs.n() {
        let a = t.get(j, j);
        if a <= 0.0 {
            return Err(LinalgError::NonPositiveDiagonal { index: j + 1 });
        }
        out.set(j, j, a.powf(1.0 / qf));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn triangular_fixture() -> Matrix {
        Matrix::from_rows(&[
            vec![2.0, 1.0, -5.0],
            vec![0.0, 2.0, -4.0],
            vec![0.0, 0.0, -2.0],
        ])
        .unwrap()
    }

    fn triangular_fixture_j() -> Matrix {
        Matrix::from_rows(&[vec![2.0, 1.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, -2.0]])
            .unwrap()
    }

    #[test]
    fn decomposes_triangular_fixture() {
        let b = triangular_fixture();
        let jf = jordan_decompose(&b, &tol()).unwrap();
        assert_eq!(jf.j, triangular_fixture_j());
        assert_eq!(jf.m, 2);
        assert_eq!(jf.r, 1);
        assert_eq!(
            jf.blocks,
            vec![
                JordanBlock { eigenvalue: 2.0, size: 2, start: 1 },
                JordanBlock { eigenvalue: -2.0, size: 1, start: 3 },
            ]
        );
        let res = jf.p.matmul(&b).matmul(&jf.p_inv).sub(&jf.j).frobenius_norm();
        assert!(res <= 1e-8, "residual {res}");
    }

    #[test]
    fn diagonal_is_its_own_form() {
        let b = Matrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 5.0]]).unwrap();
        let jf = jordan_decompose(&b, &tol()).unwrap();
        assert_eq!(jf.j, b);
        assert_eq!(jf.p, Matrix::identity(2));
    }

    #[test]
    fn reorders_jordan_input_canonically() {
        // 1x1 block before a 2x2 block gets permuted: size-2 first
        let b = Matrix::from_rows(&[
            vec![-2.0, 0.0, 0.0],
            vec![0.0, 2.0, 1.0],
            vec![0.0, 0.0, 2.0],
        ])
        .unwrap();
        let jf = jordan_decompose(&b, &tol()).unwrap();
        assert_eq!(jf.j, triangular_fixture_j());
        let res = jf.p.matmul(&b).matmul(&jf.p_inv).sub(&jf.j).frobenius_norm();
        assert!(res == 0.0);
    }

    #[test]
    fn recovers_known_block_structure() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        // J with blocks (2: size 2), (-1: sizes 2+1), (0.5: size 1): noncyclic, n=6
        let order = vec![(2.0, 2), (-1.0, 2), (-1.0, 1), (0.5, 1)];
        let (j0, _) = build_j(&order);
        for _ in 0..10 {
            let v = random_well_conditioned(6, &mut rng);
            let b = v.matmul(&j0).matmul(&v.inverse().unwrap());
            let jf = jordan_decompose(&b, &tol()).unwrap();
            let sizes: Vec<(f64, usize)> =
                jf.blocks.iter().map(|b| (b.eigenvalue, b.size)).collect();
            assert_eq!(sizes.len(), 4);
            assert_eq!(sizes[0].1, 2);
            assert!((sizes[0].0 - 2.0).abs() < 1e-6 || (sizes[0].0 + 1.0).abs() < 1e-6);
            let res = jf.p.matmul(&b).matmul(&jf.p_inv).sub(&jf.j).frobenius_norm();
            assert!(res <= 1e-8 * b.frobenius_norm().max(1.0), "residual {res}");
        }
    }

    pub(crate) fn random_well_conditioned(
        n: usize,
        rng: &mut impl rand::Rng,
    ) -> Matrix {
        // Q D with Q from Gram-Schmidt on a Gaussian-ish matrix, D in [0.5, 2]
        loop {
            let a = Matrix::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let cols: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| a.get(i, j)).collect()).collect();
            let q = orthonormalize(&cols);
            if q.len() < n {
                continue;
            }
            let mut out = Matrix::zeros(n);
            for (j, col) in q.iter().enumerate() {
                let d = rng.gen_range(0.5..2.0);
                for i in 0..n {
                    out.set(i, j, col[i] * d);
                }
            }
            return out;
        }
    }

    #[test]
    fn pinned_pair_round_trip() {
        let b = triangular_fixture();
        let p = Matrix::from_rows(&[
            vec![1.0, -1.0, 0.0],
            vec![0.0, 1.0, -1.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let jf = JordanForm::from_pinned(&triangular_fixture_j(), &p, &b, &tol()).unwrap();
        assert_eq!(jf.m, 2);
        assert_eq!(jf.r, 1);
        // a wrong P is rejected
        let bad = Matrix::identity(3);
        assert!(JordanForm::from_pinned(&triangular_fixture_j(), &bad, &b, &tol()).is_err());
    }

    #[test]
    fn complex_spectrum_is_rejected() {
        let b = Matrix::from_rows(&[vec![1.0, 2.0], vec![-2.0, 1.0]]).unwrap();
        match jordan_decompose(&b, &tol()) {
            Err(LinalgError::ComplexSpectrum { .. }) => {}
            other => panic!("expected ComplexSpectrum, got {other:?}"),
        }
    }

    #[test]
    fn krylov_det_examples() {
        let j = triangular_fixture_j();
        assert!((krylov_det(&j, &[0.0, 1.0, -1.0]).unwrap() - 16.0).abs() < 1e-12);
        assert_eq!(krylov_det(&j, &[1.0, 0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(krylov_det(&j, &[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!(krylov_det(&j, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn orthant_signature_examples() {
        let jf = jordan_decompose(&triangular_fixture_j(), &tol()).unwrap();
        let cs = CanonicalStructure::try_from_jordan(&jf).unwrap();
        assert_eq!(cs.relevant_coords(), vec![1, 2]);
        assert_eq!(
            orthant_signature(&[6.0, 9.0, 12.0], &cs, &tol()).unwrap(),
            vec![Sign::Pos, Sign::Pos]
        );
        assert_eq!(
            orthant_signature(&[0.0, 1.0, -1.0], &cs, &tol()).unwrap(),
            vec![Sign::Pos, Sign::Neg]
        );
        assert_eq!(
            orthant_signature(&[5.0, 0.0, 1.0], &cs, &tol()).unwrap_err(),
            LinalgError::OnHypersurface { coordinate: 2 }
        );
    }

    #[test]
    fn canonical_structure_rejections() {
        let noncyclic = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let jf = jordan_decompose(&noncyclic, &tol()).unwrap();
        assert!(CanonicalStructure::try_from_jordan(&jf).is_err());

        let singular =
            Matrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let jf = jordan_decompose(&singular, &tol()).unwrap();
        assert!(CanonicalStructure::try_from_jordan(&jf).is_err());
    }

    #[test]
    fn fractional_root_examples() {
        let cs = CanonicalStructure::from_parts(vec![2.0, -2.0], 1);
        let t = Matrix::from_rows(&[
            vec![3.0, 1.0, 0.0],
            vec![0.0, 3.0, 0.0],
            vec![0.0, 0.0, 12.0],
        ])
        .unwrap();
        let root = matrix_fractional_root(&t, 4, &cs).unwrap();
        let a = 3f64.powf(0.25);
        assert!((root.get(0, 0) - a).abs() < 1e-14);
        assert!((root.get(0, 1) - 1.0 / (4.0 * 3f64.powf(0.75))).abs() < 1e-14);
        assert!((root.get(2, 2) - 12f64.powf(0.25)).abs() < 1e-14);
        assert!(root.pow(4).sub(&t).frobenius_norm() < 1e-10);

        let i3 = Matrix::identity(3);
        assert_eq!(matrix_fractional_root(&i3, 7, &cs).unwrap(), i3);

        let cs2 = CanonicalStructure::from_parts(vec![1.0], 1);
        let t2 = Matrix::from_rows(&[vec![4.0, 2.0], vec![0.0, 4.0]]).unwrap();
        let r2 = matrix_fractional_root(&t2, 2, &cs2).unwrap();
        assert!((r2.get(0, 0) - 2.0).abs() < 1e-14);
        assert!((r2.get(0, 1) - 0.5).abs() < 1e-14);
        assert!(r2.pow(2).sub(&t2).frobenius_norm() < 1e-12);

        let mut neg = t.clone();
        neg.set(2, 2, -1.0);
        assert_eq!(
            matrix_fractional_root(&neg, 2, &cs).unwrap_err(),
            LinalgError::NonPositiveDiagonal { index: 3 }
        );
    }
}
