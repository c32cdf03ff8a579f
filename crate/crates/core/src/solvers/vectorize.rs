use nalgebra::DMatrix;

use super::{check_square, SolverError};
use crate::linalg::CsrMatrix;

pub fn edge_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Position of pair `(i, j)`, `i < j`, in lexicographic order.
pub fn edge_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

pub fn edge_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// CGL with off-diagonal `−a_e`.
pub fn laplacian_from_weights(n: usize, a: &[f64]) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(n, n);
    for ((i, j), &w) in edge_pairs(n).zip(a) {
        l[(i, j)] = -w;
        l[(j, i)] = -w;
        l[(i, i)] += w;
        l[(j, j)] += w;
    }
    l
}

/// `a_e = −L_ij` (not clipped).
pub fn weights_from_laplacian(l: &DMatrix<f64>) -> Vec<f64> {
    edge_pairs(l.nrows()).map(|(i, j)| -0.5 * (l[(i, j)] + l[(j, i)])).collect()
}

/// Linear model `b = P a` of a CGL in terms of its edge weights.
#[derive(Debug, Clone)]
pub struct CglVectorization {
    pub n: usize,
    /// `(N + E) × E`: the first `N` rows give the diagonal, the remaining `E`
    /// give `√2` times the off-diagonal entries.
    pub p: CsrMatrix,
    /// Target `[ℓ̂_diag; √2 ℓ̂_offdiag]`.
    pub b: Vec<f64>,
    /// Row of `b` for each diagonal position.
    pub diag_rows: Vec<usize>,
    /// `(row of b, i, j)` for each strictly-lower position `(j, i)`.
    pub offdiag_rows: Vec<(usize, usize, usize)>,
}

pub(crate) fn structure_matrix(n: usize) -> CsrMatrix {
    let e = edge_count(n);
    let r2 = std::f64::consts::SQRT_2;
    let mut t = Vec::with_capacity(3 * e);
    for (k, (i, j)) in edge_pairs(n).enumerate() {
        t.push((i, k, 1.0));
        t.push((j, k, 1.0));
        t.push((n + k, k, -r2));
    }
    // PᵀP = |B|ᵀ|B| + 2I; the signless Laplacian of K_N has top eigenvalue 2(N − 1).
    CsrMatrix::from_triplets(n + e, e, &t).with_gram_bound((2 * n).max(2) as f64)
}

pub(crate) fn target_vector(l_hat: &DMatrix<f64>) -> Vec<f64> {
    let n = l_hat.nrows();
    let r2 = std::f64::consts::SQRT_2;
    let mut b = Vec::with_capacity(n + edge_count(n));
    b.extend((0..n).map(|i| l_hat[(i, i)]));
    b.extend(edge_pairs(n).map(|(i, j)| r2 * 0.5 * (l_hat[(i, j)] + l_hat[(j, i)])));
    b
}

/// Build `P` and `b̂` with `‖L(a) − L̂‖_F² = ‖P a − b̂‖²` for the symmetric
/// part of `L̂`.
pub fn cgl_vectorize(l_hat: &DMatrix<f64>) -> Result<CglVectorization, SolverError> {
    check_square(l_hat)?;
    let n = l_hat.nrows();
    Ok(CglVectorization {
        n,
        p: structure_matrix(n),
        b: target_vector(l_hat),
        diag_rows: (0..n).collect(),
        offdiag_rows: edge_pairs(n).enumerate().map(|(k, (i, j))| (n + k, i, j)).collect(),
    })
}
