//! Small dense/sparse linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};

/// Symmetric eigendecomposition with eigenvalues in ascending order.
///
/// The input is symmetrised as `(m + mᵀ)/2` first. Each eigenvector is
/// sign-normalised so that its largest-magnitude entry is positive, which
/// makes the output deterministic for identical input.
pub fn eigh_ascending(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    eigh_sorted(m, false)
}

/// As [`eigh_ascending`] but with eigenvalues nonincreasing. Ties keep the
/// solver's original index order in both variants.
pub fn eigh_descending(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    eigh_sorted(m, true)
}

fn eigh_sorted(m: &DMatrix<f64>, descending: bool) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let sym = symmetrize(m);
    let eig = nalgebra::SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let by_value = eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap_or(std::cmp::Ordering::Equal);
        let by_value = if descending { by_value.reverse() } else { by_value };
        by_value.then(a.cmp(&b))
    });
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        normalize_sign(&mut col);
        vectors.set_column(dst, &col);
    }
    (values, vectors)
}

fn normalize_sign(v: &mut DVector<f64>) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.neg_mut();
    }
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `V diag(d) Vᵀ`.
pub fn reconstruct(vectors: &DMatrix<f64>, diag: &DVector<f64>) -> DMatrix<f64> {
    let mut scaled = vectors.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= diag[j];
    }
    let out = scaled * vectors.transpose();
    symmetrize(&out)
}

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn trace(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

pub fn max_abs_offdiag(m: &DMatrix<f64>) -> f64 {
    let mut best = 0.0_f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                best = best.max(m[(i, j)].abs());
            }
        }
    }
    best
}

/// Spectral norm of a symmetric matrix (largest absolute eigenvalue).
pub fn sym_spectral_norm(m: &DMatrix<f64>) -> f64 {
    let (vals, _) = eigh_ascending(m);
    vals.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// A linear map that can be applied forwards and transposed.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `y = A x`
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// `x = Aᵀ y`
    fn apply_t(&self, y: &[f64], x: &mut [f64]);

    /// Upper bound on `λ_max(AᵀA)`, if known in closed form.
    fn gram_norm_bound(&self) -> Option<f64> {
        None
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    gram_bound: Option<f64>,
}

impl CsrMatrix {
    /// Build from `(row, col, value)` triplets. Duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|a| (a.0, a.1));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &sorted {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            indices.push(c);
            values.push(v);
            indptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        CsrMatrix { nrows, ncols, indptr, indices, values, gram_bound: None }
    }

    /// Attach a known bound on `λ_max(AᵀA)`.
    pub fn with_gram_bound(mut self, bound: f64) -> Self {
        self.gram_bound = Some(bound);
        self
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.apply(x, &mut y);
        y
    }

    pub fn mul_t_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.ncols];
        self.apply_t(y, &mut x);
        x
    }
}

impl LinearOperator for CsrMatrix {
    fn nrows(&self) -> usize {
        self.nrows
    }

    fn ncols(&self) -> usize {
        self.ncols
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *out = acc;
        }
    }

    fn apply_t(&self, y: &[f64], x: &mut [f64]) {
        x.iter_mut().for_each(|v| *v = 0.0);
        for (r, &yr) in y.iter().enumerate() {
            if yr == 0.0 {
                continue;
            }
            for k in self.indptr[r]..self.indptr[r + 1] {
                x[self.indices[k]] += self.values[k] * yr;
            }
        }
    }

    fn gram_norm_bound(&self) -> Option<f64> {
        self.gram_bound
    }
}

/// Dense matrices are operators too (used in tests and small problems).
impl LinearOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate() {
            *out = (0..self.ncols()).map(|c| self[(r, c)] * x[c]).sum();
        }
    }

    fn apply_t(&self, y: &[f64], x: &mut [f64]) {
        for (c, out) in x.iter_mut().enumerate() {
            *out = (0..self.nrows()).map(|r| self[(r, c)] * y[r]).sum();
        }
    }
}

/// Power-iteration estimate of `λ_max(AᵀA)`, inflated slightly so it can be
/// used as a Lipschitz bound.
pub fn estimate_gram_norm<A: LinearOperator + ?Sized>(op: &A) -> f64 {
    if let Some(b) = op.gram_norm_bound() {
        return b;
    }
    let n = op.ncols();
    if n == 0 {
        return 0.0;
    }
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64 * 0.1).collect();
    let mut y = vec![0.0; op.nrows()];
    let mut lambda = 0.0;
    for _ in 0..100 {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        x.iter_mut().for_each(|v| *v /= norm);
        op.apply(&x, &mut y);
        op.apply_t(&y, &mut x);
        let next = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (next - lambda).abs() <= 1e-10 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda * 1.05
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
