//! Weighted undirected graphs and their combinatorial Laplacians.
//!
//! A [`WeightedGraph`] is stored as a sorted coordinate list of edges
//! `(i, j, w)` with `i < j` and `w > 0`. Dense matrices are materialised on
//! demand through [`laplacian_of`].

mod generators;

pub use generators::{derive_seed, generate_graph, near_square_grid, sample_admissible, Admissibility, GraphModel, GraphSpec, WeightDist};

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, CsrMatrix};

/// Default tolerance for CGL membership checks.
pub const TOL_CGL: f64 = 1e-9;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GraphError {
    #[error("invalid graph parameters: {0}")]
    InvalidParams(String),
    #[error("invalid edge ({i}, {j}, {w}): {reason}")]
    InvalidEdge { i: usize, j: usize, w: f64, reason: &'static str },
    #[error("matrix is {rows}x{cols}, expected square")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix is not a valid CGL: {0}")]
    NotCgl(String),
    #[error("no admissible graph after {0} attempts")]
    NoAdmissibleGraph(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// Undirected graph with strictly positive edge weights, no self-loops and
/// no duplicate pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    /// Validates and canonicalises an edge list: pairs are reordered to
    /// `i < j` and sorted.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::InvalidParams("graph needs at least one node".into()));
        }
        let mut out = Vec::new();
        for (i, j, w) in edges {
            let bad = |reason| GraphError::InvalidEdge { i, j, w, reason };
            if i == j {
                return Err(bad("self-loop"));
            }
            if i >= n || j >= n {
                return Err(bad("node index out of range"));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(bad("weight must be finite and strictly positive"));
            }
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            out.push(Edge { i: a, j: b, w });
        }
        out.sort_by_key(|x| (x.i, x.j));
        for pair in out.windows(2) {
            if pair[0].i == pair[1].i && pair[0].j == pair[1].j {
                let e = pair[1];
                return Err(GraphError::InvalidEdge { i: e.i, j: e.j, w: e.w, reason: "duplicate pair" });
            }
        }
        Ok(WeightedGraph { n, edges: out })
    }

    pub fn empty(n: usize) -> Result<Self, GraphError> {
        Self::new(n, std::iter::empty())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            a[(e.i, e.j)] = e.w;
            a[(e.j, e.i)] = e.w;
        }
        a
    }

    /// Same topology with every weight set to one.
    pub fn unweighted(&self) -> WeightedGraph {
        WeightedGraph { n: self.n, edges: self.edges.iter().map(|e| Edge { w: 1.0, ..*e }).collect() }
    }

    /// Recover the edge list of a CGL: `w_ij = -L_ij` for every `-L_ij > threshold`.
    pub fn from_laplacian(l: &DMatrix<f64>, threshold: f64) -> Result<Self, GraphError> {
        if l.nrows() != l.ncols() {
            return Err(GraphError::NonSquare { rows: l.nrows(), cols: l.ncols() });
        }
        let n = l.nrows();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = -0.5 * (l[(i, j)] + l[(j, i)]);
                if w > threshold {
                    edges.push((i, j, w));
                }
            }
        }
        Self::new(n, edges)
    }
}

/// Eigen-data of a Laplacian: ascending eigenvalues and matching
/// orthonormal eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct LaplacianEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

/// A combinatorial graph Laplacian with a lazily computed eigendecomposition
/// and a sparse copy used for mat-vec products.
#[derive(Debug)]
pub struct Laplacian {
    matrix: DMatrix<f64>,
    sparse: CsrMatrix,
    eigen: OnceLock<LaplacianEigen>,
}

impl Clone for Laplacian {
    fn clone(&self) -> Self {
        let eigen = OnceLock::new();
        if let Some(e) = self.eigen.get() {
            let _ = eigen.set(e.clone());
        }
        Laplacian { matrix: self.matrix.clone(), sparse: self.sparse.clone(), eigen }
    }
}

impl Laplacian {
    /// Wrap a matrix after checking CGL membership at `tol`.
    pub fn from_matrix(matrix: DMatrix<f64>, tol: f64) -> Result<Self, GraphError> {
        let report = validate_cgl(&matrix, tol)?;
        if !report.passed {
            return Err(GraphError::NotCgl(report.summary()));
        }
        Ok(Self::wrap(linalg::symmetrize(&matrix)))
    }

    fn wrap(matrix: DMatrix<f64>) -> Self {
        let n = matrix.nrows();
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = matrix[(i, j)];
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        let sparse = CsrMatrix::from_triplets(n, n, &triplets);
        Laplacian { matrix, sparse, eigen: OnceLock::new() }
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn sparse(&self) -> &CsrMatrix {
        &self.sparse
    }

    pub fn eigen(&self) -> &LaplacianEigen {
        self.eigen.get_or_init(|| {
            let (values, vectors) = linalg::eigh_ascending(&self.matrix);
            LaplacianEigen { values, vectors }
        })
    }

    /// Largest eigenvalue `λ_N`.
    pub fn lambda_max(&self) -> f64 {
        let v = &self.eigen().values;
        if v.is_empty() {
            0.0
        } else {
            v[v.len() - 1]
        }
    }

    /// Smallest gap between any two eigenvalues.
    pub fn min_eigen_gap(&self) -> f64 {
        let v = &self.eigen().values;
        v.as_slice().windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix)
    }

    pub fn scaled(&self, factor: f64) -> Laplacian {
        Self::wrap(&self.matrix * factor)
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }
}

/// `L = diag(A1) - A`.
pub fn laplacian_of(g: &WeightedGraph) -> Laplacian {
    let n = g.n();
    let mut m = DMatrix::zeros(n, n);
    for e in g.edges() {
        m[(e.i, e.j)] -= e.w;
        m[(e.j, e.i)] -= e.w;
        m[(e.i, e.i)] += e.w;
        m[(e.j, e.j)] += e.w;
    }
    Laplacian::wrap(m)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CglViolation {
    Asymmetry { i: usize, j: usize, magnitude: f64 },
    PositiveOffDiagonal { i: usize, j: usize, value: f64 },
    NonzeroRowSum { row: usize, sum: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CglReport {
    pub passed: bool,
    pub violations: Vec<CglViolation>,
}

impl CglReport {
    pub fn summary(&self) -> String {
        if self.passed {
            return "ok".into();
        }
        let shown: Vec<String> = self.violations.iter().take(3).map(|v| format!("{v:?}")).collect();
        format!("{} violation(s): {}", self.violations.len(), shown.join("; "))
    }
}

/// Checks symmetry, nonpositive off-diagonals and zero row sums within `tol`.
pub fn validate_cgl(m: &DMatrix<f64>, tol: f64) -> Result<CglReport, GraphError> {
    if m.nrows() != m.ncols() {
        return Err(GraphError::NonSquare { rows: m.nrows(), cols: m.ncols() });
    }
    let n = m.nrows();
    let mut violations = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (m[(i, j)] - m[(j, i)]).abs();
            if !(d <= tol) {
                violations.push(CglViolation::Asymmetry { i, j, magnitude: d });
            }
            for (r, c) in [(i, j), (j, i)] {
                if !(m[(r, c)] <= tol) {
                    violations.push(CglViolation::PositiveOffDiagonal { i: r, j: c, value: m[(r, c)] });
                }
            }
        }
    }
    for i in 0..n {
        let s: f64 = m.row(i).iter().sum();
        if !(s.abs() <= tol) {
            violations.push(CglViolation::NonzeroRowSum { row: i, sum: s });
        }
    }
    Ok(CglReport { passed: violations.is_empty(), violations })
}

/// Union-find connectivity test.
pub fn connectivity_check(g: &WeightedGraph) -> bool {
    let mut parent: Vec<usize> = (0..g.n()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut components = g.n();
    for e in g.edges() {
        let (a, b) = (find(&mut parent, e.i), find(&mut parent, e.j));
        if a != b {
            parent[a] = b;
            components -= 1;
        }
    }
    components == 1
}
