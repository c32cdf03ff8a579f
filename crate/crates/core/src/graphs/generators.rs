use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{connectivity_check, laplacian_of, GraphError, WeightedGraph};

/// Random graph families used by the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum GraphModel {
    /// Each pair is an edge independently with probability `p`.
    ErdosRenyi { p: f64 },
    /// Stochastic block model. `blocks` defaults to two equal halves.
    StochasticBlock {
        #[serde(default)]
        blocks: Option<Vec<usize>>,
        p_within: f64,
        p_across: f64,
    },
    /// Ring lattice with mean degree `k` (even), each edge rewired with probability `beta`.
    WattsStrogatz { k: usize, beta: f64 },
    /// Preferential attachment, `m` edges per new node.
    BarabasiAlbert { m: usize },
    /// 2-D lattice. Dimensions default to the most square factorisation of `n`.
    Grid {
        #[serde(default)]
        rows: Option<usize>,
        #[serde(default)]
        cols: Option<usize>,
    },
}

impl GraphModel {
    pub fn name(&self) -> &'static str {
        match self {
            GraphModel::ErdosRenyi { .. } => "erdos_renyi",
            GraphModel::StochasticBlock { .. } => "stochastic_block",
            GraphModel::WattsStrogatz { .. } => "watts_strogatz",
            GraphModel::BarabasiAlbert { .. } => "barabasi_albert",
            GraphModel::Grid { .. } => "grid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightDist {
    #[default]
    Unit,
    /// Uniform on the open interval `(lo, hi)`.
    Uniform { lo: f64, hi: f64 },
}

/// Everything needed to draw a graph, apart from the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub n: usize,
    #[serde(flatten)]
    pub model: GraphModel,
    #[serde(default)]
    pub weights: WeightDist,
}

/// Resampling criteria for experiment graphs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub require_connected: bool,
    /// Minimum gap between distinct Laplacian eigenvalues; `0` disables the check.
    pub gap_min: f64,
    pub max_attempts: usize,
}

impl Default for Admissibility {
    fn default() -> Self {
        Admissibility { require_connected: true, gap_min: 1e-4, max_attempts: 1000 }
    }
}

/// SplitMix64 mix of a base seed and a stream index.
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `(rows, cols)` with `rows * cols == n` and `rows <= cols` as close as possible.
pub fn near_square_grid(n: usize) -> (usize, usize) {
    let mut rows = (n as f64).sqrt().floor() as usize;
    while rows > 1 && !n.is_multiple_of(rows) {
        rows -= 1;
    }
    let rows = rows.max(1);
    (rows, n / rows)
}

fn check_prob(name: &str, p: f64) -> Result<(), GraphError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(GraphError::InvalidParams(format!("{name} = {p} is not a probability")))
    }
}

/// Draw a graph from `spec`. Identical `(spec, seed)` give identical graphs.
pub fn generate_graph(spec: &GraphSpec, seed: u64) -> Result<WeightedGraph, GraphError> {
    let n = spec.n;
    if n == 0 {
        return Err(GraphError::InvalidParams("n must be positive".into()));
    }
    if let WeightDist::Uniform { lo, hi } = spec.weights {
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
            return Err(GraphError::InvalidParams(format!("weight interval ({lo}, {hi}) is invalid")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = match &spec.model {
        GraphModel::ErdosRenyi { p } => {
            check_prob("p", *p)?;
            let mut pairs = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random_bool(*p) {
                        pairs.push((i, j));
                    }
                }
            }
            pairs
        }
        GraphModel::StochasticBlock { blocks, p_within, p_across } => {
            check_prob("p_within", *p_within)?;
            check_prob("p_across", *p_across)?;
            let sizes = blocks.clone().unwrap_or_else(|| vec![n / 2, n - n / 2]);
            if sizes.iter().sum::<usize>() != n || sizes.contains(&0) {
                return Err(GraphError::InvalidParams(format!("block sizes {sizes:?} must be positive and sum to {n}")));
            }
            let mut label = Vec::with_capacity(n);
            for (b, &s) in sizes.iter().enumerate() {
                label.extend(std::iter::repeat_n(b, s));
            }
            let mut pairs = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    let p = if label[i] == label[j] { *p_within } else { *p_across };
                    if rng.random_bool(p) {
                        pairs.push((i, j));
                    }
                }
            }
            pairs
        }
        GraphModel::WattsStrogatz { k, beta } => {
            check_prob("beta", *beta)?;
            if k % 2 != 0 || *k >= n {
                return Err(GraphError::InvalidParams(format!("mean degree k = {k} must be even and below n = {n}")));
            }
            watts_strogatz(n, *k, *beta, &mut rng)
        }
        GraphModel::BarabasiAlbert { m } => {
            if *m == 0 || *m >= n {
                return Err(GraphError::InvalidParams(format!("attachment m = {m} must satisfy 1 <= m < n = {n}")));
            }
            barabasi_albert(n, *m, &mut rng)
        }
        GraphModel::Grid { rows, cols } => {
            let (r, c) = match (rows, cols) {
                (Some(r), Some(c)) => (*r, *c),
                (Some(r), None) if *r > 0 && n.is_multiple_of(*r) => (*r, n / r),
                (None, Some(c)) if *c > 0 && n.is_multiple_of(*c) => (n / c, *c),
                (None, None) => near_square_grid(n),
                _ => return Err(GraphError::InvalidParams(format!("grid dimensions do not divide n = {n}"))),
            };
            if r * c != n {
                return Err(GraphError::InvalidParams(format!("grid {r}x{c} does not have {n} nodes")));
            }
            let mut pairs = Vec::new();
            for y in 0..r {
                for x in 0..c {
                    let u = y * c + x;
                    if x + 1 < c {
                        pairs.push((u, u + 1));
                    }
                    if y + 1 < r {
                        pairs.push((u, u + c));
                    }
                }
            }
            pairs
        }
    };
    let mut pairs: Vec<(usize, usize)> = pairs.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
    pairs.sort_unstable();
    let edges: Vec<(usize, usize, f64)> = pairs
        .into_iter()
        .map(|(i, j)| {
            let w = match spec.weights {
                WeightDist::Unit => 1.0,
                WeightDist::Uniform { lo, hi } => loop {
                    let w = rng.random_range(lo..hi);
                    if w > lo {
                        break w;
                    }
                },
            };
            (i, j, w)
        })
        .collect();
    WeightedGraph::new(n, edges)
}

fn watts_strogatz(n: usize, k: usize, beta: f64, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for u in 0..n {
        for j in 1..=k / 2 {
            let v = (u + j) % n;
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            if !adj[u].contains(&v) || !rng.random_bool(beta) {
                continue;
            }
            if adj[u].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..n);
                if w != u && !adj[u].contains(&w) {
                    break w;
                }
            };
            adj[u].remove(&v);
            adj[v].remove(&u);
            adj[u].insert(w);
            adj[w].insert(u);
        }
    }
    let mut pairs = Vec::new();
    for (u, nbrs) in adj.iter().enumerate() {
        for &v in nbrs.range(u + 1..) {
            pairs.push((u, v));
        }
    }
    pairs
}

fn barabasi_albert(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    // Seed graph: a star on m + 1 nodes centred at 0.
    let mut pairs: Vec<(usize, usize)> = (1..=m).map(|v| (0, v)).collect();
    let mut repeated: Vec<usize> = Vec::new();
    for &(a, b) in &pairs {
        repeated.push(a);
        repeated.push(b);
    }
    for source in (m + 1)..n {
        let mut targets = BTreeSet::new();
        while targets.len() < m {
            targets.insert(repeated[rng.random_range(0..repeated.len())]);
        }
        for &t in &targets {
            pairs.push((t, source));
            repeated.push(t);
            repeated.push(source);
        }
    }
    pairs
}

/// Resample `spec` with derived seeds until the graph is connected and its
/// Laplacian eigenvalues are separated by at least `gap_min`.
///
/// Returns the graph and the number of attempts used.
pub fn sample_admissible(spec: &GraphSpec, seed: u64, criteria: &Admissibility) -> Result<(WeightedGraph, usize), GraphError> {
    for attempt in 0..criteria.max_attempts.max(1) {
        let g = generate_graph(spec, derive_seed(seed, attempt as u64))?;
        if criteria.require_connected && !connectivity_check(&g) {
            continue;
        }
        if criteria.gap_min > 0.0 && g.n() > 1 && laplacian_of(&g).min_eigen_gap() < criteria.gap_min {
            continue;
        }
        return Ok((g, attempt + 1));
    }
    Err(GraphError::NoAdmissibleGraph(criteria.max_attempts))
}
