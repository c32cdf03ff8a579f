use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{apply_filter_unchecked, DynamicsError, FilterSource, FilterSpec};
use crate::graphs::{derive_seed, Laplacian};

/// Distribution of the initial conditions `ξ_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputKind {
    /// `ξ ~ N(0, σ² I)`.
    #[default]
    Gaussian,
    /// Entries i.i.d. uniform on `[−√3σ, √3σ]`.
    Uniform,
    /// Time series `ξ_t = a ξ_{t−1} + (1 − a) w_t`; every `stride`-th term is used.
    Ar1 {
        a: f64,
        #[serde(default = "default_stride")]
        stride: usize,
    },
    /// `ξ ~ N(0, σ² C)` with `C ~ W_N(I, d) / d` drawn once per dataset.
    Wishart { d: usize },
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub filters: FilterSource,
    #[serde(default)]
    pub input: InputKind,
    /// Filters actually drawn per sample (random filter source only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_sample: Option<Vec<FilterSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_id: Option<String>,
}

/// `M` observed graph signals, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    signals: DMatrix<f64>,
    pub sigma2: f64,
    pub provenance: Option<Provenance>,
}

impl SnapshotSet {
    pub fn new(signals: DMatrix<f64>, sigma2: f64) -> Result<Self, DynamicsError> {
        if signals.nrows() == 0 || signals.ncols() == 0 {
            return Err(DynamicsError::InvalidParams("snapshot set needs M >= 1 and N >= 1".into()));
        }
        if signals.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::InvalidParams("snapshot entries must be finite".into()));
        }
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(DynamicsError::InvalidSigma(sigma2));
        }
        Ok(SnapshotSet { signals, sigma2, provenance: None })
    }

    pub fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance = Some(p);
        self
    }

    pub fn signals(&self) -> &DMatrix<f64> {
        &self.signals
    }

    /// Number of snapshots `M`.
    pub fn m(&self) -> usize {
        self.signals.nrows()
    }

    /// Number of nodes `N`.
    pub fn n(&self) -> usize {
        self.signals.ncols()
    }
}

fn sample_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

fn draw_filter(source: &FilterSource, lambda_max: f64, rng: &mut ChaCha8Rng) -> FilterSpec {
    match source {
        FilterSource::Fixed { filter } => filter.clone(),
        FilterSource::RandomPerSample { steps } => {
            let t = steps[rng.random_range(0..steps.len())];
            let limit = if lambda_max > 0.0 { 1.0 / lambda_max } else { 1.0 };
            let rates = (0..t).map(|_| open_unit(rng) * limit).collect();
            FilterSpec { rates }
        }
    }
}

fn validate(l: &Laplacian, filters: &FilterSource, m: usize, sigma: f64) -> Result<(), DynamicsError> {
    if m == 0 {
        return Err(DynamicsError::InvalidParams("sample count M must be at least 1".into()));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(DynamicsError::InvalidSigma(sigma));
    }
    match filters {
        FilterSource::Fixed { filter } => {
            if !filter.is_empty() {
                filter.check_stable(l.lambda_max())?;
            }
        }
        FilterSource::RandomPerSample { steps } => {
            if steps.is_empty() {
                return Err(DynamicsError::InvalidParams("random filter needs at least one step count".into()));
            }
        }
    }
    Ok(())
}

/// Draw `M` snapshots `y_k = h_k(L) ξ_k` with white Gaussian inputs.
///
/// Sample `k` uses its own counter-based stream derived from `seed`, so the
/// output does not depend on generation order.
pub fn simulate_snapshots(l: &Laplacian, filters: &FilterSource, m: usize, sigma: f64, seed: u64) -> Result<SnapshotSet, DynamicsError> {
    simulate_with_input(l, filters, m, sigma, InputKind::Gaussian, seed)
}

/// As [`simulate_snapshots`] with a choice of input distribution, including
/// the correlated (AR(1)) and coloured (Wishart) robustness inputs.
pub fn simulate_with_input(
    l: &Laplacian,
    filters: &FilterSource,
    m: usize,
    sigma: f64,
    input: InputKind,
    seed: u64,
) -> Result<SnapshotSet, DynamicsError> {
    validate(l, filters, m, sigma)?;
    let n = l.n();
    let lambda_max = l.lambda_max();
    let inputs: Option<DMatrix<f64>> = match input {
        InputKind::Gaussian | InputKind::Uniform => None,
        InputKind::Ar1 { a, stride } => Some(ar1_inputs(n, m, a, stride, derive_seed(seed, u64::MAX))?),
        InputKind::Wishart { d } => {
            let c = wishart_input_covariance(n, d, derive_seed(seed, u64::MAX - 1))?;
            let chol =
                nalgebra::Cholesky::new(c).ok_or_else(|| DynamicsError::InvalidParams("Wishart draw is not positive definite".into()))?;
            let factor = chol.l();
            let mut xi = DMatrix::zeros(m, n);
            for k in 0..m {
                let mut rng = sample_rng(derive_seed(seed, 1), k);
                let z = nalgebra::DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
                xi.set_row(k, &(&factor * z).transpose());
            }
            Some(xi)
        }
    };
    let mut signals = DMatrix::zeros(m, n);
    let mut per_sample = Vec::new();
    let record = matches!(filters, FilterSource::RandomPerSample { .. });
    let amp = 3.0_f64.sqrt();
    for k in 0..m {
        let mut rng = sample_rng(seed, k);
        let f = draw_filter(filters, lambda_max, &mut rng);
        let x0: Vec<f64> = match (&inputs, input) {
            (Some(xi), _) => xi.row(k).iter().map(|v| v * sigma).collect(),
            (None, InputKind::Uniform) => (0..n).map(|_| rng.random_range(-amp..amp) * sigma).collect(),
            (None, _) => (0..n).map(|_| rng.sample::<f64, _>(StandardNormal) * sigma).collect(),
        };
        let y = apply_filter_unchecked(l, f.rates(), x0);
        for (j, v) in y.into_iter().enumerate() {
            signals[(k, j)] = v;
        }
        if record {
            per_sample.push(f);
        }
    }
    let provenance = Provenance { seed, filters: filters.clone(), input, per_sample: record.then_some(per_sample), graph_id: None };
    Ok(SnapshotSet { signals, sigma2: sigma * sigma, provenance: Some(provenance) })
}

/// Inputs of the AR(1) robustness experiment: `ξ_1, w_t ~ N(0, I)`,
/// `ξ_t = a ξ_{t−1} + (1 − a) w_t`; rows are `ξ_1, ξ_{1+s}, ξ_{1+2s}, …`.
pub fn ar1_inputs(n: usize, m: usize, a: f64, stride: usize, seed: u64) -> Result<DMatrix<f64>, DynamicsError> {
    if !(0.0..1.0).contains(&a) {
        return Err(DynamicsError::InvalidParams(format!("AR(1) coefficient {a} must lie in [0, 1)")));
    }
    if stride == 0 {
        return Err(DynamicsError::InvalidParams("stride must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mut out = DMatrix::zeros(m, n);
    for k in 0..m {
        if k > 0 {
            for _ in 0..stride {
                for s in state.iter_mut() {
                    let w: f64 = rng.sample(StandardNormal);
                    *s = a * *s + (1.0 - a) * w;
                }
            }
        }
        for (j, &s) in state.iter().enumerate() {
            out[(k, j)] = s;
        }
    }
    Ok(out)
}

/// `W_N(I, d) / d`: average of `d` outer products of standard normal vectors.
pub fn wishart_input_covariance(n: usize, d: usize, seed: u64) -> Result<DMatrix<f64>, DynamicsError> {
    if d < n {
        return Err(DynamicsError::InvalidParams(format!("Wishart degrees of freedom {d} must be at least N = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(d, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    Ok(g.transpose() * g / d as f64)
}
