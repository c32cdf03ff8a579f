//! Consensus filters, snapshot simulation and covariance estimates.
//!
//! A consensus dynamics run for `T` steps with rates `α_1..α_T` acts on an
//! initial state as the graph filter `h(L) = ∏_t (I − α_t L)`. Filters are
//! applied as `T` sparse mat-vec products; the dense filter matrix is only
//! ever formed in [`analytic_covariance`].

mod covariance;
mod simulate;

pub use covariance::{analytic_covariance, sample_covariance, SampleCovariance};
pub use simulate::{ar1_inputs, simulate_snapshots, simulate_with_input, wishart_input_covariance, InputKind, Provenance, SnapshotSet};

use serde::{Deserialize, Serialize};

use crate::graphs::Laplacian;
use crate::linalg::LinearOperator;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DynamicsError {
    #[error("diffusion rate {rate} is not below 1/λ_max = {limit}")]
    UnstableRate { rate: f64, limit: f64 },
    #[error("diffusion rates must be finite and strictly positive, got {0}")]
    NonPositiveRate(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("input standard deviation must be finite and positive, got {0}")]
    InvalidSigma(f64),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Ordered diffusion rates of one consensus run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FilterSpec {
    rates: Vec<f64>,
}

impl TryFrom<Vec<f64>> for FilterSpec {
    type Error = DynamicsError;

    fn try_from(rates: Vec<f64>) -> Result<Self, Self::Error> {
        FilterSpec::new(rates)
    }
}

impl From<FilterSpec> for Vec<f64> {
    fn from(f: FilterSpec) -> Self {
        f.rates
    }
}

impl FilterSpec {
    pub fn new(rates: Vec<f64>) -> Result<Self, DynamicsError> {
        if let Some(&bad) = rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(DynamicsError::NonPositiveRate(bad));
        }
        Ok(FilterSpec { rates })
    }

    /// The identity filter (`T = 0`).
    pub fn identity() -> Self {
        FilterSpec { rates: Vec::new() }
    }

    /// `T` steps of the same rate.
    pub fn constant(alpha: f64, steps: usize) -> Result<Self, DynamicsError> {
        Self::new(vec![alpha; steps])
    }

    /// Rates given as fractions of `1/λ_max`, e.g. `{0.7, 0.8, 0.9}/λ_max`.
    pub fn relative_to(lambda_max: f64, fractions: &[f64]) -> Result<Self, DynamicsError> {
        Self::new(fractions.iter().map(|f| f / lambda_max).collect())
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn steps(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn max_rate(&self) -> f64 {
        self.rates.iter().copied().fold(0.0, f64::max)
    }

    /// Scalar frequency response `h(λ) = ∏ (1 − α_t λ)`.
    pub fn response(&self, lambda: f64) -> f64 {
        self.rates.iter().map(|a| 1.0 - a * lambda).product()
    }

    /// Every rate must satisfy `α_t < 1/λ_max`.
    pub fn check_stable(&self, lambda_max: f64) -> Result<(), DynamicsError> {
        for &a in &self.rates {
            if a * lambda_max >= 1.0 {
                return Err(DynamicsError::UnstableRate { rate: a, limit: 1.0 / lambda_max });
            }
        }
        Ok(())
    }
}

/// Where the per-sample filters come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterSource {
    /// Every snapshot goes through the same filter.
    Fixed { filter: FilterSpec },
    /// Each snapshot draws `T_k` uniformly from `steps` and every rate
    /// uniformly from `(0, 1/λ_max)`.
    RandomPerSample {
        #[serde(default = "default_random_steps")]
        steps: Vec<usize>,
    },
}

fn default_random_steps() -> Vec<usize> {
    vec![3, 4, 5]
}

impl FilterSource {
    pub fn fixed(filter: FilterSpec) -> Self {
        FilterSource::Fixed { filter }
    }

    pub fn random_default() -> Self {
        FilterSource::RandomPerSample { steps: default_random_steps() }
    }
}

/// `∏_t (I − α_t L) x0` as sequential sparse mat-vec products.
pub fn apply_filter(l: &Laplacian, f: &FilterSpec, x0: &[f64]) -> Result<Vec<f64>, DynamicsError> {
    if x0.len() != l.n() {
        return Err(DynamicsError::DimensionMismatch { expected: l.n(), got: x0.len() });
    }
    if !f.is_empty() {
        f.check_stable(l.lambda_max())?;
    }
    Ok(apply_filter_unchecked(l, f.rates(), x0.to_vec()))
}

pub(crate) fn apply_filter_unchecked(l: &Laplacian, rates: &[f64], mut x: Vec<f64>) -> Vec<f64> {
    let mut lx = vec![0.0; x.len()];
    for &a in rates {
        l.sparse().apply(&x, &mut lx);
        for (xi, lxi) in x.iter_mut().zip(&lx) {
            *xi -= a * lxi;
        }
    }
    x
}
