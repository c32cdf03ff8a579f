//! Convex recovery of a valid sparse CGL.
//!
//! Every solver works on the edge-weight vector `a ≥ 0` of length
//! `N(N−1)/2` (pairs `i < j` in lexicographic order), so the CGL constraints
//! hold by construction and only nonnegativity has to be enforced.

mod barrier;
mod epsilon;
#[cfg(feature = "structglasso")]
mod glasso;
mod hybrid;
mod isotonic;
mod nearest;
mod nnls;
mod ordered;
mod reweight;
mod vectorize;

pub use epsilon::{epsilon_feasibility_search, standard_epsilon_grid, EpsilonSchedule, EpsilonSearch};
#[cfg(feature = "structglasso")]
pub use glasso::{glasso_beta_grid, struct_glasso_baseline};
pub use hybrid::{estimate_observation_time, hybrid, HybridResult};
pub use isotonic::{pava, project_lagged_order, project_leading_only};
pub use nearest::{nearest_cgl, nearest_cgl_weighted};
pub use nnls::{nonneg_l1_least_squares, NnlsOptions, NnlsOutcome};
pub use ordered::{
    minimum_template_distance, ordered_spec_temp, solve_spectral_templates, spec_temp_leigvec, template_distance, TemplateOrder,
};
pub use reweight::{reweight_weights, reweighted_l1};
pub use vectorize::{cgl_vectorize, edge_count, edge_index, edge_pairs, laplacian_from_weights, weights_from_laplacian, CglVectorization};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::spectral::SpectralError;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SolverError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("problem is infeasible: {0}")]
    Infeasible(String),
    #[error("no feasible epsilon in the schedule (largest tried {largest})")]
    NoFeasibleEpsilon { largest: f64 },
    #[error("every candidate observation time has a degenerate inverse-filter estimate")]
    AllCandidatesDegenerate,
    #[error("input is singular: {0}")]
    SingularInput(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Matrix distance used for the spectral-template fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    /// `‖A − B‖_F²`
    #[default]
    FrobeniusSq,
    /// `max_ij |A_ij − B_ij|`
    MaxNorm,
}

impl std::str::FromStr for Distance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "frobeniussq" | "frobenius" | "fro" => Ok(Distance::FrobeniusSq),
            "maxnorm" | "max" => Ok(Distance::MaxNorm),
            other => Err(format!("unknown distance '{other}' (expected frobenius_sq or max_norm)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// ℓ1 weight on `vec(L)`.
    pub beta: f64,
    /// Fixed spectral-fit tolerance; selects the constrained ordered form.
    pub epsilon: Option<f64>,
    /// Search for the smallest feasible tolerance instead of fixing it.
    pub epsilon_search: Option<EpsilonSchedule>,
    /// Ordering lag.
    pub eta: usize,
    pub distance: Distance,
    pub reweight_iters: usize,
    pub reweight_eps: f64,
    pub opt_tol: f64,
    pub max_iters: usize,
    /// Largest observation time tried by the line search.
    pub t_max: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            beta: 0.0,
            epsilon: None,
            epsilon_search: None,
            eta: 1,
            distance: Distance::FrobeniusSq,
            reweight_iters: 0,
            reweight_eps: 1e-4,
            opt_tol: 1e-8,
            max_iters: 20_000,
            t_max: 10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::InvalidConfig(m));
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be finite and >= 0, got {}", self.beta));
        }
        if let Some(e) = self.epsilon {
            if !(e >= 0.0 && e.is_finite()) {
                return bad(format!("epsilon must be finite and >= 0, got {e}"));
            }
        }
        if self.eta == 0 {
            return bad("eta must be a positive integer".into());
        }
        if !(self.reweight_eps > 0.0 && self.reweight_eps.is_finite()) {
            return bad(format!("reweight_eps must be positive, got {}", self.reweight_eps));
        }
        if !(self.opt_tol > 0.0 && self.opt_tol.is_finite()) {
            return bad(format!("opt_tol must be positive, got {}", self.opt_tol));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if self.t_max == 0 {
            return bad("t_max must be at least 1".into());
        }
        Ok(())
    }

    pub(crate) fn validate_for(&self, n: usize) -> Result<(), SolverError> {
        self.validate()?;
        if n >= 2 && self.eta > n - 1 {
            return Err(SolverError::InvalidConfig(format!("eta = {} exceeds N - 1 = {}", self.eta, n - 1)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub objective: f64,
    pub iterations: usize,
    /// Final first-order (or barrier duality-gap) residual.
    pub residual: f64,
    pub feasible: bool,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_hat: Option<usize>,
    /// Distance between the estimate and its spectral template.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_distance: Option<f64>,
    /// Objective after each outer iteration (alternating solves only).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// A recovered CGL with optional spectral coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CglSolution {
    pub l_star: DMatrix<f64>,
    /// Edge weights in pair order.
    pub weights: Vec<f64>,
    pub gamma_star: Option<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

impl CglSolution {
    pub(crate) fn from_weights(n: usize, weights: Vec<f64>, gamma_star: Option<Vec<f64>>, diagnostics: Diagnostics) -> Self {
        let l_star = laplacian_from_weights(n, &weights);
        CglSolution { l_star, weights, gamma_star, diagnostics }
    }

    pub fn n(&self) -> usize {
        self.l_star.nrows()
    }

    /// Edges with weight above `threshold`.
    pub fn support(&self, threshold: f64) -> Vec<(usize, usize, f64)> {
        edge_pairs(self.n()).zip(&self.weights).filter(|(_, &w)| w > threshold).map(|((i, j), &w)| (i, j, w)).collect()
    }
}

pub(crate) fn check_square(m: &DMatrix<f64>) -> Result<(), SolverError> {
    if m.nrows() != m.ncols() {
        return Err(SolverError::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::Numeric("input matrix has non-finite entries".into()));
    }
    Ok(())
}
