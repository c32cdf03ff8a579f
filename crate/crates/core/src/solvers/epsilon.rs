use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ordered::{minimum_template_distance, solve_constrained, TemplateOrder};
use super::{CglSolution, Distance, SolverConfig, SolverError};

/// How candidate tolerances are enumerated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EpsilonSchedule {
    /// Radii `{0.002, 0.004, …, 0.03} ∪ {0.03 + 0.005 r}` up to `max`,
    /// in norm units: squared for `FrobeniusSq`.
    Grid {
        #[serde(default = "default_grid_max")]
        max: f64,
    },
    /// Bisection on `[0, 1]`, returning the feasible end.
    Binary { iters: usize },
    /// An explicit increasing list.
    List { values: Vec<f64> },
}

fn default_grid_max() -> f64 {
    1.0
}

impl EpsilonSchedule {
    pub fn standard_grid() -> Self {
        EpsilonSchedule::Grid { max: default_grid_max() }
    }
}

pub fn standard_epsilon_grid(max: f64) -> Vec<f64> {
    let mut grid: Vec<f64> = (1..=15).map(|k| 0.002 * k as f64).collect();
    let mut r = 1;
    loop {
        let v = 0.03 + 0.005 * r as f64;
        if v > max + 1e-12 {
            break;
        }
        grid.push(v);
        r += 1;
    }
    grid.retain(|&v| v <= max + 1e-12);
    grid
}

/// Tolerance on `distance` that corresponds to a norm ball of radius `r`.
fn tolerance_for_radius(distance: Distance, r: f64) -> f64 {
    match distance {
        Distance::FrobeniusSq => r * r,
        Distance::MaxNorm => r,
    }
}

#[derive(Debug, Clone)]
pub struct EpsilonSearch {
    pub epsilon: f64,
    /// Smallest achievable template distance (feasibility threshold).
    pub min_distance: f64,
    pub solution: CglSolution,
}

/// Smallest tolerance in `schedule` for which the constrained problem has a
/// solution, and that solution.
///
/// Feasibility is monotone in `ε`, and the problem is feasible exactly when
/// `ε` is at least the minimum template distance, which is computed once.
pub fn epsilon_feasibility_search(
    u: &DMatrix<f64>,
    cfg: &SolverConfig,
    schedule: &EpsilonSchedule,
    order: TemplateOrder,
) -> Result<EpsilonSearch, SolverError> {
    let dmin = minimum_template_distance(u, cfg.distance, order, cfg.opt_tol)?;
    let feasible = |eps: f64| eps > dmin;
    let candidates: Vec<f64> = match schedule {
        EpsilonSchedule::Grid { max } => standard_epsilon_grid(*max).into_iter().map(|r| tolerance_for_radius(cfg.distance, r)).collect(),
        EpsilonSchedule::List { values } => {
            if values.windows(2).any(|w| w[0] > w[1]) || values.iter().any(|v| !(*v >= 0.0)) {
                return Err(SolverError::InvalidConfig("epsilon list must be nonnegative and increasing".into()));
            }
            values.clone()
        }
        EpsilonSchedule::Binary { iters } => {
            let (mut lo, mut hi) = (0.0, 1.0);
            if !feasible(hi) {
                return Err(SolverError::NoFeasibleEpsilon { largest: hi });
            }
            for _ in 0..*iters {
                let mid = 0.5 * (lo + hi);
                if feasible(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            // Later grid points guard against a numerically empty interior.
            let step = hi - lo;
            (0..4).map(|k| hi + k as f64 * step).filter(|&v| v <= 1.0).collect()
        }
    };
    let largest = candidates.last().copied().unwrap_or(0.0);
    let start = candidates.partition_point(|&e| !feasible(e));
    for &eps in &candidates[start..] {
        let mut run = cfg.clone();
        run.epsilon = Some(eps);
        run.epsilon_search = None;
        match solve_constrained(u, &run, eps, order) {
            Ok(mut solution) => {
                solution.diagnostics.notes.push(format!("minimum template distance {dmin:.6e}"));
                return Ok(EpsilonSearch { epsilon: eps, min_distance: dmin, solution });
            }
            Err(SolverError::Infeasible(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(SolverError::NoFeasibleEpsilon { largest })
}
