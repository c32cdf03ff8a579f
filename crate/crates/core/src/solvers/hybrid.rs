use nalgebra::DMatrix;

use super::nearest::nearest_cgl;
use super::ordered::ordered_spec_temp;
use super::{check_square, CglSolution, SolverConfig, SolverError};
use crate::dynamics::SampleCovariance;
use crate::linalg;
use crate::spectral::{simplified_inverse_filter, SpectralError};

/// Line search over `t ∈ {1..t_max}` for the observation time whose
/// constant-rate inverse-filter estimate best matches `l_ord` after trace
/// matching. Ties go to the smaller `t`.
pub fn estimate_observation_time(l_ord: &DMatrix<f64>, cov: &SampleCovariance, t_max: usize) -> Result<usize, SolverError> {
    check_square(l_ord)?;
    if t_max == 0 {
        return Err(SolverError::InvalidConfig("t_max must be at least 1".into()));
    }
    if l_ord.nrows() != cov.n() {
        return Err(SolverError::InvalidConfig(format!(
            "estimate is {}x{} but the covariance has N = {}",
            l_ord.nrows(),
            l_ord.ncols(),
            cov.n()
        )));
    }
    let tr_ord = linalg::trace(l_ord);
    let mut best: Option<(usize, f64)> = None;
    for t in 1..=t_max {
        let l_t = match simplified_inverse_filter(cov, t) {
            Ok(m) => m,
            Err(SpectralError::DegenerateCovariance { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        let tr_t = linalg::trace(&l_t);
        if tr_t <= 1e-12 {
            continue;
        }
        let r = linalg::frobenius(&(l_ord - l_t * (tr_ord / tr_t)));
        if best.is_none_or(|(_, b)| r < b) {
            best = Some((t, r));
        }
    }
    best.map(|(t, _)| t).ok_or(SolverError::AllCandidatesDegenerate)
}

#[derive(Debug, Clone)]
pub struct HybridResult {
    pub solution: CglSolution,
    pub t_hat: usize,
    /// The OrderedSpecTemp estimate used for the line search.
    pub ordered: CglSolution,
}

/// OrderedSpecTemp, then the observation-time line search, then NearestCGL
/// on the constant-rate inverse-filter estimate for the selected time.
pub fn hybrid(cov: &SampleCovariance, cfg: &SolverConfig) -> Result<HybridResult, SolverError> {
    let ordered = ordered_spec_temp(cov, cfg)?;
    let t_hat = estimate_observation_time(&ordered.l_star, cov, cfg.t_max)?;
    let l_hat = simplified_inverse_filter(cov, t_hat)?;
    let mut near_cfg = cfg.clone();
    near_cfg.epsilon = None;
    near_cfg.epsilon_search = None;
    let mut solution = nearest_cgl(&l_hat, &near_cfg)?;
    solution.diagnostics.t_hat = Some(t_hat);
    Ok(HybridResult { solution, t_hat, ordered })
}
