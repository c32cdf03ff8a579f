use super::{CglSolution, SolverError};

/// `w_e = 1 / (|a_e| + eps)`.
pub fn reweight_weights(a: &[f64], eps: f64) -> Vec<f64> {
    a.iter().map(|v| 1.0 / (v.abs() + eps)).collect()
}

/// Run `solve` once unweighted and then `iters` more times, each with edge
/// weights taken from the previous solution. `solve` also receives the
/// previous solution for warm starts.
pub fn reweighted_l1<F>(iters: usize, eps: f64, mut solve: F) -> Result<CglSolution, SolverError>
where
    F: FnMut(Option<&[f64]>, Option<&CglSolution>) -> Result<CglSolution, SolverError>,
{
    let mut sol = solve(None, None)?;
    let mut total = sol.diagnostics.iterations;
    for _ in 0..iters {
        let w = reweight_weights(&sol.weights, eps);
        let next = solve(Some(&w), Some(&sol))?;
        total += next.diagnostics.iterations;
        sol = next;
    }
    sol.diagnostics.iterations = total;
    Ok(sol)
}
