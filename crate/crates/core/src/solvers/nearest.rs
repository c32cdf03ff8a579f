use nalgebra::DMatrix;

use super::barrier::{BarrierFailure, BarrierOptions, BarrierProblem, LinRow};
use super::nnls::{nonneg_l1_least_squares, NnlsOptions};
use super::reweight::reweighted_l1;
use super::vectorize::{cgl_vectorize, edge_count, edge_pairs, weights_from_laplacian};
use super::{check_square, CglSolution, Diagnostics, Distance, SolverConfig, SolverError};
use crate::linalg;

/// Nearest valid CGL to `l_hat` under the configured distance with an ℓ1
/// penalty `β ‖vec L‖₁`, optionally reweighted.
pub fn nearest_cgl(l_hat: &DMatrix<f64>, cfg: &SolverConfig) -> Result<CglSolution, SolverError> {
    check_square(l_hat)?;
    cfg.validate()?;
    reweighted_l1(cfg.reweight_iters, cfg.reweight_eps, |w, prev| nearest_cgl_weighted(l_hat, cfg, w, prev.map(|p| p.weights.as_slice())))
}

/// One weighted solve: penalty `β Σ_e 4 w_e a_e`.
pub fn nearest_cgl_weighted(
    l_hat: &DMatrix<f64>,
    cfg: &SolverConfig,
    weights: Option<&[f64]>,
    warm_start: Option<&[f64]>,
) -> Result<CglSolution, SolverError> {
    check_square(l_hat)?;
    let n = l_hat.nrows();
    if let Some(w) = weights {
        if w.len() != edge_count(n) {
            return Err(SolverError::InvalidConfig(format!("expected {} edge weights, got {}", edge_count(n), w.len())));
        }
    }
    match cfg.distance {
        Distance::FrobeniusSq => {
            let v = cgl_vectorize(l_hat)?;
            let opts = NnlsOptions { opt_tol: cfg.opt_tol, max_iters: cfg.max_iters };
            let out = nonneg_l1_least_squares(&v.p, &v.b, cfg.beta, weights, warm_start, &opts);
            let mut diagnostics = Diagnostics {
                objective: out.objective,
                iterations: out.iterations,
                residual: out.residual,
                feasible: true,
                converged: out.converged,
                ..Default::default()
            };
            if !out.converged {
                diagnostics.notes.push(format!("iteration cap {} reached", cfg.max_iters));
            }
            Ok(CglSolution::from_weights(n, out.a, None, diagnostics))
        }
        Distance::MaxNorm => max_norm_projection(l_hat, cfg, weights),
    }
}

/// `min t + 4β Σ w_e a_e` s.t. `|L(a)_ij − L̂_ij| ≤ t` for `i ≤ j`, `a ≥ 0`.
fn max_norm_projection(l_hat: &DMatrix<f64>, cfg: &SolverConfig, weights: Option<&[f64]>) -> Result<CglSolution, SolverError> {
    let n = l_hat.nrows();
    let l_hat = linalg::symmetrize(l_hat);
    let e = edge_count(n);
    let t_idx = e;
    let mut c = vec![0.0; e + 1];
    for (k, ck) in c.iter_mut().take(e).enumerate() {
        *ck = 4.0 * cfg.beta * weights.map_or(1.0, |w| w[k]);
    }
    c[t_idx] = 1.0;

    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, (i, j)) in edge_pairs(n).enumerate() {
        incident[i].push(k);
        incident[j].push(k);
    }
    let mut rows = Vec::with_capacity(2 * (n + e) + e);
    for (i, edges) in incident.iter().enumerate() {
        let plus: Vec<(usize, f64)> = edges.iter().map(|&k| (k, 1.0)).chain([(t_idx, -1.0)]).collect();
        let minus: Vec<(usize, f64)> = edges.iter().map(|&k| (k, -1.0)).chain([(t_idx, -1.0)]).collect();
        rows.push(LinRow::new(plus, l_hat[(i, i)]));
        rows.push(LinRow::new(minus, -l_hat[(i, i)]));
    }
    for (k, (i, j)) in edge_pairs(n).enumerate() {
        // L_ij = −a_k.
        rows.push(LinRow::new(vec![(k, -1.0), (t_idx, -1.0)], l_hat[(i, j)]));
        rows.push(LinRow::new(vec![(k, 1.0), (t_idx, -1.0)], -l_hat[(i, j)]));
        rows.push(LinRow::new(vec![(k, -1.0)], 0.0));
    }
    let problem = BarrierProblem { n: e + 1, c, h: None, rows, quads: vec![] };

    let mut x0: Vec<f64> = weights_from_laplacian(&l_hat).iter().map(|v| v.max(0.0) + 1e-3).collect();
    x0.push(0.0);
    x0[t_idx] = problem.max_violation(&x0).max(0.0) + x0[t_idx] + 1.0;

    let scale = 1.0 + l_hat.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let opts = BarrierOptions { gap_tol: cfg.opt_tol * scale, max_newton: cfg.max_iters.max(50), ..Default::default() };
    let out = problem.solve(&x0, &opts).map_err(|f| match f {
        BarrierFailure::Infeasible(v) => SolverError::Infeasible(format!("max-norm projection reported violation {v}")),
        BarrierFailure::Numeric(m) => SolverError::Numeric(m),
    })?;
    let a: Vec<f64> = out.x[..e].iter().map(|v| v.max(0.0)).collect();
    let diagnostics = Diagnostics {
        objective: out.objective,
        iterations: out.newton_steps,
        residual: out.gap,
        feasible: true,
        converged: out.converged,
        ..Default::default()
    };
    Ok(CglSolution::from_weights(n, a, None, diagnostics))
}
