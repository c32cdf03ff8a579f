use nalgebra::DMatrix;

use super::vectorize::{edge_count, edge_pairs, laplacian_from_weights};
use super::{check_square, CglSolution, Diagnostics, SolverConfig, SolverError};
use crate::linalg;

/// Graphical-lasso estimate restricted to valid CGLs:
/// `min tr(L S) − log pdet(L) + β ‖vec L‖₁` with `S = L̂†`.
///
/// `log pdet(L)` is evaluated as `log det(L + J/N)`, which agrees for
/// connected graphs and is `−∞` otherwise. Projected gradient on the edge
/// weights with Barzilai-Borwein steps and Armijo backtracking.
pub fn struct_glasso_baseline(l_hat: &DMatrix<f64>, beta: f64, cfg: &SolverConfig) -> Result<CglSolution, SolverError> {
    check_square(l_hat)?;
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(SolverError::InvalidConfig(format!("beta must be finite and nonnegative, got {beta}")));
    }
    let n = l_hat.nrows();
    if n < 2 {
        return Err(SolverError::InvalidConfig("need at least two nodes".into()));
    }
    let s = pseudo_inverse(l_hat)?;
    let e = edge_count(n);
    let pairs: Vec<(usize, usize)> = edge_pairs(n).collect();
    let edge_metric = |m: &DMatrix<f64>| -> Vec<f64> { pairs.iter().map(|&(i, j)| m[(i, i)] + m[(j, j)] - 2.0 * m[(i, j)]).collect() };
    let s_lin: Vec<f64> = edge_metric(&s).iter().map(|v| v + 4.0 * beta).collect();

    // f(a) = Σ a_e s_lin_e − log det(L(a) + J/N); returns (value, gradient).
    let j_over_n = DMatrix::from_element(n, n, 1.0 / n as f64);
    let eval = |a: &[f64]| -> Option<(f64, Vec<f64>)> {
        let m = laplacian_from_weights(n, a) + &j_over_n;
        let chol = m.cholesky()?;
        let logdet: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let x = chol.inverse();
        let grad: Vec<f64> = s_lin.iter().zip(edge_metric(&x)).map(|(sl, xm)| sl - xm).collect();
        let value = linalg::dot(&s_lin, a) - logdet;
        value.is_finite().then_some((value, grad))
    };

    // Complete-graph start at the best uniform weight.
    let lin_sum: f64 = s_lin.iter().sum();
    let c0 = if lin_sum > 0.0 { (n - 1) as f64 / lin_sum } else { 1.0 };
    let mut a = vec![c0; e];
    let (mut f, mut g) = eval(&a).ok_or_else(|| SolverError::Numeric("starting point is not positive definite".into()))?;
    let mut step = 1.0 / (1.0 + g.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
    let mut history = vec![f];
    let mut converged = false;
    let mut iterations = 0;
    let pg_norm = |a: &[f64], g: &[f64]| a.iter().zip(g).fold(0.0_f64, |m, (ai, gi)| m.max((ai - (ai - gi).max(0.0)).abs()));

    while iterations < cfg.max_iters {
        if pg_norm(&a, &g) <= cfg.opt_tol * (1.0 + f.abs()) {
            converged = true;
            break;
        }
        iterations += 1;
        let mut t = step;
        let accepted = loop {
            let trial: Vec<f64> = a.iter().zip(&g).map(|(ai, gi)| (ai - t * gi).max(0.0)).collect();
            if let Some((ft, gt)) = eval(&trial) {
                let decrease: f64 = g.iter().zip(trial.iter().zip(&a)).map(|(gi, (x, y))| gi * (x - y)).sum();
                if ft <= f + 1e-4 * decrease {
                    break Some((trial, ft, gt));
                }
            }
            t *= 0.5;
            if t < 1e-20 {
                break None;
            }
        };
        let Some((next, f_next, g_next)) = accepted else {
            converged = true;
            break;
        };
        let sk: Vec<f64> = next.iter().zip(&a).map(|(x, y)| x - y).collect();
        let yk: Vec<f64> = g_next.iter().zip(&g).map(|(x, y)| x - y).collect();
        let sy = linalg::dot(&sk, &yk);
        step = if sy > 0.0 { linalg::dot(&sk, &sk) / sy } else { t * 2.0 };
        let rel = (f - f_next).abs() / (1.0 + f.abs());
        a = next;
        f = f_next;
        g = g_next;
        history.push(f);
        if rel <= 1e-3 * cfg.opt_tol {
            converged = true;
            break;
        }
    }
    let residual = pg_norm(&a, &g);
    let diagnostics = Diagnostics { objective: f, iterations, residual, feasible: true, converged, history, ..Default::default() };
    Ok(CglSolution::from_weights(n, a, None, diagnostics))
}

/// Pseudo-inverse of a Laplacian estimate with a one-dimensional null space.
fn pseudo_inverse(l_hat: &DMatrix<f64>) -> Result<DMatrix<f64>, SolverError> {
    let sym = linalg::symmetrize(l_hat);
    if sym.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::Numeric("input contains non-finite entries".into()));
    }
    let (vals, vecs) = linalg::eigh_ascending(&sym);
    let scale = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = 1e-10 * scale.max(f64::MIN_POSITIVE);
    let null = vals.iter().filter(|v| v.abs() <= tol).count();
    if scale == 0.0 || null > 1 {
        return Err(SolverError::SingularInput(format!("{null} near-zero eigenvalues; the estimate must be connected")));
    }
    let inv = vals.map(|v| if v.abs() <= tol { 0.0 } else { 1.0 / v });
    Ok(linalg::reconstruct(&vecs, &inv))
}

/// `{0} ∪ {0.75^r s_max √(log N / M) : r = 1..14}`, ascending.
pub fn glasso_beta_grid(s_max: f64, n: usize, m: usize) -> Vec<f64> {
    let base = s_max * ((n.max(1) as f64).ln() / m.max(1) as f64).sqrt();
    let mut grid: Vec<f64> = (1..=14).map(|r| 0.75_f64.powi(r) * base).collect();
    grid.push(0.0);
    grid.sort_by(f64::total_cmp);
    grid
}
