//! Recovery from ordered spectral templates.
//!
//! Templates are the covariance eigenvectors in nonincreasing eigenvalue
//! order; coefficient `γ_k` multiplies `u_k u_kᵀ`, the last one is fixed to 1
//! and the ordering constraint reads `γ_i ≤ γ_{i+η}`.

use microlp::{ComparisonOp, Error as LpError, OptimizationDirection, Problem, SolutionStatus, Variable};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::barrier::{BarrierFailure, BarrierOptions, BarrierProblem, LinRow, QuadRow};
use super::epsilon::epsilon_feasibility_search;
use super::isotonic::{project_lagged_order, project_leading_only};
use super::nnls::{nonneg_l1_least_squares, NnlsOptions};
use super::reweight::reweighted_l1;
use super::vectorize::{edge_count, edge_pairs, laplacian_from_weights, structure_matrix, target_vector};
use super::{check_square, CglSolution, Diagnostics, Distance, SolverConfig, SolverError};
use crate::dynamics::SampleCovariance;
use crate::linalg;

/// Which ordering information is imposed on the template coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TemplateOrder {
    /// `γ_i ≤ γ_{i+η}` and `γ_N = 1`.
    Lagged { eta: usize },
    /// Only `γ_N = 1`.
    LeadingOnly,
}

impl TemplateOrder {
    fn project(&self, d: &[f64]) -> Vec<f64> {
        match *self {
            TemplateOrder::Lagged { eta } => project_lagged_order(d, eta),
            TemplateOrder::LeadingOnly => project_leading_only(d),
        }
    }

    /// Rows over `γ_0..γ_{N−2}` stored at `offset..`; `fixed[k]` pins `γ_k = 0`
    /// and removes it from the variable list (`slot[k]`).
    fn rows(&self, n: usize, slot: &[Option<usize>], offset: usize) -> Vec<LinRow> {
        let mut rows = Vec::new();
        let TemplateOrder::Lagged { eta } = *self else {
            return rows;
        };
        for i in 0..n.saturating_sub(eta) {
            let j = i + eta;
            let mut terms = Vec::new();
            let mut rhs = 0.0;
            if let Some(si) = slot[i] {
                terms.push((offset + si, 1.0));
            }
            if j == n - 1 {
                rhs = 1.0;
            } else if let Some(sj) = slot[j] {
                terms.push((offset + sj, -1.0));
            }
            if !terms.is_empty() {
                rows.push(LinRow::new(terms, rhs));
            }
        }
        rows
    }
}

/// `d(L(a), U diag(γ) Uᵀ)` for the chosen distance.
pub fn template_distance(l: &DMatrix<f64>, u: &DMatrix<f64>, gamma: &[f64], distance: Distance) -> f64 {
    let k = linalg::reconstruct(u, &DVector::from_column_slice(gamma));
    let r = l - k;
    match distance {
        Distance::FrobeniusSq => linalg::frobenius(&r).powi(2),
        Distance::MaxNorm => r.iter().fold(0.0, |m, v| m.max(v.abs())),
    }
}

/// OrderedSpecTemp on the eigenvectors of a sample covariance.
pub fn ordered_spec_temp(cov: &SampleCovariance, cfg: &SolverConfig) -> Result<CglSolution, SolverError> {
    solve_spectral_templates(cov.eigvecs(), cfg, TemplateOrder::Lagged { eta: cfg.eta })
}

/// Ablation keeping only `γ_N = 1`.
pub fn spec_temp_leigvec(cov: &SampleCovariance, cfg: &SolverConfig) -> Result<CglSolution, SolverError> {
    solve_spectral_templates(cov.eigvecs(), cfg, TemplateOrder::LeadingOnly)
}

/// Solve from explicit templates `u` (columns in covariance order).
///
/// With neither `epsilon` nor `epsilon_search` set, the penalised form
/// `‖L − U diag(γ) Uᵀ‖_F² + β‖vec L‖₁` is solved by alternating exact block
/// updates. Otherwise the constrained form `min ‖vec L‖₁ s.t. d ≤ ε` is solved
/// by an interior-point method.
pub fn solve_spectral_templates(u: &DMatrix<f64>, cfg: &SolverConfig, order: TemplateOrder) -> Result<CglSolution, SolverError> {
    check_square(u)?;
    let n = u.nrows();
    if n < 2 {
        return Err(SolverError::InvalidConfig("spectral templates need N >= 2".into()));
    }
    cfg.validate_for(n)?;
    if let Some(schedule) = &cfg.epsilon_search {
        return epsilon_feasibility_search(u, cfg, schedule, order).map(|s| s.solution);
    }
    match cfg.epsilon {
        Some(eps) => solve_constrained(u, cfg, eps, order),
        None => reweighted_l1(cfg.reweight_iters, cfg.reweight_eps, |w, prev| block_descent(u, cfg, order, w, prev)),
    }
}

pub(crate) fn solve_constrained(u: &DMatrix<f64>, cfg: &SolverConfig, eps: f64, order: TemplateOrder) -> Result<CglSolution, SolverError> {
    let mut sol = reweighted_l1(cfg.reweight_iters, cfg.reweight_eps, |w, _| constrained_pass(u, cfg, eps, order, w))?;
    sol.diagnostics.epsilon = Some(eps);
    Ok(sol)
}

fn objective_value(l: &DMatrix<f64>, u: &DMatrix<f64>, gamma: &[f64], a: &[f64], beta: f64, w: Option<&[f64]>) -> f64 {
    let pen: f64 = match w {
        Some(w) => a.iter().zip(w).map(|(x, y)| x * y).sum(),
        None => a.iter().sum(),
    };
    template_distance(l, u, gamma, Distance::FrobeniusSq) + 4.0 * beta * pen
}

fn block_descent(
    u: &DMatrix<f64>,
    cfg: &SolverConfig,
    order: TemplateOrder,
    weights: Option<&[f64]>,
    prev: Option<&CglSolution>,
) -> Result<CglSolution, SolverError> {
    let n = u.nrows();
    let p = structure_matrix(n);
    let mut gamma: Vec<f64> = match prev.and_then(|s| s.gamma_star.clone()) {
        Some(g) => g,
        None => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    };
    let mut a: Vec<f64> = prev.map(|s| s.weights.clone()).unwrap_or_else(|| vec![0.0; edge_count(n)]);
    let opts = NnlsOptions { opt_tol: cfg.opt_tol, max_iters: cfg.max_iters };
    let mut history = Vec::new();
    let mut inner = 0;
    let mut prev_obj = f64::INFINITY;
    let mut converged = false;
    let mut residual = f64::NAN;
    let outer_cap = cfg.max_iters.min(10_000);
    for _ in 0..outer_cap {
        // L-step against the current template matrix.
        let k = linalg::reconstruct(u, &DVector::from_column_slice(&gamma));
        let b = target_vector(&k);
        let out = nonneg_l1_least_squares(&p, &b, cfg.beta, weights, Some(&a), &opts);
        inner += out.iterations;
        residual = out.residual;
        let l_old = laplacian_from_weights(n, &a);
        let keep_old = objective_value(&l_old, u, &gamma, &a, cfg.beta, weights)
            < objective_value(&laplacian_from_weights(n, &out.a), u, &gamma, &out.a, cfg.beta, weights);
        if !keep_old {
            a = out.a;
        }
        // γ-step: templates are orthonormal in the Frobenius inner product,
        // so the fit reduces to projecting diag(Uᵀ L U).
        let l = laplacian_from_weights(n, &a);
        let d = (u.transpose() * &l * u).diagonal();
        gamma = order.project(d.as_slice());
        let obj = objective_value(&l, u, &gamma, &a, cfg.beta, weights);
        history.push(obj);
        if prev_obj.is_finite() && (prev_obj - obj).abs() <= cfg.opt_tol * prev_obj.abs().max(1e-12) {
            converged = true;
            break;
        }
        prev_obj = obj;
    }
    let l = laplacian_from_weights(n, &a);
    let diagnostics = Diagnostics {
        objective: *history.last().unwrap_or(&f64::NAN),
        iterations: inner,
        residual,
        feasible: true,
        converged,
        fit_distance: Some(template_distance(&l, u, &gamma, Distance::FrobeniusSq)),
        history,
        ..Default::default()
    };
    Ok(CglSolution { l_star: l, weights: a, gamma_star: Some(gamma), diagnostics })
}

/// `(T, t_last)` with `target_vector(U diag(γ) Uᵀ) = T γ[..N−1] + t_last γ_N`.
fn template_targets(u: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let n = u.nrows();
    let rows = n + edge_count(n);
    let mut t = DMatrix::zeros(rows, n - 1);
    let mut last = DVector::zeros(rows);
    for k in 0..n {
        let col = u.column(k);
        let outer = col * col.transpose();
        let v = target_vector(&outer);
        if k + 1 < n {
            t.set_column(k, &DVector::from_vec(v));
        } else {
            last = DVector::from_vec(v);
        }
    }
    (t, last)
}

fn budget(n: usize) -> f64 {
    10.0 * n as f64
}

fn edge_weight(weights: Option<&[f64]>, e: usize) -> f64 {
    weights.map_or(1.0, |w| w[e])
}

fn map_failure(eps: f64) -> impl Fn(BarrierFailure) -> SolverError {
    move |f| match f {
        BarrierFailure::Infeasible(v) => {
            SolverError::Infeasible(format!("no CGL within distance {eps} of the spectral templates (violation >= {v:.3e})"))
        }
        BarrierFailure::Numeric(m) => SolverError::Numeric(m),
    }
}

/// Variables `(a, γ_0..γ_{N−2})` and linear rows shared by the constrained
/// programs: `a ≥ 0`, ordering, `Σ a ≤ budget`.
fn joint_rows(n: usize, order: TemplateOrder) -> Vec<LinRow> {
    let e = edge_count(n);
    let slot: Vec<Option<usize>> = (0..n).map(|k| (k + 1 < n).then_some(k)).collect();
    let mut rows: Vec<LinRow> = (0..e).map(|k| LinRow::new(vec![(k, -1.0)], 0.0)).collect();
    rows.extend(order.rows(n, &slot, e));
    rows.push(LinRow::new((0..e).map(|k| (k, 1.0)).collect(), budget(n)));
    if order == TemplateOrder::LeadingOnly {
        for k in 0..n - 1 {
            rows.push(LinRow::new(vec![(e + k, 1.0)], budget(n)));
            rows.push(LinRow::new(vec![(e + k, -1.0)], budget(n)));
        }
    }
    rows
}

/// Quadratic form of `‖L(a) − U diag(γ) Uᵀ‖_F²` in `x = (a, γ_0..γ_{N−2})`:
/// returns `(H, c, r)` with value `½ xᵀHx + cᵀx + r`.
fn frobenius_form(u: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, f64) {
    let n = u.nrows();
    let e = edge_count(n);
    let (t, last) = template_targets(u);
    let p = structure_matrix(n).to_dense();
    let mut m = DMatrix::zeros(n + e, e + n - 1);
    m.view_mut((0, 0), (n + e, e)).copy_from(&p);
    m.view_mut((0, e), (n + e, n - 1)).copy_from(&(-t));
    let h = m.tr_mul(&m) * 2.0;
    let c = (m.tr_mul(&last) * -2.0).as_slice().to_vec();
    (h, c, last.norm_squared())
}

fn start_point(u: &DMatrix<f64>) -> Vec<f64> {
    let n = u.nrows();
    let gamma: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let k = linalg::reconstruct(u, &DVector::from_column_slice(&gamma));
    let mut x: Vec<f64> = edge_pairs(n).map(|(i, j)| (-k[(i, j)]).max(0.0) + 1e-3).collect();
    x.extend_from_slice(&gamma[..n - 1]);
    x
}

/// Rows `±(L(a) − K(γ))_ij ≤ ε` for `i ≤ j`.
fn max_norm_rows(u: &DMatrix<f64>, eps: f64, slack_var: Option<usize>) -> Vec<LinRow> {
    let n = u.nrows();
    let e = edge_count(n);
    let last = u.column(n - 1);
    let mut rows = Vec::new();
    let index = |i: usize, j: usize| super::vectorize::edge_index(n, i.min(j), i.max(j));
    for i in 0..n {
        for j in i..n {
            let mut terms: Vec<(usize, f64)> =
                if i == j { (0..n).filter(|&k| k != i).map(|k| (index(i, k), 1.0)).collect() } else { vec![(index(i, j), -1.0)] };
            for k in 0..n - 1 {
                terms.push((e + k, -u[(i, k)] * u[(j, k)]));
            }
            let base = last[i] * last[j];
            let mut plus = terms.clone();
            let mut minus: Vec<(usize, f64)> = terms.iter().map(|&(k, c)| (k, -c)).collect();
            if let Some(s) = slack_var {
                plus.push((s, -1.0));
                minus.push((s, -1.0));
            }
            rows.push(LinRow::new(plus, eps + base));
            rows.push(LinRow::new(minus, eps - base));
        }
    }
    rows
}

fn constrained_pass(
    u: &DMatrix<f64>,
    cfg: &SolverConfig,
    eps: f64,
    order: TemplateOrder,
    weights: Option<&[f64]>,
) -> Result<CglSolution, SolverError> {
    if eps == 0.0 {
        return exact_template_pass(u, cfg, order, weights);
    }
    let n = u.nrows();
    let e = edge_count(n);
    let mut c = vec![0.0; e + n - 1];
    for (k, ck) in c.iter_mut().take(e).enumerate() {
        *ck = edge_weight(weights, k);
    }
    let mut rows = joint_rows(n, order);
    let mut quads = Vec::new();
    match cfg.distance {
        Distance::FrobeniusSq => {
            let (h, lin, r) = frobenius_form(u);
            quads.push(QuadRow { q: h, lin, r: r - eps });
        }
        Distance::MaxNorm => rows.extend(max_norm_rows(u, eps, None)),
    }
    let problem = BarrierProblem { n: e + n - 1, c, h: None, rows, quads };
    let opts = BarrierOptions { gap_tol: cfg.opt_tol, max_newton: cfg.max_iters.max(50), ..Default::default() };
    let out = problem.solve(&start_point(u), &opts).map_err(map_failure(eps))?;
    let a: Vec<f64> = out.x[..e].iter().map(|v| v.max(0.0)).collect();
    let mut gamma = out.x[e..].to_vec();
    gamma.push(1.0);
    let l = laplacian_from_weights(n, &a);
    let diagnostics = Diagnostics {
        objective: out.objective,
        iterations: out.newton_steps,
        residual: out.gap,
        feasible: true,
        converged: out.converged,
        fit_distance: Some(template_distance(&l, u, &gamma, cfg.distance)),
        ..Default::default()
    };
    Ok(CglSolution { l_star: l, weights: a, gamma_star: Some(gamma), diagnostics })
}

/// `ε = 0`: `L = U diag(γ) Uᵀ` exactly, so `a` is eliminated and only `γ`
/// remains. Templates with a nonzero component along `1` must carry a zero
/// coefficient for `L 1 = 0` to hold.
fn exact_template_pass(
    u: &DMatrix<f64>,
    cfg: &SolverConfig,
    order: TemplateOrder,
    weights: Option<&[f64]>,
) -> Result<CglSolution, SolverError> {
    let n = u.nrows();
    let e = edge_count(n);
    let tol = 1e-8 * (n as f64).sqrt();
    let mass: Vec<f64> = (0..n).map(|k| u.column(k).sum()).collect();
    if mass[n - 1].abs() > tol {
        return Err(SolverError::Infeasible(format!(
            "the last template is not orthogonal to the constant vector (|u·1| = {:.3e}); no CGL fits exactly",
            mass[n - 1].abs()
        )));
    }
    let mut slot = vec![None; n];
    let mut free = Vec::new();
    for k in 0..n - 1 {
        if mass[k].abs() <= tol {
            slot[k] = Some(free.len());
            free.push(k);
        }
    }
    let nv = free.len();
    let last = u.column(n - 1);
    // a_e(γ) = −K_ij = −Σ_k γ_k u_k(i) u_k(j) − u_N(i) u_N(j) ≥ 0.
    let mut rows = Vec::with_capacity(e + n);
    let mut c = vec![0.0; nv];
    for (idx, (i, j)) in edge_pairs(n).enumerate() {
        let w = edge_weight(weights, idx);
        let terms: Vec<(usize, f64)> = free.iter().enumerate().map(|(s, &k)| (s, u[(i, k)] * u[(j, k)])).collect();
        for &(s, coef) in &terms {
            c[s] -= w * coef;
        }
        rows.push(LinRow::new(terms, -last[i] * last[j]));
    }
    // Pinned coefficients are zero, so ordering rows touching them become bounds.
    rows.extend(order.rows(n, &slot, 0));
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Variable> = c.iter().map(|&ck| lp.add_var(ck, (-budget(n), budget(n)))).collect();
    for r in &rows {
        let terms: Vec<(Variable, f64)> = r.terms.iter().map(|&(k, coef)| (vars[k], coef)).collect();
        lp.add_constraint(terms.as_slice(), ComparisonOp::Le, r.rhs);
    }
    let out = lp
        .solve()
        .map_err(|e| match e {
            LpError::Infeasible => SolverError::Infeasible("no CGL reproduces the spectral templates exactly".into()),
            other => SolverError::Numeric(format!("exact-template LP failed: {other}")),
        })?
        .into_solution()
        .map_err(|_| SolverError::Numeric("exact-template LP was interrupted".into()))?;
    let mut gamma = vec![0.0; n];
    for (s, &k) in free.iter().enumerate() {
        gamma[k] = out.var_value(vars[s]);
    }
    gamma[n - 1] = 1.0;
    let kmat = linalg::reconstruct(u, &DVector::from_column_slice(&gamma));
    let a: Vec<f64> = edge_pairs(n).map(|(i, j)| (-kmat[(i, j)]).max(0.0)).collect();
    let l = laplacian_from_weights(n, &a);
    let objective = a.iter().enumerate().map(|(k, v)| edge_weight(weights, k) * v).sum();
    let diagnostics = Diagnostics {
        objective,
        iterations: out.stats().lp_iterations as usize,
        residual: 0.0,
        feasible: true,
        converged: out.status() == SolutionStatus::Optimal,
        fit_distance: Some(template_distance(&l, u, &gamma, cfg.distance)),
        ..Default::default()
    };
    Ok(CglSolution { l_star: l, weights: a, gamma_star: Some(gamma), diagnostics })
}

/// Smallest achievable `d(L, U diag(γ) Uᵀ)` over CGLs `L` and admissible `γ`.
/// The constrained problem is feasible exactly for `ε` at or above it.
pub fn minimum_template_distance(u: &DMatrix<f64>, distance: Distance, order: TemplateOrder, opt_tol: f64) -> Result<f64, SolverError> {
    check_square(u)?;
    let n = u.nrows();
    if n < 2 {
        return Err(SolverError::InvalidConfig("spectral templates need N >= 2".into()));
    }
    let e = edge_count(n);
    let opts = BarrierOptions { gap_tol: opt_tol, ..Default::default() };
    match distance {
        Distance::FrobeniusSq => {
            let (h, c, r) = frobenius_form(u);
            let problem = BarrierProblem { n: e + n - 1, c, h: Some(h), rows: joint_rows(n, order), quads: vec![] };
            let out = problem.solve(&start_point(u), &opts).map_err(map_failure(f64::INFINITY))?;
            Ok((out.objective + r).max(0.0))
        }
        Distance::MaxNorm => {
            let t_idx = e + n - 1;
            let mut rows = joint_rows(n, order);
            rows.extend(max_norm_rows(u, 0.0, Some(t_idx)));
            let mut c = vec![0.0; t_idx + 1];
            c[t_idx] = 1.0;
            let problem = BarrierProblem { n: t_idx + 1, c, h: None, rows, quads: vec![] };
            let mut x0 = start_point(u);
            x0.push(0.0);
            x0[t_idx] = problem.max_violation(&x0).max(0.0) + 1.0;
            let out = problem.solve(&x0, &opts).map_err(map_failure(f64::INFINITY))?;
            Ok(out.objective.max(0.0))
        }
    }
}
