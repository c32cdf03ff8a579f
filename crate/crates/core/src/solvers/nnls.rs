use crate::linalg::{estimate_gram_norm, norm2, LinearOperator};

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsOptions {
    pub opt_tol: f64,
    pub max_iters: usize,
}

impl Default for NnlsOptions {
    fn default() -> Self {
        NnlsOptions { opt_tol: 1e-8, max_iters: 20_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsOutcome {
    pub a: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// `‖G(a)‖_∞` for the projected-gradient mapping at `a`.
    pub residual: f64,
    /// `opt_tol · (1 + ‖b̂‖)`.
    pub tolerance: f64,
    pub converged: bool,
}

struct Problem<'a, A: ?Sized> {
    p: &'a A,
    b: &'a [f64],
    /// `4β w_e`
    linear: Vec<f64>,
}

impl<A: LinearOperator + ?Sized> Problem<'_, A> {
    /// Gradient of `‖Pa − b‖² + Σ linear_e a_e` into `g`; returns the objective.
    fn gradient(&self, a: &[f64], r: &mut [f64], g: &mut [f64]) -> f64 {
        self.p.apply(a, r);
        for (ri, bi) in r.iter_mut().zip(self.b) {
            *ri -= bi;
        }
        self.p.apply_t(r, g);
        let mut obj = r.iter().map(|v| v * v).sum::<f64>();
        for ((gi, li), ai) in g.iter_mut().zip(&self.linear).zip(a) {
            *gi = 2.0 * *gi + li;
            obj += li * ai;
        }
        obj
    }
}

fn mapping_residual(a: &[f64], g: &[f64], lip: f64) -> f64 {
    a.iter().zip(g).map(|(&ai, &gi)| (lip * (ai - (ai - gi / lip).max(0.0))).abs()).fold(0.0, f64::max)
}

/// Minimise `‖P a − b̂‖² + 4β Σ_e w_e a_e` over `a ≥ 0`.
///
/// Accelerated projected gradient with gradient-based adaptive restart.
/// Stops when the projected-gradient mapping satisfies
/// `‖G(a)‖_∞ ≤ opt_tol · (1 + ‖b̂‖)`; if `max_iters` is hit first the last
/// iterate is returned with `converged = false`.
pub fn nonneg_l1_least_squares<A: LinearOperator + ?Sized>(
    p: &A,
    b: &[f64],
    beta: f64,
    weights: Option<&[f64]>,
    warm_start: Option<&[f64]>,
    opts: &NnlsOptions,
) -> NnlsOutcome {
    let n = p.ncols();
    let linear: Vec<f64> = match weights {
        Some(w) => w.iter().map(|wi| 4.0 * beta * wi).collect(),
        None => vec![4.0 * beta; n],
    };
    let prob = Problem { p, b, linear };
    let lip = (2.0 * estimate_gram_norm(p)).max(f64::MIN_POSITIVE);
    let tolerance = opts.opt_tol * (1.0 + norm2(b));

    let mut a: Vec<f64> = match warm_start {
        Some(w) => w.iter().map(|v| v.max(0.0)).collect(),
        None => vec![0.0; n],
    };
    let mut y = a.clone();
    let mut a_next = vec![0.0; n];
    let mut r = vec![0.0; p.nrows()];
    let mut g = vec![0.0; n];
    let mut t = 1.0_f64;

    let mut objective = prob.gradient(&a, &mut r, &mut g);
    let mut residual = mapping_residual(&a, &g, lip);
    if residual <= tolerance {
        return NnlsOutcome { a, objective, iterations: 0, residual, tolerance, converged: true };
    }

    for it in 1..=opts.max_iters {
        prob.gradient(&y, &mut r, &mut g);
        let mut step_sq = 0.0;
        let mut restart_dot = 0.0;
        for k in 0..n {
            a_next[k] = (y[k] - g[k] / lip).max(0.0);
            let d = a_next[k] - a[k];
            step_sq += d * d;
            restart_dot += (y[k] - a_next[k]) * d;
        }
        let gm = mapping_residual(&y, &g, lip);
        if gm <= tolerance {
            objective = prob.gradient(&a_next, &mut r, &mut g);
            residual = mapping_residual(&a_next, &g, lip);
            if residual <= tolerance {
                return NnlsOutcome { a: a_next, objective, iterations: it, residual, tolerance, converged: true };
            }
        }
        if restart_dot > 0.0 {
            t = 1.0;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let mom = (t - 1.0) / t_next;
        for k in 0..n {
            y[k] = a_next[k] + mom * (a_next[k] - a[k]);
        }
        std::mem::swap(&mut a, &mut a_next);
        t = t_next;
        if step_sq == 0.0 && restart_dot == 0.0 {
            // Stationary under the projected step.
            break;
        }
    }
    objective = prob.gradient(&a, &mut r, &mut g);
    residual = mapping_residual(&a, &g, lip);
    NnlsOutcome { a, objective, iterations: opts.max_iters, residual, tolerance, converged: residual <= tolerance }
}
