//! Dense log-barrier interior-point method for small convex programs with
//! sparse linear inequalities and a few convex quadratic inequalities.

use nalgebra::{DMatrix, DVector};

/// `Σ_k coef_k x_{idx_k} ≤ rhs`
#[derive(Debug, Clone)]
pub(crate) struct LinRow {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LinRow {
    pub fn new(terms: Vec<(usize, f64)>, rhs: f64) -> Self {
        LinRow { terms, rhs }
    }

    fn slack(&self, x: &[f64]) -> f64 {
        self.rhs - self.terms.iter().map(|&(k, c)| c * x[k]).sum::<f64>()
    }
}

/// `½ x[..d]ᵀ Q x[..d] + lin·x + r ≤ 0` with `Q` PSD of size `d ≤ n`.
#[derive(Debug, Clone)]
pub(crate) struct QuadRow {
    pub q: DMatrix<f64>,
    pub lin: Vec<f64>,
    pub r: f64,
}

impl QuadRow {
    fn value_and_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.q.nrows();
        let xd = DVector::from_column_slice(&x[..d]);
        let qx = &self.q * &xd;
        grad.copy_from_slice(&self.lin);
        for k in 0..d {
            grad[k] += qx[k];
        }
        0.5 * xd.dot(&qx) + self.lin.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.r
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BarrierProblem {
    pub n: usize,
    /// Linear objective.
    pub c: Vec<f64>,
    /// Optional PSD quadratic objective term `½ xᵀ H x`.
    pub h: Option<DMatrix<f64>>,
    pub rows: Vec<LinRow>,
    pub quads: Vec<QuadRow>,
}

#[derive(Debug, Clone)]
pub(crate) struct BarrierOptions {
    /// Duality-gap target `m/τ`, relative to `1 + |objective|`.
    pub gap_tol: f64,
    pub max_newton: usize,
    pub mu: f64,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        BarrierOptions { gap_tol: 1e-9, max_newton: 2000, mu: 20.0 }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BarrierOutcome {
    pub x: Vec<f64>,
    pub objective: f64,
    pub gap: f64,
    pub newton_steps: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum BarrierFailure {
    /// Phase I certified that no strictly feasible point exists; the value is
    /// the best lower bound on the largest constraint violation.
    Infeasible(f64),
    Numeric(String),
}

impl BarrierProblem {
    fn constraint_count(&self) -> usize {
        self.rows.len() + self.quads.len()
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let mut f: f64 = self.c.iter().zip(x).map(|(a, b)| a * b).sum();
        if let Some(h) = &self.h {
            let xv = DVector::from_column_slice(x);
            f += 0.5 * xv.dot(&(h * &xv));
        }
        f
    }

    /// Largest constraint value (`> 0` means violated).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for r in &self.rows {
            worst = worst.max(-r.slack(x));
        }
        let mut g = vec![0.0; self.n];
        for q in &self.quads {
            worst = worst.max(q.value_and_grad(x, &mut g));
        }
        worst
    }

    fn strictly_feasible(&self, x: &[f64]) -> bool {
        self.max_violation(x) < 0.0
    }

    /// `τ f(x) − Σ log(slack)`, or `None` outside the domain.
    fn merit(&self, x: &[f64], tau: f64) -> Option<f64> {
        let mut v = tau * self.objective(x);
        for r in &self.rows {
            let s = r.slack(x);
            if !(s > 0.0) {
                return None;
            }
            v -= s.ln();
        }
        let mut g = vec![0.0; self.n];
        for q in &self.quads {
            let s = -q.value_and_grad(x, &mut g);
            if !(s > 0.0) {
                return None;
            }
            v -= s.ln();
        }
        Some(v)
    }

    fn newton_system(&self, x: &[f64], tau: f64) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.n;
        let mut hess = match &self.h {
            Some(h) => h * tau,
            None => DMatrix::zeros(n, n),
        };
        let mut grad = DVector::from_iterator(n, self.c.iter().map(|c| tau * c));
        if let Some(h) = &self.h {
            grad += h * DVector::from_column_slice(x) * tau;
        }
        for r in &self.rows {
            let s = r.slack(x);
            let inv = 1.0 / s;
            let inv2 = inv * inv;
            for &(k, ck) in &r.terms {
                grad[k] += ck * inv;
                for &(l, cl) in &r.terms {
                    hess[(k, l)] += ck * cl * inv2;
                }
            }
        }
        let mut g = vec![0.0; n];
        for q in &self.quads {
            let s = -q.value_and_grad(x, &mut g);
            let inv = 1.0 / s;
            let d = q.q.nrows();
            for k in 0..n {
                grad[k] += g[k] * inv;
            }
            for l in 0..d {
                for k in 0..d {
                    hess[(k, l)] += q.q[(k, l)] * inv;
                }
            }
            let inv2 = inv * inv;
            let nz: Vec<usize> = (0..n).filter(|&k| g[k] != 0.0).collect();
            for &l in &nz {
                for &k in &nz {
                    hess[(k, l)] += g[k] * g[l] * inv2;
                }
            }
        }
        (hess, grad)
    }

    fn newton_direction(&self, x: &[f64], tau: f64) -> Result<(DVector<f64>, f64), BarrierFailure> {
        let (mut hess, grad) = self.newton_system(x, tau);
        let scale = (0..self.n).map(|k| hess[(k, k)].abs()).fold(0.0, f64::max).max(1.0);
        let mut shift = 0.0;
        for _ in 0..8 {
            if let Some(ch) = nalgebra::Cholesky::new(hess.clone()) {
                let dx = -ch.solve(&grad);
                let dec = -grad.dot(&dx);
                return Ok((dx, dec));
            }
            let add = if shift == 0.0 { 1e-14 * scale } else { shift * 100.0 };
            for k in 0..self.n {
                hess[(k, k)] += add - shift;
            }
            shift = add;
        }
        Err(BarrierFailure::Numeric("barrier Hessian is not positive definite".into()))
    }

    /// Minimise from a strictly feasible `x0`. `stop` is checked after each
    /// centering step and ends the run early when it returns true.
    pub fn minimize(
        &self,
        x0: Vec<f64>,
        opts: &BarrierOptions,
        stop: &dyn Fn(&[f64], f64) -> bool,
    ) -> Result<BarrierOutcome, BarrierFailure> {
        debug_assert!(self.strictly_feasible(&x0));
        let m = self.constraint_count().max(1) as f64;
        let mut x = x0;
        let f0 = self.objective(&x).abs();
        let mut tau = (m / (1.0 + f0)).max(1e-3);
        let mut steps = 0;
        loop {
            // Centering.
            loop {
                if steps >= opts.max_newton {
                    let objective = self.objective(&x);
                    return Ok(BarrierOutcome { x, objective, gap: m / tau, newton_steps: steps, converged: false });
                }
                let (dx, dec) = self.newton_direction(&x, tau)?;
                steps += 1;
                let base = self.merit(&x, tau).ok_or_else(|| BarrierFailure::Numeric("left barrier domain".into()))?;
                if dec / 2.0 <= 1e-10 * (1.0 + base.abs()) || !dec.is_finite() {
                    break;
                }
                let mut t = 1.0;
                let mut accepted = None;
                for _ in 0..60 {
                    let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + t * d).collect();
                    if let Some(v) = self.merit(&trial, tau) {
                        if v <= base - 0.25 * t * dec {
                            accepted = Some((trial, v));
                            break;
                        }
                    }
                    t *= 0.5;
                }
                match accepted {
                    Some((trial, v)) => {
                        x = trial;
                        // Stalled at f64 resolution.
                        if base - v <= 1e-13 * (1.0 + base.abs()) {
                            break;
                        }
                    }
                    None => break,
                }
            }
            let gap = m / tau;
            let objective = self.objective(&x);
            let done = gap <= opts.gap_tol * (1.0 + objective.abs());
            if stop(&x, gap) || done {
                return Ok(BarrierOutcome { x, objective, gap, newton_steps: steps, converged: done });
            }
            tau *= opts.mu;
        }
    }

    /// Find a strictly feasible point by minimising the largest violation.
    pub fn phase_one(&self, x0: &[f64], opts: &BarrierOptions) -> Result<Vec<f64>, BarrierFailure> {
        if self.strictly_feasible(x0) {
            return Ok(x0.to_vec());
        }
        let n = self.n;
        let s_idx = n;
        let mut rows: Vec<LinRow> = self
            .rows
            .iter()
            .map(|r| {
                let mut terms = r.terms.clone();
                terms.push((s_idx, -1.0));
                LinRow::new(terms, r.rhs)
            })
            .collect();
        // Keeps the auxiliary problem bounded below.
        rows.push(LinRow::new(vec![(s_idx, -1.0)], 1.0));
        let quads = self
            .quads
            .iter()
            .map(|q| {
                let mut lin = q.lin.clone();
                lin.push(-1.0);
                QuadRow { q: q.q.clone(), lin, r: q.r }
            })
            .collect();
        let mut c = vec![0.0; n + 1];
        c[s_idx] = 1.0;
        let aux = BarrierProblem { n: n + 1, c, h: None, rows, quads };
        let mut start = x0.to_vec();
        start.push(self.max_violation(x0).max(0.0) + 1.0);
        let out = aux.minimize(start, opts, &|x, gap| x[s_idx] < 0.0 || x[s_idx] - gap > 0.0 || gap <= 1e-13)?;
        let s = out.x[s_idx];
        let x: Vec<f64> = out.x[..n].to_vec();
        if s < 0.0 && self.strictly_feasible(&x) {
            Ok(x)
        } else {
            Err(BarrierFailure::Infeasible((s - out.gap).max(0.0)))
        }
    }

    /// Phase I followed by the barrier method.
    pub fn solve(&self, x0: &[f64], opts: &BarrierOptions) -> Result<BarrierOutcome, BarrierFailure> {
        let start = self.phase_one(x0, opts)?;
        self.minimize(start, opts, &|_, _| false)
    }
}
