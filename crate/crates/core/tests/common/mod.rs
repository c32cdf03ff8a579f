#![allow(dead_code)]

use cgl_core::graphs::{laplacian_of, sample_admissible, Admissibility};
use cgl_core::{FilterSpec, GraphModel, GraphSpec, Laplacian, WeightDist};

/// Connected weighted ER graph whose Laplacian eigenvalues are at least
/// `gap` apart.
pub fn separated_graph(n: usize, p: f64, gap: f64, seed: u64) -> Laplacian {
    let spec = GraphSpec { n, model: GraphModel::ErdosRenyi { p }, weights: WeightDist::Uniform { lo: 0.1, hi: 3.0 } };
    let crit = Admissibility { require_connected: true, gap_min: gap, max_attempts: 10_000 };
    let (g, _) = sample_admissible(&spec, seed, &crit).expect("admissible graph");
    laplacian_of(&g)
}

/// Three steps at `{0.7, 0.8, 0.9} / λ_max`.
pub fn three_step_filter(l: &Laplacian) -> FilterSpec {
    FilterSpec::relative_to(l.lambda_max(), &[0.7, 0.8, 0.9]).unwrap()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
