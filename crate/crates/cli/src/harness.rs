//! Benchmark grid execution and aggregation.

use std::collections::BTreeMap;
use std::time::Instant;

use cgl_core::dynamics::{analytic_covariance, sample_covariance, simulate_with_input};
use cgl_core::graphs::{derive_seed, laplacian_of, sample_admissible, Admissibility};
use cgl_core::metrics::{evaluate, recovery_rate};
use cgl_core::solvers::{hybrid, nearest_cgl, ordered_spec_temp, spec_temp_leigvec, CglSolution};
use cgl_core::spectral::inverse_filter;
use cgl_core::{FilterSource, FilterSpec, GraphSpec, Laplacian, SampleCovariance, SnapshotSet, SolverConfig, WeightedGraph};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliError;
use crate::spec::{CovarianceMode, ExperimentSpec, Method, MethodSpec};

const GRAPH_SALT: u64 = 0x6772_6170;
const SIGNAL_SALT: u64 = 0x7369_676e;

/// Admissible graph for a seed; shared by `generate` and the benchmark.
pub fn draw_graph(spec: &GraphSpec, admissibility: Option<&Admissibility>, seed: u64) -> Result<(WeightedGraph, Laplacian), CliError> {
    let crit = admissibility.copied().unwrap_or_default();
    let (g, _) = sample_admissible(spec, derive_seed(seed, GRAPH_SALT), &crit)?;
    let l = laplacian_of(&g);
    Ok((g, l))
}

pub fn signal_seed(seed: u64) -> u64 {
    derive_seed(seed, SIGNAL_SALT)
}

/// A recovered matrix and the selected observation time, if any.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub l: DMatrix<f64>,
    pub t_hat: Option<usize>,
}

/// Run one method on a covariance. `filter` is the true filter when known.
pub fn run_method(method: Method, cov: &SampleCovariance, filter: Option<&FilterSpec>, cfg: &SolverConfig) -> Result<Estimate, CliError> {
    if method == Method::InverseFilter {
        let f = filter.ok_or_else(|| CliError::Config("inversefilter needs a fixed, known filter".into()))?;
        return Ok(Estimate { l: inverse_filter(cov, f)?.l_hat, t_hat: None });
    }
    let sol = solve_cgl(method, cov, filter, cfg)?;
    Ok(Estimate { t_hat: sol.diagnostics.t_hat, l: sol.l_star })
}

/// Every method except the raw inverse filter, which yields no valid CGL.
pub fn solve_cgl(method: Method, cov: &SampleCovariance, filter: Option<&FilterSpec>, cfg: &SolverConfig) -> Result<CglSolution, CliError> {
    let known = || filter.ok_or_else(|| CliError::Config(format!("{method} needs a fixed, known filter")));
    Ok(match method {
        Method::NearestCgl => nearest_cgl(&inverse_filter(cov, known()?)?.l_hat, cfg)?,
        Method::OrderedSpecTemp => ordered_spec_temp(cov, cfg)?,
        Method::SpecTempLEigVec => spec_temp_leigvec(cov, cfg)?,
        Method::Hybrid => hybrid(cov, cfg)?.solution,
        Method::StructGLasso => structglasso(cov, known()?, cfg)?,
        Method::InverseFilter => return Err(CliError::Usage("inversefilter does not produce a CGL".into())),
    })
}

#[cfg(feature = "structglasso")]
fn structglasso(cov: &SampleCovariance, filter: &FilterSpec, cfg: &SolverConfig) -> Result<CglSolution, CliError> {
    let est = inverse_filter(cov, filter)?;
    Ok(cgl_core::solvers::struct_glasso_baseline(&est.l_hat, cfg.beta, cfg)?)
}

#[cfg(not(feature = "structglasso"))]
fn structglasso(_: &SampleCovariance, _: &FilterSpec, _: &SolverConfig) -> Result<CglSolution, CliError> {
    Err(CliError::Usage("structglasso support is not compiled in".into()))
}

/// One row of the long-format results table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub method: String,
    pub m: usize,
    pub seed: u64,
    pub rel_error: Option<f64>,
    pub f_score: Option<f64>,
    pub wall_ms: f64,
    /// `ok`, or the error tag of a failed cell.
    pub status: String,
    pub t_hat: Option<usize>,
    /// Observation time of the data, when the filter is constant-rate.
    pub t_true: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: String,
    pub m: usize,
    pub runs: usize,
    pub failures: usize,
    pub mean_rel_error: Option<f64>,
    pub median_rel_error: Option<f64>,
    pub mean_f_score: Option<f64>,
    pub median_f_score: Option<f64>,
    pub recovery_rate: Option<f64>,
    /// Fraction of runs whose selected time equals the true one.
    pub t_hat_success: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkOutput {
    pub name: String,
    pub rows: Vec<CellResult>,
    pub summary: Vec<SummaryRow>,
}

fn constant_steps(f: &FilterSpec) -> Option<usize> {
    let r = f.rates();
    r.windows(2).all(|w| w[0] == w[1]).then_some(r.len())
}

fn run_seed(spec: &ExperimentSpec, methods: &[MethodSpec], seed: u64) -> Vec<CellResult> {
    let fail_all = |e: &CliError| -> Vec<CellResult> {
        methods
            .iter()
            .flat_map(|ms| {
                spec.m.iter().map(move |&m| CellResult {
                    method: ms.label(),
                    m,
                    seed,
                    rel_error: None,
                    f_score: None,
                    wall_ms: 0.0,
                    status: e.tag().to_string(),
                    t_hat: None,
                    t_true: None,
                })
            })
            .collect()
    };
    let setup = (|| -> Result<_, CliError> {
        let (_, l) = draw_graph(&spec.graph, spec.admissibility.as_ref(), seed)?;
        let source = spec.filter.resolve(&l)?;
        let filter = match &source {
            FilterSource::Fixed { filter } => Some(filter.clone()),
            FilterSource::RandomPerSample { .. } => None,
        };
        let snapshots = match spec.covariance {
            CovarianceMode::Sample => {
                let m_max = *spec.m.iter().max().unwrap_or(&1);
                Some(simulate_with_input(&l, &source, m_max, spec.sigma, spec.input, signal_seed(seed))?)
            }
            CovarianceMode::Analytic => None,
        };
        let analytic = match (spec.covariance, &filter) {
            (CovarianceMode::Analytic, Some(f)) => {
                Some(SampleCovariance::from_matrix(analytic_covariance(&l, f, spec.sigma * spec.sigma)?))
            }
            _ => None,
        };
        Ok((l, filter, snapshots, analytic))
    })();
    let (l, filter, snapshots, analytic) = match setup {
        Ok(v) => v,
        Err(e) => return fail_all(&e),
    };
    let t_true = filter.as_ref().and_then(constant_steps);
    let mut out = Vec::with_capacity(methods.len() * spec.m.len());
    for &m in &spec.m {
        let cov = match (&analytic, &snapshots) {
            (Some(c), _) => c.clone(),
            (None, Some(s)) => sample_covariance(&prefix(s, m)),
            (None, None) => unreachable!("setup yields a data source"),
        };
        for ms in methods {
            let cfg = ms.solver.as_ref().unwrap_or(&spec.solver);
            let start = Instant::now();
            let result = run_method(ms.method, &cov, filter.as_ref(), cfg);
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            let trace_normalize = ms.trace_normalize.unwrap_or_else(|| ms.method.default_trace_normalize());
            let scored = result.and_then(|est| {
                let report = evaluate(&est.l, l.matrix(), trace_normalize, spec.metrics.edge_threshold)?;
                Ok((report, est.t_hat))
            });
            out.push(match scored {
                Ok((report, t_hat)) => CellResult {
                    method: ms.label(),
                    m,
                    seed,
                    rel_error: report.rel_error,
                    f_score: Some(report.f_score),
                    wall_ms,
                    status: "ok".into(),
                    t_hat,
                    t_true,
                },
                Err(e) => CellResult {
                    method: ms.label(),
                    m,
                    seed,
                    rel_error: None,
                    f_score: None,
                    wall_ms,
                    status: e.tag().into(),
                    t_hat: None,
                    t_true,
                },
            });
        }
    }
    out
}

fn prefix(s: &SnapshotSet, m: usize) -> SnapshotSet {
    let rows = s.signals().rows(0, m.min(s.m())).into_owned();
    SnapshotSet::new(rows, s.sigma2).expect("prefix of a valid snapshot set")
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let k = s.len();
    Some(if k % 2 == 1 { s[k / 2] } else { 0.5 * (s[k / 2 - 1] + s[k / 2]) })
}

pub fn summarize(rows: &[CellResult], success_threshold: f64) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, usize), Vec<&CellResult>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.method.clone(), r.m)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((method, m), cells)| {
            let errs: Vec<f64> = cells.iter().filter_map(|c| c.rel_error).collect();
            let fs: Vec<f64> = cells.iter().filter_map(|c| c.f_score).collect();
            let timed: Vec<_> = cells.iter().filter(|c| c.t_hat.is_some() && c.t_true.is_some()).collect();
            let t_hat_success =
                (!timed.is_empty()).then(|| timed.iter().filter(|c| c.t_hat == c.t_true).count() as f64 / timed.len() as f64);
            // Failed runs count as unsuccessful recoveries.
            let rate_input: Vec<f64> = cells.iter().map(|c| c.rel_error.unwrap_or(f64::INFINITY)).collect();
            SummaryRow {
                method,
                m,
                runs: cells.len(),
                failures: cells.iter().filter(|c| c.status != "ok").count(),
                mean_rel_error: mean(&errs),
                median_rel_error: median(&errs),
                mean_f_score: mean(&fs),
                median_f_score: median(&fs),
                recovery_rate: recovery_rate(&rate_input, success_threshold).ok(),
                t_hat_success,
            }
        })
        .collect()
}

/// Run the whole grid on `jobs` worker threads. Rows come back ordered by
/// method entry, then M, then seed, whatever the scheduling.
pub fn run_benchmark(spec: &ExperimentSpec, jobs: usize, allow_baselines: bool) -> Result<BenchmarkOutput, CliError> {
    spec.validate(allow_baselines)?;
    let methods: Vec<MethodSpec> = spec.methods.iter().map(|e| e.spec()).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let per_seed: Vec<Vec<CellResult>> = pool.install(|| spec.seeds.par_iter().map(|&seed| run_seed(spec, &methods, seed)).collect());
    let order: BTreeMap<String, usize> = methods.iter().enumerate().map(|(i, m)| (m.label(), i)).collect();
    let seed_pos: BTreeMap<u64, usize> = spec.seeds.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let m_pos: BTreeMap<usize, usize> = spec.m.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let mut rows: Vec<CellResult> = per_seed.into_iter().flatten().collect();
    rows.sort_by_key(|r| (order[&r.method], m_pos[&r.m], seed_pos[&r.seed]));
    let summary = summarize(&rows, spec.metrics.success_threshold);
    Ok(BenchmarkOutput { name: spec.name.clone(), rows, summary })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

/// Long-format CSV: `method,M,seed,rel_error,f_score,wall_ms,status,t_hat`.
pub fn results_csv(rows: &[CellResult]) -> String {
    let mut out = String::from("method,M,seed,rel_error,f_score,wall_ms,status,t_hat\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{:.3},{},{}\n",
            r.method,
            r.m,
            r.seed,
            opt(r.rel_error),
            opt(r.f_score),
            r.wall_ms,
            r.status,
            r.t_hat.map(|t| t.to_string()).unwrap_or_default()
        ));
    }
    out
}
