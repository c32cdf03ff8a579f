//! Subcommand implementations. Each returns the text it would print.

use std::fs;
use std::path::{Path, PathBuf};

use cgl_core::dynamics::{simulate_with_input, InputKind};
use cgl_core::graphs::{validate_cgl, Admissibility};
use cgl_core::io::{self, ConfigFormat, FormatError, GraphMeta};
use cgl_core::metrics::{evaluate, EDGE_THRESHOLD};
use cgl_core::solvers::CglSolution;
use cgl_core::spectral::inverse_filter;
use cgl_core::{FilterSource, FilterSpec, GraphSpec, Laplacian, SampleCovariance, SnapshotSet, SolverConfig, WeightedGraph};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::harness::{draw_graph, results_csv, run_benchmark, signal_seed, solve_cgl};
use crate::spec::{ExperimentSpec, FilterConfig, Method};

#[derive(Debug, Parser)]
#[command(name = "cgl", version, about = "Infer graph Laplacians from snapshots of consensus dynamics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a graph and simulate snapshots on it.
    Generate(GenerateArgs),
    /// Simulate snapshots on an existing graph.
    Simulate(SimulateArgs),
    /// Recover a Laplacian from a snapshot set.
    Infer(InferArgs),
    /// Score an estimate against a reference graph.
    Evaluate(EvaluateArgs),
    /// Run a (method × M × seed) grid.
    Benchmark(BenchmarkArgs),
    /// Convert an external data file into a snapshot set.
    Ingest(IngestArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Dataset spec (TOML or JSON).
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Print the resolved spec and exit.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Graph JSON, or edge CSV when the extension is `.csv`.
    #[arg(long)]
    pub graph: PathBuf,
    /// Simulation spec (TOML or JSON).
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Default)]
pub struct SolverOverrides {
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub eta: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long = "t-max")]
    pub t_max: Option<usize>,
    #[arg(long)]
    pub distance: Option<cgl_core::Distance>,
    #[arg(long = "reweight-iters")]
    pub reweight_iters: Option<usize>,
}

impl SolverOverrides {
    pub fn apply(&self, cfg: &mut SolverConfig) {
        if let Some(v) = self.beta {
            cfg.beta = v;
        }
        if let Some(v) = self.eta {
            cfg.eta = v;
        }
        if let Some(v) = self.epsilon {
            cfg.epsilon = Some(v);
        }
        if let Some(v) = self.t_max {
            cfg.t_max = v;
        }
        if let Some(v) = self.distance {
            cfg.distance = v;
        }
        if let Some(v) = self.reweight_iters {
            cfg.reweight_iters = v;
        }
    }
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// Snapshot matrix CSV.
    #[arg(long)]
    pub snapshots: PathBuf,
    /// Sidecar JSON; defaults to the snapshot path with a `.json` extension.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    #[arg(long, value_parser = parse_method)]
    pub method: Method,
    /// Solver config (TOML or JSON). May also carry `filter = [rates]`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated filter rates; overrides config and sidecar.
    #[arg(long, value_delimiter = ',')]
    pub filter: Option<Vec<f64>>,
    /// Allow baseline methods.
    #[arg(long)]
    pub baseline: bool,
    #[command(flatten)]
    pub overrides: SolverOverrides,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Dense estimate CSV.
    #[arg(long)]
    pub estimate: PathBuf,
    /// Reference graph JSON, or edge CSV.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub trace_normalize: bool,
    #[arg(long, default_value_t = EDGE_THRESHOLD)]
    pub threshold: f64,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Experiment spec (TOML or JSON).
    #[arg(long)]
    pub spec: PathBuf,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory; overrides the spec.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run only this seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Allow baseline methods.
    #[arg(long)]
    pub baseline: bool,
    #[command(flatten)]
    pub overrides: SolverOverrides,
    /// Print the resolved spec and exit.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IngestFormat {
    /// Rows are observations, columns are nodes; optional header.
    MatrixCsv,
    /// `state,senator,v1,...,vM` votes.
    RollCall,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long, value_enum)]
    pub format: IngestFormat,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Input variance recorded in the sidecar.
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

/// Snapshot generation parameters for an existing graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    pub filter: FilterConfig,
    pub m: usize,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default)]
    pub input: InputKind,
    #[serde(default)]
    pub seed: u64,
}

/// A graph to draw plus the snapshots to simulate on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub graph: GraphSpec,
    #[serde(default)]
    pub admissibility: Option<Admissibility>,
    pub filter: FilterConfig,
    pub m: usize,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default)]
    pub input: InputKind,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

/// Solver settings plus an optional known filter.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "serde_json::Map<String, serde_json::Value>")]
pub struct InferConfig {
    #[serde(default)]
    pub filter: Option<FilterSpec>,
    #[serde(flatten)]
    pub solver: SolverConfig,
}

impl TryFrom<serde_json::Map<String, serde_json::Value>> for InferConfig {
    type Error = serde_json::Error;

    fn try_from(mut map: serde_json::Map<String, serde_json::Value>) -> Result<Self, Self::Error> {
        let filter = map.remove("filter").map(serde_json::from_value).transpose()?;
        let solver = serde_json::from_value(serde_json::Value::Object(map))?;
        Ok(InferConfig { filter, solver })
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Config files: syntax errors are IO/parse failures, schema errors are config errors.
pub fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read(path)?;
    let format = ConfigFormat::from_extension(path.extension().and_then(|e| e.to_str()));
    io::parse_config(&text, format).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable value")
}

pub fn read_graph(path: &Path) -> Result<WeightedGraph, CliError> {
    let text = read(path)?;
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        io::parse_edge_csv(&text, None).map_err(|e| CliError::parse(path, e))
    } else {
        io::parse_graph_json(&text).map(|(g, _)| g).map_err(|e| CliError::parse(path, e))
    }
}

fn write_snapshots(out: &Path, s: &SnapshotSet, labels: Option<&[String]>) -> Result<(), CliError> {
    let (csv, json) = io::snapshots_to_files(s, labels).map_err(|e| CliError::parse(out, e))?;
    write(&out.join("snapshots.csv"), &csv)?;
    write(&out.join("snapshots.json"), &json)
}

fn simulate_on(l: &Laplacian, filter: &FilterConfig, m: usize, sigma: f64, input: InputKind, seed: u64) -> Result<SnapshotSet, CliError> {
    let source = filter.resolve(l)?;
    Ok(simulate_with_input(l, &source, m, sigma, input, signal_seed(seed))?)
}

pub fn generate(args: &GenerateArgs) -> Result<String, CliError> {
    let mut spec: DatasetSpec = read_config(&args.spec)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if args.dry_run {
        return Ok(to_json(&spec));
    }
    let (g, l) = draw_graph(&spec.graph, spec.admissibility.as_ref(), spec.seed)?;
    let meta = GraphMeta {
        seed: Some(spec.seed),
        model: Some(spec.graph.model.name().to_string()),
        params: Some(serde_json::to_value(&spec.graph).expect("serializable graph spec")),
    };
    let snapshots = simulate_on(&l, &spec.filter, spec.m, spec.sigma, spec.input, spec.seed)?;
    write(&args.out.join("graph.json"), &io::graph_to_json(&g, &meta).map_err(|e| CliError::parse(&args.out, e))?)?;
    write_snapshots(&args.out, &snapshots, None)?;
    Ok(format!("wrote graph ({} nodes, {} edges) and {} snapshots to {}", g.n(), g.edge_count(), snapshots.m(), args.out.display()))
}

pub fn simulate(args: &SimulateArgs) -> Result<String, CliError> {
    let mut spec: SimulateSpec = read_config(&args.spec)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let g = read_graph(&args.graph)?;
    let l = cgl_core::graphs::laplacian_of(&g);
    let snapshots = simulate_on(&l, &spec.filter, spec.m, spec.sigma, spec.input, spec.seed)?;
    write_snapshots(&args.out, &snapshots, None)?;
    Ok(format!("wrote {} snapshots to {}", snapshots.m(), args.out.display()))
}

pub fn load_snapshots(csv: &Path, sidecar: Option<&Path>) -> Result<(SnapshotSet, io::SnapshotSidecar), CliError> {
    let sidecar = sidecar.map(Path::to_path_buf).unwrap_or_else(|| csv.with_extension("json"));
    let csv_text = read(csv)?;
    let json = read(&sidecar)?;
    io::parse_snapshots(&csv_text, &json).map_err(|e| match e {
        FormatError::Json(_) => CliError::parse(&sidecar, e),
        other => CliError::parse(csv, other),
    })
}

fn write_solution(out: &Path, sol: &CglSolution) -> Result<(), CliError> {
    let report = validate_cgl(&sol.l_star, 1e-6)?;
    if !report.passed {
        return Err(CliError::Numeric(format!("estimate is not a valid CGL: {}", report.summary())));
    }
    write(&out.join("edges.csv"), &io::solution_edges_csv(sol, EDGE_THRESHOLD))?;
    write(&out.join("laplacian.csv"), &io::matrix_to_csv(&sol.l_star))?;
    write(&out.join("diagnostics.json"), &to_json(&sol.diagnostics))
}

pub fn infer(args: &InferArgs) -> Result<String, CliError> {
    if args.method.is_baseline() && !args.baseline {
        return Err(CliError::Usage(format!("{} is a baseline; pass --baseline to run it", args.method)));
    }
    let mut cfg: InferConfig = match &args.config {
        Some(p) => read_config(p)?,
        None => InferConfig::default(),
    };
    args.overrides.apply(&mut cfg.solver);
    cfg.solver.validate()?;
    let (snapshots, sidecar) = load_snapshots(&args.snapshots, args.sidecar.as_deref())?;
    let filter = match (&args.filter, cfg.filter.take()) {
        (Some(rates), _) => Some(FilterSpec::new(rates.clone())?),
        (None, Some(f)) => Some(f),
        (None, None) => match sidecar.provenance.map(|p| p.filters) {
            Some(FilterSource::Fixed { filter }) => Some(filter),
            _ => None,
        },
    };
    let cov = cgl_core::dynamics::sample_covariance(&snapshots);
    infer_from(&cov, args.method, filter.as_ref(), &cfg.solver, &args.out)
}

fn infer_from(
    cov: &SampleCovariance,
    method: Method,
    filter: Option<&FilterSpec>,
    cfg: &SolverConfig,
    out: &Path,
) -> Result<String, CliError> {
    if method == Method::InverseFilter {
        let f = filter.ok_or_else(|| CliError::Config("inversefilter needs a known filter".into()))?;
        let est = inverse_filter(cov, f)?;
        write(&out.join("l_hat.csv"), &io::matrix_to_csv(&est.l_hat))?;
        let json = io::spectral_estimate_to_json(&est, "l_hat.csv").map_err(|e| CliError::parse(out, e))?;
        write(&out.join("spectral.json"), &json)?;
        return Ok(format!("wrote inverse-filter estimate to {}", out.display()));
    }
    let sol = solve_cgl(method, cov, filter, cfg)?;
    write_solution(out, &sol)?;
    let edges = sol.support(EDGE_THRESHOLD).len();
    Ok(format!("{method}: {edges} edges, objective {:.6e}, written to {}", sol.diagnostics.objective, out.display()))
}

pub fn evaluate_cmd(args: &EvaluateArgs) -> Result<String, CliError> {
    let est = io::parse_matrix_csv(&read(&args.estimate)?).map_err(|e| CliError::parse(&args.estimate, e))?;
    let truth_graph = read_graph(&args.truth)?;
    let truth = cgl_core::graphs::laplacian_of(&truth_graph);
    if est.shape() != truth.matrix().shape() {
        return Err(CliError::Usage(format!("estimate is {:?} but the reference graph has {} nodes", est.shape(), truth.n())));
    }
    let report = evaluate(&est, truth.matrix(), args.trace_normalize, args.threshold)?;
    let json = to_json(&report);
    if let Some(out) = &args.out {
        write(out, &json)?;
    }
    Ok(json)
}

pub fn benchmark(args: &BenchmarkArgs) -> Result<String, CliError> {
    let mut spec: ExperimentSpec = read_config(&args.spec)?;
    if let Some(seed) = args.seed {
        spec.seeds = vec![seed];
    }
    args.overrides.apply(&mut spec.solver);
    if args.dry_run {
        spec.validate(args.baseline)?;
        return Ok(to_json(&spec));
    }
    let jobs = args.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let out_dir = args.out.clone().or_else(|| spec.output_dir.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("results"));
    let result = run_benchmark(&spec, jobs, args.baseline)?;
    let csv_path = out_dir.join(format!("{}_results.csv", spec.name));
    write(&csv_path, &results_csv(&result.rows))?;
    write(&out_dir.join(format!("{}_summary.json", spec.name)), &to_json(&result.summary))?;
    let failed = result.rows.iter().filter(|r| r.status != "ok").count();
    Ok(format!("{} cells ({} failed), results in {}", result.rows.len(), failed, csv_path.display()))
}

pub fn ingest(args: &IngestArgs) -> Result<String, CliError> {
    let text = read(&args.input)?;
    let (signals, labels) = match args.format {
        IngestFormat::MatrixCsv => io::ingest_matrix_csv(&text).map_err(|e| CliError::parse(&args.input, e))?,
        IngestFormat::RollCall => {
            let rc = io::parse_roll_call(&text).map_err(|e| CliError::parse(&args.input, e))?;
            (rc.signals, Some(rc.states))
        }
    };
    let set = SnapshotSet::new(signals, args.sigma2)?;
    write_snapshots(&args.out, &set, labels.as_deref())?;
    Ok(format!("wrote {} snapshots of {} nodes to {}", set.m(), set.n(), args.out.display()))
}

pub fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Simulate(a) => simulate(a),
        Command::Infer(a) => infer(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Ingest(a) => ingest(a),
    }
}
