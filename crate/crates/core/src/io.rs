//! File formats. Every parser takes text and every writer returns text, so
//! callers decide where bytes live.
//!
//! * graph JSON: `{"n": 4, "edges": [[0, 1, 1.0], ...], "seed": 7, "model": "...", "params": {...}}`
//! * edge CSV: header `i,j,w`, one edge per line
//! * matrix CSV: no header, row-major, `{:.16e}` entries
//! * snapshot set: matrix CSV (`M` rows × `N` columns) plus a JSON sidecar
//! * roll-call CSV: header `state,senator,v1,...,vM`

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Provenance, SnapshotSet};
use crate::graphs::WeightedGraph;
use crate::solvers::{CglSolution, SolverConfig};
use crate::spectral::SpectralEstimate;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: expected {expected} columns, found {found}")]
    Schema { line: usize, expected: usize, found: usize },
    #[error("json: {0}")]
    Json(String),
    #[error("toml: {0}")]
    Toml(String),
    #[error("invalid content: {0}")]
    Invalid(String),
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        FormatError::Json(e.to_string())
    }
}

fn parse_f64(field: &str, line: usize) -> Result<f64, FormatError> {
    let v: f64 = field.trim().parse().map_err(|_| FormatError::Parse { line, message: format!("not a number: {field:?}") })?;
    if !v.is_finite() {
        return Err(FormatError::Parse { line, message: format!("non-finite value {field:?}") });
    }
    Ok(v)
}

fn parse_index(field: &str, line: usize) -> Result<usize, FormatError> {
    field.trim().parse().map_err(|_| FormatError::Parse { line, message: format!("not a node index: {field:?}") })
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes())
}

fn csv_error(e: csv::Error) -> FormatError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    FormatError::Parse { line, message: e.to_string() }
}

/// Records paired with their 1-based line numbers, skipping blank lines.
fn records(text: &str) -> Result<Vec<(usize, csv::StringRecord)>, FormatError> {
    let mut out = Vec::new();
    for rec in reader(text).into_records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        out.push((line, rec));
    }
    Ok(out)
}

// ---- graphs ----

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    #[serde(flatten)]
    meta: GraphMeta,
}

pub fn graph_to_json(g: &WeightedGraph, meta: &GraphMeta) -> Result<String, FormatError> {
    let file = GraphFile { n: g.n(), edges: g.edges().iter().map(|e| (e.i, e.j, e.w)).collect(), meta: meta.clone() };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn parse_graph_json(text: &str) -> Result<(WeightedGraph, GraphMeta), FormatError> {
    let file: GraphFile = serde_json::from_str(text)?;
    let g = WeightedGraph::new(file.n, file.edges).map_err(|e| FormatError::Invalid(e.to_string()))?;
    Ok((g, file.meta))
}

pub fn graph_to_edge_csv(g: &WeightedGraph) -> String {
    let mut out = String::from("i,j,w\n");
    for e in g.edges() {
        out.push_str(&format!("{},{},{:.16e}\n", e.i, e.j, e.w));
    }
    out
}

/// Edge-list CSV with an `i,j,w` header. Without `n` the node count is one
/// past the largest index.
pub fn parse_edge_csv(text: &str, n: Option<usize>) -> Result<WeightedGraph, FormatError> {
    let recs = records(text)?;
    let Some((hline, header)) = recs.first() else {
        return Err(FormatError::Parse { line: 1, message: "missing header".into() });
    };
    let names: Vec<&str> = header.iter().collect();
    if names != ["i", "j", "w"] {
        return Err(FormatError::Parse { line: *hline, message: format!("expected header i,j,w, found {names:?}") });
    }
    let mut edges = Vec::with_capacity(recs.len() - 1);
    for (line, rec) in &recs[1..] {
        if rec.len() != 3 {
            return Err(FormatError::Schema { line: *line, expected: 3, found: rec.len() });
        }
        edges.push((parse_index(&rec[0], *line)?, parse_index(&rec[1], *line)?, parse_f64(&rec[2], *line)?));
    }
    let n = n.unwrap_or_else(|| edges.iter().map(|&(i, j, _)| i.max(j) + 1).max().unwrap_or(0));
    WeightedGraph::new(n, edges).map_err(|e| FormatError::Invalid(e.to_string()))
}

// ---- dense matrices ----

pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::with_capacity(m.nrows() * m.ncols() * 24);
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&format!("{:.16e}", m[(r, c)]));
        }
        out.push('\n');
    }
    out
}

/// Headerless numeric CSV. Rows must all have the same length.
pub fn parse_matrix_csv(text: &str) -> Result<DMatrix<f64>, FormatError> {
    rows_to_matrix(&records(text)?)
}

/// Observation matrix (rows = observations, columns = nodes). A first row
/// that does not parse as numbers is taken as a header and returned.
pub fn ingest_matrix_csv(text: &str) -> Result<(DMatrix<f64>, Option<Vec<String>>), FormatError> {
    let recs = records(text)?;
    let header = recs.first().filter(|(_, r)| r.iter().any(|f| f.parse::<f64>().is_err()));
    match header {
        Some((_, h)) => {
            let names: Vec<String> = h.iter().map(str::to_string).collect();
            let expected = names.len();
            if let Some((line, r)) = recs[1..].iter().find(|(_, r)| r.len() != expected) {
                return Err(FormatError::Schema { line: *line, expected, found: r.len() });
            }
            Ok((rows_to_matrix(&recs[1..])?, Some(names)))
        }
        None => Ok((rows_to_matrix(&recs)?, None)),
    }
}

fn rows_to_matrix(recs: &[(usize, csv::StringRecord)]) -> Result<DMatrix<f64>, FormatError> {
    let Some((_, first)) = recs.first() else {
        return Err(FormatError::Invalid("no data rows".into()));
    };
    let cols = first.len();
    let mut data = Vec::with_capacity(recs.len() * cols);
    for (line, rec) in recs {
        if rec.len() != cols {
            return Err(FormatError::Schema { line: *line, expected: cols, found: rec.len() });
        }
        for field in rec.iter() {
            data.push(parse_f64(field, *line)?);
        }
    }
    Ok(DMatrix::from_row_slice(recs.len(), cols, &data))
}

// ---- snapshot sets ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotSidecar {
    pub m: usize,
    pub n: usize,
    pub sigma2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    /// Node labels, when ingested from a labelled source.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

/// Matrix CSV and sidecar JSON for a snapshot set.
pub fn snapshots_to_files(s: &SnapshotSet, labels: Option<&[String]>) -> Result<(String, String), FormatError> {
    let sidecar =
        SnapshotSidecar { m: s.m(), n: s.n(), sigma2: s.sigma2, provenance: s.provenance.clone(), labels: labels.map(<[String]>::to_vec) };
    Ok((matrix_to_csv(s.signals()), serde_json::to_string_pretty(&sidecar)?))
}

pub fn parse_snapshots(csv_text: &str, sidecar_json: &str) -> Result<(SnapshotSet, SnapshotSidecar), FormatError> {
    let sidecar: SnapshotSidecar = serde_json::from_str(sidecar_json)?;
    let signals = parse_matrix_csv(csv_text)?;
    if signals.shape() != (sidecar.m, sidecar.n) {
        return Err(FormatError::Invalid(format!(
            "sidecar declares {}x{} but the matrix is {}x{}",
            sidecar.m,
            sidecar.n,
            signals.nrows(),
            signals.ncols()
        )));
    }
    let mut set = SnapshotSet::new(signals, sidecar.sigma2).map_err(|e| FormatError::Invalid(e.to_string()))?;
    set.provenance = sidecar.provenance.clone();
    Ok((set, sidecar))
}

// ---- roll-call votes ----

/// Per-state vote signals: one row per vote, one column per state.
#[derive(Debug, Clone, PartialEq)]
pub struct RollCall {
    pub states: Vec<String>,
    pub signals: DMatrix<f64>,
}

/// `yea`/`yes`/`y`/`1` → 1, `nay`/`no`/`n`/`-1` → −1, anything else → 0.
pub fn encode_vote(field: &str) -> f64 {
    match field.trim().to_ascii_lowercase().as_str() {
        "yea" | "yes" | "y" | "1" => 1.0,
        "nay" | "no" | "n" | "-1" => -1.0,
        _ => 0.0,
    }
}

/// Roll-call table with header `state,senator,v1,...,vM`. Senators of the
/// same state are summed into one node; states are sorted by name.
pub fn parse_roll_call(text: &str) -> Result<RollCall, FormatError> {
    let recs = records(text)?;
    let Some((hline, header)) = recs.first() else {
        return Err(FormatError::Parse { line: 1, message: "missing header".into() });
    };
    if header.len() < 3 || !header[0].eq_ignore_ascii_case("state") || !header[1].eq_ignore_ascii_case("senator") {
        return Err(FormatError::Parse { line: *hline, message: "expected header state,senator,v1,...".into() });
    }
    let votes = header.len() - 2;
    let mut per_state: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (line, rec) in &recs[1..] {
        if rec.len() != header.len() {
            return Err(FormatError::Schema { line: *line, expected: header.len(), found: rec.len() });
        }
        let state = rec[0].to_string();
        if state.is_empty() {
            return Err(FormatError::Parse { line: *line, message: "empty state name".into() });
        }
        let acc = per_state.entry(state).or_insert_with(|| vec![0.0; votes]);
        for (k, field) in rec.iter().skip(2).enumerate() {
            acc[k] += encode_vote(field);
        }
    }
    if per_state.is_empty() {
        return Err(FormatError::Invalid("no senators".into()));
    }
    let n = per_state.len();
    let signals = DMatrix::from_fn(votes, n, |k, s| per_state.values().nth(s).map_or(0.0, |v| v[k]));
    Ok(RollCall { states: per_state.into_keys().collect(), signals })
}

// ---- solver outputs and configs ----

#[derive(Serialize)]
struct SpectralEstimateFile<'a> {
    sigma2_hat: f64,
    lambda_hat: &'a [f64],
    l_hat: &'a str,
}

/// JSON for a spectral estimate; the dense estimate lives in a separate CSV
/// referenced by `l_hat_path`.
pub fn spectral_estimate_to_json(est: &SpectralEstimate, l_hat_path: &str) -> Result<String, FormatError> {
    let file = SpectralEstimateFile { sigma2_hat: est.sigma2_hat, lambda_hat: &est.lambda_hat, l_hat: l_hat_path };
    Ok(serde_json::to_string_pretty(&file)?)
}

/// Edges with weight above `threshold`, as `i,j,weight` CSV.
pub fn solution_edges_csv(sol: &CglSolution, threshold: f64) -> String {
    let mut out = String::from("i,j,weight\n");
    for (i, j, w) in sol.support(threshold) {
        out.push_str(&format!("{i},{j},{w:.16e}\n"));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigFormat {
    Toml,
    Json,
}

impl ConfigFormat {
    /// From a file extension; anything other than `json` is TOML.
    pub fn from_extension(ext: Option<&str>) -> Self {
        match ext {
            Some(e) if e.eq_ignore_ascii_case("json") => ConfigFormat::Json,
            _ => ConfigFormat::Toml,
        }
    }
}

pub fn parse_config<T: serde::de::DeserializeOwned>(text: &str, format: ConfigFormat) -> Result<T, FormatError> {
    match format {
        ConfigFormat::Json => Ok(serde_json::from_str(text)?),
        ConfigFormat::Toml => toml::from_str(text).map_err(|e| FormatError::Toml(e.to_string())),
    }
}

pub fn parse_solver_config(text: &str, format: ConfigFormat) -> Result<SolverConfig, FormatError> {
    let cfg: SolverConfig = parse_config(text, format)?;
    cfg.validate().map_err(|e| FormatError::Invalid(e.to_string()))?;
    Ok(cfg)
}
