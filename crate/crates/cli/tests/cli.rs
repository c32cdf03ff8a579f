use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cgl_core::graphs::validate_cgl;
use cgl_core::io::{parse_graph_json, parse_matrix_csv, parse_snapshots};
use tempfile::TempDir;

const DATASET: &str = r#"
m = 400
seed = 5
[graph]
n = 8
model = "erdos_renyi"
p = 0.5
[filter]
kind = "relative"
fractions = [0.7, 0.8, 0.9]
"#;

fn cgl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cgl")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn put(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn generate(dir: &Path) -> String {
    let spec = put(dir, "data.toml", DATASET);
    let out = dir.join("data");
    let o = cgl(&["generate", "--spec", &spec, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    out.to_str().unwrap().to_string()
}

#[test]
fn generate_is_deterministic_and_round_trips() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let da = generate(a.path());
    let db = generate(b.path());
    for f in ["graph.json", "snapshots.csv", "snapshots.json"] {
        let x = fs::read(Path::new(&da).join(f)).unwrap();
        let y = fs::read(Path::new(&db).join(f)).unwrap();
        assert_eq!(x, y, "{f} differs between runs");
    }
    let (g, meta) = parse_graph_json(&fs::read_to_string(Path::new(&da).join("graph.json")).unwrap()).unwrap();
    assert_eq!(g.n(), 8);
    assert_eq!(meta.seed, Some(5));
    let csv = fs::read_to_string(Path::new(&da).join("snapshots.csv")).unwrap();
    let json = fs::read_to_string(Path::new(&da).join("snapshots.json")).unwrap();
    let (s, side) = parse_snapshots(&csv, &json).unwrap();
    assert_eq!((s.m(), s.n(), side.m, side.n), (400, 8, 400, 8));
}

#[test]
fn unknown_model_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let spec = put(dir.path(), "bad.toml", &DATASET.replace("erdos_renyi", "small_world_magic"));
    let o = cgl(&["generate", "--spec", &spec, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn dry_run_writes_nothing() {
    let dir = TempDir::new().unwrap();
    let spec = put(dir.path(), "data.toml", DATASET);
    let out = dir.path().join("never");
    let o = cgl(&["generate", "--spec", &spec, "--out", out.to_str().unwrap(), "--dry-run", "--seed", "11"]);
    assert_eq!(code(&o), 0);
    assert!(!out.exists());
    let echoed: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(echoed["seed"], 11);
}

#[test]
fn infer_writes_valid_laplacians() {
    let dir = TempDir::new().unwrap();
    let data = generate(dir.path());
    let snaps = format!("{data}/snapshots.csv");
    for method in ["nearestcgl", "orderedspectemp", "hybrid"] {
        let out = dir.path().join(method);
        let o = cgl(&["infer", "--snapshots", &snaps, "--method", method, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{method}: {}", stderr(&o));
        let l = parse_matrix_csv(&fs::read_to_string(out.join("laplacian.csv")).unwrap()).unwrap();
        assert!(validate_cgl(&l, 1e-6).unwrap().passed, "{method}");
        let diag: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("diagnostics.json")).unwrap()).unwrap();
        assert!(diag["objective"].is_number());
        let edges = fs::read_to_string(out.join("edges.csv")).unwrap();
        assert!(edges.starts_with("i,j,weight"));
    }

    let out = dir.path().join("raw");
    let o = cgl(&["infer", "--snapshots", &snaps, "--method", "inversefilter", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("l_hat.csv").exists() && out.join("spectral.json").exists());

    let est = dir.path().join("nearestcgl/laplacian.csv");
    let truth = format!("{data}/graph.json");
    let o = cgl(&["evaluate", "--estimate", est.to_str().unwrap(), "--truth", &truth]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report["rel_error"].as_f64().unwrap() < 1.0);
    assert!((0.0..=1.0).contains(&report["f_score"].as_f64().unwrap()));
}

#[test]
fn baselines_need_the_flag() {
    let dir = TempDir::new().unwrap();
    let data = generate(dir.path());
    let snaps = format!("{data}/snapshots.csv");
    let out = dir.path().join("b");
    let o = cgl(&["infer", "--snapshots", &snaps, "--method", "spectemp-leigvec", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let o = cgl(&["infer", "--snapshots", &snaps, "--method", "spectemp-leigvec", "--baseline", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn exact_fit_on_sampled_data_is_infeasible() {
    let dir = TempDir::new().unwrap();
    let data = generate(dir.path());
    let snaps = format!("{data}/snapshots.csv");
    let out = dir.path().join("x");
    let o = cgl(&["infer", "--snapshots", &snaps, "--method", "orderedspectemp", "--epsilon", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn ragged_snapshots_name_the_line() {
    let dir = TempDir::new().unwrap();
    let data = generate(dir.path());
    let path = Path::new(&data).join("snapshots.csv");
    let mut lines: Vec<String> = fs::read_to_string(&path).unwrap().lines().map(String::from).collect();
    lines[3] = lines[3].rsplit_once(',').unwrap().0.to_string();
    fs::write(&path, lines.join("\n")).unwrap();
    let o = cgl(&["infer", "--snapshots", path.to_str().unwrap(), "--method", "hybrid", "--out", data.as_str()]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn ingest_formats() {
    let dir = TempDir::new().unwrap();
    let votes = put(dir.path(), "votes.csv", "state,senator,v1,v2\nOH,a,yea,nay\nOH,b,yea,nay\nAK,c,nay,yea\nAK,d,abstain,nay\n");
    let out = dir.path().join("rc");
    let o = cgl(&["ingest", "--format", "roll-call", "--input", &votes, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("snapshots.csv")).unwrap();
    let json = fs::read_to_string(out.join("snapshots.json")).unwrap();
    let (s, side) = parse_snapshots(&csv, &json).unwrap();
    assert_eq!(side.labels.unwrap(), vec!["AK".to_string(), "OH".to_string()]);
    // Rows are votes, columns are states: OH has two yeas on the first vote.
    assert_eq!(s.signals()[(0, 1)], 2.0);
    assert_eq!(s.signals()[(0, 0)], -1.0);
    assert_eq!(s.signals()[(1, 0)], 0.0);

    let m = put(dir.path(), "m.csv", "a,b\n1,2\n3,4\n5,6\n");
    let out = dir.path().join("mat");
    let o = cgl(&["ingest", "--format", "matrix-csv", "--input", &m, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (s, _) =
        parse_snapshots(&fs::read_to_string(out.join("snapshots.csv")).unwrap(), &fs::read_to_string(out.join("snapshots.json")).unwrap())
            .unwrap();
    assert_eq!((s.m(), s.n()), (3, 2));
}

const EXPERIMENT: &str = r#"
name = "tiny"
m = [40, 80]
seeds = [1, 2, 3]
methods = ["nearestcgl", "hybrid"]
[graph]
n = 6
model = "erdos_renyi"
p = 0.5
[filter]
kind = "relative"
fractions = [0.7, 0.8, 0.9]
[solver]
t_max = 4
"#;

fn strip_wall_ms(csv: &str) -> String {
    csv.lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f[5] = "";
            f.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn benchmark_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let spec = put(dir.path(), "exp.toml", EXPERIMENT);
    let mut outputs = Vec::new();
    for (run, jobs) in [("a", "1"), ("b", "2")] {
        let out = dir.path().join(run);
        let o = cgl(&["benchmark", "--spec", &spec, "--jobs", jobs, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        outputs.push(fs::read_to_string(out.join("tiny_results.csv")).unwrap());
        assert!(out.join("tiny_summary.json").exists());
    }
    assert!(outputs[0].starts_with("method,M,seed,rel_error,f_score,wall_ms"));
    assert_eq!(outputs[0].lines().count(), 1 + 2 * 2 * 3);
    assert_eq!(strip_wall_ms(&outputs[0]), strip_wall_ms(&outputs[1]));
}

#[test]
fn empty_grid_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let spec = put(dir.path(), "exp.toml", &EXPERIMENT.replace("m = [40, 80]", "m = []"));
    let o = cgl(&["benchmark", "--spec", &spec, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let spec = put(dir.path(), "exp2.toml", &EXPERIMENT.replace("\"hybrid\"", "\"structglasso\""));
    let o = cgl(&["benchmark", "--spec", &spec, "--dry-run"]);
    assert_eq!(code(&o), 2);
}
