//! End-to-end runs of the `dirichlet` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

const BIN: &str = env!("CARGO_BIN_EXE_dirichlet");

fn write_config(dir: &Path, name: &str, config: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

fn dirichlet(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn run(config: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", config.to_str().unwrap()];
    args.extend_from_slice(extra);
    dirichlet(&args)
}

fn graph_config() -> Value {
    json!({
        "version": 1,
        "seed": 11,
        "space": {"kind": "uniform", "n": 5},
        "energy": {"kind": "graph_p_energy", "p": 2, "graph": {"kind": "path"}},
        "suites": [
            {"check": "check_lattice_contraction", "sampler": {"strategy": {"kind": "iid_gaussian"}, "count": 30}},
            {"check": "check_resolvent_identity", "sampler": {"strategy": {"kind": "iid_gaussian"}, "count": 10}, "pairs": [[0.1, 1.0]]},
            {"check": "check_order_preserving_operator", "sampler": {"strategy": {"kind": "ordered_pairs"}, "count": 10}, "operator": {"kind": "resolvent", "lambda": 0.5}}
        ]
    })
}

#[test]
fn reports_are_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "graph.json", &graph_config());
    let report = dir.path().join("graph.report.json");
    assert_eq!(run(&config, &["--workers", "1"]).status.code(), Some(0));
    let first = std::fs::read(&report).unwrap();
    assert_eq!(run(&config, &["--workers", "4"]).status.code(), Some(0));
    assert_eq!(first, std::fs::read(&report).unwrap());

    let parsed: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(parsed["schema"], "dirichlet-report.v1");
    assert_eq!(parsed["verdict"], "pass");
    assert_eq!(parsed["suites"].as_array().unwrap().len(), 3);
    assert_eq!(parsed["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn failing_checks_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "version": 1,
        "seed": 1,
        "space": {"kind": "uniform", "n": 2},
        "energy": {"kind": "luxembourg", "base": {"kind": "squared_l2"}},
        "suites": [{
            "check": "check_lattice_contraction",
            "sampler": {"strategy": {"kind": "explicit", "samples": [{"u": [1.0, -1.0], "v": [0.0, 0.0]}]}}
        }]
    });
    let path = write_config(dir.path(), "chill.json", &config);
    let out = run(&path, &["--csv-dir", dir.path().join("csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let report: Value = serde_json::from_slice(&std::fs::read(dir.path().join("chill.report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "fail");
    let csv = std::fs::read_to_string(dir.path().join("csv/00_check_lattice_contraction.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn empty_suites_pass() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = graph_config();
    config["suites"] = json!([]);
    let path = write_config(dir.path(), "empty.json", &config);
    assert_eq!(run(&path, &[]).status.code(), Some(0));
}

#[test]
fn unknown_fields_are_config_errors_with_a_path() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = graph_config();
    config["suites"][0]["sampler"]["bogus"] = json!(1);
    let path = write_config(dir.path(), "bad.json", &config);
    let out = run(&path, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("suites[0].sampler.bogus"));
    assert!(!dir.path().join("bad.report.json").exists());
}

#[test]
fn malformed_and_missing_configs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{ not json").unwrap();
    assert_eq!(run(&path, &[]).status.code(), Some(1));
    assert_eq!(run(&dir.path().join("absent.json"), &[]).status.code(), Some(1));

    let mut config = graph_config();
    config["version"] = json!(2);
    let path = write_config(dir.path(), "v2.json", &config);
    assert_eq!(run(&path, &[]).status.code(), Some(1));
}

#[test]
fn invalid_check_parameters_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = graph_config();
    config["suites"] = json!([{"check": "check_resolvent_identity", "sampler": {"strategy": {"kind": "iid_gaussian"}, "count": 3}, "pairs": [[-1.0, 1.0]]}]);
    let path = write_config(dir.path(), "neg.json", &config);
    assert_eq!(run(&path, &[]).status.code(), Some(1));
}

#[test]
fn flow_trace_writes_the_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "version": 1,
        "seed": 3,
        "energy": {"kind": "r2_quadratic_box"},
        "suites": [],
        "trace": {"initial": [0.9, 0.6], "lambdas": [0.1, 0.01]}
    });
    let path = write_config(dir.path(), "trace.json", &config);
    let out_path = dir.path().join("trace.csv");
    let out = dirichlet(&["flow-trace", path.to_str().unwrap(), "--t", "0:1:0.25", "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_path).unwrap();
    let rows: Vec<Vec<f64>> = csv.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert!(csv.starts_with("t,u_"));
    assert_eq!(rows.len(), 5);
    assert_eq!(&rows[0][1..3], &[0.9, 0.6]);
    assert!(rows.windows(2).all(|w| w[1][3] <= w[0][3] + 1e-12), "envelope must decrease along the flow");
}

#[test]
fn flow_trace_without_a_trace_section_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "plain.json", &graph_config());
    let out = dirichlet(&["flow-trace", path.to_str().unwrap(), "--out", dir.path().join("x.csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn list_builtins_names_the_catalog() {
    let out = dirichlet(&["list-builtins"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["graph_p_energy", "luxembourg", "check_markov_suite", "check_invariance", "psi_alpha", "disjoint_support_pairs"] {
        assert!(text.contains(name), "missing {name}");
    }
}

#[test]
fn shipped_configs_parse() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in std::fs::read_dir(configs).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        dirichlet_core::cli::parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn published_schema_matches_the_config_types() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schema/run-config.v1.json");
    let generated = dirichlet_core::cli::config_schema();
    if std::env::var_os("UPDATE_SCHEMA").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &generated).unwrap();
    }
    let published = std::fs::read_to_string(&path).expect("run with UPDATE_SCHEMA=1 to publish the schema");
    assert_eq!(published, generated, "schema is stale; rerun with UPDATE_SCHEMA=1");
}
