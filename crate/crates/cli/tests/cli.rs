//! End-to-end tests of the `gapnav` binary: exit codes, CSV schema,
//! determinism of emitted artifacts, and SVG rendering.

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_gapnav");

const HEADER: &str =
    "seed,outcome,sim_time_s,path_length_m,min_h,t_gap_ms,t_path_ms,t_zbf_ms,t_nmpc_ms,t_qp_ms";

fn gapnav(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn tiny_config(dir: &Path) -> String {
    let path = dir.join("campaign.json");
    let cfg = r#"{
        "kind": "dense",
        "n_runs": 2,
        "seed_base": 11,
        "density": 0.03,
        "episode": { "timeout": 60.0 }
    }"#;
    std::fs::write(&path, cfg).unwrap();
    path.to_str().unwrap().to_string()
}

/// CSV rows with the wall-clock timing columns stripped.
fn stable_csv(csv: &str) -> String {
    csv.lines()
        .map(|l| l.split(',').take(5).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn help_succeeds_and_bad_arguments_are_config_errors() {
    assert_eq!(code(&gapnav(&["--help"])), 0);
    assert_eq!(code(&gapnav(&["run", "--no-such-flag"])), 1);
    assert_eq!(code(&gapnav(&["frobnicate"])), 1);
}

#[test]
fn campaign_writes_schema_stable_deterministic_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");

    let run_a = gapnav(&["run", "--config", &config, "--out", out_a.to_str().unwrap()]);
    assert_eq!(code(&run_a), 0, "stderr: {}", String::from_utf8_lossy(&run_a.stderr));
    let run_b = gapnav(&["run", "--config", &config, "--out", out_b.to_str().unwrap()]);
    assert_eq!(code(&run_b), 0);

    let csv_a = std::fs::read_to_string(out_a.join("runs.csv")).unwrap();
    let csv_b = std::fs::read_to_string(out_b.join("runs.csv")).unwrap();
    let mut lines = csv_a.lines();
    assert_eq!(lines.next(), Some(HEADER));
    assert_eq!(lines.count(), 2);
    assert_eq!(stable_csv(&csv_a), stable_csv(&csv_b));

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_a.join("summary.json")).unwrap())
            .unwrap();
    let rate = |k: &str| summary[k].as_f64().unwrap();
    let total = rate("success_rate") + rate("abort_rate") + rate("collision_rate");
    assert!((total - 1.0).abs() < 1e-12);
    assert_eq!(summary["n_runs"].as_u64(), Some(2));
    assert!(summary["hardware_note"].as_str().unwrap().contains("wall-clock"));

    // The summary also lands on stdout.
    let stdout: serde_json::Value = serde_json::from_slice(&run_a.stdout).unwrap();
    assert_eq!(stdout["n_runs"].as_u64(), Some(2));
}

#[test]
fn malformed_and_invalid_configs_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad_json = dir.path().join("bad.json");
    std::fs::write(&bad_json, "{ not json").unwrap();
    assert_eq!(code(&gapnav(&["run", "--config", bad_json.to_str().unwrap()])), 1);

    let zero_runs = dir.path().join("zero.json");
    std::fs::write(&zero_runs, r#"{ "n_runs": 0 }"#).unwrap();
    assert_eq!(code(&gapnav(&["run", "--config", zero_runs.to_str().unwrap()])), 1);

    // Infeasible obstacle density is a configuration problem, not I/O.
    let dense = dir.path().join("dense.json");
    std::fs::write(&dense, r#"{ "n_runs": 1, "density": 5.0 }"#).unwrap();
    assert_eq!(code(&gapnav(&["run", "--config", dense.to_str().unwrap()])), 1);
}

#[test]
fn unwritable_output_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path());
    // A path routed through an existing *file* cannot become a directory.
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, "x").unwrap();
    let out = blocker.join("nested");
    let run = gapnav(&["run", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&run), 2);
}

#[test]
fn episode_emits_a_parseable_trace_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path());
    let trace_path = dir.path().join("trace.jsonl");

    let run = gapnav(&[
        "episode",
        "--config",
        &config,
        "--seed",
        "11",
        "--out",
        trace_path.to_str().unwrap(),
        "--svg",
    ]);
    assert_eq!(code(&run), 0, "stderr: {}", String::from_utf8_lossy(&run.stderr));

    let trace = std::fs::read_to_string(&trace_path).unwrap();
    let events: Vec<serde_json::Value> =
        trace.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(events.first().unwrap()["event"], "world");
    assert_eq!(events.last().unwrap()["event"], "end");
    assert!(events.iter().any(|e| e["event"] == "step"));

    let svg = std::fs::read_to_string(trace_path.with_extension("svg")).unwrap();
    assert!(svg.starts_with("<svg"));

    // Same seed, same config: stdout trace matches the file bytes.
    let again = gapnav(&["episode", "--config", &config, "--seed", "11"]);
    assert_eq!(code(&again), 0);
    assert_eq!(String::from_utf8_lossy(&again.stdout), trace);
}

#[test]
fn render_consumes_episode_traces() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path());
    let trace_path = dir.path().join("trace.jsonl");
    let run = gapnav(&[
        "episode", "--config", &config, "--seed", "12", "--out",
        trace_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0);

    let svg_path = dir.path().join("out.svg");
    let render = gapnav(&[
        "render",
        trace_path.to_str().unwrap(),
        "--out",
        svg_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&render), 0);
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));

    // Missing input file is an I/O failure.
    let missing = gapnav(&["render", dir.path().join("nope.jsonl").to_str().unwrap()]);
    assert_eq!(code(&missing), 2);

    // Existing but meaningless input is a malformed-trace config error.
    let junk = dir.path().join("junk.jsonl");
    std::fs::write(&junk, "{\"event\":\"mystery\"}\n").unwrap();
    assert_eq!(code(&gapnav(&["render", junk.to_str().unwrap()])), 1);
}

#[test]
fn zbf_demo_renders_a_contour() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path());
    let out = dir.path().join("demo.svg");
    let run = gapnav(&[
        "zbf-demo", "--config", &config, "--seed", "3", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "stderr: {}", String::from_utf8_lossy(&run.stderr));
    let svg = std::fs::read_to_string(&out).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("#d93025"), "zero level-set drawn");
}
