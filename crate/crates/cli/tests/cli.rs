use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn suppes(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_suppes"))
        .current_dir(dir)
        .env_remove("SUPPES_SEED")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = suppes(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn synth_tree(dir: &Path, events: &str, rows: &str, seed: &str) {
    ok(
        dir,
        &["synth", "--seed", seed, "--events", events, "--rows", rows, "--truth-out", "truth.json", "--data-out", "data.csv"],
    );
}

#[test]
fn eval_of_a_model_against_itself_is_exact() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    synth_tree(d, "8", "2000", "3");
    ok(d, &["caprese", "--input", "data.csv", "--lenient", "--out", "model.json"]);
    ok(d, &["eval", "--inferred", "model.json", "--truth", "model.json", "--out", "report.json"]);
    let report = json(d.join("report.json"));
    assert_eq!(report["hamming"], 0);
    assert_eq!(report["ted"], 0);
}

#[test]
fn caprese_output_is_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    synth_tree(d, "12", "500", "9");
    ok(d, &["caprese", "--input", "data.csv", "--lenient", "--out", "a.json"]);
    ok(d, &["caprese", "--input", "data.csv", "--lenient", "--out", "b.json"]);
    assert_eq!(std::fs::read(d.join("a.json")).unwrap(), std::fs::read(d.join("b.json")).unwrap());
    assert_eq!(std::fs::read(d.join("a.dot")).unwrap(), std::fs::read(d.join("b.dot")).unwrap());
}

#[test]
fn synth_caprese_eval_pipeline_recovers_a_ten_event_tree() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    synth_tree(d, "10", "5000", "11");
    ok(d, &["caprese", "--input", "data.csv", "--lambda", "0.01", "--lenient", "--out", "model.json"]);
    ok(d, &["eval", "--inferred", "model.json", "--truth", "truth.json", "--out", "report.json"]);
    let report = json(d.join("report.json"));
    assert_eq!(report["ted"], 0, "{report}");
    assert_eq!(report["hamming"], 0);
}

#[test]
fn dot_output_matches_the_json_edges() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    synth_tree(d, "10", "1000", "5");
    ok(d, &["caprese", "--input", "data.csv", "--lenient", "--out", "model.json"]);
    let doc = suppes_core::ModelDoc::from_json(&std::fs::read_to_string(d.join("model.json")).unwrap()).unwrap();
    let dot = std::fs::read_to_string(d.join("model.dot")).unwrap();
    assert_eq!(suppes_core::export::parse_dot_edges(&dot).unwrap(), doc.edge_set().edges);
}

#[test]
fn stochastic_commands_are_seed_deterministic() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let runs: Vec<Vec<&str>> = vec![
        vec!["synth", "--kind", "connected-dag", "--events", "8", "--rows", "300", "--noise", "0.05", "--truth-out", "t.json", "--data-out", "x.csv"],
        vec!["capri", "--input", "x.csv", "--lenient", "--nboot", "20", "--out-dir", "capri"],
        vec!["bootstrap", "--input", "x.csv", "--algo", "caprese", "--kind", "nonparametric", "--iterations", "10", "--out", "b.json"],
        vec!["sbcn", "--group", "sex=Female", "--walks", "500", "--out", "s.json", "--scores-out", "w.json"],
        vec!["sweep", "--instances", "2", "--rows", "50,100", "--noise", "0,0.1", "--out", "sweep.csv"],
    ];
    let outputs = ["t.json", "x.csv", "capri/capri-bic.json", "capri/capri-aic.json", "b.json", "s.json", "w.json", "sweep.csv"];
    let mut snapshots = Vec::new();
    for seed in ["7", "7"] {
        for args in &runs {
            let out = Command::new(env!("CARGO_BIN_EXE_suppes"))
                .current_dir(d)
                .env("SUPPES_SEED", seed)
                .args(args)
                .output()
                .unwrap();
            assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        }
        snapshots.push(outputs.map(|f| std::fs::read(d.join(f)).unwrap()));
    }
    assert_eq!(snapshots[0], snapshots[1]);

    // the flag overrides the environment
    ok(d, &["synth", "--seed", "8", "--events", "8", "--truth-out", "t8.json"]);
    assert_ne!(std::fs::read(d.join("t8.json")).unwrap(), std::fs::read(d.join("t.json")).unwrap());
}

#[test]
fn exit_codes_separate_usage_data_and_success() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    assert_eq!(suppes(d, &["caprese"]).status.code(), Some(1));
    assert_eq!(suppes(d, &["caprese", "--input", "data.csv", "--lambda", "2", "--out", "m.json"]).status.code(), Some(2));

    std::fs::write(d.join("dup.csv"), "sample,a,b,c\ns1,1,1,0\ns2,0,0,1\ns3,1,1,1\n").unwrap();
    let out = suppes(d, &["validate", "--input", "dup.csv", "--out", "report.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(json(d.join("report.json"))["duplicates"].as_array().is_some_and(|g| !g.is_empty()));
    assert_eq!(suppes(d, &["caprese", "--input", "dup.csv", "--out", "m.json"]).status.code(), Some(2));

    std::fs::write(d.join("ok.csv"), "sample,a,b\ns1,1,0\ns2,0,1\ns3,1,1\ns4,0,0\n").unwrap();
    assert_eq!(suppes(d, &["validate", "--input", "ok.csv"]).status.code(), Some(0));
    assert_eq!(
        suppes(d, &["caprese", "--input", "ok.csv", "--lambda", "1.5", "--out", "m.json"]).status.code(),
        Some(1)
    );
}

#[test]
fn eval_accepts_ground_truth_on_both_sides() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["synth", "--seed", "4", "--kind", "connected-dag", "--events", "6", "--truth-out", "t.json"]);
    let out = ok(d, &["eval", "--inferred", "t.json", "--truth", "t.json"]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["hamming"], 0);
    assert_eq!(report["precision"], 1.0);
}
