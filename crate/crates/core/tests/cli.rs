use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qgraph::cli::{GraphFile, Report};

fn qgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgraph")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qgraph-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write_classical(name: &str, rows: &[&[f64]]) -> PathBuf {
    let path = scratch(name);
    let text = serde_json::json!({ "version": 1, "classical": rows }).to_string();
    fs::write(&path, text).unwrap();
    path
}

fn report(out: &Output) -> Report {
    serde_json::from_slice(&out.stdout).expect("report on stdout")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn exit_codes_follow_connectivity() {
    let path4 = write_classical("c4.json", &[&[0., 1., 0., 1.], &[1., 0., 1., 0.], &[0., 1., 0., 1.], &[1., 0., 1., 0.]]);
    let out = qgraph(&["connectivity", s(&path4), "--cross-check"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!(r.connectivity.unwrap().connected);

    let split = write_classical("split.json", &[&[0., 1., 0.], &[1., 0., 0.], &[0., 0., 0.]]);
    let out = qgraph(&["connectivity", s(&split)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(report(&out).connectivity.unwrap().certificate.is_some());
}

#[test]
fn invalid_input_exits_with_two() {
    let bad = scratch("bad.json");
    fs::write(&bad, "{\"version\": 1, \"classical\": [[0, 2], [2, 0]]}").unwrap();
    let out = qgraph(&["validate", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    let r = report(&out);
    assert!(!r.valid);
    assert!(r.error.is_some());

    let garbage = scratch("garbage.json");
    fs::write(&garbage, "{ not json").unwrap();
    assert_eq!(qgraph(&["spectrum", s(&garbage)]).status.code(), Some(2));
    assert_eq!(qgraph(&["spectrum", s(&scratch("missing.json"))]).status.code(), Some(2));
}

#[test]
fn bipartite_on_disconnected_input_is_an_error() {
    let split = write_classical("split2.json", &[&[0., 1., 0.], &[1., 0., 0.], &[0., 0., 0.]]);
    let out = qgraph(&["bipartite", s(&split)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_flag_writes_the_report() {
    let path = write_classical("k3.json", &[&[0., 1., 1.], &[1., 0., 1.], &[1., 1., 0.]]);
    let dest = scratch("k3-spectrum.json");
    let out = qgraph(&["spectrum", s(&path), "--out", s(&dest)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: Report = serde_json::from_str(&fs::read_to_string(&dest).unwrap()).unwrap();
    let spec = r.spectrum.unwrap();
    assert!((spec.operator_norm_gns - 2.0).abs() < 1e-12);
    assert_eq!(spec.regularity, Some(2.0));
}

#[test]
fn random_output_feeds_connectivity() {
    let dest = scratch("qg.json");
    let out = qgraph(&["random", "3", "4", "--seed", "7", "--out", s(&dest)]);
    assert_eq!(out.status.code(), Some(0));
    let file: GraphFile = serde_json::from_str(&fs::read_to_string(&dest).unwrap()).unwrap();
    assert_eq!(file.blocks, vec![3]);
    let out = qgraph(&["connectivity", s(&dest), "--method", "burnside"]);
    assert_eq!(out.status.code(), Some(0));
    let c = report(&out).connectivity.unwrap();
    assert_eq!(c.verdicts.len(), 1);
}

#[test]
fn reports_are_deterministic_apart_from_timing() {
    let path = write_classical("p3.json", &[&[0., 1., 0.], &[1., 0., 1.], &[0., 1., 0.]]);
    let strip = |out: Output| {
        let mut r = report(&out);
        r.timing_ms = 0.0;
        r
    };
    let a = strip(qgraph(&["components", s(&path)]));
    let b = strip(qgraph(&["components", s(&path)]));
    assert_eq!(a, b);
    assert_eq!(a.components.unwrap().count, 1);
}
