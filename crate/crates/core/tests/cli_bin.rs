//! End-to-end checks of the installed binary: exit codes, report text,
//! and byte determinism through a real process boundary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tgalg"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn tmp_file(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("tgalg-bin-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const LOOP_GRAPH: &str =
    "[[vertices]]\nid = \"v\"\n[[edges]]\nid = \"e\"\nsrc = \"v\"\nrng = \"v\"\n";
const DOUBLE_LOOP: &str = "[[vertices]]\nid = \"v\"\n\
    [[edges]]\nid = \"e\"\nsrc = \"v\"\nrng = \"v\"\n\
    [[edges]]\nid = \"f\"\nsrc = \"v\"\nrng = \"v\"\n";

#[test]
fn decide_exit_codes() {
    let loop_graph = tmp_file("loop.graph", LOOP_GRAPH);
    let out = run(&[
        "decide-finiteness",
        "--graph",
        loop_graph.to_str().unwrap(),
        "--exact",
        "--fail-on-infinite",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("consistent-with-finite"), "{text}");

    let double = tmp_file("double.graph", DOUBLE_LOOP);
    let out = run(&[
        "decide-finiteness",
        "--graph",
        double.to_str().unwrap(),
        "--exact",
        "--fail-on-infinite",
    ]);
    assert_eq!(out.status.code(), Some(1));

    // Without the flag an infinite verdict still exits 0.
    let out = run(&[
        "decide-finiteness",
        "--graph",
        double.to_str().unwrap(),
        "--exact",
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn usage_and_input_errors() {
    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["validate", "--graph", "/definitely/missing.graph"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("failed to read"), "{err}");

    let bad = tmp_file("bad.graph", "[[vertices]]\nid = \"v\"\nbogus = 1\n");
    let out = run(&["validate", "--graph", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn discretize_pipes_into_decide() {
    let dir = std::env::temp_dir().join("tgalg-bin-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let graph = dir.join("shift25.graph");
    let out = run(&[
        "discretize",
        "--compactified-shift",
        "25",
        "--out",
        graph.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&[
        "decide-finiteness",
        "--graph",
        graph.to_str().unwrap(),
        "--eps",
        "0.05",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["verdict"], "infinite");
    assert!(json["scans"][0]["failing"]
        .as_array()
        .unwrap()
        .iter()
        .any(|v| v == "0"));
}

#[test]
fn json_output_is_byte_deterministic_across_processes() {
    let graph = tmp_file("det.graph", DOUBLE_LOOP);
    let args = [
        "orbit-rep",
        "--graph",
        graph.to_str().unwrap(),
        "--cycle",
        "e",
        "--window",
        "-2,2",
        "--battery",
        "6",
        "--seed",
        "31",
        "--format",
        "json",
    ];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
}
