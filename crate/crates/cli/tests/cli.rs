use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twistlab")).args(args).env_remove("TWISTLAB_THREADS").output().unwrap()
}

fn stdout(args: &[&str]) -> String {
    let o = run(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

const VERT_2X2: &str = r#"{"disk":[[0,0],[0,1],[1,0],[1,1]],"floors":[{"down":[],"horiz":[],"up":[[0,0],[0,1],[1,0],[1,1]]},{"down":[[0,0],[0,1],[1,0],[1,1]],"horiz":[],"up":[]}]}"#;

#[test]
fn count_two_by_two() {
    assert_eq!(stdout(&["count", "2x2", "-N", "2"]), "9\n");
    assert_eq!(stdout(&["count", "2x2", "-N", "2", "--dfs"]), "9\n");
}

#[test]
fn twist_and_render_of_vertical() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("v.json");
    fs::write(&p, VERT_2X2).unwrap();
    let p = p.to_str().unwrap();
    assert_eq!(stdout(&["twist", p]), "0\n");
    assert_eq!(stdout(&["render", p]), "UU DD\nUU DD\n");
    assert!(stdout(&["render", p, "--svg"]).starts_with("<svg"));
    let flips: serde_json::Value = serde_json::from_str(&stdout(&["flips", p])).unwrap();
    assert_eq!(flips.as_array().unwrap().len(), 4);
}

#[test]
fn three_by_three_box_has_several_components() {
    let v: serde_json::Value = serde_json::from_str(&stdout(&["components", "3x3", "-N", "2"])).unwrap();
    assert!(v["components"].as_array().unwrap().len() >= 2);
    assert_eq!(v["total_tilings"], 229);
    assert!(stdout(&["components", "3x3", "-N", "2", "--csv"]).starts_with("component,size,twist\n"));
}

#[test]
fn enum_streams_every_tiling() {
    let s = stdout(&["enum", "2x3", "-N", "2"]);
    assert_eq!(s.lines().count(), 32);
    assert_eq!(stdout(&["enum", "2x3", "-N", "2", "--limit", "5"]).lines().count(), 5);
    let a = stdout(&["--seed", "4", "enum", "3x4", "-N", "2", "--sample", "5"]);
    assert_eq!(a, stdout(&["--seed", "4", "enum", "3x4", "-N", "2", "--sample", "5"]));
    assert_ne!(a, stdout(&["--seed", "5", "enum", "3x4", "-N", "2", "--sample", "5"]));
}

#[test]
fn decompose_then_reduce() {
    let dir = tempfile::tempdir().unwrap();
    let ts = stdout(&["--seed", "2", "enum", "4x4", "-N", "2", "--sample", "4"]);
    let ks = stdout(&["twist", write(&dir, "s.jsonl", &ts).as_str()]);
    for (line, k) in ts.lines().zip(ks.lines()) {
        let t = write(&dir, "t.json", line);
        let w = stdout(&["decompose", &t]);
        let w = write(&dir, "w.json", &w);
        let r: serde_json::Value = serde_json::from_str(&stdout(&["reduce", &w, "--disk", "4x4"])).unwrap();
        assert_eq!(r["k"].to_string(), k);
    }
}

fn write(dir: &tempfile::TempDir, name: &str, s: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, s).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn hamilton_flux_and_generators() {
    let dir = tempfile::tempdir().unwrap();
    let c = stdout(&["hamilton", "4x4", "--cycle", "--start-sw"]);
    assert!(c.starts_with("[[0,0],"));
    let c = write(&dir, "c.json", &c);
    assert_eq!(stdout(&["flux", "4x4", &c, "--domino", "1,0,1,1", "--plug", "2,0;0,1"]), "[0,-1,1]\n");
    let g: serde_json::Value = serde_json::from_str(&stdout(&["generators", "4x4", "--domino", "1,0,1,1", "--flux", "1"])).unwrap();
    assert_eq!(g[0]["twist"], 1);
    assert_eq!(g[0]["flux"][1], 1);
}

#[test]
fn equiv_verdicts_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ts = stdout(&["--seed", "1", "enum", "3x4", "-N", "2", "--sample", "2"]);
    let mut it = ts.lines();
    let a = write(&dir, "a.json", it.next().unwrap());
    let b = write(&dir, "b.json", it.next().unwrap());
    let v: serde_json::Value = serde_json::from_str(&stdout(&["equiv", &a, &a, "--pad-max", "0"])).unwrap();
    assert_eq!(v["verdict"], "connected");

    let o = run(&["--strict", "equiv", &a, &b, "--pad-max", "0", "--budget", "1"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    if v["verdict"] == "unknown" {
        assert_eq!(o.status.code(), Some(2));
    }
    assert_eq!(run(&["twist", "/nonexistent/t.json"]).status.code(), Some(1));
    assert_eq!(run(&["count", "2x2"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["render", &a, "--floors-per-row", "0"]).status.code(), Some(1));
}

#[test]
fn probe_reports_are_thread_independent() {
    let one = Command::new(env!("CARGO_BIN_EXE_twistlab"))
        .args(["probe-regularity", "3x4", "--n-max", "2", "--pad-max", "4"])
        .env("TWISTLAB_THREADS", "1")
        .output()
        .unwrap();
    let four = Command::new(env!("CARGO_BIN_EXE_twistlab"))
        .args(["--threads", "4", "probe-regularity", "3x4", "--n-max", "2", "--pad-max", "4"])
        .output()
        .unwrap();
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    let v: serde_json::Value = serde_json::from_slice(&one.stdout).unwrap();
    for c in v["report"]["levels"][0]["classes"].as_array().unwrap() {
        assert_eq!(c["verdict"], "verified");
    }
}

#[test]
fn annotated_disk_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = write(&dir, "d.txt", "000..\n00011\n00011\n000..\n");
    assert_eq!(stdout(&["count", &d, "-N", "2"]), "22421\n");
}
