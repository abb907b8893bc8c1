use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn netes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netes"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

const RUN: &str = r#"{
    "name": "small",
    "objective": {"kind": "sphere", "dim": 4},
    "topology": {"family": "erdos_renyi", "p": 0.5},
    "agents": 12,
    "iterations": 30,
    "seeds": [1]
}"#;

#[test]
fn run_writes_outputs_and_honours_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", RUN);
    let out = dir.path().join("out");
    let o = netes(&[
        "--threads",
        "1",
        "run",
        &cfg,
        "--seeds",
        "4,5",
        "--out",
        out.to_str().unwrap(),
        "--preset",
        "netes",
        "--preset",
        "broadcast-only",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    for name in ["small-netes", "small-broadcast-only"] {
        for f in ["seed_4.csv", "seed_5.csv", "curve.svg", "config.resolved.json"] {
            assert!(out.join(name).join(f).exists(), "{name}/{f}");
        }
    }
    let resolved = fs::read_to_string(out.join("small-broadcast-only/config.resolved.json")).unwrap();
    assert!(resolved.contains("edgeless"));
}

#[test]
fn invalid_configs_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let odd = write(dir.path(), "odd.json", &RUN.replace("\"agents\": 12", "\"agents\": 11"));
    let o = netes(&["run", &odd]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("agents"));

    let fam = write(dir.path(), "fam.json", &RUN.replace("erdos_renyi", "hypercube"));
    let err = String::from_utf8_lossy(&netes(&["run", &fam]).stderr).into_owned();
    assert!(err.contains("topology.family") && err.contains("watts_strogatz"), "{err}");

    let extra = write(dir.path(), "extra.json", &RUN.replace("\"seeds\"", "\"colour\": 1, \"seeds\""));
    let err = String::from_utf8_lossy(&netes(&["run", &extra]).stderr).into_owned();
    assert!(err.contains("colour"), "{err}");

    let bad = netes(&["run", &write(dir.path(), "p.json", RUN), "--preset", "nope"]);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("broadcast-only"));
}

#[test]
fn graph_gen_then_stats() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ws.txt");
    let o = netes(&[
        "graph", "gen", "--family", "watts_strogatz", "--n", "20", "--k", "4", "--seed", "3", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# netes-graph n=20 family=watts_strogatz"));
    assert_eq!(text.lines().count(), 1 + 40);

    let stats = netes(&["graph", "stats", path.to_str().unwrap()]);
    let out = String::from_utf8_lossy(&stats.stdout);
    assert!(out.contains("edges         40"), "{out}");
    assert!(out.contains("reachability"));

    let stdout = netes(&["graph", "gen", "--family", "complete", "--n", "4"]);
    assert_eq!(String::from_utf8_lossy(&stdout.stdout).lines().count(), 1 + 6);
}

#[test]
fn scatter_and_sweep_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let sc = write(dir.path(), "scatter.json", r#"{"n": 20, "samples_per_family": 5}"#);
    let o = netes(&["scatter", &sc, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(out.join("scatter.csv")).unwrap().lines().count(), 21);

    let sw = write(dir.path(), "sweep.json", r#"{"instances": 40, "max_agents": 12}"#);
    let o = netes(&["bound-sweep", &sw, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("40/40"));
    assert_eq!(fs::read_to_string(out.join("sweep.csv")).unwrap().lines().count(), 41);
}
