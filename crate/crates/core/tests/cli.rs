use std::path::Path;
use std::process::{Command, Output};

fn confdim(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_confdim"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn only_file(dir: &Path, prefix: &str) -> std::path::PathBuf {
    let hits: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_str().unwrap().starts_with(prefix))
        .collect();
    assert_eq!(hits.len(), 1, "{prefix}: {hits:?}");
    hits[0].clone()
}

const GRAPH: [&str; 8] = ["--alpha", "3", "--tau", "7", "--depth", "6", "--n0", "2"];

#[test]
fn end_to_end_on_cantor() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(confdim(d, &["space", "gen", "--kind", "cantor", "--depth", "6"]).status.success());
    let fill = confdim(d, &[&["fill"][..], &GRAPH].concat());
    assert!(fill.status.success(), "{}", stderr(&fill));
    let pipe = confdim(d, &[&["pipeline"][..], &GRAPH, &["--p", "2"]].concat());
    assert!(pipe.status.success(), "{}", stderr(&pipe));
    let cert = confdim(d, &["certify", "--all", "--seed", "42"]);
    assert!(cert.status.success(), "{}", stderr(&cert));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(only_file(d, "certificates-")).unwrap()).unwrap();
    let names: Vec<&str> = report["data"]["report"]["certificates"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    for n in ["h1", "normalization", "h2", "h3", "h4_tree", "h4_graph", "tree"] {
        assert!(names.contains(&n), "{n} missing from {names:?}");
    }
    assert_eq!(report["config"]["options"]["seed"], 42);

    let csv = d.join("metric.csv");
    let bm = confdim(d, &["build-metric", "--out", csv.to_str().unwrap(), "--certify", "h1", "h3"]);
    assert!(bm.status.success(), "{}", stderr(&bm));
    let space = confdim::metric::import_metric(&csv).unwrap();
    assert_eq!(space.len(), 64);
}

#[test]
fn modulus_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    confdim(d, &["space", "gen", "--kind", "grid", "--n", "33"]);
    let o = confdim(d, &["modulus", "--alpha", "2", "--depth", "4", "--p", "1.5", "--k", "1..2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(only_file(d, "modulus-")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config: {"));
    assert_eq!(lines.next().unwrap(), "v_point,v_level,k,p,modulus,iterations,status");
    assert!(lines.all(|l| l.split(',').count() == 7));
}

#[test]
fn invalid_tau_is_rejected_with_the_inequality() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    confdim(d, &["space", "gen", "--kind", "cantor", "--depth", "4"]);
    let o = confdim(d, &["fill", "--tau", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("tau=5 violates tau>6"), "{}", stderr(&o));
}

#[test]
fn theory_mode_stops_on_hypothesis_failure() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    confdim(d, &["space", "gen", "--kind", "carpet", "--depth", "2"]);
    // this carpet violates the structural bounds, so theory mode stops early
    let o = confdim(d, &["pipeline", "--alpha", "3", "--depth", "4", "--n0", "2", "--p", "6", "--mode", "theory"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("violates"), "{}", stderr(&o));
    assert!(!d.read_dir().unwrap().any(|e| e.unwrap().file_name().to_str().unwrap().starts_with("weights-")));
}

#[test]
fn missing_artifact_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let o = confdim(dir.path(), &["certify", "--all"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no weights-*.json"), "{}", stderr(&o));
}
