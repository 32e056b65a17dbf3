mod common;

use std::process::Command;

use eventnet::matching::{match_concepts, MatchQuery};
use eventnet::similarity::OverlapBackend;

fn eventnet(args: &[&str]) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_eventnet"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.success(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn data(name: &str) -> String {
    common::data_dir().join(name).to_string_lossy().into_owned()
}

#[test]
fn validate_prints_counts() {
    let (ok, out, _) = eventnet(&["validate", "--ontology", &data("sample.ont")]);
    assert!(ok);
    assert!(
        out.contains("20") && out.contains("12") && out.contains("60"),
        "{out}"
    );
}

#[test]
fn validate_rejects_a_broken_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.ont");
    std::fs::write(
        &path,
        "{\"id\":\"r\",\"name\":\"root\",\"kind\":\"category\"}\n{\"id\":\"x\"",
    )
    .unwrap();
    let (ok, _, err) = eventnet(&["validate", "--ontology", path.to_str().unwrap()]);
    assert!(!ok);
    assert!(err.starts_with("error:"), "{err}");
}

#[test]
fn match_record_equals_library_serialization() {
    let (ok, out, _) = eventnet(&[
        "match",
        "--ontology",
        &data("sample.ont"),
        "--query",
        "wedding shower",
        "--restrict",
        "c.family",
        "--format",
        "record",
    ]);
    assert!(ok);
    let tree = common::sample_tree();
    let want = match_concepts(
        &tree,
        &MatchQuery::new("wedding shower").restrict(["c.family"]),
        &OverlapBackend::from_tree(&tree),
    )
    .unwrap();
    assert_eq!(out, format!("{}\n", serde_json::to_string(&want).unwrap()));
}

#[test]
fn match_text_without_restriction_leads_with_the_shower() {
    let (ok, out, _) = eventnet(&[
        "match",
        "--ontology",
        &data("sample.ont"),
        "--query",
        "wedding shower",
    ]);
    assert!(ok);
    let first_event = out.lines().find(|l| l.contains("e.")).unwrap();
    assert!(first_event.contains("e.shower"), "{out}");
}

#[test]
fn empty_pool_exits_with_failure() {
    let (ok, _, err) = eventnet(&[
        "match",
        "--ontology",
        &data("sample.ont"),
        "--query",
        "dog",
        "--restrict",
        "c.education",
    ]);
    assert!(!ok);
    assert!(err.contains("empty candidate pool"), "{err}");
}

#[test]
fn synthetic_structure_comparison() {
    let (ok, out, _) = eventnet(&["eval", "--mode", "compare-structure", "--synthetic"]);
    assert!(ok);
    let rows: Vec<f64> = out
        .lines()
        .skip(1)
        .map(|l| l.rsplit('\t').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[1] >= rows[0], "{out}");
}

#[test]
fn out_flag_writes_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stats.json");
    let (ok, out, _) = eventnet(&[
        "stats",
        "--ontology",
        &data("sample.ont"),
        "--format",
        "record",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(ok);
    assert!(out.is_empty());
    let written: eventnet::ontology::OntologyStats =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(written, common::sample_tree().stats());
}
