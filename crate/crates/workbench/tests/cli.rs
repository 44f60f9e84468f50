mod common;

use std::fs;

use common::{all_green_config, dqi, fixture, path_str};
use dqi_core::config::{bands_from_toml, Config};
use dqi_core::corpus::{load_dataset, Format, Partition};
use dqi_core::engine::compute_all;
use dqi_core::splitkit::format_value;
use dqi_core::textprims::SimilarityProvider;
use serde_json::Value;

#[test]
fn analyze_writes_all_components() {
    let dir = tempfile::tempdir().unwrap();
    let out = dqi(&["analyze", "--dataset", path_str(&fixture()), "--out", path_str(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    for c in ["c1", "c2", "c3", "c4", "c5", "c6", "c7"] {
        assert!(json["components"][c]["value"].is_number(), "{c}");
    }
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(csv.starts_with("component,scope,term,value\n"));
    assert!(csv.lines().any(|l| l.starts_with("dqi,")));
}

#[test]
fn analyze_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert!(dqi(&["analyze", "--dataset", path_str(&fixture()), "--out", path_str(d.path())]).status.success());
    }
    for f in ["report.json", "report.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn missing_config_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dqi(&[
        "analyze",
        "--dataset",
        path_str(&fixture()),
        "--config",
        "/does/not/exist.toml",
        "--out",
        path_str(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/does/not/exist.toml"));
}

#[test]
fn compare_rejects_one_sided_membership() {
    let dir = tempfile::tempdir().unwrap();
    let ds = load_dataset(&fixture(), Format::Jsonl).unwrap();
    let m: String = ds.samples().iter().map(|s| format!("{},good\n", s.id)).collect();
    let mpath = dir.path().join("m.csv");
    fs::write(&mpath, m).unwrap();
    let out = dqi(&[
        "compare",
        "--dataset",
        path_str(&fixture()),
        "--membership",
        path_str(&mpath),
        "--out",
        path_str(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad"));
}

#[test]
fn compare_rows_match_recomputed_reports() {
    let dir = tempfile::tempdir().unwrap();
    let ds = load_dataset(&fixture(), Format::Jsonl).unwrap();
    let side = |i: usize| if i.is_multiple_of(2) { Partition::Good } else { Partition::Bad };
    let m: String = ds
        .samples()
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{},{}\n", s.id, side(i).as_str()))
        .collect();
    let mpath = dir.path().join("m.csv");
    fs::write(&mpath, m).unwrap();
    let mut outputs = Vec::new();
    for run in ["r1", "r2"] {
        let out_dir = dir.path().join(run);
        let out = dqi(&[
            "compare",
            "--dataset",
            path_str(&fixture()),
            "--membership",
            path_str(&mpath),
            "--out",
            path_str(&out_dir),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(fs::read_to_string(out_dir.join("winners.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);

    let p = SimilarityProvider::lexical();
    let params = Config::bundled().params;
    let good = ds.subset(|s| ds.samples().iter().position(|x| x.id == s.id).unwrap().is_multiple_of(2)).unwrap();
    let good = compute_all(&good, &p, &params).unwrap();
    let line = outputs[0].lines().find(|l| l.starts_with("c1,-,T1,")).unwrap();
    let cols: Vec<&str> = line.split(',').collect();
    assert_eq!(cols[3], format_value(good.component(dqi_core::engine::Component::C1).term("T1")));
}

fn write_draft(dir: &std::path::Path, premise: &str, hypothesis: &str) -> std::path::PathBuf {
    let p = dir.join("draft.json");
    let body = serde_json::json!({ "premise": premise, "hypothesis": hypothesis, "label": "entailment" });
    fs::write(&p, body.to_string()).unwrap();
    p
}

#[test]
fn delta_on_duplicate_raises_vocabulary_delta() {
    let dir = tempfile::tempdir().unwrap();
    let ds = load_dataset(&fixture(), Format::Jsonl).unwrap();
    let s = &ds.samples()[0];
    let draft = write_draft(dir.path(), &s.premise, &s.hypothesis);
    let out = dqi(&["delta", "--dataset", path_str(&fixture()), "--sample", path_str(&draft)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(json["impact"]["delta"]["c1.T1"].as_f64().unwrap() > 0.0);
    assert_eq!(json["panel"]["colors"].as_object().unwrap().len(), Config::bundled().bands.entries.len());
}

#[test]
fn autofix_on_green_sample_is_a_no_op() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("green.toml");
    all_green_config().save(&cfg).unwrap();
    let draft = write_draft(dir.path(), "A man in a red coat walks a dog.", "A man walks a dog.");
    let out = dqi(&[
        "autofix",
        "--dataset",
        path_str(&fixture()),
        "--config",
        path_str(&cfg),
        "--sample",
        path_str(&draft),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["trace"]["status"], "all_green");
    assert_eq!(json["trace"]["edits"].as_array().unwrap().len(), 0);
    assert_eq!(json["sample"]["hypothesis"], "A man walks a dog.");
}

#[test]
fn reports_then_retune() {
    let dir = tempfile::tempdir().unwrap();
    let reports = dir.path().join("reports");
    let out = dqi(&["reports", "--dataset", path_str(&fixture()), "--out", path_str(&reports)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_dir(&reports).unwrap().count(), 12);

    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "id\n").unwrap();
    let out = dqi(&[
        "retune",
        "--errors",
        path_str(&empty),
        "--reports",
        path_str(&reports),
        "--out",
        path_str(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));

    let errors = dir.path().join("errors.csv");
    fs::write(&errors, "id\ns01\ns02\ns03\n").unwrap();
    let out = dqi(&[
        "retune",
        "--errors",
        path_str(&errors),
        "--reports",
        path_str(&reports),
        "--margin",
        "0",
        "--out",
        path_str(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("bands_B1.toml")).unwrap();
    let bands = bands_from_toml(&text, "bands_B1.toml").unwrap();
    assert_eq!(bands.generation, 1);
}

#[test]
fn split_is_seed_deterministic() {
    let run = |seed: &str| dqi(&["split", "--dataset", path_str(&fixture()), "--seed", seed]).stdout;
    assert_eq!(run("7"), run("7"));
    let csv = String::from_utf8(run("7")).unwrap();
    assert_eq!(csv.lines().count(), 13);
}

#[test]
fn viz_exports_series() {
    let out = dqi(&["viz", "--dataset", path_str(&fixture()), "--component", "c5", "--bins", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["series"]["histogram"].as_array().unwrap().len(), 4);
    let bad = dqi(&["viz", "--dataset", path_str(&fixture()), "--component", "c9"]);
    assert!(!bad.status.success());
}
