use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tdcomm::ingest::GENERIC_HASHTAGS;

fn tdcomm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdcomm"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = tdcomm(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(String::from)
        .collect()
}

fn pipeline(dir: &Path, synth: &[&str]) {
    let mut args = vec!["synth", "--out", "run"];
    args.extend_from_slice(synth);
    ok(dir, &args);
    ok(dir, &["ingest", "run/posts.jsonl", "--out", "run"]);
    ok(dir, &["build", "--out", "run"]);
    ok(dir, &["detect", "--out", "run", "--truth", "run/truth.tsv"]);
    ok(dir, &["analyze", "--out", "run"]);
    ok(dir, &["report", "--out", "run"]);
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn planted_stream_is_recovered() {
    let tmp = tempfile::tempdir().unwrap();
    pipeline(tmp.path(), &["--days", "3"]);
    let c = json(&tmp.path().join("run/codelength.json"));
    assert_eq!(c["nmi"], 1.0);
    assert_eq!(c["n_modules"], 4);
    let s = json(&tmp.path().join("run/summary.json"));
    assert_eq!(s["size_floor"], 3);
    assert_eq!(s["n_communities"], 4);
}

#[test]
fn lifespans_land_on_the_planted_span() {
    let tmp = tempfile::tempdir().unwrap();
    pipeline(
        tmp.path(),
        &["--days", "12", "--lifespan", "3", "--stagger", "3"],
    );
    let rows = data_rows(&tmp.path().join("run/fig5_lifespan.csv"));
    assert_eq!(
        rows,
        vec!["lifespan_days,communities,top_k_communities", "3,4,2"]
    );
}

#[test]
fn every_output_starts_with_a_header() {
    let tmp = tempfile::tempdir().unwrap();
    pipeline(tmp.path(), &["--days", "4"]);
    let mut seen = 0;
    for entry in fs::read_dir(tmp.path().join("run")).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        let ok = match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") | Some("csv") => text.starts_with("# tdcomm "),
            Some("svg") => text.starts_with("<!-- tdcomm "),
            Some("jsonl") => text.starts_with("{\"meta\":{\"tool\":\"tdcomm\""),
            Some("json") => text.starts_with("{\n  \"meta\": {\n    \"tool\": \"tdcomm\""),
            _ => panic!("unexpected output {name}"),
        };
        assert!(ok, "{name} lacks a header");
        seen += 1;
    }
    assert!(seen >= 20);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    pipeline(tmp.path(), &["--days", "5", "--cross-talk", "0.1"]);
    let first: Vec<(String, Vec<u8>)> = fs::read_dir(tmp.path().join("run"))
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.display().to_string(), fs::read(&p).unwrap())
        })
        .collect();
    pipeline(tmp.path(), &["--days", "5", "--cross-talk", "0.1"]);
    for (path, bytes) in first {
        assert_eq!(fs::read(&path).unwrap(), bytes, "{path} changed");
    }
}

#[test]
fn seed_changes_the_stream() {
    let tmp = tempfile::tempdir().unwrap();
    ok(
        tmp.path(),
        &["synth", "--out", "a", "--days", "2", "--activity", "0.5"],
    );
    ok(
        tmp.path(),
        &[
            "synth",
            "--out",
            "b",
            "--days",
            "2",
            "--activity",
            "0.5",
            "--seed",
            "7",
        ],
    );
    let a = data_rows(&tmp.path().join("a/truth.tsv"));
    let b = data_rows(&tmp.path().join("b/truth.tsv"));
    assert_ne!(a, b);
}

#[test]
fn default_stoplist_removes_generic_hashtags() {
    let tmp = tempfile::tempdir().unwrap();
    let mut input = String::new();
    for (i, tag) in GENERIC_HASHTAGS.iter().enumerate() {
        input.push_str(&format!(
            "{{\"user\":\"u{i}\",\"time\":\"2015-05-01T10:00:00Z\",\"hashtags\":[\"{tag}\"]}}\n"
        ));
    }
    input.push_str("{\"user\":\"x\",\"time\":\"2015-05-01T10:00:00Z\",\"hashtags\":[\"#Expo2015\",\"food\"]}\n");
    fs::write(tmp.path().join("in.jsonl"), input).unwrap();
    ok(tmp.path(), &["ingest", "in.jsonl", "--out", "o"]);
    let r = json(&tmp.path().join("o/ingest_report.json"));
    assert_eq!(r["records_read"], 12);
    assert_eq!(r["dropped_by_stoplist"], 11);
    assert_eq!(r["kept"], 1);
    let rows = data_rows(&tmp.path().join("o/records.jsonl"));
    assert_eq!(rows.len(), 2);
    assert!(rows[1].contains("[\"food\"]"));
}

#[test]
fn empty_input_gives_an_empty_partition() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("in.jsonl"), "").unwrap();
    ok(tmp.path(), &["ingest", "in.jsonl", "--out", "o"]);
    let out = ok(tmp.path(), &["detect", "--out", "o"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("WARN"));
    assert!(data_rows(&tmp.path().join("o/partition.tsv")).is_empty());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tdcomm(tmp.path(), &["ingest", "missing.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.jsonl"));

    ok(tmp.path(), &["synth", "--out", "o", "--days", "2"]);
    ok(tmp.path(), &["ingest", "o/posts.jsonl", "--out", "o"]);
    let out = tdcomm(
        tmp.path(),
        &["report", "--out", "o", "--partition", "none.tsv"],
    );
    assert_eq!(out.status.code(), Some(2));

    assert_eq!(tdcomm(tmp.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        tdcomm(tmp.path(), &["detect", "--trials", "x"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        tdcomm(tmp.path(), &["synth", "--cross-talk", "2"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(tdcomm(tmp.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(tdcomm(tmp.path(), &["--version"]).status.code(), Some(0));
}

#[test]
fn config_file_with_flag_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("cfg.json"),
        r#"{"detection": {"n_trials": 3, "seed": 5}, "size_floor": 4, "out_dir": "from_cfg"}"#,
    )
    .unwrap();
    let out = ok(
        tmp.path(),
        &["--config", "cfg.json", "--seed", "9", "config"],
    );
    let cfg: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cfg["detection"]["n_trials"], 3);
    assert_eq!(cfg["detection"]["seed"], 9);
    assert_eq!(cfg["synth"]["seed"], 9);
    assert_eq!(cfg["size_floor"], 4);
    assert_eq!(cfg["out_dir"], "from_cfg");

    fs::write(tmp.path().join("bad.json"), r#"{"no_such_field": 1}"#).unwrap();
    assert_eq!(
        tdcomm(tmp.path(), &["--config", "bad.json", "config"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn shipped_examples_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let tmp = tempfile::tempdir().unwrap();
    let cfg = root.join("config.example.json");
    ok(tmp.path(), &["--config", cfg.to_str().unwrap(), "config"]);
    let topics = fs::File::open(root.join("topic_map.example.json")).unwrap();
    tdcomm::temporal::TopicMap::from_json(topics).unwrap();
}

#[test]
fn topic_map_labels_timelines() {
    let tmp = tempfile::tempdir().unwrap();
    pipeline(tmp.path(), &["--days", "2", "--communities", "2"]);
    fs::write(
        tmp.path().join("topics.json"),
        r#"{"food": ["c0h0", "c0h1", "c0h2", "c0h3"]}"#,
    )
    .unwrap();
    ok(
        tmp.path(),
        &["analyze", "--out", "run", "--topic-map", "topics.json"],
    );
    let topics: Vec<String> = data_rows(&tmp.path().join("run/timelines.jsonl"))
        .iter()
        .skip(1)
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["topic"]
                .as_str()
                .unwrap()
                .to_string()
        })
        .collect();
    assert_eq!(topics, vec!["food", "other"]);
}
