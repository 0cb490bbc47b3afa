mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn divcap(args: &[&str], paths: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_divcap"));
    cmd.args(args);
    for (flag, p) in paths {
        cmd.arg(flag).arg(p);
    }
    cmd.env("RUST_LOG", "warn").output().unwrap()
}

fn ok(out: Output) -> Output {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const SPEC: &str = "topics = 4\nvideos_per_topic = 10\neval_videos_per_topic = 25\neval_gallery = 20\nvideo_feat = 32\n";
const TRAIN: &str = "epochs = 2\nbatch_n = 8\nlr = 0.01\nseed = 3\n[dims]\nhash_buckets = 4096\nembed = 16\nvideo_feat = 32\n";

#[test]
fn corpus_validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.jsonl");
    divcap::io::write_dataset(&good, &common::fixture_dataset(5, 1)).unwrap();
    let normalized = dir.path().join("norm.jsonl");
    ok(divcap(&["corpus", "validate"], &[("--input", &good), ("--output", &normalized)]));
    assert_eq!(std::fs::read(&good).unwrap(), std::fs::read(&normalized).unwrap());

    let bad = dir.path().join("bad.jsonl");
    let mut text = std::fs::read_to_string(&good).unwrap();
    text.push_str("{\"video_id\": \"x\", \"events\": [], \"timestamps\": []}\n");
    std::fs::write(&bad, text).unwrap();
    let out = divcap(&["corpus", "validate"], &[("--input", &bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.jsonl:6:"));

    let missing = divcap(&["corpus", "validate"], &[("--input", &dir.path().join("none.jsonl"))]);
    assert!(!missing.status.success());
    assert_ne!(missing.status.code(), Some(2));
}

#[test]
fn synth_train_embed_eval_chart() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let spec = d.join("spec.toml");
    std::fs::write(&spec, SPEC).unwrap();
    let cfg = d.join("train.toml");
    std::fs::write(&cfg, TRAIN).unwrap();
    let synth = d.join("synth");
    ok(divcap(&["synth", "--seed", "4"], &[("--spec", &spec), ("--out-dir", &synth)]));
    let train = synth.join("train");
    let test = synth.join("test");

    let params = d.join("params.dvec");
    let history = d.join("history.json");
    ok(divcap(
        &["train"],
        &[
            ("--config", &cfg),
            ("--corpus", &train.join("dataset.jsonl")),
            ("--pools", &train.join("pools.jsonl")),
            ("--video-emb", &train.join("features.dvec")),
            ("--out", &params),
            ("--history", &history),
        ],
    ));
    let h = json(&history);
    assert_eq!(h["history"]["epochs"].as_array().unwrap().len(), 2);
    assert_eq!(h["config"]["batch_n"], 8);

    let text_emb = d.join("text.dvec");
    let video_emb = d.join("video.dvec");
    ok(divcap(
        &["embed"],
        &[
            ("--params", &params),
            ("--pools", &test.join("pools.jsonl")),
            ("--out", &text_emb),
            ("--video-features", &test.join("features.dvec")),
            ("--video-out", &video_emb),
        ],
    ));

    let mut reports: Vec<PathBuf> = Vec::new();
    for (label, dsm) in [("plain", false), ("dsl", true)] {
        let report = d.join(format!("{label}.json"));
        let mut args = vec!["eval", "--dataset", label];
        if dsm {
            args.push("--dual-softmax");
        }
        ok(divcap(
            &args,
            &[("--text-emb", &text_emb), ("--video-emb", &video_emb), ("--pools", &test.join("pools.jsonl")), ("--report", &report)],
        ));
        let r = json(&report);
        let groups = &r["report"]["groups"];
        for g in ["FULL", "SHORT", "LONG", "PARTIAL", "ALL"] {
            let v = groups[g]["r1"].as_f64().unwrap_or_else(|| panic!("missing group {g} in {groups}"));
            assert!((0.0..=100.0).contains(&v));
        }
        assert_eq!(r["videos"].as_array().unwrap().len(), 100);
        reports.push(report);
    }

    let stats = d.join("stats.json");
    ok(divcap(&["stats"], &[("--pools", &test.join("pools.jsonl")), ("--source", &test.join("dataset.jsonl")), ("--out", &stats)]));
    assert!(json(&stats).is_object());

    let deltas = d.join("deltas.json");
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_divcap"));
    cmd.args(["chart", "deltas", "--reports"]).args(&reports).arg("--out").arg(&deltas);
    assert!(cmd.status().unwrap().success());
    assert!(!json(&deltas).is_null());

    let overlap = d.join("overlap.json");
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_divcap"));
    cmd.args(["chart", "overlap", "--reports"]).args(&reports).arg("--out").arg(&overlap);
    assert!(cmd.status().unwrap().success());
    let hist = json(&overlap)["histogram"]["counts"].clone();
    let total: u64 = hist.as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).sum();
    assert_eq!(total, 100);
}

#[test]
fn augment_and_survey_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let corpus = d.join("corpus.jsonl");
    divcap::io::write_dataset(&corpus, &common::fixture_dataset(150, 21)).unwrap();
    let pools = d.join("pools.jsonl");

    ok(divcap(&["augment", "--seed", "5", "--stop-after", "60"], &[("--input", &corpus), ("--output", &pools)]));
    assert!(!pools.exists());
    ok(divcap(&["augment", "--seed", "5", "--in-flight", "2"], &[("--input", &corpus), ("--output", &pools)]));
    let first = std::fs::read(&pools).unwrap();
    let again = d.join("again.jsonl");
    ok(divcap(&["augment", "--seed", "5", "--in-flight", "1"], &[("--input", &corpus), ("--output", &again)]));
    assert_eq!(first, std::fs::read(&again).unwrap());
    assert_eq!(String::from_utf8(first).unwrap().lines().count(), 150);

    let spec = d.join("spec.toml");
    std::fs::write(&spec, SPEC).unwrap();
    let cfg = d.join("train.toml");
    std::fs::write(&cfg, TRAIN).unwrap();
    let synth = d.join("synth");
    ok(divcap(&["synth"], &[("--spec", &spec), ("--out-dir", &synth)]));
    let params = d.join("params.dvec");
    let train = synth.join("train");
    ok(divcap(
        &["train"],
        &[
            ("--config", &cfg),
            ("--corpus", &train.join("dataset.jsonl")),
            ("--pools", &train.join("pools.jsonl")),
            ("--video-emb", &train.join("features.dvec")),
            ("--out", &params),
        ],
    ));
    let gt = d.join("gt.jsonl");
    ok(divcap(&["embed"], &[("--params", &params), ("--pools", &pools), ("--out", &d.join("caps.dvec")), ("--gt-out", &gt)]));

    let study = d.join("study");
    ok(divcap(&["survey", "make", "--versions", "5", "--seed", "2"], &[("--pools", &pools), ("--gt-emb", &gt), ("--out-dir", &study)]));
    let docs = divcap::io::read_surveys(&study.join("surveys")).unwrap();
    assert_eq!(docs.len(), 5);

    let log = d.join("responses.jsonl");
    let mut lines = String::new();
    for (v, doc) in docs.iter().enumerate() {
        for a in 0..3 {
            for rec in common::scripted_responses(doc, &format!("a{a}"), a + v) {
                lines.push_str(&serde_json::to_string(&rec).unwrap());
                lines.push('\n');
            }
        }
    }
    std::fs::write(&log, lines).unwrap();
    let agg = d.join("agg.json");
    ok(divcap(
        &["survey", "aggregate"],
        &[("--responses", &log), ("--surveys", &study.join("surveys")), ("--keys", &study.join("keys")), ("--out", &agg)],
    ));
    let v = json(&agg);
    assert_eq!(v["n"], 5 * 3 * 15);
    assert_eq!(v["unanimous"]["meaning"]["items"], 25);
}
