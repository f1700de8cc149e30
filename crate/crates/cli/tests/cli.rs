use std::path::Path;
use std::process::{Command, Output};

fn atc2(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atc2"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = atc2(args, dir);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

fn generated(spec: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("spec.json"), spec).unwrap();
    ok(&["gen", "--spec", "spec.json", "--out", "c"], dir.path());
    dir
}

#[test]
fn identical_invocations_give_identical_outputs() {
    let spec = r#"{"utterances": 60, "noise": 0.3, "seed": 5}"#;
    let a = generated(spec);
    let b = generated(spec);
    for f in ["records.jsonl", "references.jsonl", "dialogues.jsonl", "context.csv"] {
        let name = format!("c/{f}");
        assert_eq!(read(a.path(), &name), read(b.path(), &name), "{f}");
    }
    for d in [a.path(), b.path()] {
        ok(
            &["process", "--in", "c/records.jsonl", "--out", "out.jsonl", "--context", "c/context.csv"],
            d,
        );
        ok(
            &["boost", "--in", "c/records.jsonl", "--context", "c/context.csv", "--out", "h.jsonl"],
            d,
        );
    }
    assert_eq!(read(a.path(), "out.jsonl"), read(b.path(), "out.jsonl"));
    assert_eq!(read(a.path(), "h.jsonl"), read(b.path(), "h.jsonl"));
    let rank = ["rank", "--in", "out.jsonl", "--top-hours", "0.01"];
    assert_eq!(ok(&rank, a.path()), ok(&rank, b.path()));
}

#[test]
fn parallel_and_sequential_processing_agree() {
    let dir = generated(r#"{"utterances": 40, "seed": 9}"#);
    let d = dir.path();
    ok(&["process", "--in", "c/records.jsonl", "--out", "one.jsonl", "--parallelism", "1"], d);
    ok(&["process", "--in", "c/records.jsonl", "--out", "four.jsonl", "--parallelism", "4"], d);
    assert_eq!(read(d, "one.jsonl"), read(d, "four.jsonl"));
}

#[test]
fn noise_free_corpus_decodes_exactly() {
    let dir = generated(r#"{"utterances": 30, "noise": 0.0}"#);
    let d = dir.path();
    ok(&["boost", "--in", "c/records.jsonl", "--mode", "baseline", "--out", "h.jsonl"], d);
    let report: serde_json::Value =
        serde_json::from_str(&ok(&["eval", "--task", "asr", "--references", "c/references.jsonl", "--hyps", "h.jsonl"], d))
            .unwrap();
    assert_eq!(report["wer"], 0.0);
    assert_eq!(report["callsign_acc"], 1.0);
}

#[test]
fn ground_truth_boosting_beats_baseline() {
    let dir = generated(r#"{"utterances": 200, "noise": 0.3, "seed": 42}"#);
    let d = dir.path();
    let mut scores = Vec::new();
    for mode in ["baseline", "ngram", "gt"] {
        let out = format!("{mode}.jsonl");
        ok(
            &[
                "boost",
                "--in",
                "c/records.jsonl",
                "--context",
                "c/context.csv",
                "--references",
                "c/references.jsonl",
                "--mode",
                mode,
                "--discount",
                "-0.5",
                "--out",
                &out,
            ],
            d,
        );
        let r: serde_json::Value =
            serde_json::from_str(&ok(&["eval", "--task", "asr", "--references", "c/references.jsonl", "--hyps", &out], d))
                .unwrap();
        scores.push((r["entity_wer"].as_f64().unwrap(), r["callsign_acc"].as_f64().unwrap()));
    }
    let (base, ngram, gt) = (scores[0], scores[1], scores[2]);
    assert!(base.0 > 0.0);
    assert!(gt.0 <= ngram.0 && ngram.0 <= base.0, "{scores:?}");
    assert!(gt.1 >= ngram.1 && ngram.1 >= base.1, "{scores:?}");
    assert!(gt.1 - base.1 >= 0.05);
}

#[test]
fn understanding_tasks_report_scores() {
    let dir = generated(r#"{"utterances": 50}"#);
    let d = dir.path();
    let ner: serde_json::Value =
        serde_json::from_str(&ok(&["eval", "--task", "ner", "--references", "c/references.jsonl"], d)).unwrap();
    for label in ["callsign", "command", "value"] {
        assert_eq!(ner["labels"][label]["f1"], 1.0, "{label}");
    }
    let srd: serde_json::Value =
        serde_json::from_str(&ok(&["eval", "--task", "srd", "--references", "c/references.jsonl"], d)).unwrap();
    assert!(srd["accuracy"].as_f64().unwrap() > 0.9);
    let diar: serde_json::Value =
        serde_json::from_str(&ok(&["eval", "--task", "diar", "--references", "c/dialogues.jsonl"], d)).unwrap();
    let jer = diar["mean_jer"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&jer));
}

#[test]
fn trained_model_can_be_used_for_role_detection() {
    let dir = generated(r#"{"utterances": 30}"#);
    let d = dir.path();
    let text = ok(&["train", "--kind", "role", "--samples", "200", "--seed", "3", "--out", "role.json"], d);
    assert!(text.starts_with("training accuracy"));
    ok(&["train", "--kind", "role", "--samples", "200", "--seed", "3", "--out", "role2.json"], d);
    assert_eq!(read(d, "role.json"), read(d, "role2.json"));
    ok(
        &["eval", "--task", "srd", "--references", "c/references.jsonl", "--model", "role.json"],
        d,
    );
}

#[test]
fn callbacks_and_timing_report() {
    let dir = generated(r#"{"utterances": 10}"#);
    let d = dir.path();
    ok(
        &[
            "process",
            "--in",
            "c/records.jsonl",
            "--out",
            "out.jsonl",
            "--callbacks",
            "cb.jsonl",
            "--timing-out",
            "t.json",
        ],
        d,
    );
    let cb = String::from_utf8(read(d, "cb.jsonl")).unwrap();
    let terminals = cb
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .filter(|e| e["kind"] == "OK" || e["kind"] == "ERROR")
        .count();
    assert_eq!(terminals, 10);
    let report = ok(&["report", "--timing", "t.json"], d);
    assert!(report.contains("total"));
    assert!(report.contains("100.00"));
    assert!(report.contains("rtf"));
}

#[test]
fn lifecycle_replay() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let events = [
        r#"{"recording":"a","event":"push","at":"2026-01-01T00:00:00Z"}"#,
        r#"{"recording":"a","event":"save_annotation"}"#,
        r#"{"recording":"a","event":"recheck_ok"}"#,
        r#"{"recording":"a","event":"export"}"#,
        r#"{"recording":"b","event":"push","at":"2026-01-01T00:00:00Z"}"#,
        r#"{"recording":"b","event":"thumb_down","at":"2026-01-02T00:00:00Z"}"#,
        r#"{"recording":"b","event":"thumb_down","at":"2026-01-02T00:00:00Z"}"#,
        r#"{"recording":"b","event":"thumb_down","at":"2026-01-02T00:00:00Z"}"#,
        r#"{"recording":"b","event":"age_tick","now":"2026-01-10T00:00:00Z"}"#,
    ];
    std::fs::write(d.join("ev.jsonl"), events.join("\n")).unwrap();
    let out = ok(&["lifecycle", "--replay", "ev.jsonl"], d);
    let states: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(states[0]["state"], "finished");
    assert_eq!(states[1]["state"], "deleted");

    std::fs::write(
        d.join("bad.jsonl"),
        r#"{"recording":"a","event":"push","at":"2026-01-01T00:00:00Z"}
{"recording":"a","event":"export"}"#,
    )
    .unwrap();
    assert_eq!(atc2(&["lifecycle", "--replay", "bad.jsonl"], d).status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = generated(r#"{"utterances": 5}"#);
    let d = dir.path();
    let code = |args: &[&str]| atc2(args, d).status.code();

    assert_eq!(code(&["process", "--in", "missing.jsonl", "--out", "o.jsonl"]), Some(2));
    std::fs::write(d.join("broken.jsonl"), "{not json\n").unwrap();
    assert_eq!(code(&["process", "--in", "broken.jsonl", "--out", "o.jsonl"]), Some(2));

    std::fs::write(d.join("cycle.json"), r#"{"blocks":[{"name":"a","op":"preprocess"}],"links":[["a","a"]]}"#).unwrap();
    assert_eq!(
        code(&["process", "--config", "cycle.json", "--in", "c/records.jsonl", "--out", "o.jsonl"]),
        Some(3)
    );
    std::fs::write(d.join("s.json"), r#"{"min_len_s": 10, "max_len_s": 2}"#).unwrap();
    assert_eq!(
        code(&["process", "--settings", "s.json", "--in", "c/records.jsonl", "--out", "o.jsonl"]),
        Some(3)
    );
    std::fs::write(d.join("bad_spec.json"), r#"{"noise": 2.0}"#).unwrap();
    assert_eq!(code(&["gen", "--spec", "bad_spec.json", "--out", "x"]), Some(3));
    assert_eq!(
        code(&["boost", "--in", "c/records.jsonl", "--mode", "gt", "--out", "h.jsonl"]),
        Some(3)
    );
    assert_eq!(code(&["eval", "--task", "asr", "--references", "c/references.jsonl"]), Some(3));
    assert_eq!(code(&["rank", "--in", "c/records.jsonl", "--top-hours", "1"]), Some(0));
}
