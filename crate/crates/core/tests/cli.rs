//! The binary, driven as a user would.

use std::path::Path;
use std::process::{Command, Output};

use dcner::corpus::{load_records, save_records, Record};

fn dcner(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcner"))
        .args(args)
        .current_dir(dir)
        .env_remove("DCNER_TABLE")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const GOLD: &str = "# id=a\nHEROIN\tU-drug\nTOXICITY\tO\n\n# id=b\n7\tB-drug\n-\tI-drug\nAMINOCLONAZEPAM\tL-drug\nPRESENT\tO\n\n";

#[test]
fn score_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("g.conll"), GOLD).unwrap();
    let o = dcner(&["score", "--gold", "g.conll", "--pred", "g.conll", "--report", "r.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(v["f1"], 100.0);
    assert_eq!((v["tp"].as_u64(), v["fp"].as_u64(), v["fn"].as_u64()), (Some(2), Some(0), Some(0)));
    assert!(v.get("per_record").is_none());
}

#[test]
fn train_crf_without_train_flag() {
    let dir = tempfile::tempdir().unwrap();
    let o = dcner(&["train-crf", "--model", "m.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.starts_with("error:"), "{err}");
    assert!(err.contains("Usage:"), "{err}");
}

#[test]
fn unknown_flag_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = dcner(&["score", "--gold", "g", "--pred", "p", "--report", "r", "--fast"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_input_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = dcner(&["score", "--gold", "nope.conll", "--pred", "nope.conll", "--report", "r.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error:"));
    assert!(!dir.path().join("r.json").exists());
}

#[test]
fn malformed_input_is_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("g.conll"), "# id=a\nHEROIN\tX-drug\n\n").unwrap();
    let o = dcner(&["score", "--gold", "g.conll", "--pred", "g.conll", "--report", "r.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn version_names_formats() {
    let o = dcner(&["--version"], Path::new("."));
    assert_eq!(o.status.code(), Some(0));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains(&format!("model format {}", dcner::crf::MODEL_FORMAT_VERSION)), "{out}");
    assert!(out.contains(&format!("table format {}", dcner::lookup::TABLE_FORMAT_VERSION)), "{out}");
}

#[test]
fn split_with_published_counts() {
    let dir = tempfile::tempdir().unwrap();
    let base = chrono::NaiveDate::from_ymd_opt(2016, 1, 1).unwrap();
    let records: Vec<Record> = (0..8146)
        .rev()
        .map(|i| Record::new(format!("R{i:05}"), base + chrono::Duration::days(i / 5), "HEROIN TOXICITY"))
        .collect();
    save_records(dir.path().join("x.jsonl"), &records).unwrap();
    let o = dcner(
        &[
            "--quiet", "split", "--in", "x.jsonl", "--counts", "6108,816,1222", "--train", "tr.jsonl",
            "--validation", "va.jsonl", "--test", "te.jsonl",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let sizes: Vec<usize> = ["tr.jsonl", "va.jsonl", "te.jsonl"]
        .iter()
        .map(|f| load_records(dir.path().join(f)).unwrap().len())
        .collect();
    assert_eq!(sizes, [6108, 816, 1222]);

    let o = dcner(
        &["split", "--in", "x.jsonl", "--counts", "1,2", "--train", "a", "--validation", "b", "--test", "c"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn lookup_uses_table_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("in.conll"), "# id=a\nZZTOP\tO\nHEROIN\tO\n\n").unwrap();
    std::fs::write(dir.path().join("t.tsv"), "SEARCH_TERM\tREFERENT\nZZTOP\t\n").unwrap();
    let run = |env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_dcner"));
        c.args(["lookup", "--in", "in.conll", "--out", "out.conll"]).current_dir(dir.path());
        match env {
            Some(v) => c.env("DCNER_TABLE", v),
            None => c.env_remove("DCNER_TABLE"),
        };
        assert!(c.output().unwrap().status.success());
        std::fs::read_to_string(dir.path().join("out.conll")).unwrap()
    };
    assert_eq!(run(Some("t.tsv")), "# id=a\nZZTOP\tU-drug\nHEROIN\tO\n\n");
    assert_eq!(run(None), "# id=a\nZZTOP\tO\nHEROIN\tU-drug\n\n");
}

/// Every stage through the binary, checked against direct library calls.
#[test]
fn pipeline_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ok = |args: &[&str]| {
        let o = dcner(args, d);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
    };
    ok(&["--seed", "5", "synth", "--records", "200", "--out-records", "r.jsonl", "--out-gold", "g.conll"]);
    ok(&[
        "split", "--in", "r.jsonl", "--train", "tr.jsonl", "--validation", "va.jsonl", "--test", "te.jsonl", "--gold",
        "g.conll", "--gold-train", "gtr.conll", "--gold-validation", "gva.conll", "--gold-test", "gte.conll",
    ]);
    ok(&["train-crf", "--train", "gtr.conll", "--model", "m.json", "--max-epochs", "20"]);
    ok(&["predict", "--model", "m.json", "--in", "gte.conll", "--out", "crf.conll"]);
    ok(&["lookup", "--in", "gte.conll", "--out", "lk.conll"]);
    ok(&["enrich", "--model-pred", "crf.conll", "--lookup-pred", "lk.conll", "--candidates", "c.tsv", "--patch", "p.tsv"]);
    ok(&["report", "--gold", "gte.conll", "--crf", "crf.conll", "--lookup", "lk.conll", "--out", "rep.json"]);
    ok(&["tokenize", "--in", "te.jsonl", "--out", "tok.conll"]);

    let settings = dcner::synth::SynthSettings {
        seed: 5,
        n_records: 200,
        ..Default::default()
    };
    let corpus = dcner::synth::generate(&settings.into_config(dcner::LookupTable::builtin())).unwrap();
    assert_eq!(std::fs::read_to_string(d.join("r.jsonl")).unwrap(), dcner::corpus::render_records(&corpus.records));
    assert_eq!(std::fs::read_to_string(d.join("g.conll")).unwrap(), dcner::conll::render(&corpus.gold).unwrap());

    let gold = dcner::conll::read(d.join("gte.conll")).unwrap();
    let train = dcner::conll::read(d.join("gtr.conll")).unwrap();
    let config = dcner::crf::TrainConfig {
        max_epochs: 20,
        ..Default::default()
    };
    let model = dcner::crf::train::<f64>(&train, &config).unwrap();
    assert_eq!(std::fs::read_to_string(d.join("m.json")).unwrap(), model.to_json());
    let crf = dcner::crf::predict_corpus(&model, &gold);
    assert_eq!(std::fs::read_to_string(d.join("crf.conll")).unwrap(), dcner::conll::render(&crf).unwrap());
    let table = dcner::LookupTable::builtin();
    let lk = dcner::lookup::tag_corpus(&gold, &table).unwrap();
    let report = dcner::pipeline::pipeline_report(
        dcner::pipeline::StageOutputs {
            gold: Some(&gold),
            crf: Some(&crf),
            lookup: Some(&lk),
        },
        &table,
    )
    .unwrap();
    assert_eq!(std::fs::read_to_string(d.join("rep.json")).unwrap(), report.to_json());
    assert_eq!(report.lookup.fp, 0);

    let tok = dcner::conll::read(d.join("tok.conll")).unwrap();
    assert_eq!(tok.len(), gold.len());
    assert!(tok.iter().zip(&gold).all(|(t, g)| t.tokens == g.tokens));

    let o = dcner(&["report", "--gold", "gte.conll", "--crf", "crf.conll", "--out", "x.json"], d);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("lookup"), "{}", stderr(&o));
}
