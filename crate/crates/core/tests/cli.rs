//! End-to-end tests of the `cner` binary and its file formats.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cner(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cner"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn version_names_format_versions() {
    let dir = tempfile::tempdir().unwrap();
    let out = cner(&["--version"], dir.path());
    assert_ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("model container v1"), "{stdout}");
}

#[test]
fn tokenize_emits_tab_separated_tokens() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("in.txt"), "Dr. Smith prescribed 40 mg.").unwrap();
    let out = cner(&["tokenize", "--in", "in.txt"], dir.path());
    assert_ok(&out);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().filter(|l| !l.is_empty()).collect();
    // One sentence (abbreviation suppressed the split): Dr . Smith prescribed 40 mg .
    assert_eq!(lines.len(), 7, "{stdout}");
    let first: Vec<&str> = lines[0].split('\t').collect();
    assert_eq!(first, vec!["Dr", "0", "2", "dr"]);
    assert!(lines.iter().any(|l| l.starts_with("40\t")));
}

#[test]
fn synth_is_deterministic_at_file_level() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a", "b"] {
        let out = cner(&["synth", "--out", name, "--seed", "123"], dir.path());
        assert_ok(&out);
    }
    for file in [
        "corpus.tsv",
        "dictionary.tsv",
        "docs/doc-0000.txt",
        "docs/doc-0017.ann",
    ] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical seeds");
    }
}

#[test]
fn dict_annotate_then_evaluate_is_perfect_on_noise_free_corpus() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&cner(
        &["synth", "--out", "corpus", "--seed", "5"],
        dir.path(),
    ));
    assert_ok(&cner(
        &[
            "dict-annotate",
            "--dict",
            "corpus/dictionary.tsv",
            "--stopwords",
            "corpus/stopwords.txt",
            "--freq",
            "corpus/frequencies.tsv",
            "--in",
            "corpus",
            "--out-brat",
            "preds",
        ],
        dir.path(),
    ));
    let out = cner(
        &[
            "evaluate",
            "--gold",
            "corpus",
            "--pred",
            "preds",
            "--json",
            "eval.json",
        ],
        dir.path(),
    );
    assert_ok(&out);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("100.0"), "{stdout}");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("eval.json")).unwrap()).unwrap();
    assert_eq!(json["micro"]["exact"]["f1"], 1.0);
}

#[test]
fn agree_reports_symmetric_f() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&cner(
        &["synth", "--out", "corpus", "--seed", "6"],
        dir.path(),
    ));
    // Annotator A: the gold .ann files; annotator B: gazetteer output.
    fs::create_dir_all(dir.path().join("a")).unwrap();
    for entry in fs::read_dir(dir.path().join("corpus/docs")).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "ann") {
            fs::copy(&p, dir.path().join("a").join(p.file_name().unwrap())).unwrap();
        }
    }
    assert_ok(&cner(
        &[
            "dict-annotate",
            "--dict",
            "corpus/dictionary.tsv",
            "--in",
            "corpus",
            "--out-brat",
            "b",
        ],
        dir.path(),
    ));
    let ab = cner(
        &["agree", "--corpus", "corpus", "--a", "a", "--b", "b"],
        dir.path(),
    );
    assert_ok(&ab);
    let ba = cner(
        &["agree", "--corpus", "corpus", "--a", "b", "--b", "a"],
        dir.path(),
    );
    assert_ok(&ba);
    // F columns match when the annotators swap (P and R trade places).
    let f_of = |out: &Output| -> String {
        let text = String::from_utf8_lossy(&out.stdout).to_string();
        let row = text
            .lines()
            .find(|l| l.starts_with("b-vs-a"))
            .unwrap()
            .to_string();
        row.split_whitespace().nth(1).unwrap().to_string()
    };
    assert_eq!(f_of(&ab), f_of(&ba));
}

fn tiny_corpus_spec(dir: &Path) {
    fs::write(
        dir.join("spec.json"),
        r#"{
            "n_docs": 10,
            "background_vocab": 60,
            "terms_per_type": 5,
            "entity_types": ["DrugName"],
            "plant_rate": [0.5],
            "seed": 77
        }"#,
    )
    .unwrap();
}

fn tiny_tagger_config(dir: &Path) {
    fs::write(
        dir.join("tagger.json"),
        r#"{
            "word_dim": 8,
            "char_emb_dim": 4,
            "char_filters": 6,
            "hidden_dim": 8,
            "lr": 0.02,
            "max_epochs": 6,
            "patience": 2,
            "seed": 1
        }"#,
    )
    .unwrap();
}

#[test]
fn train_predict_round_trip_through_model_file() {
    let dir = tempfile::tempdir().unwrap();
    tiny_corpus_spec(dir.path());
    tiny_tagger_config(dir.path());
    assert_ok(&cner(
        &["synth", "--spec", "spec.json", "--out", "corpus"],
        dir.path(),
    ));
    assert_ok(&cner(
        &[
            "train",
            "--corpus",
            "corpus",
            "--config",
            "tagger.json",
            "--model-out",
            "model.json",
        ],
        dir.path(),
    ));
    assert_ok(&cner(
        &[
            "predict",
            "--model",
            "model.json",
            "--in",
            "corpus",
            "--out-brat",
            "p1",
        ],
        dir.path(),
    ));
    assert_ok(&cner(
        &[
            "predict",
            "--model",
            "model.json",
            "--in",
            "corpus",
            "--out-brat",
            "p2",
        ],
        dir.path(),
    ));
    // Prediction through a saved model is deterministic.
    for entry in fs::read_dir(dir.path().join("p1")).unwrap() {
        let p = entry.unwrap().path();
        let other = dir.path().join("p2").join(p.file_name().unwrap());
        assert_eq!(fs::read(&p).unwrap(), fs::read(&other).unwrap());
    }
    // Evaluation runs on the predictions.
    let out = cner(
        &[
            "evaluate", "--gold", "corpus", "--pred", "p1", "--types", "DrugName",
        ],
        dir.path(),
    );
    assert_ok(&out);
}

#[test]
fn corrupt_model_is_a_clean_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("model.json"),
        "{\"format_version\":1,\"model\":{tru",
    )
    .unwrap();
    let out = cner(
        &[
            "predict",
            "--model",
            "model.json",
            "--in",
            "x",
            "--out-brat",
            "y",
        ],
        dir.path(),
    );
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("corrupt"), "{stderr}");
}

#[test]
fn gradcheck_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = cner(&["gradcheck", "--crf-instances", "25"], dir.path());
    assert_ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("tagger_end_to_end"), "{stdout}");
}

#[test]
fn experiment_runs_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    tiny_corpus_spec(dir.path());
    assert_ok(&cner(
        &["synth", "--spec", "spec.json", "--out", "corpus"],
        dir.path(),
    ));
    fs::write(
        dir.path().join("exp.json"),
        r#"{
            "corpus_dir": "corpus",
            "systems": ["terminology", "pure"],
            "seeds": [0],
            "folds": 2,
            "tagger": {
                "word_dim": 8, "char_emb_dim": 4, "char_filters": 6,
                "hidden_dim": 8, "lr": 0.02, "max_epochs": 4, "patience": 2
            },
            "out_dir": "out1"
        }"#,
    )
    .unwrap();
    let out = cner(&["experiment", "--config", "exp.json"], dir.path());
    assert_ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("terminology"), "{stdout}");
    assert!(stdout.contains("pure"), "{stdout}");
    assert!(dir.path().join("out1/table.txt").exists());
    assert!(dir.path().join("out1/report.json").exists());

    // Re-running with the same config (different out dir) reproduces the
    // report except for the out_dir echo itself.
    let cfg2 = fs::read_to_string(dir.path().join("exp.json"))
        .unwrap()
        .replace("out1", "out2");
    fs::write(dir.path().join("exp2.json"), cfg2).unwrap();
    assert_ok(&cner(&["experiment", "--config", "exp2.json"], dir.path()));
    let r1 = fs::read_to_string(dir.path().join("out1/report.json"))
        .unwrap()
        .replace("out1", "OUT");
    let r2 = fs::read_to_string(dir.path().join("out2/report.json"))
        .unwrap()
        .replace("out2", "OUT");
    assert_eq!(r1, r2);

    // Config errors carry the offending field name.
    fs::write(
        dir.path().join("bad.json"),
        r#"{"corpus_dir": "corpus", "systems": ["nope"], "out_dir": "out3"}"#,
    )
    .unwrap();
    let out = cner(&["experiment", "--config", "bad.json"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("systems"));
}

#[test]
fn crossval_prints_min_max_rows() {
    let dir = tempfile::tempdir().unwrap();
    tiny_corpus_spec(dir.path());
    tiny_tagger_config(dir.path());
    assert_ok(&cner(
        &["synth", "--spec", "spec.json", "--out", "corpus"],
        dir.path(),
    ));
    let out = cner(
        &[
            "crossval",
            "--corpus",
            "corpus",
            "--k",
            "2",
            "--seeds",
            "2",
            "--system",
            "pure",
            "--config",
            "tagger.json",
            "--out",
            "cv-out",
        ],
        dir.path(),
    );
    assert_ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("pure"), "{stdout}");
    assert!(
        stdout.contains('['),
        "expected [min-max] brackets: {stdout}"
    );
}
