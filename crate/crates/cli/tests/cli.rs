use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use adtext::pipeline::load_model;
use adtext::regress::RegressorKind;
use tempfile::TempDir;

fn adtext(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adtext")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A temp dir holding `data/synth.csv` with `records` listings.
fn corpus(records: usize) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let out = adtext(&["synth", "--records", &records.to_string(), "--seed", "7", "--out", "data"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    dir
}

fn train(dir: &Path, extra: &[&str]) -> PathBuf {
    let mut args = vec!["train", "--input", "data/synth.csv", "--out", "model"];
    args.extend_from_slice(extra);
    let out = adtext(&args, dir);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    dir.join("model/model.json")
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn train_writes_a_loadable_model() {
    let dir = corpus(300);
    let out = adtext(&["train", "--input", "data/synth.csv", "--out", "model"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("training RMSE w/o text-mining") && text.contains("training RMSE with text mining"));

    let model = load_model(dir.path().join("model/model.json")).unwrap();
    assert_eq!(model.stage1.regressor.kind(), RegressorKind::Linear);
    let (records, _) = adtext::ingest::read_records(dir.path().join("data/synth.csv")).unwrap();
    assert_eq!(model.predict(&records[..5]).len(), 5);
    let run = model.run_config.expect("run config embedded");
    assert_eq!(run["input"], "data/synth.csv");
    assert_eq!(run["seed"], 0);
}

#[test]
fn same_seed_gives_identical_model_bytes() {
    let dir = corpus(200);
    let path = train(dir.path(), &["--stage1", "nn", "--seed", "3"]);
    let first = std::fs::read(&path).unwrap();
    train(dir.path(), &["--stage1", "nn", "--seed", "3"]);
    assert_eq!(first, std::fs::read(&path).unwrap());
}

#[test]
fn stage1_flag_is_recorded() {
    let dir = corpus(200);
    let model = load_model(train(dir.path(), &["--stage1", "svr"])).unwrap();
    assert_eq!(model.stage1.regressor.kind(), RegressorKind::Svr);
    assert_eq!(model.run_config.unwrap()["stage1"], "svr");
}

#[test]
fn evaluate_two_folds() {
    let dir = corpus(200);
    let out = adtext(&["evaluate", "--input", "data/synth.csv", "--folds", "2", "--out", "eval"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let table = stdout(&out);
    assert!(table.contains("w/o text-mining") && table.contains("RMSE") && table.contains("Corr."));
    let json = read_json(&dir.path().join("eval/evaluation.json"));
    assert_eq!(json["report"]["folds"], 2);
    assert_eq!(json["report"]["per_fold"].as_array().unwrap().len(), 4);
    assert_eq!(json["config"]["folds"], 2);
}

#[test]
fn evaluate_with_too_few_records_is_a_data_error() {
    let dir = corpus(3);
    let out = adtext(&["evaluate", "--input", "data/synth.csv", "--folds", "5", "--out", "eval"], dir.path());
    assert_eq!(code(&out), 2);
}

#[test]
fn keywords_top_four() {
    // Small corpora leave a near-free common shift in the stage-2 weights
    // that can push one whole side of the table past zero.
    let dir = corpus(1000);
    let model = train(dir.path(), &[]);
    let model = model.to_str().unwrap();
    let out = adtext(&["keywords", "--model", model, "--top", "4"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let lines: Vec<_> = stdout(&out).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 2 + 4, "{lines:?}");

    let out = adtext(&["keywords", "--model", model, "--top", "4", "--json"], dir.path());
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["positive"].as_array().unwrap().len(), 4);
    assert_eq!(json["negative"].as_array().unwrap().len(), 4);
}

#[test]
fn corrupt_model_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("model.json"), "{ not a model").unwrap();
    let out = adtext(&["keywords", "--model", "model.json"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("FormatVersionMismatch"), "{}", stderr(&out));

    let out = adtext(&["highlight", "--model", "model.json", "--text", "sea view"], dir.path());
    assert_eq!(code(&out), 2);
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["train", "--bogus"][..],
        &["evaluate", "--folds", "many"],
        &["train", "--input", "x.csv", "--stage1", "forest"],
        &["evaluate", "--input", "x.csv", "--folds", "1"],
        &["train"],
        &["keywords", "--model", "m.json", "--top", "0"],
        &[],
    ] {
        let out = adtext(args, dir.path());
        assert_eq!(code(&out), 1, "{args:?}: {}", stderr(&out));
    }
    assert_eq!(code(&adtext(&["--help"], dir.path())), 0);
    assert_eq!(code(&adtext(&["--version"], dir.path())), 0);
}

#[test]
fn empty_input_cleans_to_empty_output() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.csv"), "").unwrap();
    let out = adtext(&["clean", "--input", "empty.csv", "--out", "clean"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).contains("warning"));
    assert_eq!(stdout(&out).trim(), "0 -> 0 -> 0");
    let (records, _) = adtext::ingest::read_records(dir.path().join("clean/cleaned.csv")).unwrap();
    assert!(records.is_empty());
}

#[test]
fn clean_reports_counts_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/clean_fixture.csv");
    std::fs::copy(fixture, dir.path().join("listings.csv")).unwrap();
    let out = adtext(&["clean", "--input", "listings.csv", "--category", "apartment-rent", "--out", "c"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "10 -> 8 -> 6");
    let meta = read_json(&dir.path().join("c/cleaned.meta.json"));
    assert_eq!(meta["after_threshold"], 6);
    assert_eq!(meta["config"]["category"], "apartment-rent");
}

#[test]
fn config_file_is_layered_under_flags() {
    let dir = corpus(200);
    std::fs::write(dir.path().join("run.conf"), "# run settings\ninput = data/synth.csv\nfolds = 4\nseed = 9\n").unwrap();
    let out = adtext(&["evaluate", "--config", "run.conf", "--folds", "2", "--out", "eval"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let json = read_json(&dir.path().join("eval/evaluation.json"));
    assert_eq!(json["report"]["folds"], 2);
    assert_eq!(json["report"]["seed"], 9);

    std::fs::write(dir.path().join("bad.conf"), "colour = blue\n").unwrap();
    let out = adtext(&["evaluate", "--config", "bad.conf"], dir.path());
    assert_eq!(code(&out), 1);
}

#[test]
fn highlight_writes_coloured_html_with_config_note() {
    let dir = corpus(300);
    let model = train(dir.path(), &[]);
    let model = model.to_str().unwrap();
    let out = adtext(&["highlight", "--model", model, "--input", "data/synth.csv", "--all", "--out", "h/all.html"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let html = std::fs::read_to_string(dir.path().join("h/all.html")).unwrap();
    assert_eq!(html.matches("<p>").count(), 300);
    assert!(html.contains("<!--") && html.contains("\"attribution\": \"full\""));
    assert!(html.contains("rgb(0,0,") && html.contains(",0,0)"));

    let out = adtext(&["highlight", "--model", model, "--text", "quiet seaview flat", "--split", "--out", "one.html"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let html = std::fs::read_to_string(dir.path().join("one.html")).unwrap();
    assert!(html.contains(">seaview</span>"));
    assert!(html.contains("\"split_evenly\""));

    let out = adtext(&["highlight", "--model", model, "--input", "data/synth.csv", "--index", "999"], dir.path());
    assert_eq!(code(&out), 2);
}

#[test]
fn synth_is_deterministic_and_records_planted_effects() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let run = adtext(&["synth", "--records", "50", "--keywords", "6", "--noise", "0", "--out", out], dir.path());
        assert_eq!(code(&run), 0, "{}", stderr(&run));
    }
    let a = std::fs::read(dir.path().join("a/synth.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b/synth.csv")).unwrap());
    let planted = read_json(&dir.path().join("a/planted.json"));
    assert_eq!(planted["planted"].as_array().unwrap().len(), 6);
    assert_eq!(planted["config"]["noise_sigma"], 0.0);

    let run = adtext(&["synth", "--keywords", "41", "--out", "c"], dir.path());
    assert_eq!(code(&run), 1);
}
