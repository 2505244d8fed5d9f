mod common;

use std::fs;
use std::path::Path;

use compsent::experiment::{run_experiment, ExperimentConfig};
use compsent::Error;

fn config(dir: &Path, data: &str, extra: &str) -> ExperimentConfig {
    let text = format!(
        "seed = 5\noutput_dir = \"out\"\n[data]\npath = \"{data}\"\n[model]\nestimators = 40\nmax_depth = 4\n{extra}"
    );
    ExperimentConfig::from_toml(&text, &[], dir).unwrap()
}

fn with(cfg: &ExperimentConfig, overrides: &[&str], dir: &Path, data: &str) -> ExperimentConfig {
    let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    let text = format!(
        "seed = {}\noutput_dir = \"{}\"\n[data]\npath = \"{data}\"\n[model]\nestimators = 40\nmax_depth = 4\n",
        cfg.seed,
        cfg.output_dir.display()
    );
    ExperimentConfig::from_toml(&text, &o, dir).unwrap()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn every_mode_runs_and_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = common::small_corpus(1);
    common::write_jsonl(&ds, tmp.path(), "corpus.jsonl");
    let base = config(tmp.path(), "corpus.jsonl", "");
    for (mode, expect) in [
        ("holdout", vec!["report.csv", "errors.csv", "model.cmod"]),
        ("cv", vec!["cv.csv", "cv.md", "report.md", "chart.svg"]),
        ("cross-domain", vec!["cross_domain.csv", "cross_domain.md"]),
        ("baseline", vec!["report.csv", "error_groups.csv"]),
    ] {
        let mut outs = Vec::new();
        for run in 0..2 {
            let out = format!("out-{mode}-{run}");
            let cfg = with(
                &base,
                &[&format!("eval.mode={mode}"), "eval.chart=true", &format!("output_dir=\"{out}\"")],
                tmp.path(),
                "corpus.jsonl",
            );
            let outcome = run_experiment(&cfg).unwrap();
            for f in &expect {
                assert!(outcome.files.contains(*f), "{mode}: {f} missing from {:?}", outcome.files);
            }
            assert!(outcome.micro_f1 > 0.5, "{mode}: {}", outcome.summary);
            outs.push(files(&tmp.path().join(out)));
        }
        // config.json names the output directory, which differs between runs.
        let strip = |v: &Vec<(String, Vec<u8>)>| v.iter().filter(|(n, _)| n != "config.json").cloned().collect::<Vec<_>>();
        assert_eq!(strip(&outs[0]), strip(&outs[1]), "{mode} reports differ between runs");
    }
}

#[test]
fn same_output_dir_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    common::write_jsonl(&common::small_corpus(2), tmp.path(), "c.jsonl");
    let cfg = config(tmp.path(), "c.jsonl", "[eval]\nmode = \"holdout\"\n");
    run_experiment(&cfg).unwrap();
    let first = files(&cfg.output_dir);
    run_experiment(&cfg).unwrap();
    assert_eq!(first, files(&cfg.output_dir));
}

#[test]
fn majority_cv_scores_the_majority_share() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = common::synthetic_corpus([[524, 136, 59], [0, 0, 0], [0, 0, 0]], 0.0, 4);
    common::write_jsonl(&ds, tmp.path(), "m.jsonl");
    let cfg = config(tmp.path(), "m.jsonl", "[pipeline]\nmodel = \"majority\"\nfeatures = []\n");
    let outcome = run_experiment(&cfg).unwrap();
    assert!((outcome.micro_f1 - 524.0 / 719.0).abs() < 0.001, "{}", outcome.micro_f1);
}

#[test]
fn invalid_scope_names_the_field() {
    let err = ExperimentConfig::from_toml(
        "[data]\npath = \"x\"\n[pipeline]\nscope = \"sideways\"\n",
        &[],
        Path::new("."),
    )
    .unwrap_err();
    assert!(matches!(&err, Error::Config(_)));
    assert!(err.to_string().contains("pipeline.scope"), "{err}");
}

#[test]
fn missing_data_file_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "absent.jsonl", "");
    assert!(matches!(run_experiment(&cfg), Err(Error::Config(_))));
}

#[test]
fn unlocatable_targets_are_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = common::small_corpus(6);
    let mut sentences = ds.sentences().to_vec();
    sentences[0].object_b = "zeppelin".into();
    let ds = compsent::corpus::Dataset::new(sentences, "edited").unwrap();
    common::write_jsonl(&ds, tmp.path(), "c.jsonl");
    let cfg = config(tmp.path(), "c.jsonl", "[eval]\nmode = \"holdout\"\n");
    run_experiment(&cfg).unwrap();
    let diag = fs::read_to_string(cfg.output_dir.join("diagnostics.csv")).unwrap();
    assert_eq!(diag.lines().count(), 2, "{diag}");
    assert!(diag.contains(&ds.sentences()[0].id));
}
