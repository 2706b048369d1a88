use std::path::Path;
use std::process::{Command, Output};

fn see(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_see")).args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_corpus(dir: &Path) -> std::path::PathBuf {
    let root = dir.join("corpus");
    let out = see(&["synth", "--count", "3", "--size", "40", "--seed", "4", "--out", p(&root)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    root
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(see(&["eval", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(see(&["eval"]).status.code(), Some(1));
    assert_eq!(see(&["synth", "--out", "/tmp/x", "--size", "4"]).status.code(), Some(1));
}

#[test]
fn help_exits_with_zero() {
    assert!(see(&["--help"]).status.success());
}

#[test]
fn missing_inputs_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = see(&[
        "enhance",
        "--image",
        p(&dir.path().join("none.png")),
        "--edges",
        p(&dir.path().join("none.png")),
        "--saliency",
        p(&dir.path().join("none.png")),
        "--no-pre",
        "--out",
        p(&dir.path().join("o.png")),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn incomplete_dataset_aborts_unless_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let root = small_corpus(dir.path());
    std::fs::remove_file(root.join("gt/synth_0001.png")).unwrap();
    let report = dir.path().join("r");
    assert_eq!(see(&["eval", "--root", p(&root), "--out", p(&report)]).status.code(), Some(1));
    let out = see(&["eval", "--root", p(&root), "--out", p(&report), "--skip-incomplete"]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(report.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["skipped"].as_array().unwrap().len(), 1);
    assert_eq!(json["skipped"][0]["key"], "synth_0001");
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let root = small_corpus(dir.path());
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"pipeline": {"contrast_k": 2}, "eval": {"variants": ["baseline"], "jobs": 2}}"#,
    )
    .unwrap();
    let report = dir.path().join("r");
    let out = see(&["--config", p(&cfg), "eval", "--root", p(&root), "--out", p(&report), "--contrast-k", "6"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(report.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["config_echo"]["contrast_k"], 6);
    assert_eq!(json["variants"], serde_json::json!(["baseline"]));

    std::fs::write(&cfg, r#"{"eval": {"jbos": 2}}"#).unwrap();
    assert_eq!(see(&["--config", p(&cfg), "eval", "--root", p(&root)]).status.code(), Some(1));
}

#[test]
fn enhance_single_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let root = small_corpus(dir.path());
    let image = root.join("images/synth_0000.png");
    let edges = root.join("edges/synth_0000.png");
    let sal = root.join("saliency/corrupt/synth_0000.png");
    let rec = dir.path().join("rec.png");
    let out = see(&["enhance", "--image", p(&image), "--edges", p(&edges), "--export-reconstructed", p(&rec)]);
    assert!(out.status.success());
    assert!(rec.is_file());

    // Resume with the reconstructed image's saliency supplied as a file.
    let enhanced = dir.path().join("enhanced.png");
    let out = see(&[
        "enhance",
        "--image",
        p(&image),
        "--edges",
        p(&edges),
        "--saliency",
        p(&sal),
        "--reconstructed-saliency",
        p(&sal),
        "--out",
        p(&enhanced),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(enhanced.is_file());
}

#[test]
fn enhance_batch_writes_one_map_per_key() {
    let dir = tempfile::tempdir().unwrap();
    let root = small_corpus(dir.path());
    let out_dir = dir.path().join("enhanced");
    let out = see(&["enhance", "--root", p(&root), "--toy-provider", "--out", p(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_dir(&out_dir).unwrap().count(), 3);
}

#[test]
fn selftest_passes() {
    let out = see(&["selftest"]);
    assert!(out.status.success());
    assert!(!String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}
