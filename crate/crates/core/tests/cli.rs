//! CLI contract tests: exit codes, machine-readable error payloads, and the
//! config echo convention.

use std::path::Path;
use std::process::{Command, Output};

fn strokepipe(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_strokepipe"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn strokepipe")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "expected success, stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Nonzero exit and a JSON error object with the expected `kind`.
fn assert_error_kind(out: &Output, kind: &str) {
    assert!(!out.status.success(), "expected failure, got success");
    let stderr = String::from_utf8_lossy(&out.stderr);
    let payload: serde_json::Value = serde_json::from_str(stderr.trim())
        .unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {stderr}"));
    assert_eq!(payload["error"]["kind"], kind, "payload: {payload}");
}

fn make_corpus(dir: &Path) {
    let out = strokepipe(
        dir,
        &["synth", "--out-dir", "corpus", "--n-per-class", "3", "--size", "32x32", "--seed", "3"],
    );
    assert_ok(&out);
}

#[test]
fn feature_kind_mismatch_is_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    make_corpus(dir.path());
    assert_ok(&strokepipe(
        dir.path(),
        &["extract", "--manifest", "corpus/manifest.csv", "--out", "h.csv", "--feature", "haralick28", "--resize", "32x32"],
    ));
    assert_ok(&strokepipe(
        dir.path(),
        &[
            "extract", "--manifest", "corpus/manifest.csv", "--out", "n.csv", "--feature",
            "nmf14", "--nmf-k", "3", "--resize", "32x32",
        ],
    ));
    assert_ok(&strokepipe(
        dir.path(),
        &["train", "--features", "h.csv", "--manifest", "corpus/manifest.csv", "--out", "m.json", "--kernel", "linear"],
    ));
    // scoring nmf features with a haralick model must fail loudly
    let out = strokepipe(
        dir.path(),
        &["predict", "--model", "m.json", "--features", "n.csv", "--out", "p.csv"],
    );
    assert_error_kind(&out, "feature-kind-mismatch");
}

#[test]
fn missing_image_error_names_offending_sample() {
    let dir = tempfile::tempdir().unwrap();
    make_corpus(dir.path());
    // break one path in the manifest
    let manifest = dir.path().join("corpus/manifest.csv");
    let text = std::fs::read_to_string(&manifest).unwrap();
    let broken = text.replace("images/stroke_001.pgm", "images/gone.pgm");
    std::fs::write(&manifest, broken).unwrap();
    let out = strokepipe(
        dir.path(),
        &["extract", "--manifest", "corpus/manifest.csv", "--out", "h.csv", "--feature", "haralick28", "--resize", "32x32"],
    );
    assert_error_kind(&out, "io");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("stroke_001"), "error does not name the sample: {stderr}");
}

#[test]
fn single_class_training_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    make_corpus(dir.path());
    let manifest = dir.path().join("corpus/manifest.csv");
    let text = std::fs::read_to_string(&manifest).unwrap();
    let single: String = text
        .lines()
        .filter(|l| !l.contains(",normal"))
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(&manifest, single + "\n").unwrap();
    assert_ok(&strokepipe(
        dir.path(),
        &["extract", "--manifest", "corpus/manifest.csv", "--out", "h.csv", "--feature", "haralick28", "--resize", "32x32"],
    ));
    let out = strokepipe(
        dir.path(),
        &["train", "--features", "h.csv", "--manifest", "corpus/manifest.csv", "--out", "m.json", "--kernel", "linear"],
    );
    assert_error_kind(&out, "single-class");
}

#[test]
fn config_echo_written_next_to_outputs() {
    let dir = tempfile::tempdir().unwrap();
    make_corpus(dir.path());
    assert!(dir.path().join("corpus/synth.config.json").exists());
    assert_ok(&strokepipe(
        dir.path(),
        &["extract", "--manifest", "corpus/manifest.csv", "--out", "h.csv", "--feature", "haralick28", "--resize", "32x32"],
    ));
    let echo: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("h.config.json")).unwrap())
            .unwrap();
    assert_eq!(echo["command"], "extract");
    assert_eq!(echo["config"]["feature"], "haralick28");
    assert_eq!(echo["config"]["pre"]["resize"], "32x32");
}

#[test]
fn bad_size_flag_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = strokepipe(
        dir.path(),
        &["synth", "--out-dir", "x", "--size", "banana"],
    );
    assert!(!out.status.success());
}

#[test]
fn loocv_requires_two_samples_per_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = strokepipe(
        dir.path(),
        &["synth", "--out-dir", "corpus", "--n-per-class", "1", "--size", "32x32"],
    );
    assert_ok(&out);
    let out = strokepipe(
        dir.path(),
        &["loocv", "--manifest", "corpus/manifest.csv", "--pipeline", "haralick", "--out", "r.json", "--resize", "32x32"],
    );
    assert_error_kind(&out, "invalid-record");
}

#[test]
fn tier2_report_lists_every_sample() {
    let dir = tempfile::tempdir().unwrap();
    make_corpus(dir.path());
    let out = strokepipe(
        dir.path(),
        &["tier2", "--manifest", "corpus/manifest.csv", "--out", "t2.json", "--resize", "32x32"],
    );
    assert_ok(&out);
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("t2.json")).unwrap()).unwrap();
    assert_eq!(report["pipeline"], "tier2-masked");
    assert_eq!(report["per_sample"].as_array().unwrap().len(), 6);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("predicted"), "text table missing: {stdout}");
}
