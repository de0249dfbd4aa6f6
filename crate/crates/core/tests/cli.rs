use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use invextract::raster::write_png;
use invextract::synthfix::{generate, FixtureSpec, HeaderStyle};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_invextract"));
    cmd.env_remove("INVEXTRACT_OCR_BIN");
    cmd
}

fn write_fixture(dir: &Path, name: &str, seed: u64, style: HeaderStyle) -> PathBuf {
    let (img, truth) = generate(&FixtureSpec::new(seed, style, 2)).unwrap();
    let path = dir.join(name);
    write_png(&img, &path).unwrap();
    truth.write_sidecar(&path).unwrap();
    path
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn schema_subcommand_prints_the_schema() {
    let out = bin().arg("schema").output().unwrap();
    let doc = stdout_json(&out);
    assert_eq!(doc["properties"]["schema"]["const"], 1);
}

#[test]
fn run_with_mock_engine_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let img = write_fixture(dir.path(), "a.png", 60, HeaderStyle::Ruled);
    let doc = stdout_json(&bin().args(["run", "--ocr", "mock"]).arg(&img).output().unwrap());
    assert_eq!(doc["diagnostics"]["header_layer"], "lattice");

    let target = dir.path().join("a.json");
    let out = bin().args(["run", "--ocr", "mock", "--out"]).arg(&target).arg(&img).output().unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let written: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(written, doc);
}

#[test]
fn debug_dir_receives_stage_images() {
    let dir = tempfile::tempdir().unwrap();
    let img = write_fixture(dir.path(), "a.png", 61, HeaderStyle::FreeText);
    let dumps = dir.path().join("dbg");
    let out = bin().args(["run", "--ocr", "mock", "--debug-dir"]).arg(&dumps).arg(&img).output().unwrap();
    assert!(out.status.success());
    assert_eq!(std::fs::read_dir(&dumps).unwrap().count(), 12);
}

#[test]
fn config_file_is_applied_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let img = write_fixture(dir.path(), "a.png", 62, HeaderStyle::BorderlessAligned);
    let good = dir.path().join("good.toml");
    std::fs::write(&good, "record_timings = true\n").unwrap();
    let doc = stdout_json(&bin().args(["run", "--ocr", "mock", "--config"]).arg(&good).arg(&img).output().unwrap());
    assert!(doc["diagnostics"]["timings_ms"].is_object());

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "no_such_key = 1\n").unwrap();
    let out = bin().args(["run", "--ocr", "mock", "--config"]).arg(&bad).arg(&img).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_key"));
}

#[test]
fn missing_external_engine_exits_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let img = write_fixture(dir.path(), "a.png", 63, HeaderStyle::Ruled);
    let out = bin()
        .env("INVEXTRACT_OCR_BIN", dir.path().join("no-such-ocr"))
        .args(["run", "--ocr", "external"])
        .arg(&img)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn missing_sidecar_exits_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let (img, _) = generate(&FixtureSpec::new(64, HeaderStyle::Ruled, 1)).unwrap();
    let path = dir.path().join("bare.png");
    write_png(&img, &path).unwrap();
    let out = bin().args(["run", "--ocr", "mock"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn batch_list_runs_every_entry() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), "one.png", 65, HeaderStyle::Ruled);
    write_fixture(dir.path(), "two.png", 66, HeaderStyle::FreeText);
    let list = dir.path().join("list.txt");
    std::fs::write(&list, "# invoices\none.png\n\ntwo.png\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = bin().args(["run", "--ocr", "mock", "--batch"]).arg(&list).arg("--out").arg(&out_dir).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for stem in ["one", "two"] {
        let text = std::fs::read_to_string(out_dir.join(format!("{stem}.json"))).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(doc["source"]["path"].as_str().unwrap().ends_with(&format!("{stem}.png")));
    }

    std::fs::write(&list, "one.png\nmissing.png\n").unwrap();
    let out = bin().args(["run", "--ocr", "mock", "--batch"]).arg(&list).arg("--out").arg(&out_dir).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn image_and_batch_are_exclusive() {
    let out = bin().args(["run", "a.png", "--batch", "list.txt"]).output().unwrap();
    assert!(!out.status.success());
    let out = bin().arg("run").output().unwrap();
    assert!(!out.status.success());
}
