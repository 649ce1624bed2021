use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/small").join(name)
}

fn gibs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gibs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn missing_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = gibs(&["fit", "--config", s(&dir.path().join("nope.conf"))]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn missing_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, format!("securities = {}\nbasis = absent.csv\nrf = {}\ncategories = {}\nseed = 1\n",
        s(&fixture("securities.csv")), s(&fixture("rf.csv")), s(&fixture("categories.csv")))).unwrap();
    assert_eq!(code(&gibs(&["fit", "--config", s(&conf), "--out", s(&dir.path().join("o"))])), 2);
}

#[test]
fn unknown_key_and_unknown_test_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "colour = blue\n").unwrap();
    assert_eq!(code(&gibs(&["fit", "--config", s(&conf)])), 2);
    let o = dir.path().join("o");
    assert_eq!(code(&gibs(&["test", "astrology", "--config", s(&fixture("run.conf")), "--out", s(&o)])), 2);
}

#[test]
fn fit_without_seed_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, format!("securities = {}\nbasis = {}\nrf = {}\ncategories = {}\n",
        s(&fixture("securities.csv")), s(&fixture("basis.csv")), s(&fixture("rf.csv")), s(&fixture("categories.csv")))).unwrap();
    assert_eq!(code(&gibs(&["fit", "--config", s(&conf), "--out", s(&dir.path().join("o"))])), 2);
}

#[test]
fn malformed_csv_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("securities.csv");
    fs::write(&bad, "timestamp,A\n2007-W01,0.01\n2007-W02,abc\n").unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, format!("securities = securities.csv\nbasis = {}\nrf = {}\ncategories = {}\nseed = 1\n",
        s(&fixture("basis.csv")), s(&fixture("rf.csv")), s(&fixture("categories.csv")))).unwrap();
    assert_eq!(code(&gibs(&["fit", "--config", s(&conf), "--out", s(&dir.path().join("o"))])), 3);
}

#[test]
fn report_before_fit_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = gibs(&["report", "--config", s(&fixture("run.conf")), "--out", s(dir.path())]);
    assert_eq!(code(&out), 3);
}

#[test]
fn manifest_replays_and_inputs_are_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = ["securities.csv", "basis.csv", "rf.csv", "categories.csv"];
    let before: Vec<Vec<u8>> = inputs.iter().map(|f| fs::read(fixture(f)).unwrap()).collect();

    let first = dir.path().join("first");
    let out = gibs(&["fit", "--config", s(&fixture("run.conf")), "--out", s(&first)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = fs::read_to_string(first.join("manifest-fit.conf")).unwrap();
    assert!(manifest.contains("# sha256 securities:"));

    let second = dir.path().join("second");
    let replay = dir.path().join("replay.conf");
    fs::write(&replay, manifest).unwrap();
    let out = gibs(&["fit", "--config", s(&replay), "--out", s(&second)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["selection.csv", "alpha_test.csv", "risk_premia.csv", "summary_counts.csv"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap(), "{f}");
    }
    for (f, bytes) in inputs.iter().zip(before) {
        assert_eq!(fs::read(fixture(f)).unwrap(), bytes, "{f} was modified");
    }
}
