use std::fs;
use std::process::Command;

fn deeprc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_deeprc"))
}

#[test]
fn lift_check_passes() {
    let out = deeprc().args(["lift-check", "--periods", "10"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
}

#[test]
fn verify_lemma_passes() {
    let out = deeprc().args(["verify-lemma", "--trials", "5"]).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert_eq!(text.matches("PASS").count(), 5, "{text}");
    assert!(!text.contains("FAIL"));
}

#[test]
fn short_run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = deeprc()
        .args(["run", "--seed", "9", "--no-noise", "--policy", "first-sample"])
        .args(["--init-periods", "60", "--run-periods", "3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in [
        "deeprc.csv",
        "baseline.csv",
        "nocontrol.csv",
        "iteration_cost.csv",
        "metadata.json",
        "outputs.svg",
        "iteration_cost.svg",
    ] {
        let path = dir.path().join(name);
        assert!(fs::metadata(&path).unwrap().len() > 0, "{name}");
    }
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 9);
    assert_eq!(meta["noise"], false);
    assert_eq!(meta["policy"], "first-sample");
}

#[test]
fn custom_config_file_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = deeprc::config::CASE_STUDY_TOML
        .replace("init_periods = 1000", "init_periods = 50")
        .replace("run_periods = 100", "run_periods = 2");
    let path = dir.path().join("short.toml");
    fs::write(&path, cfg).unwrap();
    let out_dir = dir.path().join("out");
    let out = deeprc()
        .args(["run", "--no-plots", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let costs = fs::read_to_string(out_dir.join("iteration_cost.csv")).unwrap();
    assert_eq!(costs.lines().count(), 1 + 52);
}

#[test]
fn bad_arguments_fail_cleanly() {
    let out = deeprc().args(["run", "--policy", "sometimes"]).output().unwrap();
    assert!(!out.status.success());
    let out = deeprc()
        .args(["run", "--config", "/nonexistent/config.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/config.toml"));
}
