use std::path::Path;
use std::process::Command;

fn majorant() -> Command {
    Command::new(env!("CARGO_BIN_EXE_majorant"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn certify_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[problem]\nmanufactured = \"sin_decay_1d\"\n[solve]\nnx = 21\nnt = 10\n[certify]\ncase = \"div0\"\nflux = \"min\"\n",
    );
    let out = dir.path().join("report.json");
    let status = majorant()
        .args(["certify", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(report["efficiency_index"].as_f64().unwrap() >= 1.0);
    assert_eq!(report["guarantee_holds"], true);
    assert_eq!(report["mesh"]["nodes"][0], 21);
}

#[test]
fn class_mismatch_exits_nonzero_with_stage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[problem]\nmanufactured = \"sin_decay_1d\"\n[certify]\ncase = \"delta\"\n",
    );
    let out = majorant().args(["certify", "--config"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("problem stage") && err.contains("class mismatch"), "{err}");
}

#[test]
fn study_writes_csv_and_rejects_one_level() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[problem]\nmanufactured = \"sin_decay_1d\"\n[solve]\nnx = 6\nnt = 4\n");
    let table = dir.path().join("study.csv");
    let ok = majorant()
        .args(["study", "--levels", "2", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&table)
        .status()
        .unwrap();
    assert!(ok.success());
    let text = std::fs::read_to_string(&table).unwrap();
    assert!(text.starts_with("level,nodes,h,dt,true_error,bound,efficiency_index"));
    assert_eq!(text.lines().count(), 3);

    let bad = majorant()
        .args(["study", "--levels", "1", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&table)
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("config stage"));
}

#[test]
fn solve_then_certify_loaded_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[problem]\nmanufactured = \"sep_2d\"\n[solve]\nnx = 9\nnt = 4\nload = \"v.txt\"\n[output]\nfield = \"v.txt\"\n",
    );
    let solve_cfg = dir.path().join("solve.toml");
    std::fs::write(
        &solve_cfg,
        "[problem]\nmanufactured = \"sep_2d\"\n[solve]\nnx = 9\nnt = 4\n[output]\nfield = \"v.txt\"\n",
    )
    .unwrap();
    assert!(majorant().args(["solve", "--config"]).arg(&solve_cfg).status().unwrap().success());
    assert!(dir.path().join("v.txt").exists());
    let out = majorant().args(["certify", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["guarantee_holds"], true);
}
