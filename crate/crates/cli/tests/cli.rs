use std::process::Command;

fn lcl() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lcl"))
}

#[test]
fn empty_selection_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "checks = []\n").unwrap();
    let out = lcl().args(["verify-all", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("o/report.json").exists());
}

#[test]
fn bad_spec_exits_two_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "densities = [\"banana:k=2\"]\n").unwrap();
    let out = lcl().args(["spectral", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("banana:k=2"));
}

#[test]
fn usage_error_exits_two() {
    let out = lcl().args(["spectral", "--format", "pdf"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn asserted_failure_exits_one_and_names_anchor_and_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "checks = [\"spectral_gap\"]\ndensities = [\"gaussian:s=1\"]\n[tolerances]\nspectral_gap = 0.0\n").unwrap();
    let out = lcl().args(["spectral", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("C_P(mu) = 1/lambda_1(-L)"), "{err}");
    assert!(err.contains("tolerance 0"), "{err}");
}
