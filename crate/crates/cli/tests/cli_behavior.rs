//! End-to-end behavior of the `bpre` binary: output schemas, exit codes,
//! rerun determinism, and the synthetic rate-fit hook.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bpre() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bpre"))
}

fn write_scenario(dir: &Path, replicates: usize, horizons: &str) -> std::path::PathBuf {
    let path = dir.join("scenario.json");
    fs::write(
        &path,
        format!(
            r#"{{
  "environment": {{"atoms": [
    {{"law": {{"type": "geometric1", "p": 0.5}}, "weight": 0.5}},
    {{"law": {{"type": "geometric1", "p": 0.7}}, "weight": 0.5}}
  ]}},
  "horizons": {horizons},
  "replicates": {replicates},
  "master_seed": 42,
  "delta": 1.0,
  "kappa": 0.1
}}"#
        ),
    )
    .unwrap();
    path
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap_or_else(|_| panic!("missing {}", path.display()))
        .lines()
        .next()
        .unwrap()
        .to_string()
}

#[test]
fn every_command_writes_its_documented_schema() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(dir.path(), 300, "[2, 3]");
    let out = dir.path().join("out");
    for cmd in [
        "simulate",
        "moments",
        "wasserstein-rate",
        "be-profile",
        "ci-coverage",
        "tail-check",
        "oracle-check",
    ] {
        let status = bpre()
            .args([cmd, "--config"])
            .arg(&config)
            .arg("--out")
            .arg(out.join(cmd))
            .arg("--threads")
            .arg("2")
            .status()
            .unwrap();
        assert!(status.success(), "{cmd} failed");
        assert!(out.join(cmd).join("run.json").is_file(), "{cmd}: no run.json");
    }

    assert_eq!(
        first_line(&out.join("simulate").join("trajectory_n2.csv")),
        "k,log_z,s,log_w"
    );
    assert_eq!(
        first_line(&out.join("wasserstein-rate").join("rate.csv")),
        "n,d_w,d_w_boot_lo,d_w_boot_hi"
    );
    assert_eq!(
        first_line(&out.join("be-profile").join("profile_n2.csv")),
        "x,weighted_dev"
    );
    assert_eq!(
        first_line(&out.join("ci-coverage").join("coverage.csv")),
        "n,kappa,coverage,std_error"
    );
    assert_eq!(
        first_line(&out.join("tail-check").join("tails_n3.csv")),
        "x,empirical_upper,bernstein_upper,theorem22_bound"
    );
    assert_eq!(
        first_line(&out.join("oracle-check").join("oracle_n2.csv")),
        "value,prob"
    );
    let moments = fs::read_to_string(out.join("moments").join("moments.json")).unwrap();
    assert!(moments.contains("\"mu\""));
    assert!(moments.contains("\"config_sha256\""));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(dir.path(), 500, "[4, 8]");
    for (label, out) in [("a", dir.path().join("a")), ("b", dir.path().join("b"))] {
        let status = bpre()
            .args(["wasserstein-rate", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success(), "run {label} failed");
    }
    for file in ["rate.csv", "fit.json", "run.json"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between reruns");
    }
}

#[test]
fn seed_override_changes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(dir.path(), 500, "[4, 8]");
    for (seed, out) in [("42", "a"), ("43", "b")] {
        bpre()
            .args(["wasserstein-rate", "--config"])
            .arg(&config)
            .args(["--seed", seed, "--out"])
            .arg(dir.path().join(out))
            .status()
            .unwrap();
    }
    let a = fs::read(dir.path().join("a").join("rate.csv")).unwrap();
    let b = fs::read(dir.path().join("b").join("rate.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn synthetic_rate_hook_fits_exact_half_slope() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(dir.path(), 10, "[16, 64, 256]");
    let out = dir.path().join("out");
    let status = bpre()
        .args(["wasserstein-rate", "--synthetic-dw", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let fit: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("fit.json")).unwrap()).unwrap();
    let slope = fit["slope"].as_f64().unwrap();
    assert!((slope + 0.5).abs() < 1e-12, "slope = {slope}");
    assert!(fit["residual_rms"].as_f64().unwrap() < 1e-12);
}

#[test]
fn validation_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(
        &path,
        r#"{"environment": {"atoms": [{"law": {"type": "geometric1", "p": 0.5}, "weight": 1.0}]},
           "horizons": [256, 64], "replicates": 10, "master_seed": 1, "delta": 1.0}"#,
    )
    .unwrap();
    let output = bpre()
        .args(["simulate", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("horizons must ascend"));
}

#[test]
fn resource_refusals_exit_3_and_force_lifts_them() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("big.json");
    fs::write(
        &path,
        r#"{"environment": {"atoms": [
              {"law": {"type": "geometric1", "p": 0.5}, "weight": 0.5},
              {"law": {"type": "geometric1", "p": 0.7}, "weight": 0.5}]},
           "horizons": [5000], "replicates": 3, "master_seed": 1, "delta": 1.0}"#,
    )
    .unwrap();
    let output = bpre()
        .args(["simulate", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    let status = bpre()
        .args(["simulate", "--force", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("o"))
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn missing_kappa_rejected_only_where_needed() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nokappa.json");
    fs::write(
        &path,
        r#"{"environment": {"atoms": [
              {"law": {"type": "geometric1", "p": 0.5}, "weight": 0.5},
              {"law": {"type": "geometric1", "p": 0.7}, "weight": 0.5}]},
           "horizons": [4], "replicates": 50, "master_seed": 1, "delta": 1.0}"#,
    )
    .unwrap();
    let output = bpre()
        .args(["ci-coverage", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let status = bpre()
        .args(["simulate", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("o2"))
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn quenched_mode_round_trips_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("quenched.json");
    fs::write(
        &path,
        r#"{"environment": {"atoms": [
              {"law": {"type": "two_point", "b": 3, "q": 0.4}, "weight": 0.5},
              {"law": {"type": "shifted_poisson", "lambda": 1.0}, "weight": 0.5}]},
           "horizons": [6], "replicates": 200, "master_seed": 9, "delta": 1.0,
           "mode": "quenched"}"#,
    )
    .unwrap();
    let out = dir.path().join("o");
    let status = bpre()
        .args(["simulate", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let traj = fs::read_to_string(out.join("trajectory_n6.csv")).unwrap();
    assert_eq!(traj.lines().count(), 8); // header + generations 0..=6
}
