//! End-to-end runs of the `vhj` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const COLE_HOPF: &str = "\
scenario = cole_hopf
problem.q = 2
ladder.n = 100, 200, 400, 800
ladder.t = 0.5
data.kind = gaussian
stepper.safety = 0.25
stepper.max_rel_change = 0
";

fn vhj(args: &[&str], envs: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vhj"));
    cmd.args(args).env_remove("VHJ_OUTDIR");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn printed_dir(out: &Output) -> PathBuf {
    let stdout = String::from_utf8_lossy(&out.stdout);
    PathBuf::from(stdout.lines().next().unwrap().trim())
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn version_prints_the_crate_version() {
    let out = vhj(&["version"], &[]);
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), format!("vhj {}", env!("CARGO_PKG_VERSION")));
}

#[test]
fn passing_experiment_writes_a_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "ch.conf", COLE_HOPF);
    let outdir = tmp.path().join("out");
    let out = vhj(&["experiment", "cole_hopf", "-c", &cfg, "-o", outdir.to_str().unwrap(), "--workers", "2"], &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let dir = printed_dir(&out);
    assert!(dir.starts_with(&outdir));
    assert!(dir.join("report.json").is_file());
    assert!(String::from_utf8_lossy(&out.stdout).contains("verdict: PASS"));
}

#[test]
fn failing_verdict_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "ch.conf", COLE_HOPF);
    let out = vhj(
        &["experiment", "cole_hopf", "-c", &cfg, "-o", tmp.path().to_str().unwrap(), "--set", "ladder.n=50,100"],
        &[],
    );
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("verdict: FAIL"));
}

#[test]
fn configuration_errors_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tmp.path().to_str().unwrap();
    let unknown = write_config(tmp.path(), "unknown.conf", "scenario = cole_hopf\nproblem.qq = 2\n");
    let bad_q = write_config(tmp.path(), "bad_q.conf", "problem.q = 0.9\n");
    let cases: [&[&str]; 5] = [
        &["experiment", "cole_hopf", "-c", &unknown, "-o", o],
        &["experiment", "no_such_scenario", "-o", o],
        &["solve", "-c", &bad_q, "-o", o],
        &["solve", "-c", "/nonexistent/file.conf", "-o", o],
        &["sweep", "-o", o, "--vary", "problem.q=1.6;1.7"],
    ];
    for args in cases {
        assert_eq!(code(&vhj(args, &[])), 3, "{args:?}");
    }
}

#[test]
fn outdir_comes_from_the_environment_when_not_given() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "ch.conf", COLE_HOPF);
    let env_out = tmp.path().join("env");
    let out = vhj(&["experiment", "cole_hopf", "-c", &cfg], &[("VHJ_OUTDIR", &env_out)]);
    assert_eq!(code(&out), 0);
    assert!(printed_dir(&out).starts_with(&env_out));
}

#[test]
fn solve_and_shoot_write_their_files() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tmp.path().to_str().unwrap();
    let cfg = write_config(
        tmp.path(),
        "solve.conf",
        "problem.q = 1.3\ngrid.R = 5\ngrid.n = 200\ndata.k = 2\ndata.epsilon = 0.2\nstepper.t_end = 0.1\n",
    );
    let out = vhj(&["solve", "-c", &cfg, "-o", o], &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let dir = printed_dir(&out);
    for f in ["trajectory.csv", "field.csv", "manifest.json"] {
        assert!(dir.join(f).is_file(), "missing {f}");
    }

    let out = vhj(&["shoot", "-c", &cfg, "-o", o], &[]);
    assert_eq!(code(&out), 0);
    let dir = printed_dir(&out);
    assert!(dir.join("profile.csv").is_file() && dir.join("profile.json").is_file());

    let out = vhj(&["shoot", "-c", &cfg, "-o", o, "--set", "problem.q=1.6"], &[]);
    assert_eq!(code(&out), 1);
}

#[test]
fn sweep_writes_an_index() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "ch.conf", COLE_HOPF);
    let out = vhj(
        &["sweep", "-c", &cfg, "-o", tmp.path().to_str().unwrap(), "--vary", "stepper.safety=0.25;0.2"],
        &[],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let dir = PathBuf::from(stdout.lines().last().unwrap().trim());
    let index: String = fs::read_to_string(dir.join("index.json")).unwrap();
    assert_eq!(index.matches("stepper.safety").count(), 2);
}
