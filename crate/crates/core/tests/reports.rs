//! Run directories, determinism and exit codes.

use std::fs;
use std::path::Path;

use vhj_core::config::parse_config;
use vhj_core::experiments::{Scenario, Verdict};
use vhj_core::par;
use vhj_core::runner::{self, read_report, run, run_experiment, write_report};

const COLE_HOPF: &str = "
scenario = cole_hopf
problem.q = 2
ladder.n = 100, 200, 400, 800
ladder.t = 0.5
data.kind = gaussian
stepper.safety = 0.25
stepper.max_rel_change = 0
";

const SMALL_REMOVABILITY: &str = "
scenario = removability
problem.q = 1.6
grid.R = 4
data.k = 10
ladder.epsilon = 0.2, 0.1, 0.05
";

fn report_json(text: &str, workers: usize) -> String {
    let cfg = parse_config(text).unwrap();
    let scenario: Scenario = cfg.scenario.as_deref().unwrap().parse().unwrap();
    let report = par::with_workers(workers, || run_experiment(scenario, &cfg)).unwrap();
    serde_json::to_string(&report).unwrap()
}

#[test]
fn reports_do_not_depend_on_worker_count() {
    for text in [COLE_HOPF, SMALL_REMOVABILITY] {
        let one = report_json(text, 1);
        assert_eq!(one, report_json(text, 4));
        assert_eq!(one, par::map_sequential(&[()], |_| report_json(text, 1)).remove(0));
    }
}

#[test]
fn run_directory_round_trips() {
    let out = tempfile::tempdir().unwrap();
    let cfg = parse_config(COLE_HOPF).unwrap();
    let outcome = run(&cfg, None, out.path());
    assert_eq!(outcome.exit_code, 0, "{}", outcome.message);
    assert_eq!(outcome.verdict, Some(Verdict::Pass));
    let dir = outcome.dir.unwrap();
    let name = dir.file_name().unwrap().to_string_lossy().to_string();
    assert!(name.starts_with("cole_hopf-") && name.len() == "cole_hopf-".len() + 12, "{name}");
    for file in ["report.json", "errors.csv", "orders.csv"] {
        assert!(dir.join(file).is_file(), "missing {file}");
    }
    let header = fs::read_to_string(dir.join("errors.csv")).unwrap();
    assert!(header.starts_with("n,h,error\n"));

    let stored = read_report(&dir).unwrap();
    assert_eq!(stored.reevaluate(), Verdict::Pass);
    assert_eq!(stored.verdict, Verdict::Pass);
    // Same config, same directory.
    let again = run(&cfg, None, out.path());
    assert_eq!(again.dir.unwrap(), dir);
    assert_eq!(write_report(&stored, out.path()).unwrap(), dir);
}

#[test]
fn exit_codes_follow_verdicts() {
    let out = tempfile::tempdir().unwrap();
    // Too coarse for the 1e-3 error bound.
    let mut cfg = parse_config(COLE_HOPF).unwrap();
    cfg.apply("ladder.n", "50, 100").unwrap();
    let outcome = run(&cfg, None, out.path());
    assert_eq!(outcome.verdict, Some(Verdict::Fail));
    assert_eq!(outcome.exit_code, 1);

    // A single grid cannot measure an order.
    cfg.apply("ladder.n", "100").unwrap();
    assert_eq!(run(&cfg, None, out.path()).exit_code, 2);

    let mut no_scenario = cfg.clone();
    no_scenario.scenario = None;
    assert_eq!(run(&no_scenario, None, out.path()).exit_code, 3);
    assert_eq!(run(&cfg, Some("bogus"), out.path()).exit_code, 3);

    // Data narrower than four cells is a configuration problem, not a failed experiment.
    let bad = parse_config("scenario = universal_bounds\ndata.epsilon = 0.05").unwrap();
    let o = run(&bad, None, out.path());
    assert_eq!(o.exit_code, 3, "{}", o.message);
}

#[test]
fn solve_writes_trajectory_field_and_manifest() {
    let out = tempfile::tempdir().unwrap();
    let cfg = parse_config("problem.q = 1.3\ngrid.R = 5\ngrid.n = 200\ndata.k = 2\ndata.epsilon = 0.2\nstepper.t_end = 0.2").unwrap();
    let dir = runner::solve(&cfg, out.path()).unwrap();
    let traj = fs::read_to_string(dir.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,sup,mass,grad_sup,dissipation\n"));
    let last = traj.lines().last().unwrap();
    assert!(last.starts_with("0.2,"), "{last}");
    let field = fs::read_to_string(dir.join("field.csv")).unwrap();
    assert!(field.starts_with("r,u\n"));
    assert_eq!(field.lines().count(), 202);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["q"], 1.3);
    assert!(manifest["mass_balance_residual"].as_f64().unwrap() < 1e-8);
    assert_eq!(runner::solve(&cfg, out.path()).unwrap(), dir);
}

#[test]
fn shoot_writes_profile_or_reports_absence() {
    let out = tempfile::tempdir().unwrap();
    let cfg = parse_config("problem.q = 1.3").unwrap();
    let dir = runner::shoot(&cfg, out.path()).unwrap().expect("profile exists below q*");
    let csv = fs::read_to_string(dir.join("profile.csv")).unwrap();
    assert!(csv.starts_with("eta,f,fprime\n"));
    let header: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("profile.json")).unwrap()).unwrap();
    let f0 = header["f0_star"].as_f64().unwrap();
    assert!((f0 - 2.41648).abs() < 1e-4, "{f0}");
    assert_eq!(header["classification"], "fast_decay");

    let above = parse_config("problem.q = 1.6").unwrap();
    assert!(runner::shoot(&above, out.path()).unwrap().is_none());
}

#[test]
fn sweep_runs_every_point_and_indexes_them() {
    let out = tempfile::tempdir().unwrap();
    let cfg = parse_config(SMALL_REMOVABILITY).unwrap();
    let axes = [runner::SweepAxis::parse("data.k=5;10").unwrap(), runner::SweepAxis::parse("problem.q=1.6;0.5").unwrap()];
    let (dir, entries) = runner::sweep(&cfg, None, &axes, out.path()).unwrap();
    assert_eq!(entries.len(), 4);
    let codes: Vec<i32> = entries.iter().map(|e| e.exit_code).collect();
    assert_eq!(codes, vec![0, 3, 0, 3]);
    assert_eq!(runner::combined_exit_code(codes), 3);
    let index: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("index.json")).unwrap()).unwrap();
    assert_eq!(index.as_array().unwrap().len(), 4);
    for e in entries.iter().filter(|e| e.exit_code == 0) {
        assert!(Path::new(e.dir.as_ref().unwrap()).join("report.json").is_file());
    }
}
