//! Config-driven runs: scenario dispatch, run directories and exit codes.
//!
//! A run directory is `<outdir>/<name>-<hash>`, where `hash` is the first 12
//! hex digits of the SHA-256 of the run's manifest JSON. Identical inputs
//! therefore land in the same directory regardless of worker count.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{DataKind, RunConfig};
use crate::error::{Error, Result};
use crate::evolution::{evolve, make_initial_data, BoundaryCondition, InitialDataSpec, StepperConfig};
use crate::exact::GaussianInitialData;
use crate::experiments::{
    exp_cole_hopf, exp_dichotomy_scan, exp_dirichlet_vss, exp_removability, exp_subsolution_transform,
    exp_universal_bounds, exp_vss_convergence, BoundCase, ColeHopfSpec, DichotomySpec, DirichletVssSpec,
    ExperimentReport, RemovabilitySpec, Scenario, StepSettings, SubsolutionSpec, UniversalBoundsSpec, Verdict,
    VssConvergenceSpec,
};
use crate::grid::RadialGrid;
use crate::par;
use crate::params::ProblemParams;
use crate::profile::{shoot_vss, ScanSettings, ShotSettings};

pub const ENV_OUTDIR: &str = "VHJ_OUTDIR";
pub const DEFAULT_OUTDIR: &str = "runs";
pub const EXIT_CONFIG: i32 = 3;

/// Exit code for an error: configuration problems map to 3, anything else to 1.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::ConfigSyntax { .. }
        | Error::ConfigValue { .. }
        | Error::UnknownScenario(_)
        | Error::InvalidParameter { .. }
        | Error::Unresolvable { .. }
        | Error::UndefinedBarrier { .. } => EXIT_CONFIG,
        _ => 1,
    }
}

/// Output root: explicit flag, then `output.dir`, then `$VHJ_OUTDIR`, then `runs`.
pub fn resolve_outdir(flag: Option<&Path>, config: &RunConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .or_else(|| std::env::var_os(ENV_OUTDIR).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTDIR))
}

fn hash_prefix<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(bytes))[..12].to_string())
}

fn step_settings(c: &RunConfig) -> StepSettings {
    StepSettings {
        safety: c.safety,
        max_rel_change: c.max_rel_change,
        max_steps: c.max_steps,
    }
}

fn stepper_config(c: &RunConfig) -> StepperConfig {
    step_settings(c).until(c.t_end)
}

fn scan_settings(c: &RunConfig) -> ScanSettings {
    ScanSettings {
        f0_min: c.shoot.f0_min,
        f0_max: c.shoot.f0_max,
        points_per_decade: c.shoot.points_per_decade,
        bisect_tol: c.shoot.bisect_tol,
        shot: ShotSettings {
            eta_max: c.shoot.eta_max,
            tol: c.shoot.tol,
            ..ShotSettings::default()
        },
    }
}

pub fn initial_data(c: &RunConfig) -> Result<InitialDataSpec> {
    let d = &c.data;
    Ok(match d.kind {
        DataKind::Dirac => InitialDataSpec::MollifiedDirac {
            k: d.k,
            epsilon: d.epsilon,
        },
        DataKind::Plateau => InitialDataSpec::Plateau { cap: d.cap, eta: d.eta },
        DataKind::Gaussian => InitialDataSpec::GaussianCh(GaussianInitialData::new(d.z0, d.variance4)?),
    })
}

fn smallest(v: &Option<Vec<f64>>) -> Option<f64> {
    v.as_ref().map(|v| v.iter().copied().fold(f64::INFINITY, f64::min))
}

fn largest(v: &Option<Vec<f64>>) -> Option<f64> {
    v.as_ref().map(|v| v.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

fn ascending(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Builds the scenario from the configuration and runs it.
pub fn run_experiment(scenario: Scenario, c: &RunConfig) -> Result<ExperimentReport> {
    c.validate()?;
    let l = &c.ladders;
    let stepper = step_settings(c);
    match scenario {
        Scenario::ColeHopf => {
            let d = ColeHopfSpec::default();
            exp_cole_hopf(&ColeHopfSpec {
                dim: c.dim,
                radius: c.radius,
                cells: l.cells.clone().unwrap_or(d.cells),
                t_check: largest(&l.t).unwrap_or(d.t_check),
                data: GaussianInitialData::new(c.data.z0, c.data.variance4)?,
                stepper,
            })
        }
        Scenario::Removability => {
            let d = RemovabilitySpec::default();
            exp_removability(&RemovabilitySpec {
                dim: c.dim,
                q: c.q.unwrap_or(d.q),
                k: c.data.k,
                epsilons: l.epsilon.clone().unwrap_or(d.epsilons),
                cells_per_eps: c.cells_per_eps,
                radius: c.radius,
                window_r: c.window.r_max,
                t1: c.window.t1,
                t2: c.window.t2,
                window_samples: d.window_samples,
                stepper,
            })
        }
        Scenario::VssConvergence => {
            let d = VssConvergenceSpec::default();
            exp_vss_convergence(&VssConvergenceSpec {
                dim: c.dim,
                q: c.q.unwrap_or(d.q),
                ks: l.k.as_deref().map(ascending).unwrap_or(d.ks),
                epsilon: smallest(&l.epsilon).unwrap_or(d.epsilon),
                cells_per_eps: c.cells_per_eps,
                radius: c.radius,
                probes: l.t.as_deref().map(ascending).unwrap_or(d.probes),
                eta_window: d.eta_window,
                shoot: scan_settings(c),
                stepper,
            })
        }
        Scenario::DichotomyScan => {
            let d = DichotomySpec::default();
            exp_dichotomy_scan(&DichotomySpec {
                dim: c.dim,
                qs: l.q.as_deref().map(ascending).unwrap_or(d.qs),
                shoot: scan_settings(c),
                k: c.data.k,
                epsilon: smallest(&l.epsilon).unwrap_or(d.epsilon),
                cells_per_eps: c.cells_per_eps,
                radius: c.radius,
                t_probe: largest(&l.t).unwrap_or(d.t_probe),
                stepper,
            })
        }
        Scenario::DirichletVss => {
            let d = DirichletVssSpec::default();
            let times = l.t.as_deref().map(ascending).unwrap_or_else(|| {
                let mut t = d.check_times.clone();
                t.push(d.t_probe);
                t
            });
            let (check, probe) = times.split_at(times.len() - 1);
            exp_dirichlet_vss(&DirichletVssSpec {
                dim: c.dim,
                q: c.q.unwrap_or(d.q),
                radius: c.radius,
                cells: c.cells,
                ks: l.k.as_deref().map(ascending).unwrap_or(d.ks),
                etas: l.eta.clone().unwrap_or(d.etas),
                caps: l.caps.as_deref().map(ascending).unwrap_or(d.caps),
                cap_tol: c.large_tol,
                t_probe: probe[0],
                check_times: check.to_vec(),
                stepper,
            })
        }
        Scenario::UniversalBounds => exp_universal_bounds(&UniversalBoundsSpec {
            cases: vec![BoundCase {
                label: "config".into(),
                dim: c.dim,
                q: c.q.unwrap_or(1.3),
                radius: c.radius,
                cells: c.cells,
                data: initial_data(c)?,
                t_end: c.t_end,
            }],
            refinement: 2,
            stepper,
        }),
        Scenario::SubsolutionTransform => {
            let d = SubsolutionSpec::default();
            exp_subsolution_transform(&SubsolutionSpec {
                dim: c.dim,
                q: c.q.unwrap_or(d.q),
                k: c.transfer_k,
                eta: c.transfer_eta,
                radius: c.radius,
                cells: c.cells,
                data: initial_data(c)?,
                t_end: c.t_end,
                stepper,
            })
        }
    }
}

/// Writes `report.json` and one CSV per table; returns the run directory.
pub fn write_report(report: &ExperimentReport, outdir: &Path) -> Result<PathBuf> {
    let dir = outdir.join(report.run_dir_name());
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("report.json"), serde_json::to_vec_pretty(report)?)?;
    for (name, table) in &report.tables {
        table.write_csv(fs::File::create(dir.join(format!("{name}.csv")))?)?;
    }
    Ok(dir)
}

pub fn read_report(dir: &Path) -> Result<ExperimentReport> {
    Ok(serde_json::from_slice(&fs::read(dir.join("report.json"))?)?)
}

#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub dir: Option<PathBuf>,
    pub verdict: Option<Verdict>,
    pub message: String,
}

impl RunOutcome {
    fn failed(err: Error) -> Self {
        Self {
            exit_code: exit_code_for(&err),
            dir: None,
            verdict: None,
            message: err.to_string(),
        }
    }
}

/// Resolves the scenario, runs it and writes its directory.
///
/// `scenario` overrides the config's `scenario` key.
pub fn run(config: &RunConfig, scenario: Option<&str>, outdir: &Path) -> RunOutcome {
    let name = match scenario.or(config.scenario.as_deref()) {
        Some(n) => n,
        None => {
            return RunOutcome::failed(Error::ConfigValue {
                key: "scenario".into(),
                reason: "no scenario given".into(),
            })
        }
    };
    let result = name
        .parse::<Scenario>()
        .and_then(|s| run_experiment(s, config))
        .and_then(|rep| write_report(&rep, outdir).map(|dir| (rep, dir)));
    match result {
        Ok((rep, dir)) => RunOutcome {
            exit_code: rep.verdict.exit_code(),
            verdict: Some(rep.verdict),
            message: rep.summary.join("\n"),
            dir: Some(dir),
        },
        Err(e) => RunOutcome::failed(e),
    }
}

/// Single evolution: writes `trajectory.csv`, `field.csv` and `manifest.json`.
pub fn solve(config: &RunConfig, outdir: &Path) -> Result<PathBuf> {
    config.validate()?;
    let params = ProblemParams::new(config.dim, config.q.unwrap_or(1.3))?;
    let grid = RadialGrid::new(config.radius, config.cells)?;
    let data = initial_data(config)?;
    let cfg = stepper_config(config);
    let manifest = serde_json::json!({
        "command": "solve",
        "version": env!("CARGO_PKG_VERSION"),
        "N": params.dim(),
        "q": params.q(),
        "R": grid.radius(),
        "n": grid.cells(),
        "data": data,
        "stepper": cfg,
        "boundary": BoundaryCondition::DirichletZero.label(),
    });
    let f0 = make_initial_data(&data, &grid, params.dim())?;
    let cfg = StepperConfig {
        snapshot_times: vec![cfg.t_end],
        ..cfg
    };
    let tr = evolve(&f0, &params, &BoundaryCondition::DirichletZero, &cfg, &mut [])?;
    let dir = outdir.join(format!("solve-{}", hash_prefix(&manifest)?));
    fs::create_dir_all(&dir)?;
    tr.write_csv(fs::File::create(dir.join("trajectory.csv"))?)?;
    let last = tr.snapshots.last().map(|(_, f)| f).unwrap_or(&f0);
    last.write_csv(fs::File::create(dir.join("field.csv"))?)?;
    let mut manifest = manifest;
    manifest["mass_balance_residual"] = tr.mass_balance_residual().into();
    manifest["outflux"] = tr.last().outflux.into();
    manifest["t_final"] = tr.last().t.into();
    fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(dir)
}

/// Shoots for the profile; writes `profile.csv` and `profile.json` when one exists.
pub fn shoot(config: &RunConfig, outdir: &Path) -> Result<Option<PathBuf>> {
    config.validate()?;
    let params = ProblemParams::new(config.dim, config.q.unwrap_or(1.3))?;
    let settings = scan_settings(config);
    let outcome = shoot_vss(&params, &settings)?;
    let Some(profile) = outcome.profile() else {
        return Ok(None);
    };
    let key = serde_json::json!({ "command": "shoot", "N": params.dim(), "q": params.q(), "settings": settings });
    let dir = outdir.join(format!("shoot-{}", hash_prefix(&key)?));
    fs::create_dir_all(&dir)?;
    profile.write_csv(fs::File::create(dir.join("profile.csv"))?)?;
    fs::write(dir.join("profile.json"), serde_json::to_vec_pretty(&profile.header_json())?)?;
    Ok(Some(dir))
}

/// One axis of a sweep: a config key and the values it takes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<String>,
}

impl SweepAxis {
    /// Parses `key=v1;v2;...`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (key, values) = spec.split_once('=').ok_or_else(|| Error::ConfigValue {
            key: spec.to_string(),
            reason: "expected `key=v1;v2;...`".into(),
        })?;
        let values: Vec<String> = values.split(';').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
        if values.is_empty() {
            return Err(Error::ConfigValue {
                key: key.trim().into(),
                reason: "no values to sweep".into(),
            });
        }
        Ok(Self {
            key: key.trim().to_string(),
            values,
        })
    }
}

#[derive(Debug, Serialize)]
pub struct SweepEntry {
    pub overrides: Vec<(String, String)>,
    pub exit_code: i32,
    pub dir: Option<PathBuf>,
    pub verdict: Option<Verdict>,
    pub message: String,
}

/// Cartesian product of the axes in row-major order (last axis fastest).
pub fn sweep_points(axes: &[SweepAxis]) -> Vec<Vec<(String, String)>> {
    let mut points = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |v| {
                    let mut p = p.clone();
                    p.push((axis.key.clone(), v.clone()));
                    p
                })
            })
            .collect();
    }
    points
}

/// Worst exit code of a batch: config errors, then failures, then indeterminate.
pub fn combined_exit_code(codes: impl IntoIterator<Item = i32>) -> i32 {
    let rank = |c: i32| match c {
        EXIT_CONFIG => 3,
        1 => 2,
        2 => 1,
        _ => 0,
    };
    codes.into_iter().max_by_key(|c| rank(*c)).unwrap_or(0)
}

/// Runs every point of the sweep concurrently and writes `index.json`.
pub fn sweep(base: &RunConfig, scenario: Option<&str>, axes: &[SweepAxis], outdir: &Path) -> Result<(PathBuf, Vec<SweepEntry>)> {
    let points = sweep_points(axes);
    let entries = par::map(&points, |overrides| {
        let mut cfg = base.clone();
        for (k, v) in overrides {
            if let Err(e) = cfg.apply(k, v) {
                let out = RunOutcome::failed(e);
                return SweepEntry {
                    overrides: overrides.clone(),
                    exit_code: out.exit_code,
                    dir: None,
                    verdict: None,
                    message: out.message,
                };
            }
        }
        let out = run(&cfg, scenario, outdir);
        SweepEntry {
            overrides: overrides.clone(),
            exit_code: out.exit_code,
            dir: out.dir,
            verdict: out.verdict,
            message: out.message,
        }
    });
    let key = serde_json::json!({
        "base": crate::config::serialize_config(&RunConfig { output_dir: None, workers: 1, ..base.clone() }),
        "scenario": scenario,
        "axes": axes,
    });
    let dir = outdir.join(format!("sweep-{}", hash_prefix(&key)?));
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("index.json"), serde_json::to_vec_pretty(&entries)?)?;
    Ok((dir, entries))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_axis_parsing() {
        let a = SweepAxis::parse("problem.q=1.3; 1.6").unwrap();
        assert_eq!(a.key, "problem.q");
        assert_eq!(a.values, vec!["1.3", "1.6"]);
        assert!(SweepAxis::parse("problem.q").is_err());
        assert!(SweepAxis::parse("problem.q=").is_err());
    }

    #[test]
    fn cartesian_product_order() {
        let axes = [SweepAxis::parse("a=1;2").unwrap(), SweepAxis::parse("b=x;y;z").unwrap()];
        let pts = sweep_points(&axes);
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[1], vec![("a".into(), "1".into()), ("b".into(), "y".into())]);
        assert_eq!(sweep_points(&[]), vec![Vec::<(String, String)>::new()]);
    }

    #[test]
    fn exit_code_precedence() {
        assert_eq!(combined_exit_code([0, 2, 1]), 1);
        assert_eq!(combined_exit_code([0, 2]), 2);
        assert_eq!(combined_exit_code([1, 3, 0]), 3);
        assert_eq!(combined_exit_code([]), 0);
    }

    #[test]
    fn missing_scenario_is_a_config_error() {
        let dir = std::env::temp_dir();
        let out = run(&RunConfig::default(), None, &dir);
        assert_eq!(out.exit_code, EXIT_CONFIG);
        let out = run(&RunConfig::default(), Some("no_such_thing"), &dir);
        assert_eq!(out.exit_code, EXIT_CONFIG);
    }

    #[test]
    fn outdir_precedence() {
        let mut c = RunConfig::default();
        assert_eq!(resolve_outdir(Some(Path::new("x")), &c), PathBuf::from("x"));
        c.output_dir = Some(PathBuf::from("y"));
        assert_eq!(resolve_outdir(None, &c), PathBuf::from("y"));
    }
}
