use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vhj_core::config::{parse_config, RunConfig};
use vhj_core::experiments::Scenario;
use vhj_core::runner::{self, SweepAxis};
use vhj_core::{par, Error};

#[derive(Parser)]
#[command(name = "vhj", about = "Numerical laboratory for u_t - Δu + |∇u|^q = 0", disable_version_flag = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Configuration file (flat `key = value`)
    #[arg(short = 'c', long = "config")]
    config: Option<PathBuf>,
    /// Output root; falls back to `output.dir`, then $VHJ_OUTDIR, then ./runs
    #[arg(short = 'o', long = "outdir")]
    outdir: Option<PathBuf>,
    /// Worker threads; overrides `run.workers`
    #[arg(long)]
    workers: Option<usize>,
    /// Extra `key=value` overrides applied after the file
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Single evolution; writes trajectory.csv, field.csv and manifest.json
    Solve(Common),
    /// Shoots for the self-similar profile; writes profile.csv and profile.json
    Shoot(Common),
    /// Runs a named experiment and writes report.json plus one CSV per table
    Experiment {
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// Runs the cartesian product of `--vary key=v1;v2` overrides in parallel
    Sweep {
        /// Scenario name; defaults to the config's `scenario`
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long = "vary", value_name = "KEY=V1;V2", required = true)]
        vary: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Prints the version
    Version,
}

fn load(common: &Common) -> Result<RunConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => parse_config(&std::fs::read_to_string(path).map_err(|e| Error::ConfigValue {
            key: path.display().to_string(),
            reason: e.to_string(),
        })?)?,
        None => RunConfig::default(),
    };
    for kv in &common.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::ConfigValue {
            key: kv.clone(),
            reason: "expected KEY=VALUE".into(),
        })?;
        cfg.apply(k.trim(), v.trim())?;
    }
    if let Some(w) = common.workers {
        cfg.apply("run.workers", &w.to_string())?;
    }
    Ok(cfg)
}

fn fail(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(runner::exit_code_for(err) as u8)
}

fn with_config(common: &Common, body: impl FnOnce(RunConfig, &Path) -> ExitCode + Send) -> ExitCode {
    let cfg = match load(common) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let outdir = runner::resolve_outdir(common.outdir.as_deref(), &cfg);
    par::with_workers(cfg.workers, || body(cfg, &outdir))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Version => {
            println!("vhj {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
        Command::Solve(common) => with_config(&common, |cfg, out| match runner::solve(&cfg, out) {
            Ok(dir) => {
                println!("{}", dir.display());
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        }),
        Command::Shoot(common) => with_config(&common, |cfg, out| match runner::shoot(&cfg, out) {
            Ok(Some(dir)) => {
                println!("{}", dir.display());
                ExitCode::SUCCESS
            }
            Ok(None) => {
                println!("no fast-decay profile in the scanned range");
                ExitCode::from(1)
            }
            Err(e) => fail(&e),
        }),
        Command::Experiment { name, common } => {
            if let Err(e) = name.parse::<Scenario>() {
                return fail(&e);
            }
            with_config(&common, |cfg, out| {
                let outcome = runner::run(&cfg, Some(&name), out);
                if let Some(dir) = &outcome.dir {
                    println!("{}", dir.display());
                }
                if let Some(v) = outcome.verdict {
                    println!("verdict: {v}");
                    println!("{}", outcome.message);
                } else {
                    eprintln!("error: {}", outcome.message);
                }
                ExitCode::from(outcome.exit_code as u8)
            })
        }
        Command::Sweep { scenario, vary, common } => {
            let axes: Result<Vec<_>, _> = vary.iter().map(|v| SweepAxis::parse(v)).collect();
            let axes = match axes {
                Ok(a) => a,
                Err(e) => return fail(&e),
            };
            with_config(&common, |cfg, out| match runner::sweep(&cfg, scenario.as_deref(), &axes, out) {
                Ok((dir, entries)) => {
                    for e in &entries {
                        let point: Vec<String> = e.overrides.iter().map(|(k, v)| format!("{k}={v}")).collect();
                        let status = e.verdict.map(|v| v.to_string()).unwrap_or_else(|| format!("error: {}", e.message));
                        println!("{}  {status}", point.join(" "));
                    }
                    println!("{}", dir.display());
                    ExitCode::from(runner::combined_exit_code(entries.iter().map(|e| e.exit_code)) as u8)
                }
                Err(e) => fail(&e),
            })
        }
    }
}
