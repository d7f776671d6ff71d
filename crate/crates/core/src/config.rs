//! Flat `key = value` run configuration.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! line    := blank | comment | entry [comment]
//! comment := '#' <anything>
//! entry   := key '=' value
//! key     := segment ('.' segment)*        segment := [A-Za-z0-9_]+
//! value   := scalar | scalar (',' scalar)+ (lists)
//! ```
//!
//! Keys are unique, unknown keys are rejected, and anything not given falls
//! back to the documented default. `parse_config(&serialize_config(c)) == c`.
//!
//! | key | default |
//! |-----|---------|
//! | `scenario` | none |
//! | `problem.N` | 1 |
//! | `problem.q` | scenario default |
//! | `grid.R` | 10 |
//! | `grid.n` | 400 |
//! | `grid.cells_per_eps` | 8 |
//! | `stepper.safety` | 0.5 |
//! | `stepper.max_rel_change` | 0.02 |
//! | `stepper.t_end` | 1 |
//! | `stepper.max_steps` | 5000000 |
//! | `data.kind` | `dirac` (`dirac`, `plateau`, `gaussian`) |
//! | `data.k`, `data.epsilon` | 10, 0.1 |
//! | `data.cap`, `data.eta` | 100, 0.2 |
//! | `data.z0`, `data.variance4` | 0.5, 1 |
//! | `ladder.n`, `ladder.k`, `ladder.epsilon`, `ladder.eta`, `ladder.q`, `ladder.t`, `ladder.caps` | scenario default |
//! | `window.r_max`, `window.t1`, `window.t2` | 1, 0.25, 0.5 |
//! | `shoot.f0_min`, `shoot.f0_max` | 1e-3, 1e3 |
//! | `shoot.points_per_decade` | 8 |
//! | `shoot.eta_max`, `shoot.tol`, `shoot.bisect_tol` | 20, 1e-10, 1e-10 |
//! | `transfer.k`, `transfer.eta` | 1.3, 0.5 |
//! | `large.tol` | 0.2 |
//! | `output.dir` | none |
//! | `run.workers` | 1 |

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    Dirac,
    Plateau,
    Gaussian,
}

impl DataKind {
    fn as_str(self) -> &'static str {
        match self {
            Self::Dirac => "dirac",
            Self::Plateau => "plateau",
            Self::Gaussian => "gaussian",
        }
    }
}

impl FromStr for DataKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dirac" => Ok(Self::Dirac),
            "plateau" => Ok(Self::Plateau),
            "gaussian" => Ok(Self::Gaussian),
            other => Err(format!("unknown data kind `{other}` (dirac, plateau, gaussian)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    pub kind: DataKind,
    pub k: f64,
    pub epsilon: f64,
    pub cap: f64,
    pub eta: f64,
    pub z0: f64,
    pub variance4: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            kind: DataKind::Dirac,
            k: 10.0,
            epsilon: 0.1,
            cap: 100.0,
            eta: 0.2,
            z0: 0.5,
            variance4: 1.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Ladders {
    pub cells: Option<Vec<usize>>,
    pub k: Option<Vec<f64>>,
    pub epsilon: Option<Vec<f64>>,
    pub eta: Option<Vec<f64>>,
    pub q: Option<Vec<f64>>,
    pub t: Option<Vec<f64>>,
    pub caps: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub r_max: f64,
    pub t1: f64,
    pub t2: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            r_max: 1.0,
            t1: 0.25,
            t2: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShootConfig {
    pub f0_min: f64,
    pub f0_max: f64,
    pub points_per_decade: usize,
    pub eta_max: f64,
    pub tol: f64,
    pub bisect_tol: f64,
}

impl Default for ShootConfig {
    fn default() -> Self {
        Self {
            f0_min: 1e-3,
            f0_max: 1e3,
            points_per_decade: 8,
            eta_max: 20.0,
            tol: 1e-10,
            bisect_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: Option<String>,
    pub dim: usize,
    pub q: Option<f64>,
    pub radius: f64,
    pub cells: usize,
    pub cells_per_eps: f64,
    pub safety: f64,
    pub max_rel_change: f64,
    pub t_end: f64,
    pub max_steps: usize,
    pub data: DataConfig,
    pub ladders: Ladders,
    pub window: WindowConfig,
    pub shoot: ShootConfig,
    pub transfer_k: f64,
    pub transfer_eta: f64,
    pub large_tol: f64,
    pub output_dir: Option<PathBuf>,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: None,
            dim: 1,
            q: None,
            radius: 10.0,
            cells: 400,
            cells_per_eps: 8.0,
            safety: 0.5,
            max_rel_change: 0.02,
            t_end: 1.0,
            max_steps: 5_000_000,
            data: DataConfig::default(),
            ladders: Ladders::default(),
            window: WindowConfig::default(),
            shoot: ShootConfig::default(),
            transfer_k: 1.3,
            transfer_eta: 0.5,
            large_tol: 0.2,
            output_dir: None,
            workers: 1,
        }
    }
}

fn value_err(key: &str, reason: impl Into<String>) -> Error {
    Error::ConfigValue {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn scalar<T: FromStr>(key: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse::<T>()
        .map_err(|e| value_err(key, format!("cannot parse `{raw}`: {e}")))
}

fn list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    raw.split(',').map(|s| scalar(key, s.trim())).collect()
}

fn finite(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(value_err(key, "must be finite"))
    }
}

impl RunConfig {
    fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let f = |raw: &str| -> Result<f64> { finite(key, scalar::<f64>(key, raw)?) };
        let fl = |raw: &str| -> Result<Vec<f64>> {
            list::<f64>(key, raw)?.into_iter().map(|v| finite(key, v)).collect()
        };
        match key {
            "scenario" => self.scenario = Some(raw.to_string()),
            "problem.N" => self.dim = scalar(key, raw)?,
            "problem.q" => self.q = Some(f(raw)?),
            "grid.R" => self.radius = f(raw)?,
            "grid.n" => self.cells = scalar(key, raw)?,
            "grid.cells_per_eps" => self.cells_per_eps = f(raw)?,
            "stepper.safety" => self.safety = f(raw)?,
            "stepper.max_rel_change" => self.max_rel_change = f(raw)?,
            "stepper.t_end" => self.t_end = f(raw)?,
            "stepper.max_steps" => self.max_steps = scalar(key, raw)?,
            "data.kind" => self.data.kind = raw.parse().map_err(|e: String| value_err(key, e))?,
            "data.k" => self.data.k = f(raw)?,
            "data.epsilon" => self.data.epsilon = f(raw)?,
            "data.cap" => self.data.cap = f(raw)?,
            "data.eta" => self.data.eta = f(raw)?,
            "data.z0" => self.data.z0 = f(raw)?,
            "data.variance4" => self.data.variance4 = f(raw)?,
            "ladder.n" => self.ladders.cells = Some(list(key, raw)?),
            "ladder.k" => self.ladders.k = Some(fl(raw)?),
            "ladder.epsilon" => self.ladders.epsilon = Some(fl(raw)?),
            "ladder.eta" => self.ladders.eta = Some(fl(raw)?),
            "ladder.q" => self.ladders.q = Some(fl(raw)?),
            "ladder.t" => self.ladders.t = Some(fl(raw)?),
            "ladder.caps" => self.ladders.caps = Some(fl(raw)?),
            "window.r_max" => self.window.r_max = f(raw)?,
            "window.t1" => self.window.t1 = f(raw)?,
            "window.t2" => self.window.t2 = f(raw)?,
            "shoot.f0_min" => self.shoot.f0_min = f(raw)?,
            "shoot.f0_max" => self.shoot.f0_max = f(raw)?,
            "shoot.points_per_decade" => self.shoot.points_per_decade = scalar(key, raw)?,
            "shoot.eta_max" => self.shoot.eta_max = f(raw)?,
            "shoot.tol" => self.shoot.tol = f(raw)?,
            "shoot.bisect_tol" => self.shoot.bisect_tol = f(raw)?,
            "transfer.k" => self.transfer_k = f(raw)?,
            "transfer.eta" => self.transfer_eta = f(raw)?,
            "large.tol" => self.large_tol = f(raw)?,
            "output.dir" => self.output_dir = Some(PathBuf::from(raw)),
            "run.workers" => self.workers = scalar(key, raw)?,
            _ => return Err(value_err(key, "unknown key")),
        }
        Ok(())
    }

    /// Applies one `key = value` override on top of this configuration.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        self.set(key.trim(), value.trim())?;
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(value_err("problem.N", "dimension must be at least 1"));
        }
        if let Some(q) = self.q {
            if q <= 1.0 {
                return Err(value_err("problem.q", format!("requires q > 1, got {q}")));
            }
        }
        if !(self.radius > 0.0) {
            return Err(value_err("grid.R", "must be positive"));
        }
        if self.cells < crate::grid::MIN_CELLS {
            return Err(value_err("grid.n", format!("must be at least {}", crate::grid::MIN_CELLS)));
        }
        if !(self.cells_per_eps >= 4.0) {
            return Err(value_err("grid.cells_per_eps", "must be at least 4"));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(value_err("stepper.safety", "must lie in (0, 1]"));
        }
        if self.max_rel_change < 0.0 {
            return Err(value_err("stepper.max_rel_change", "must be nonnegative"));
        }
        if self.t_end < 0.0 {
            return Err(value_err("stepper.t_end", "must be nonnegative"));
        }
        if self.workers == 0 {
            return Err(value_err("run.workers", "need at least one worker"));
        }
        let l = &self.ladders;
        check_ladder("ladder.n", l.cells.as_ref().map(|v| v.iter().map(|&c| c as f64).collect()))?;
        for (key, ladder) in [
            ("ladder.k", &l.k),
            ("ladder.epsilon", &l.epsilon),
            ("ladder.eta", &l.eta),
            ("ladder.q", &l.q),
            ("ladder.t", &l.t),
            ("ladder.caps", &l.caps),
        ] {
            check_ladder(key, ladder.clone())?;
        }
        if let Some(qs) = &l.q {
            if let Some(q) = qs.iter().find(|q| **q <= 1.0) {
                return Err(value_err("ladder.q", format!("requires q > 1, got {q}")));
            }
        }
        Ok(())
    }
}

fn check_ladder(key: &str, ladder: Option<Vec<f64>>) -> Result<()> {
    let Some(v) = ladder else { return Ok(()) };
    if v.is_empty() {
        return Err(value_err(key, "ladder is empty"));
    }
    let up = v.windows(2).all(|w| w[1] > w[0]);
    let down = v.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(value_err(key, "ladder must be strictly monotone"));
    }
    Ok(())
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut config = RunConfig::default();
    let mut seen = BTreeSet::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::ConfigSyntax {
                line: line_no,
                reason: format!("expected `key = value`, found `{line}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        let valid_key = !key.is_empty()
            && key
                .split('.')
                .all(|s| !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'));
        if !valid_key {
            return Err(Error::ConfigSyntax {
                line: line_no,
                reason: format!("malformed key `{key}`"),
            });
        }
        if value.is_empty() {
            return Err(Error::ConfigSyntax {
                line: line_no,
                reason: format!("missing value for `{key}`"),
            });
        }
        if !seen.insert(key.to_string()) {
            return Err(Error::ConfigSyntax {
                line: line_no,
                reason: format!("duplicate key `{key}`"),
            });
        }
        config.set(key, value)?;
    }
    config.validate()?;
    Ok(config)
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Writes every field, omitting unset optional ones.
pub fn serialize_config(c: &RunConfig) -> String {
    let mut out = String::new();
    let mut put = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    if let Some(s) = &c.scenario {
        put("scenario", s.clone());
    }
    put("problem.N", c.dim.to_string());
    if let Some(q) = c.q {
        put("problem.q", q.to_string());
    }
    put("grid.R", c.radius.to_string());
    put("grid.n", c.cells.to_string());
    put("grid.cells_per_eps", c.cells_per_eps.to_string());
    put("stepper.safety", c.safety.to_string());
    put("stepper.max_rel_change", c.max_rel_change.to_string());
    put("stepper.t_end", c.t_end.to_string());
    put("stepper.max_steps", c.max_steps.to_string());
    put("data.kind", c.data.kind.as_str().to_string());
    put("data.k", c.data.k.to_string());
    put("data.epsilon", c.data.epsilon.to_string());
    put("data.cap", c.data.cap.to_string());
    put("data.eta", c.data.eta.to_string());
    put("data.z0", c.data.z0.to_string());
    put("data.variance4", c.data.variance4.to_string());
    let l = &c.ladders;
    if let Some(v) = &l.cells {
        put("ladder.n", join(v));
    }
    for (key, ladder) in [
        ("ladder.k", &l.k),
        ("ladder.epsilon", &l.epsilon),
        ("ladder.eta", &l.eta),
        ("ladder.q", &l.q),
        ("ladder.t", &l.t),
        ("ladder.caps", &l.caps),
    ] {
        if let Some(v) = ladder {
            put(key, join(v));
        }
    }
    put("window.r_max", c.window.r_max.to_string());
    put("window.t1", c.window.t1.to_string());
    put("window.t2", c.window.t2.to_string());
    put("shoot.f0_min", c.shoot.f0_min.to_string());
    put("shoot.f0_max", c.shoot.f0_max.to_string());
    put("shoot.points_per_decade", c.shoot.points_per_decade.to_string());
    put("shoot.eta_max", c.shoot.eta_max.to_string());
    put("shoot.tol", c.shoot.tol.to_string());
    put("shoot.bisect_tol", c.shoot.bisect_tol.to_string());
    put("transfer.k", c.transfer_k.to_string());
    put("transfer.eta", c.transfer_eta.to_string());
    put("large.tol", c.large_tol.to_string());
    if let Some(d) = &c.output_dir {
        put("output.dir", d.display().to_string());
    }
    put("run.workers", c.workers.to_string());
    out
}
