//! Named scenarios that turn qualitative statements into pass/fail reports.
//!
//! Every scenario records its measurements in [`Table`]s and derives the
//! verdict from those tables alone, so a stored report can be re-judged
//! without rerunning anything ([`ExperimentReport::reevaluate`]).

mod bounds;
mod cole_hopf;
mod dirichlet;
mod removability;
mod transfer;
mod vss;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evolution::StepperConfig;

pub use bounds::{exp_universal_bounds, BoundCase, UniversalBoundsSpec};
pub use cole_hopf::{exp_cole_hopf, ColeHopfSpec};
pub use dirichlet::{exp_dirichlet_vss, DirichletVssSpec};
pub use removability::{exp_removability, RemovabilitySpec};
pub use transfer::{exp_subsolution_transform, SubsolutionSpec};
pub use vss::{exp_dichotomy_scan, exp_vss_convergence, DichotomySpec, VssConvergenceSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    ColeHopf,
    Removability,
    VssConvergence,
    DichotomyScan,
    DirichletVss,
    UniversalBounds,
    SubsolutionTransform,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Self::ColeHopf,
        Self::Removability,
        Self::VssConvergence,
        Self::DichotomyScan,
        Self::DirichletVss,
        Self::UniversalBounds,
        Self::SubsolutionTransform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::ColeHopf => "cole_hopf",
            Self::Removability => "removability",
            Self::VssConvergence => "vss_convergence",
            Self::DichotomyScan => "dichotomy_scan",
            Self::DirichletVss => "dirichlet_vss",
            Self::UniversalBounds => "universal_bounds",
            Self::SubsolutionTransform => "subsolution_transform",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    /// Accepts `cole_hopf`, `cole-hopf` and an optional `exp_` prefix.
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().replace('-', "_");
        let norm = norm.strip_prefix("exp_").unwrap_or(&norm);
        Self::ALL
            .into_iter()
            .find(|sc| sc.name() == norm)
            .ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Pass => 0,
            Self::Fail => 1,
            Self::Indeterminate => 2,
        }
    }

    fn from_bool(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pass => "PASS",
            Self::Fail => "FAIL",
            Self::Indeterminate => "INDETERMINATE",
        })
    }
}

/// Numeric table; non-finite entries serialize as JSON `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    #[serde(with = "nullable_rows")]
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

mod nullable_rows {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(rows: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        let wrapped: Vec<Vec<Option<f64>>> = rows
            .iter()
            .map(|r| r.iter().map(|v| v.is_finite().then_some(*v)).collect())
            .collect();
        wrapped.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        let wrapped: Vec<Vec<Option<f64>>> = Vec::deserialize(d)?;
        Ok(wrapped
            .into_iter()
            .map(|r| r.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect())
            .collect())
    }
}

pub type Tables = BTreeMap<String, Table>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub scenario: Scenario,
    pub manifest: serde_json::Value,
    pub tables: Tables,
    pub verdict: Verdict,
    pub summary: Vec<String>,
}

impl ExperimentReport {
    pub(crate) fn judged<S: Serialize>(scenario: Scenario, spec: &S, tables: Tables) -> Result<Self> {
        let manifest = serde_json::json!({
            "scenario": scenario,
            "version": env!("CARGO_PKG_VERSION"),
            "spec": serde_json::to_value(spec)?,
        });
        let (verdict, summary) = judge(scenario, &tables);
        Ok(Self {
            scenario,
            manifest,
            tables,
            verdict,
            summary,
        })
    }

    /// Recomputes the verdict from the stored tables.
    pub fn reevaluate(&self) -> Verdict {
        judge(self.scenario, &self.tables).0
    }

    /// Hex SHA-256 of the canonical manifest JSON.
    pub fn manifest_hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.manifest).expect("manifest is plain JSON");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn run_dir_name(&self) -> String {
        format!("{}-{}", self.scenario, &self.manifest_hash()[..12])
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.get(name)
    }
}

/// Verdict and summary lines for a scenario, from its tables only.
pub fn judge(scenario: Scenario, tables: &Tables) -> (Verdict, Vec<String>) {
    match scenario {
        Scenario::ColeHopf => cole_hopf::judge(tables),
        Scenario::Removability => removability::judge(tables),
        Scenario::VssConvergence => vss::judge_convergence(tables),
        Scenario::DichotomyScan => vss::judge_dichotomy(tables),
        Scenario::DirichletVss => dirichlet::judge(tables),
        Scenario::UniversalBounds => bounds::judge(tables),
        Scenario::SubsolutionTransform => transfer::judge(tables),
    }
}

/// Stepper settings shared by the scenario specs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSettings {
    pub safety: f64,
    pub max_rel_change: f64,
    pub max_steps: usize,
}

impl Default for StepSettings {
    fn default() -> Self {
        let d = StepperConfig::default();
        Self {
            safety: d.safety,
            max_rel_change: d.max_rel_change,
            max_steps: d.max_steps,
        }
    }
}

impl StepSettings {
    pub fn until(&self, t_end: f64) -> StepperConfig {
        StepperConfig {
            safety: self.safety,
            max_rel_change: self.max_rel_change,
            max_steps: self.max_steps,
            ..StepperConfig::until(t_end)
        }
    }
}

/// Cells needed so that `ε` spans `per_eps` cells on `[0, R]`.
pub(crate) fn cells_for(radius: f64, epsilon: f64, per_eps: f64) -> usize {
    (radius * per_eps / epsilon).ceil() as usize
}

fn tables<const N: usize>(entries: [(&str, Table); N]) -> Tables {
    entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
            assert_eq!(s.name().replace('_', "-").parse::<Scenario>().unwrap(), s);
        }
        assert_eq!("exp_cole_hopf".parse::<Scenario>().unwrap(), Scenario::ColeHopf);
        assert!(matches!("nope".parse::<Scenario>(), Err(Error::UnknownScenario(_))));
    }

    #[test]
    fn tables_keep_non_finite_values_through_json() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![1.0, f64::NAN]);
        t.push(vec![f64::INFINITY, 2.5]);
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.contains("null"));
        let back: Table = serde_json::from_str(&json).unwrap();
        assert_eq!(back.rows[0][0], 1.0);
        assert!(back.rows[0][1].is_nan());
        assert!(back.rows[1][0].is_nan());
        assert_eq!(back.column("b").unwrap()[1], 2.5);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("a,b\n1,NaN\n"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Verdict::Pass.exit_code(), 0);
        assert_eq!(Verdict::Fail.exit_code(), 1);
        assert_eq!(Verdict::Indeterminate.exit_code(), 2);
    }
}
