use serde::{Deserialize, Serialize};

use super::{cells_for, tables, ExperimentReport, Scenario, StepSettings, Table, Tables, Verdict};
use crate::error::{invalid, Result};
use crate::evolution::{evolve, make_initial_data, BoundaryCondition, InitialDataSpec};
use crate::grid::RadialGrid;
use crate::par;
use crate::params::ProblemParams;

/// Required ratio `m(last) / m(first)`.
pub const COLLAPSE_FACTOR: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemovabilitySpec {
    pub dim: usize,
    pub q: f64,
    pub k: f64,
    pub epsilons: Vec<f64>,
    pub cells_per_eps: f64,
    pub radius: f64,
    pub window_r: f64,
    pub t1: f64,
    pub t2: f64,
    /// Snapshot count over `[t1, t2]`.
    pub window_samples: usize,
    pub stepper: StepSettings,
}

impl Default for RemovabilitySpec {
    fn default() -> Self {
        Self {
            dim: 1,
            q: 1.6,
            k: 10.0,
            epsilons: vec![0.2, 0.1, 0.05, 0.025],
            cells_per_eps: 8.0,
            radius: 10.0,
            window_r: 1.0,
            t1: 0.25,
            t2: 0.5,
            window_samples: 26,
            stepper: StepSettings::default(),
        }
    }
}

/// Window sup of `u_ε` with data `kρ_ε` as `ε` and `h` shrink together.
pub fn exp_removability(spec: &RemovabilitySpec) -> Result<ExperimentReport> {
    let params = ProblemParams::new(spec.dim, spec.q)?;
    if spec.q < params.q_star() {
        return Err(invalid("q", format!("removability needs q ≥ q* = {}", params.q_star())));
    }
    if !(0.0 < spec.t1 && spec.t1 <= spec.t2) {
        return Err(invalid("window", "need 0 < t1 ≤ t2"));
    }
    if spec.window_samples == 0 {
        return Err(invalid("window_samples", "need at least one sample"));
    }
    let times: Vec<f64> = (0..spec.window_samples)
        .map(|i| {
            let s = if spec.window_samples == 1 { 0.0 } else { i as f64 / (spec.window_samples - 1) as f64 };
            spec.t1 + s * (spec.t2 - spec.t1)
        })
        .collect();
    let rows = par::try_map(&spec.epsilons, |&eps| -> Result<Vec<f64>> {
        let n = cells_for(spec.radius, eps, spec.cells_per_eps);
        let grid = RadialGrid::new(spec.radius, n)?;
        let data = InitialDataSpec::MollifiedDirac { k: spec.k, epsilon: eps };
        let f0 = make_initial_data(&data, &grid, spec.dim)?;
        let cfg = spec.stepper.until(spec.t2).with_snapshots(&times);
        let tr = evolve(&f0, &params, &BoundaryCondition::DirichletZero, &cfg, &mut [])?;
        let m = tr
            .snapshots
            .iter()
            .map(|(_, f)| f.sup_norm_within(spec.window_r))
            .fold(0.0, f64::max);
        Ok(vec![eps, n as f64, m])
    })?;
    let mut window = Table::new(&["epsilon", "n", "window_sup"]);
    rows.into_iter().for_each(|r| window.push(r));
    ExperimentReport::judged(Scenario::Removability, spec, tables([("window", window)]))
}

pub(super) fn judge(tables: &Tables) -> (Verdict, Vec<String>) {
    let m = tables.get("window").and_then(|t| t.column("window_sup")).unwrap_or_default();
    if m.len() < 2 {
        return (Verdict::Indeterminate, vec!["need at least two ε levels".into()]);
    }
    if m[0] == 0.0 {
        return (Verdict::Indeterminate, vec!["solution vanishes identically".into()]);
    }
    let decreasing = m.windows(2).all(|w| w[1] < w[0]);
    let ratio = m[m.len() - 1] / m[0];
    (
        Verdict::from_bool(decreasing && ratio <= COLLAPSE_FACTOR),
        vec![
            format!("window sup strictly decreasing: {decreasing}"),
            format!("last/first = {ratio:.4} (limit {COLLAPSE_FACTOR})"),
        ],
    )
}
