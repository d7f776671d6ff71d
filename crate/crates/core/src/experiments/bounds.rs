use serde::{Deserialize, Serialize};

use super::{tables, ExperimentReport, Scenario, StepSettings, Table, Tables, Verdict};
use crate::error::{invalid, Result};
use crate::evolution::{evolve, make_initial_data, BoundaryCondition, InitialDataSpec, StepEvent};
use crate::grid::RadialGrid;
use crate::par;
use crate::params::ProblemParams;

/// Largest allowed ratio between the monitored constants on two grids.
pub const REFINEMENT_RATIO: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCase {
    pub label: String,
    pub dim: usize,
    pub q: f64,
    pub radius: f64,
    pub cells: usize,
    pub data: InitialDataSpec,
    pub t_end: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniversalBoundsSpec {
    pub cases: Vec<BoundCase>,
    /// Each case runs on `cells` and `refinement·cells`.
    pub refinement: usize,
    pub stepper: StepSettings,
}

impl Default for UniversalBoundsSpec {
    fn default() -> Self {
        let case = |label: &str, q: f64, radius: f64, cells: usize, data: InitialDataSpec, t_end: f64| BoundCase {
            label: label.to_string(),
            dim: 1,
            q,
            radius,
            cells,
            data,
            t_end,
        };
        Self {
            cases: vec![
                case(
                    "dirac_q1.3",
                    1.3,
                    10.0,
                    4000,
                    InitialDataSpec::MollifiedDirac { k: 1000.0, epsilon: 0.02 },
                    1.0,
                ),
                case(
                    "dirac_q1.6",
                    1.6,
                    10.0,
                    3200,
                    InitialDataSpec::MollifiedDirac { k: 10.0, epsilon: 0.025 },
                    0.5,
                ),
                case(
                    "ball_plateau_q1.3",
                    1.3,
                    1.0,
                    800,
                    InitialDataSpec::Plateau { cap: 1e10, eta: 0.025 },
                    0.25,
                ),
            ],
            refinement: 2,
            stepper: StepSettings::default(),
        }
    }
}

/// `(Ĉ, Ĉ_d)` for one run.
///
/// `Ĉ = max_t sup u / (1 + t^{-1/(q-1)})`; `Ĉ_d` is the same ratio divided
/// by the distance `R - r` to the boundary, maximized over interior nodes.
pub fn monitored_constants(case: &BoundCase, cells: usize, stepper: &StepSettings) -> Result<(f64, f64)> {
    let params = ProblemParams::new(case.dim, case.q)?;
    let grid = RadialGrid::new(case.radius, cells)?;
    let f0 = make_initial_data(&case.data, &grid, case.dim)?;
    let weight = |t: f64| 1.0 + t.powf(-1.0 / (case.q - 1.0));
    let m = grid.cells();
    let mut wa = 0.0f64;
    let mut obs = |e: &StepEvent<'_>| {
        let w = weight(e.t_new);
        for (i, v) in e.new.values()[..m].iter().enumerate() {
            wa = wa.max(v / (w * (case.radius - grid.node(i))));
        }
    };
    let tr = evolve(&f0, &params, &BoundaryCondition::DirichletZero, &stepper.until(case.t_end), &mut [&mut obs])?;
    let c_hat = tr
        .records
        .iter()
        .filter(|r| r.t > 0.0)
        .map(|r| r.sup / weight(r.t))
        .fold(0.0, f64::max);
    Ok((c_hat, wa))
}

pub fn exp_universal_bounds(spec: &UniversalBoundsSpec) -> Result<ExperimentReport> {
    if spec.refinement < 2 {
        return Err(invalid("refinement", "need a factor of at least 2"));
    }
    let jobs: Vec<(usize, usize)> = (0..spec.cases.len())
        .flat_map(|c| [(c, spec.cases[c].cells), (c, spec.cases[c].cells * spec.refinement)])
        .collect();
    let results = par::try_map(&jobs, |&(c, cells)| monitored_constants(&spec.cases[c], cells, &spec.stepper))?;
    let mut table = Table::new(&["case", "cells", "c_hat", "wa_hat"]);
    for (&(c, cells), (c_hat, wa)) in jobs.iter().zip(results) {
        table.push(vec![c as f64, cells as f64, c_hat, wa]);
    }
    ExperimentReport::judged(Scenario::UniversalBounds, spec, tables([("bounds", table)]))
}

pub(super) fn judge(tables: &Tables) -> (Verdict, Vec<String>) {
    let Some(t) = tables.get("bounds").filter(|t| !t.is_empty()) else {
        return (Verdict::Indeterminate, vec!["no runs recorded".into()]);
    };
    let mut cases: Vec<f64> = t.rows.iter().map(|r| r[0]).collect();
    cases.dedup();
    let mut ok = true;
    let mut lines = Vec::new();
    for case in cases {
        let c: Vec<f64> = t.rows.iter().filter(|r| r[0] == case).map(|r| r[2]).collect();
        if c.len() < 2 {
            return (Verdict::Indeterminate, vec![format!("case {case} has no refinement")]);
        }
        let finite = c.iter().all(|v| v.is_finite());
        let (lo, hi) = c.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        let ratio = if hi == 0.0 { 1.0 } else { hi / lo };
        let case_ok = finite && ratio <= REFINEMENT_RATIO;
        ok &= case_ok;
        lines.push(format!("case {case}: C_hat {c:.4?}, ratio {ratio:.3}"));
    }
    (Verdict::from_bool(ok), lines)
}
