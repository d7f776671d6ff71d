use serde::{Deserialize, Serialize};

use super::{tables, ExperimentReport, Scenario, StepSettings, Table, Tables, Verdict};
use crate::error::{invalid, Result};
use crate::evolution::{evolve_to, make_initial_data, BoundaryCondition, InitialDataSpec};
use crate::exact::{exact_q2_solution, GaussianInitialData};
use crate::grid::RadialGrid;
use crate::par;
use crate::params::ProblemParams;

pub const MAX_FINEST_ERROR: f64 = 1e-3;
pub const MIN_ORDER: f64 = 0.8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColeHopfSpec {
    pub dim: usize,
    pub radius: f64,
    pub cells: Vec<usize>,
    pub t_check: f64,
    pub data: GaussianInitialData,
    pub stepper: StepSettings,
}

impl Default for ColeHopfSpec {
    fn default() -> Self {
        Self {
            dim: 1,
            radius: 10.0,
            cells: vec![100, 200, 400, 800],
            t_check: 0.5,
            data: GaussianInitialData::new(0.5, 1.0).expect("valid Gaussian data"),
            // dt stays proportional to h so the ladder measures the scheme's order.
            stepper: StepSettings {
                safety: 0.25,
                max_rel_change: 0.0,
                ..StepSettings::default()
            },
        }
    }
}

/// q = 2 evolution against the Cole–Hopf solution over a refinement ladder.
pub fn exp_cole_hopf(spec: &ColeHopfSpec) -> Result<ExperimentReport> {
    if spec.cells.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("cells", "refinement ladder must increase"));
    }
    if !(spec.t_check >= 0.0) {
        return Err(invalid("t_check", "must be nonnegative"));
    }
    let params = ProblemParams::new(spec.dim, 2.0)?;
    let errors = par::try_map(&spec.cells, |&n| -> Result<(f64, f64)> {
        let grid = RadialGrid::new(spec.radius, n)?;
        let f0 = make_initial_data(&InitialDataSpec::GaussianCh(spec.data), &grid, spec.dim)?;
        let f = evolve_to(&f0, &params, &BoundaryCondition::DirichletZero, &spec.stepper.until(spec.t_check))?;
        let err = grid
            .nodes()
            .zip(f.values())
            .map(|(r, v)| (v - exact_q2_solution(&spec.data, r, spec.t_check, spec.dim)).abs())
            .fold(0.0, f64::max);
        Ok((grid.h(), err))
    })?;

    let mut err_table = Table::new(&["n", "h", "error"]);
    let mut order_table = Table::new(&["n", "order"]);
    for (i, (&n, &(h, e))) in spec.cells.iter().zip(&errors).enumerate() {
        err_table.push(vec![n as f64, h, e]);
        if i > 0 {
            let (h0, e0) = errors[i - 1];
            order_table.push(vec![n as f64, (e0 / e).ln() / (h0 / h).ln()]);
        }
    }
    ExperimentReport::judged(
        Scenario::ColeHopf,
        spec,
        tables([("errors", err_table), ("orders", order_table)]),
    )
}

pub(super) fn judge(tables: &Tables) -> (Verdict, Vec<String>) {
    let Some(errors) = tables.get("errors").and_then(|t| t.column("error")) else {
        return (Verdict::Indeterminate, vec!["no error table".into()]);
    };
    let Some(&finest) = errors.last() else {
        return (Verdict::Indeterminate, vec!["empty refinement ladder".into()]);
    };
    if errors.iter().all(|e| *e <= 1e-14) {
        return (Verdict::Pass, vec!["exact agreement at every level".into()]);
    }
    let orders = tables.get("orders").and_then(|t| t.column("order")).unwrap_or_default();
    if orders.is_empty() {
        return (
            Verdict::Indeterminate,
            vec![format!("finest error {finest:.3e}; one grid gives no order")],
        );
    }
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let ok = finest <= MAX_FINEST_ERROR && min_order >= MIN_ORDER;
    (
        Verdict::from_bool(ok),
        vec![
            format!("finest sup error {finest:.3e} (limit {MAX_FINEST_ERROR:e})"),
            format!("smallest observed order {min_order:.3} (limit {MIN_ORDER})"),
        ],
    )
}
