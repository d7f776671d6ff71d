use serde::{Deserialize, Serialize};

use super::{tables, ExperimentReport, Scenario, StepSettings, Table, Tables, Verdict};
use crate::error::{invalid, Error, Result};
use crate::evolution::{evolve, large_solution, make_initial_data, BoundaryCondition, InitialDataSpec};
use crate::grid::{Field, RadialGrid};
use crate::par;
use crate::params::ProblemParams;

/// Largest admissible gap, relative to the upper approximant's sup.
pub const GAP_TOL: f64 = 0.05;
/// Allowed `lower - upper`, relative to `max(1, sup upper)`.
pub const ORDER_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletVssSpec {
    pub dim: usize,
    pub q: f64,
    pub radius: f64,
    pub cells: usize,
    pub ks: Vec<f64>,
    pub etas: Vec<f64>,
    pub caps: Vec<f64>,
    pub cap_tol: f64,
    pub t_probe: f64,
    /// Extra times at which `lower ≤ upper` is checked; `t_probe` is always included.
    pub check_times: Vec<f64>,
    pub stepper: StepSettings,
}

impl Default for DirichletVssSpec {
    fn default() -> Self {
        Self {
            dim: 1,
            q: 1.3,
            radius: 1.0,
            cells: 800,
            ks: vec![1e2, 1e4, 1e6, 1e8],
            etas: vec![0.1, 0.05, 0.025],
            caps: (1..=12).map(|i| 10f64.powi(i)).collect(),
            cap_tol: 0.2,
            t_probe: 0.25,
            check_times: vec![0.0625, 0.125],
            stepper: StepSettings::default(),
        }
    }
}

fn excess(lower: &Field, upper: &Field) -> f64 {
    lower
        .values()
        .iter()
        .zip(upper.values())
        .map(|(l, u)| l - u)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Lower approximant from concentrated data, upper from large solutions, on a ball.
///
/// The upper field is the large solution for the smallest saturated `η`; the
/// lower one uses data `kρ_ε` with `ε = η` and only those `k` whose peak stays
/// below the selected cap, so the initial data are ordered.
pub fn exp_dirichlet_vss(spec: &DirichletVssSpec) -> Result<ExperimentReport> {
    let params = ProblemParams::new(spec.dim, spec.q)?;
    if spec.q >= params.q_star() {
        return Err(invalid("q", format!("needs q < q* = {}", params.q_star())));
    }
    if spec.etas.is_empty() || spec.etas.iter().any(|&e| !(e > 0.0 && e < spec.radius)) {
        return Err(invalid("etas", "every η must lie strictly inside the ball"));
    }
    if spec.ks.is_empty() || spec.ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("ks", "need an increasing, nonempty k ladder"));
    }
    if !(spec.t_probe > 0.0) || spec.check_times.iter().any(|&t| !(t > 0.0 && t <= spec.t_probe)) {
        return Err(invalid("check_times", "need 0 < t ≤ t_probe"));
    }
    let grid = RadialGrid::new(spec.radius, spec.cells)?;
    let bc = BoundaryCondition::DirichletZero;
    let probe_cfg = spec.stepper.until(spec.t_probe);

    let uppers = par::map(&spec.etas, |&eta| {
        large_solution(eta, &grid, &params, &bc, &spec.caps, spec.t_probe, spec.cap_tol, &probe_cfg)
    });
    let mut upper_table = Table::new(&["eta", "cap", "saturated", "sup"]);
    let mut selected: Option<(f64, f64)> = None;
    for (&eta, res) in spec.etas.iter().zip(uppers) {
        match res {
            Ok(ls) => {
                upper_table.push(vec![eta, ls.cap, 1.0, ls.field.sup_norm()]);
                if selected.is_none_or(|(e, _)| eta < e) {
                    selected = Some((eta, ls.cap));
                }
            }
            Err(Error::ScheduleExhausted { last_diff }) => {
                upper_table.push(vec![eta, f64::NAN, 0.0, last_diff]);
            }
            Err(e) => return Err(e),
        }
    }

    let mut lower_table = Table::new(&["k", "peak", "sup", "gap_rel", "max_excess", "upper_sup"]);
    let mut sandwich = Table::new(&["t", "gap_rel", "max_excess", "upper_sup"]);
    if let Some((eta, cap)) = selected {
        let mut times = spec.check_times.clone();
        times.push(spec.t_probe);
        times.sort_by(f64::total_cmp);
        times.dedup();
        let cfg = spec.stepper.until(spec.t_probe).with_snapshots(&times);
        let upper0 = make_initial_data(&InitialDataSpec::Plateau { cap, eta }, &grid, spec.dim)?;
        let upper = evolve(&upper0, &params, &bc, &cfg, &mut [])?.snapshots;

        let admissible: Vec<(f64, Field)> = spec
            .ks
            .iter()
            .map(|&k| make_initial_data(&InitialDataSpec::MollifiedDirac { k, epsilon: eta }, &grid, spec.dim).map(|f| (k, f)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .filter(|(_, f)| f.sup_norm() <= cap)
            .collect();
        let lowers = par::try_map(&admissible, |(_, f0)| evolve(f0, &params, &bc, &cfg, &mut []).map(|t| t.snapshots))?;
        let upper_probe = &upper.last().expect("probe snapshot").1;
        let upper_sup = upper_probe.sup_norm();
        for ((k, f0), snaps) in admissible.iter().zip(&lowers) {
            let lower_probe = &snaps.last().expect("probe snapshot").1;
            lower_table.push(vec![
                *k,
                f0.sup_norm(),
                lower_probe.sup_norm(),
                upper_probe.linf_distance(lower_probe) / upper_sup,
                excess(lower_probe, upper_probe),
                upper_sup,
            ]);
        }
        if let Some(snaps) = lowers.last() {
            for ((t, lo), (_, up)) in snaps.iter().zip(&upper) {
                let s = up.sup_norm();
                sandwich.push(vec![*t, up.linf_distance(lo) / s, excess(lo, up), s]);
            }
        }
    }
    ExperimentReport::judged(
        Scenario::DirichletVss,
        spec,
        tables([("upper", upper_table), ("lower", lower_table), ("sandwich", sandwich)]),
    )
}

pub(super) fn judge(tables: &Tables) -> (Verdict, Vec<String>) {
    let saturated = tables
        .get("upper")
        .and_then(|t| t.column("saturated"))
        .is_some_and(|c| c.contains(&1.0));
    if !saturated {
        return (Verdict::Indeterminate, vec!["no η saturated within the cap schedule".into()]);
    }
    let Some(sandwich) = tables.get("sandwich").filter(|t| !t.is_empty()) else {
        return (Verdict::Indeterminate, vec!["no admissible k below the selected cap".into()]);
    };
    let ordered = sandwich
        .rows
        .iter()
        .all(|r| r[2] <= ORDER_SLACK * r[3].max(1.0))
        && tables
            .get("lower")
            .is_some_and(|t| t.rows.iter().all(|r| r[4] <= ORDER_SLACK * r[5].max(1.0)));
    let gap = sandwich.rows.last().unwrap()[1];
    (
        Verdict::from_bool(ordered && gap <= GAP_TOL),
        vec![
            format!("lower ≤ upper at every checked time: {ordered}"),
            format!("gap at probe {gap:.4} of upper sup (limit {GAP_TOL})"),
        ],
    )
}
