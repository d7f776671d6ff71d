use serde::{Deserialize, Serialize};

use super::{cells_for, tables, ExperimentReport, Scenario, StepSettings, Table, Tables, Verdict};
use crate::error::{invalid, Result};
use crate::evolution::{evolve, evolve_to, make_initial_data, BoundaryCondition, InitialDataSpec};
use crate::grid::{Field, RadialGrid};
use crate::par;
use crate::params::ProblemParams;
use crate::profile::{shoot_vss, ProfileSolution, ScanSettings};

/// Largest relative sup distance between the rescaled PDE solution and the profile.
pub const COLLAPSE_TOL: f64 = 0.05;
/// Allowed excess of `u_{k}` over `u_{k'}` for `k < k'`, relative to `sup u_{k'}`.
pub const MONOTONE_SLACK: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VssConvergenceSpec {
    pub dim: usize,
    pub q: f64,
    pub ks: Vec<f64>,
    pub epsilon: f64,
    pub cells_per_eps: f64,
    pub radius: f64,
    pub probes: Vec<f64>,
    pub eta_window: f64,
    pub shoot: ScanSettings,
    pub stepper: StepSettings,
}

impl Default for VssConvergenceSpec {
    fn default() -> Self {
        Self {
            dim: 1,
            q: 1.3,
            ks: vec![1.0, 10.0, 100.0, 1000.0],
            epsilon: 0.02,
            cells_per_eps: 8.0,
            radius: 10.0,
            probes: vec![0.25, 0.5, 1.0],
            eta_window: 3.0,
            shoot: ScanSettings::default(),
            stepper: StepSettings::default(),
        }
    }
}

/// `max_{η ≤ η_w} |t^{a/2} u(η√t) - f(η)| / max_{η ≤ η_w} f`, over grid nodes.
pub fn collapse_error(field: &Field, t: f64, profile: &ProfileSolution, eta_window: f64) -> f64 {
    let a = profile.ode.a;
    let amp = t.powf(0.5 * a);
    let sqrt_t = t.sqrt();
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for (r, v) in field.grid().nodes().zip(field.values()) {
        let eta = r / sqrt_t;
        if eta > eta_window {
            break;
        }
        let f = profile.value(eta);
        num = num.max((amp * v - f).abs());
        den = den.max(f.abs());
    }
    num / den
}

/// Monotonicity in `k`, Cauchy saturation and collapse onto the shot profile.
pub fn exp_vss_convergence(spec: &VssConvergenceSpec) -> Result<ExperimentReport> {
    let params = ProblemParams::new(spec.dim, spec.q)?;
    if spec.q >= params.q_star() {
        return Err(invalid("q", format!("needs q < q* = {}", params.q_star())));
    }
    if spec.ks.is_empty() || spec.ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("ks", "need an increasing, nonempty k ladder"));
    }
    if spec.probes.is_empty() || spec.probes.windows(2).any(|w| w[1] <= w[0]) || spec.probes[0] <= 0.0 {
        return Err(invalid("probes", "need increasing positive probe times"));
    }
    let outcome = shoot_vss(&params, &spec.shoot)?;
    let grid = RadialGrid::new(spec.radius, cells_for(spec.radius, spec.epsilon, spec.cells_per_eps))?;
    let t_end = *spec.probes.last().unwrap();
    let runs = par::try_map(&spec.ks, |&k| -> Result<Vec<Field>> {
        let f0 = make_initial_data(&InitialDataSpec::MollifiedDirac { k, epsilon: spec.epsilon }, &grid, spec.dim)?;
        let cfg = spec.stepper.until(t_end).with_snapshots(&spec.probes);
        let tr = evolve(&f0, &params, &BoundaryCondition::DirichletZero, &cfg, &mut [])?;
        Ok(tr.snapshots.into_iter().map(|(_, f)| f).collect())
    })?;

    let mut mono = Table::new(&["t", "k_lo", "k_hi", "max_excess", "scale"]);
    let mut cauchy = Table::new(&["t", "k_lo", "k_hi", "sup_diff"]);
    for (j, &t) in spec.probes.iter().enumerate() {
        for i in 1..spec.ks.len() {
            let (lo, hi) = (&runs[i - 1][j], &runs[i][j]);
            let excess = lo
                .values()
                .iter()
                .zip(hi.values())
                .map(|(a, b)| a - b)
                .fold(f64::NEG_INFINITY, f64::max);
            mono.push(vec![t, spec.ks[i - 1], spec.ks[i], excess, hi.sup_norm()]);
            cauchy.push(vec![t, spec.ks[i - 1], spec.ks[i], hi.linf_distance(lo)]);
        }
    }
    let mut profile = Table::new(&["f0_star"]);
    let mut collapse = Table::new(&["t", "k", "rel_error"]);
    if let Some(p) = outcome.profile() {
        profile.push(vec![p.f0_star]);
        let k_max = *spec.ks.last().unwrap();
        for (j, &t) in spec.probes.iter().enumerate() {
            let field = &runs[spec.ks.len() - 1][j];
            collapse.push(vec![t, k_max, collapse_error(field, t, p, spec.eta_window)]);
        }
    } else {
        profile.push(vec![f64::NAN]);
    }
    ExperimentReport::judged(
        Scenario::VssConvergence,
        spec,
        tables([
            ("monotonicity", mono),
            ("cauchy", cauchy),
            ("profile", profile),
            ("collapse", collapse),
        ]),
    )
}

pub(super) fn judge_convergence(tables: &Tables) -> (Verdict, Vec<String>) {
    let f0 = tables
        .get("profile")
        .and_then(|t| t.column("f0_star"))
        .and_then(|c| c.first().copied())
        .unwrap_or(f64::NAN);
    if !f0.is_finite() {
        return (Verdict::Fail, vec!["shooting found no fast-decay profile".into()]);
    }
    let mut lines = vec![format!("profile f0* = {f0:.6}")];

    let mono_ok = match tables.get("monotonicity") {
        Some(t) => t.rows.iter().all(|r| r[3] <= MONOTONE_SLACK * r[4].max(f64::MIN_POSITIVE)),
        None => false,
    };
    lines.push(format!("nodewise monotone in k: {mono_ok}"));

    // Consecutive sup-differences must shrink at the top of the ladder.
    let saturating = tables.get("cauchy").is_some_and(|t| {
        let mut times: Vec<f64> = t.rows.iter().map(|r| r[0]).collect();
        times.dedup();
        !times.is_empty()
            && times.iter().all(|&time| {
                let d: Vec<f64> = t.rows.iter().filter(|r| r[0] == time).map(|r| r[3]).collect();
                d.len() >= 2 && d[d.len() - 1] < d[d.len() - 2]
            })
    });
    lines.push(format!("Cauchy differences shrinking in k: {saturating}"));

    let errs = tables.get("collapse").and_then(|t| t.column("rel_error")).unwrap_or_default();
    if errs.is_empty() {
        return (Verdict::Indeterminate, lines);
    }
    let worst = errs.iter().copied().fold(0.0, f64::max);
    let collapse_ok = worst <= COLLAPSE_TOL;
    lines.push(format!("worst collapse error {worst:.4} (limit {COLLAPSE_TOL})"));
    (Verdict::from_bool(mono_ok && saturating && collapse_ok), lines)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomySpec {
    pub dim: usize,
    pub qs: Vec<f64>,
    pub shoot: ScanSettings,
    pub k: f64,
    pub epsilon: f64,
    pub cells_per_eps: f64,
    pub radius: f64,
    pub t_probe: f64,
    pub stepper: StepSettings,
}

impl Default for DichotomySpec {
    fn default() -> Self {
        Self {
            dim: 1,
            qs: vec![1.3, 1.4, 1.45, 1.49, 1.51, 1.55, 1.6],
            shoot: ScanSettings::default(),
            k: 10.0,
            epsilon: 0.05,
            cells_per_eps: 8.0,
            radius: 10.0,
            t_probe: 0.25,
            stepper: StepSettings::default(),
        }
    }
}

/// Profile existence and a singular-data probe across a `q` grid.
pub fn exp_dichotomy_scan(spec: &DichotomySpec) -> Result<ExperimentReport> {
    if spec.qs.is_empty() || spec.qs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("qs", "need an increasing, nonempty q grid"));
    }
    let grid = RadialGrid::new(spec.radius, cells_for(spec.radius, spec.epsilon, spec.cells_per_eps))?;
    let rows = par::try_map(&spec.qs, |&q| -> Result<Vec<f64>> {
        let params = ProblemParams::new(spec.dim, q)?;
        let q_star = params.q_star();
        let side = if q < q_star { -1.0 } else { 1.0 };
        let f0_star = if q < 2.0 {
            shoot_vss(&params, &spec.shoot)?.profile().map(|p| p.f0_star)
        } else {
            None
        };
        let data = InitialDataSpec::MollifiedDirac { k: spec.k, epsilon: spec.epsilon };
        let f0 = make_initial_data(&data, &grid, spec.dim)?;
        let probe = evolve_to(&f0, &params, &BoundaryCondition::DirichletZero, &spec.stepper.until(spec.t_probe))?;
        Ok(vec![
            q,
            side,
            f0_star.is_some() as u8 as f64,
            f0_star.unwrap_or(f64::NAN),
            probe.sup_norm(),
        ])
    })?;
    let mut scan = Table::new(&["q", "side", "exists", "f0_star", "probe_sup"]);
    rows.into_iter().for_each(|r| scan.push(r));
    ExperimentReport::judged(Scenario::DichotomyScan, spec, tables([("scan", scan)]))
}

pub(super) fn judge_dichotomy(tables: &Tables) -> (Verdict, Vec<String>) {
    let Some(scan) = tables.get("scan") else {
        return (Verdict::Indeterminate, vec!["no scan table".into()]);
    };
    if scan.len() < 2 {
        return (Verdict::Indeterminate, vec!["a single q cannot show a flip".into()]);
    }
    let exists = scan.column("exists").unwrap_or_default();
    let side = scan.column("side").unwrap_or_default();
    let q = scan.column("q").unwrap_or_default();
    let flips: Vec<usize> = (1..exists.len()).filter(|&i| exists[i] != exists[i - 1]).collect();
    let mut lines = vec![format!("existence flips: {}", flips.len())];
    let crossing = (1..side.len()).find(|&i| side[i - 1] < 0.0 && side[i] > 0.0);
    let ok = match (flips.as_slice(), crossing) {
        ([i], Some(c)) => {
            lines.push(format!("flip between q = {} and q = {}", q[i - 1], q[*i]));
            *i == c
        }
        _ => false,
    };
    if crossing.is_none() {
        lines.push("grid does not straddle q*".into());
        return (Verdict::Indeterminate, lines);
    }
    (Verdict::from_bool(ok), lines)
}
