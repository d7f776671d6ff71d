use serde::{Deserialize, Serialize};

use super::{tables, ExperimentReport, Scenario, StepSettings, Table, Tables, Verdict};
use crate::error::{invalid, Result};
use crate::evolution::{evolve, make_initial_data, BoundaryCondition, InitialDataSpec, StepEvent};
use crate::exact::GaussianInitialData;
use crate::grid::{godunov_hamiltonian, laplacian_radial, one_sided_gradients, Field, RadialGrid};
use crate::params::ProblemParams;

/// Residual tolerance relative to the initial sup of `w`.
pub const RESIDUAL_TOL: f64 = 1e-4;
/// Largest admissible fraction of violating nodes.
pub const MAX_VIOLATION_FRACTION: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsolutionSpec {
    pub dim: usize,
    pub q: f64,
    /// Target exponent of the transformed function.
    pub k: f64,
    pub eta: f64,
    pub radius: f64,
    pub cells: usize,
    pub data: InitialDataSpec,
    pub t_end: f64,
    pub stepper: StepSettings,
}

impl Default for SubsolutionSpec {
    fn default() -> Self {
        Self {
            dim: 1,
            q: 2.0,
            k: 1.3,
            eta: 0.5,
            radius: 10.0,
            cells: 400,
            data: InitialDataSpec::GaussianCh(GaussianInitialData::new(0.5, 1.0).expect("valid Gaussian data")),
            t_end: 0.5,
            stepper: StepSettings::default(),
        }
    }
}

fn transformed(u: &Field, t: f64, c: f64, eta: f64) -> Field {
    let mut w = u.clone();
    w.values_mut().iter_mut().for_each(|v| *v = (c * (*v - eta * t)).max(0.0));
    w
}

/// Checks `w_t - Lw + H_k(w) ≤ tol` step by step for `w = η^{1/(k-1)}(u - ηt)⁺`.
pub fn exp_subsolution_transform(spec: &SubsolutionSpec) -> Result<ExperimentReport> {
    let params = ProblemParams::new(spec.dim, spec.q)?;
    if spec.q < 2.0 {
        return Err(invalid("q", "the transform starts from an exponent q ≥ 2"));
    }
    let k_max = if spec.dim == 1 { f64::INFINITY } else { spec.dim as f64 / (spec.dim as f64 - 1.0) };
    if !(spec.k > 1.0 && spec.k < k_max) {
        return Err(invalid("k", format!("need 1 < k < {k_max}")));
    }
    if !(spec.eta > 0.0 && spec.eta < 1.0) {
        return Err(invalid("eta", "need 0 < η < 1"));
    }
    let grid = RadialGrid::new(spec.radius, spec.cells)?;
    let f0 = make_initial_data(&spec.data, &grid, spec.dim)?;
    let c = spec.eta.powf(1.0 / (spec.k - 1.0));
    let tol = RESIDUAL_TOL * transformed(&f0, 0.0, c, spec.eta).sup_norm();
    let m = grid.cells();

    let mut table = Table::new(&["step", "t", "positive", "violations", "max_residual"]);
    let mut obs = |e: &StepEvent<'_>| {
        let w_old = transformed(e.old, e.t_old, c, spec.eta);
        let w_new = transformed(e.new, e.t_new, c, spec.eta);
        let lap = laplacian_radial(&w_new, spec.dim);
        let (minus, plus) = one_sided_gradients(&w_old);
        let (mut positive, mut violations, mut worst) = (0usize, 0usize, f64::NEG_INFINITY);
        for i in 0..m {
            if w_new.values()[i] <= 0.0 {
                continue;
            }
            positive += 1;
            let res = (w_new.values()[i] - w_old.values()[i]) / e.dt - lap.values()[i]
                + godunov_hamiltonian(minus[i], plus[i], spec.k);
            worst = worst.max(res);
            if res > tol {
                violations += 1;
            }
        }
        table.push(vec![e.index as f64, e.t_new, positive as f64, violations as f64, worst]);
    };
    evolve(&f0, &params, &BoundaryCondition::DirichletZero, &spec.stepper.until(spec.t_end), &mut [&mut obs])?;
    ExperimentReport::judged(Scenario::SubsolutionTransform, spec, tables([("residual", table)]))
}

pub(super) fn judge(tables: &Tables) -> (Verdict, Vec<String>) {
    let Some(t) = tables.get("residual") else {
        return (Verdict::Indeterminate, vec!["no residual table".into()]);
    };
    let positive: f64 = t.column("positive").unwrap_or_default().iter().sum();
    let violations: f64 = t.column("violations").unwrap_or_default().iter().sum();
    if positive == 0.0 {
        return (Verdict::Pass, vec!["w⁺ vanishes identically".into()]);
    }
    let fraction = violations / positive;
    (
        Verdict::from_bool(fraction <= MAX_VIOLATION_FRACTION),
        vec![format!(
            "{violations} violations over {positive} positive node-steps ({fraction:.2e}, limit {MAX_VIOLATION_FRACTION:e})"
        )],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_data_is_trivially_a_subsolution() {
        let spec = SubsolutionSpec {
            data: InitialDataSpec::MollifiedDirac { k: 0.0, epsilon: 0.5 },
            cells: 100,
            t_end: 0.1,
            ..SubsolutionSpec::default()
        };
        let rep = exp_subsolution_transform(&spec).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
    }

    #[test]
    fn parameter_ranges() {
        for bad in [
            SubsolutionSpec { q: 1.5, ..SubsolutionSpec::default() },
            SubsolutionSpec { k: 1.0, ..SubsolutionSpec::default() },
            SubsolutionSpec { dim: 2, k: 2.5, ..SubsolutionSpec::default() },
            SubsolutionSpec { eta: 1.0, ..SubsolutionSpec::default() },
        ] {
            assert!(exp_subsolution_transform(&bad).is_err());
        }
    }

    #[test]
    fn default_run_has_no_violations() {
        let rep = exp_subsolution_transform(&SubsolutionSpec {
            t_end: 0.2,
            ..SubsolutionSpec::default()
        })
        .unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        let worst = rep.table("residual").unwrap().column("max_residual").unwrap();
        assert!(worst.iter().filter(|v| v.is_finite()).all(|v| *v <= 1e-10), "{worst:?}");
    }
}
