use crate::error::{invalid, Error, Result};
use crate::grid::{Field, RadialGrid};
use crate::par;
use crate::params::ProblemParams;

use super::{evolve_to, make_initial_data, BoundaryCondition, InitialDataSpec, StepperConfig};

/// Approximation of the large solution with infinite data on `B_η`.
#[derive(Clone, Debug)]
pub struct LargeSolution {
    /// Field at the probe time for the selected cap.
    pub field: Field,
    pub cap: f64,
    /// `(M_i, ‖u_{M_{i+1}} - u_{M_i}‖_∞)` for each consecutive pair evaluated.
    pub differences: Vec<(f64, f64)>,
}

/// Evolves `Plateau{M, η}` to `t_probe` for every cap in the schedule and
/// returns the first pair whose sup-difference drops below `tol`.
///
/// The reported field is the larger cap of that pair, the one closer to the
/// supremum over bounded data. Caps are evaluated concurrently.
#[allow(clippy::too_many_arguments)]
pub fn large_solution(
    eta: f64,
    grid: &RadialGrid,
    params: &ProblemParams,
    bc: &BoundaryCondition,
    caps: &[f64],
    t_probe: f64,
    tol: f64,
    config: &StepperConfig,
) -> Result<LargeSolution> {
    if caps.len() < 2 || caps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("caps", "need at least two strictly increasing caps"));
    }
    let cfg = StepperConfig {
        t_end: t_probe,
        snapshot_times: Vec::new(),
        ..config.clone()
    };
    let fields = par::try_map(caps, |&cap| -> Result<Field> {
        let f0 = make_initial_data(&InitialDataSpec::Plateau { cap, eta }, grid, params.dim())?;
        evolve_to(&f0, params, bc, &cfg)
    })?;
    let mut differences = Vec::new();
    for (i, pair) in fields.windows(2).enumerate() {
        let d = pair[1].linf_distance(&pair[0]);
        differences.push((caps[i], d));
        if d < tol {
            return Ok(LargeSolution {
                field: pair[1].clone(),
                cap: caps[i + 1],
                differences,
            });
        }
    }
    Err(Error::ScheduleExhausted {
        last_diff: differences.last().map(|d| d.1).unwrap_or(f64::INFINITY),
    })
}
