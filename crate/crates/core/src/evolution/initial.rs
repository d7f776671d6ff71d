use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exact::GaussianInitialData;
use crate::grid::{Field, RadialGrid};

/// Families of initial data used by the experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialDataSpec {
    /// Smooth bump of mass `k` supported in `B_ε`.
    MollifiedDirac { k: f64, epsilon: f64 },
    /// Height `M` on `B_η`, with a cosine ramp over the last cell inside `B_η`.
    Plateau { cap: f64, eta: f64 },
    /// `-ln(1 - z0)` for Gaussian `z0`.
    GaussianCh(GaussianInitialData),
    #[serde(skip)]
    Explicit(Field),
}

fn check_resolvable(radius: f64, grid: &RadialGrid) -> Result<()> {
    if radius < 4.0 * grid.h() * (1.0 - 1e-12) {
        return Err(Error::Unresolvable { radius, h: grid.h() });
    }
    if radius >= grid.radius() {
        return Err(invalid("support", "must lie strictly inside the grid"));
    }
    Ok(())
}

pub fn make_initial_data(spec: &InitialDataSpec, grid: &RadialGrid, dim: usize) -> Result<Field> {
    match spec {
        InitialDataSpec::MollifiedDirac { k, epsilon } => {
            check_resolvable(*epsilon, grid)?;
            if !(*k >= 0.0 && k.is_finite()) {
                return Err(invalid("k", "mass must be finite and nonnegative"));
            }
            let eps = *epsilon;
            let mut bump = Field::from_fn(*grid, |r| {
                let x = r / eps;
                if x < 1.0 {
                    (-1.0 / (1.0 - x * x)).exp()
                } else {
                    0.0
                }
            });
            let unit = bump.mass(dim);
            bump.values_mut().iter_mut().for_each(|v| *v *= k / unit);
            Ok(bump)
        }
        InitialDataSpec::Plateau { cap, eta } => {
            check_resolvable(*eta, grid)?;
            if !(*cap > 0.0 && cap.is_finite()) {
                return Err(invalid("cap", "plateau height must be finite and positive"));
            }
            let h = grid.h();
            let ramp_start = eta - h;
            Ok(Field::from_fn(*grid, |r| {
                if r <= ramp_start {
                    *cap
                } else if r < *eta {
                    0.5 * cap * (1.0 + (PI * (r - ramp_start) / h).cos())
                } else {
                    0.0
                }
            }))
        }
        InitialDataSpec::GaussianCh(data) => Ok(Field::from_fn(*grid, |r| {
            let z = data.z(r, 0.0, dim);
            -(-z).ln_1p()
        })),
        InitialDataSpec::Explicit(f) => {
            if f.grid() != grid {
                return Err(invalid("field", "explicit data lives on a different grid"));
            }
            Ok(f.clone())
        }
    }
}
