//! IMEX time stepping: backward-Euler diffusion, explicit Godunov absorption.
//!
//! One step solves
//!
//! ```text
//! (I - dt L) u_new = u_old - dt H(u_old)
//! ```
//!
//! on nodes `0..n-1` with the outer node pinned by the boundary condition.
//! For `N ≤ 3` the matrix is an M-matrix; together with the restriction
//! from [`dt_limit`] this makes the whole update order preserving.

mod initial;
mod large;

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{godunov_hamiltonian, laplacian_radial, one_sided_gradients, sphere_area, Field, RadialGrid};
use crate::params::ProblemParams;
use crate::tridiag;

pub use initial::{make_initial_data, InitialDataSpec};
pub use large::{large_solution, LargeSolution};

/// Largest dimension for which the implicit matrix keeps the M-matrix sign
/// pattern on a uniform grid.
pub const MAX_EVOLUTION_DIM: usize = 3;

pub type BoundaryFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone, Default)]
pub enum BoundaryCondition {
    #[default]
    DirichletZero,
    DirichletValue(BoundaryFn),
}

impl BoundaryCondition {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Self::DirichletZero => 0.0,
            Self::DirichletValue(g) => g(t),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::DirichletZero => "dirichlet_zero",
            Self::DirichletValue(_) => "dirichlet_value",
        }
    }
}

impl fmt::Debug for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub safety: f64,
    pub t_end: f64,
    pub max_steps: usize,
    pub snapshot_times: Vec<f64>,
    pub nonneg_clip: bool,
    pub dt_min: f64,
    /// Largest relative change of `sup u` allowed per step; `0` disables the cap.
    pub max_rel_change: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            safety: 0.5,
            t_end: 1.0,
            max_steps: 5_000_000,
            snapshot_times: Vec::new(),
            nonneg_clip: false,
            dt_min: 0.0,
            max_rel_change: 0.02,
        }
    }
}

impl StepperConfig {
    pub fn until(t_end: f64) -> Self {
        Self {
            t_end,
            ..Self::default()
        }
    }

    pub fn with_snapshots(mut self, times: &[f64]) -> Self {
        self.snapshot_times = times.to_vec();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(invalid("safety", "must lie in (0, 1]"));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(invalid("t_end", "must be finite and nonnegative"));
        }
        if !(self.max_rel_change >= 0.0 && self.max_rel_change.is_finite()) {
            return Err(invalid("max_rel_change", "must be finite and nonnegative"));
        }
        if self.snapshot_times.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("snapshot_times", "must be sorted"));
        }
        if self.snapshot_times.iter().any(|t| *t < 0.0) {
            return Err(invalid("snapshot_times", "must be nonnegative"));
        }
        Ok(())
    }
}

/// Largest stable step: `safety·h / (q P^{q-1})` with `P` the largest
/// one-sided slope, clamped to `[dt_min, h]`.
pub fn dt_limit(f: &Field, q: f64, safety: f64, dt_min: f64) -> f64 {
    let h = f.grid().h();
    let (minus, plus) = one_sided_gradients(f);
    let p = minus
        .iter()
        .chain(&plus)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if p == 0.0 {
        return h;
    }
    (safety * h / (q * p.powf(q - 1.0))).clamp(dt_min.min(h), h)
}

/// Step keeping the explicit change `dt·sup|Lu - H(u)|` below
/// `rel_change·sup|u|`; `+∞` when the field is stationary or the cap is off.
pub fn dt_accuracy(f: &Field, dim: usize, q: f64, rel_change: f64) -> f64 {
    let scale = f.sup_norm();
    if rel_change == 0.0 || scale == 0.0 {
        return f64::INFINITY;
    }
    let lap = laplacian_radial(f, dim);
    let (minus, plus) = one_sided_gradients(f);
    let m = f.grid().cells();
    let rate = (0..m).fold(0.0f64, |acc, i| {
        acc.max((lap.values()[i] - godunov_hamiltonian(minus[i], plus[i], q)).abs())
    });
    if rate == 0.0 {
        f64::INFINITY
    } else {
        rel_change * scale / rate
    }
}

/// Per-step bookkeeping returned by [`Stepper::step`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepReport {
    /// `dt ∫ H(u_old)` over the grid volume.
    pub dissipation: f64,
    /// Diffusive flux leaving through the outer sphere during the step.
    pub outflux: f64,
    /// Largest one-sided slope of the new field.
    pub grad_sup: f64,
}

/// Reusable buffers for repeated steps on one grid.
#[derive(Debug)]
pub struct Stepper {
    grid: RadialGrid,
    params: ProblemParams,
    weights: Vec<f64>,
    omega: f64,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    scratch: Vec<f64>,
    hamiltonian: Vec<f64>,
}

impl Stepper {
    pub fn new(grid: RadialGrid, params: ProblemParams) -> Result<Self> {
        if params.dim() > MAX_EVOLUTION_DIM {
            return Err(invalid(
                "dim",
                format!("evolution supports N ≤ {MAX_EVOLUTION_DIM} (M-matrix stencil)"),
            ));
        }
        let m = grid.cells();
        Ok(Self {
            grid,
            params,
            weights: grid.volume_weights(params.dim()),
            omega: sphere_area(params.dim()),
            lower: vec![0.0; m],
            diag: vec![0.0; m],
            upper: vec![0.0; m],
            scratch: vec![0.0; m],
            hamiltonian: vec![0.0; m],
        })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    /// Advances `field` from `t_new - dt` to `t_new` in place.
    pub fn step(
        &mut self,
        field: &mut Field,
        t_new: f64,
        dt: f64,
        bc: &BoundaryCondition,
    ) -> Result<StepReport> {
        let grid = self.grid;
        let m = grid.cells();
        let h = grid.h();
        let n = self.params.dim() as f64;
        let q = self.params.q();
        let u = field.values_mut();

        let mut dissipation = 0.0;
        for i in 0..m {
            let p_plus = (u[i + 1] - u[i]) / h;
            let p_minus = if i == 0 { -p_plus } else { (u[i] - u[i - 1]) / h };
            let hv = godunov_hamiltonian(p_minus, p_plus, q);
            self.hamiltonian[i] = hv;
            dissipation += self.weights[i] * hv;
        }

        let k = dt / (h * h);
        self.lower[0] = 0.0;
        self.diag[0] = 1.0 + 2.0 * n * k;
        self.upper[0] = -2.0 * n * k;
        for i in 1..m {
            let c = (n - 1.0) * h / (2.0 * grid.node(i));
            self.lower[i] = -k * (1.0 - c);
            self.diag[i] = 1.0 + 2.0 * k;
            self.upper[i] = -k * (1.0 + c);
        }
        let boundary = bc.value(t_new);
        for (ui, hi) in u[..m].iter_mut().zip(&self.hamiltonian) {
            *ui -= dt * hi;
        }
        u[m - 1] -= self.upper[m - 1] * boundary;
        tridiag::solve_in_place(&self.lower, &self.diag, &self.upper, &mut u[..m], &mut self.scratch)?;
        u[m] = boundary;

        // Σ W_i (L u)_i telescopes to the flux through the last half-cell.
        let r_last = grid.node(m - 1);
        let top = self.weights[m - 1] * (1.0 + (n - 1.0) * h / (2.0 * r_last));
        let outflux = self.omega * dt * top * (u[m - 1] - u[m]) / (h * h);

        let mut grad_sup = 0.0f64;
        for i in 0..m {
            grad_sup = grad_sup.max(((u[i + 1] - u[i]) / h).abs());
        }
        Ok(StepReport {
            dissipation: self.omega * dt * dissipation,
            outflux,
            grad_sup,
        })
    }
}

/// Single IMEX step; see [`Stepper`] for repeated use.
pub fn step(
    f: &Field,
    t_new: f64,
    dt: f64,
    params: &ProblemParams,
    bc: &BoundaryCondition,
) -> Result<Field> {
    let mut out = f.clone();
    Stepper::new(*f.grid(), *params)?.step(&mut out, t_new, dt, bc)?;
    Ok(out)
}

/// Observer record at one time level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    pub sup: f64,
    pub mass: f64,
    pub grad_sup: f64,
    /// Cumulative `∫∫ |∇u|^q`.
    pub dissipation: f64,
    /// Cumulative boundary outflux.
    pub outflux: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub records: Vec<Record>,
    pub snapshots: Vec<(f64, Field)>,
}

impl Trajectory {
    pub fn last(&self) -> &Record {
        self.records.last().expect("trajectory always holds the initial record")
    }

    pub fn snapshot_at(&self, t: f64) -> Option<&Field> {
        self.snapshots
            .iter()
            .find(|(ts, _)| (ts - t).abs() <= 1e-12 * t.max(1.0))
            .map(|(_, f)| f)
    }

    /// `mass(0) - mass(t_end) - dissipation - outflux`, relative to `mass(0)`.
    pub fn mass_balance_residual(&self) -> f64 {
        let first = &self.records[0];
        let last = self.last();
        let r = first.mass - last.mass - last.dissipation - last.outflux;
        if first.mass == 0.0 {
            r.abs()
        } else {
            (r / first.mass).abs()
        }
    }

    /// Writes `t,sup,mass,grad_sup,dissipation`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "sup", "mass", "grad_sup", "dissipation"])?;
        for r in &self.records {
            w.serialize((r.t, r.sup, r.mass, r.grad_sup, r.dissipation))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Data handed to observers after each accepted step.
pub struct StepEvent<'a> {
    pub index: usize,
    pub t_old: f64,
    pub t_new: f64,
    pub dt: f64,
    pub old: &'a Field,
    pub new: &'a Field,
    pub report: &'a StepReport,
}

pub trait Observer {
    fn observe(&mut self, event: &StepEvent<'_>);
}

impl<F: FnMut(&StepEvent<'_>)> Observer for F {
    fn observe(&mut self, event: &StepEvent<'_>) {
        self(event)
    }
}

fn grad_sup_of(f: &Field) -> f64 {
    let h = f.grid().h();
    f.values()
        .windows(2)
        .fold(0.0f64, |m, w| m.max(((w[1] - w[0]) / h).abs()))
}

/// Runs the scheme from `t = 0` to `config.t_end` with adaptive steps,
/// landing exactly on every requested snapshot time.
pub fn evolve(
    f0: &Field,
    params: &ProblemParams,
    bc: &BoundaryCondition,
    config: &StepperConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<Trajectory> {
    config.validate()?;
    let dim = params.dim();
    let q = params.q();
    let mut stepper = Stepper::new(*f0.grid(), *params)?;
    let mut field = f0.clone();
    let mut previous = f0.clone();
    let mut t = 0.0;
    let mut dissipation = 0.0;
    let mut outflux = 0.0;
    let mut records = vec![Record {
        t,
        sup: field.sup_norm(),
        mass: field.mass(dim),
        grad_sup: grad_sup_of(&field),
        dissipation,
        outflux,
    }];

    let mut targets: Vec<f64> = config
        .snapshot_times
        .iter()
        .copied()
        .filter(|ts| *ts <= config.t_end)
        .collect();
    targets.dedup();
    let mut snapshots = Vec::with_capacity(targets.len());
    let mut next = 0;
    while next < targets.len() && targets[next] == 0.0 {
        snapshots.push((0.0, field.clone()));
        next += 1;
    }

    let mut steps = 0;
    while t < config.t_end {
        if steps >= config.max_steps {
            return Err(Error::MaxStepsExceeded {
                max_steps: config.max_steps,
                t,
            });
        }
        let stop = targets.get(next).copied().unwrap_or(config.t_end).min(config.t_end);
        let mut dt = dt_limit(&field, q, config.safety, config.dt_min)
            .min(dt_accuracy(&field, dim, q, config.max_rel_change).max(config.dt_min));
        let landing = t + dt >= stop;
        if landing {
            dt = stop - t;
        }
        let t_new = if landing { stop } else { t + dt };
        previous.values_mut().copy_from_slice(field.values());
        let report = stepper.step(&mut field, t_new, dt, bc)?;
        if config.nonneg_clip {
            field.values_mut().iter_mut().for_each(|v| *v = v.max(0.0));
        }
        dissipation += report.dissipation;
        outflux += report.outflux;
        let event = StepEvent {
            index: steps,
            t_old: t,
            t_new,
            dt,
            old: &previous,
            new: &field,
            report: &report,
        };
        for obs in observers.iter_mut() {
            obs.observe(&event);
        }
        t = t_new;
        steps += 1;
        records.push(Record {
            t,
            sup: field.sup_norm(),
            mass: field.mass(dim),
            grad_sup: report.grad_sup,
            dissipation,
            outflux,
        });
        while next < targets.len() && targets[next] <= t {
            snapshots.push((targets[next], field.clone()));
            next += 1;
        }
    }
    Ok(Trajectory { records, snapshots })
}

/// Field at `config.t_end`, without observers or snapshots.
pub fn evolve_to(
    f0: &Field,
    params: &ProblemParams,
    bc: &BoundaryCondition,
    config: &StepperConfig,
) -> Result<Field> {
    let cfg = StepperConfig {
        snapshot_times: vec![config.t_end],
        ..config.clone()
    };
    let tr = evolve(f0, params, bc, &cfg, &mut [])?;
    Ok(tr
        .snapshots
        .into_iter()
        .next()
        .map(|(_, f)| f)
        .unwrap_or_else(|| f0.clone()))
}

/// Outer radius emulating the whole space.
///
/// For `q < 2`, `R` is chosen with `Γ(R/2) < 1e-3·scale`; otherwise
/// `R = 8·support`. The result is never below `min_radius`.
pub fn whole_space_radius(params: &ProblemParams, scale: f64, support: f64, min_radius: f64) -> f64 {
    let b = params.exponents();
    let r = match b.gamma_q {
        Some(gamma) => 2.0 * (gamma / (1e-3 * scale)).powf(1.0 / b.a),
        None => 8.0 * support,
    };
    r.max(min_radius)
}
