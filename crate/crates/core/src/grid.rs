//! Uniform radial mesh on `[0, R]`, nodal fields and the discrete operators
//! of the scheme.
//!
//! The center node uses the even extension `u_{-1} = u_1`. The quadrature
//! weights in [`RadialGrid::volume_weights`] are chosen so that, for
//! `N ≤ 3`, summing the radial Laplacian against them telescopes to a pure
//! boundary flux. This is what makes the discrete mass balance exact.

use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const MIN_CELLS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    radius: f64,
    cells: usize,
    h: f64,
}

impl RadialGrid {
    pub fn new(radius: f64, cells: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid("radius", "outer radius must be positive"));
        }
        if cells < MIN_CELLS {
            return Err(invalid("cells", format!("need at least {MIN_CELLS} cells")));
        }
        Ok(Self {
            radius,
            cells,
            h: radius / cells as f64,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn len(&self) -> usize {
        self.cells + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.cells {
            self.radius
        } else {
            i as f64 * self.h
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.node(i))
    }

    /// Per-node weights `W_i` with `mass = ω_{N-1} Σ W_i u_i`.
    ///
    /// Interior and outer nodes use the trapezoid rule on `r^{N-1} dr`. The
    /// center weight is `h^N (3 - N)/(4N)` for `N ≤ 3` (`h/2` in 1D, the
    /// half-cell `h²/8` in 2D, zero in 3D) and zero beyond.
    pub fn volume_weights(&self, dim: usize) -> Vec<f64> {
        let n = dim as f64;
        let h = self.h;
        let mut w: Vec<f64> = self.nodes().map(|r| h * r.powi(dim as i32 - 1)).collect();
        w[0] = if dim <= 3 { h.powi(dim as i32) * (3.0 - n) / (4.0 * n) } else { 0.0 };
        w[self.cells] *= 0.5;
        w
    }
}

/// Area of the unit sphere in `R^N` (`2` for `N = 1`).
pub fn sphere_area(dim: usize) -> f64 {
    // ω_{N-1} = 2π^{N/2} / Γ(N/2), with Γ(N/2) by the half-integer recurrence.
    let mut gamma_half = if dim.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut x = if dim.is_multiple_of(2) { 1.0 } else { 0.5 };
    while x < dim as f64 / 2.0 {
        gamma_half *= x;
        x += 1.0;
    }
    2.0 * PI.powf(dim as f64 / 2.0) / gamma_half
}

/// Nodal values on a [`RadialGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: RadialGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: RadialGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: RadialGrid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid,
            values: grid.nodes().map(f).collect(),
        }
    }

    pub fn from_values(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(
                "values",
                format!("expected {} nodal values, got {}", grid.len(), values.len()),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid("values", format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Sup norm over nodes with `r_i ≤ r_max`.
    pub fn sup_norm_within(&self, r_max: f64) -> f64 {
        self.restrict_to(r_max).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn restrict_to(&self, r_max: f64) -> &[f64] {
        let count = self.grid.nodes().take_while(|&r| r <= r_max).count();
        &self.values[..count]
    }

    pub fn linf_distance(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `ω_{N-1} ∫_0^R u r^{N-1} dr` with the weights of
    /// [`RadialGrid::volume_weights`].
    pub fn mass(&self, dim: usize) -> f64 {
        let w = self.grid.volume_weights(dim);
        sphere_area(dim) * w.iter().zip(&self.values).map(|(w, u)| w * u).sum::<f64>()
    }

    /// Piecewise-linear interpolation, zero beyond the outer radius.
    pub fn interpolate(&self, r: f64) -> f64 {
        let h = self.grid.h;
        if r >= self.grid.radius {
            return if r == self.grid.radius { self.values[self.grid.cells] } else { 0.0 };
        }
        let x = r.abs() / h;
        let i = (x.floor() as usize).min(self.grid.cells - 1);
        let theta = x - i as f64;
        (1.0 - theta) * self.values[i] + theta * self.values[i + 1]
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["r", "u"])?;
        for (r, u) in self.grid.nodes().zip(&self.values) {
            w.serialize((r, u))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the `r,u` format written by [`Field::write_csv`]; the nodes must
    /// form a uniform grid starting at 0.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(reader);
        let mut rs = Vec::new();
        let mut us = Vec::new();
        for row in rd.deserialize() {
            let (r, u): (f64, f64) = row?;
            rs.push(r);
            us.push(u);
        }
        if rs.len() < MIN_CELLS + 1 || rs[0] != 0.0 {
            return Err(invalid("csv", "expected a radial grid starting at r = 0"));
        }
        let grid = RadialGrid::new(*rs.last().unwrap(), rs.len() - 1)?;
        for (i, r) in rs.iter().enumerate() {
            if (r - grid.node(i)).abs() > 1e-9 * grid.radius() {
                return Err(invalid("csv", format!("node {i} is not on a uniform grid")));
            }
        }
        Field::from_values(grid, us)
    }
}

/// Discrete radial Laplacian.
///
/// Interior: `(u_{i+1} - 2u_i + u_{i-1})/h² + (N-1)/r_i (u_{i+1} - u_{i-1})/(2h)`.
/// Center: `2N(u_1 - u_0)/h²`. The outer node is left at zero; its value is
/// owned by the boundary condition.
pub fn laplacian_radial(f: &Field, dim: usize) -> Field {
    let grid = f.grid;
    let u = &f.values;
    let h = grid.h;
    let n = dim as f64;
    let mut out = vec![0.0; u.len()];
    out[0] = 2.0 * n * (u[1] - u[0]) / (h * h);
    for i in 1..grid.cells {
        let r = grid.node(i);
        out[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h)
            + (n - 1.0) / r * (u[i + 1] - u[i - 1]) / (2.0 * h);
    }
    Field { grid, values: out }
}

/// One-sided differences `p⁻_i = (u_i - u_{i-1})/h`, `p⁺_i = (u_{i+1} - u_i)/h`.
///
/// At the center `p⁻_0 = -p⁺_0` (even extension); at the outer node `p⁺`
/// copies `p⁻`.
pub fn one_sided_gradients(f: &Field) -> (Vec<f64>, Vec<f64>) {
    let u = &f.values;
    let h = f.grid.h;
    let last = f.grid.cells;
    let mut minus = vec![0.0; u.len()];
    let mut plus = vec![0.0; u.len()];
    for i in 0..last {
        plus[i] = (u[i + 1] - u[i]) / h;
    }
    for i in 1..=last {
        minus[i] = (u[i] - u[i - 1]) / h;
    }
    minus[0] = -plus[0];
    plus[last] = minus[last];
    (minus, plus)
}

/// Godunov flux for `|p|^q`: `max(max(p⁻, 0), max(-p⁺, 0))^q`.
#[inline]
pub fn godunov_hamiltonian(p_minus: f64, p_plus: f64, q: f64) -> f64 {
    p_minus.max(0.0).max(-p_plus).powf(q)
}
