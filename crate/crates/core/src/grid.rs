//! Uniform grids on [0, L], nodal and cell-valued samplings, and the discrete
//! norms behind every estimate in the solver.
//!
//! States (u, v, w) live at nodes; L^2/L^infty data (a, g, h) live as one
//! value per cell, which is what makes the constructed data/solution pairs
//! round-trip exactly through the verifier.

use crate::error::{Error, Result};

/// Uniform grid over [0, L]: nodes x_j = j L / N for j = 0..=N.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    length: f64,
    cells: usize,
}

impl Grid {
    pub fn new(length: f64, cells: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidInput(format!(
                "grid length must be positive and finite, got {length}"
            )));
        }
        if cells < 8 {
            return Err(Error::InvalidInput(format!(
                "grid needs at least 8 cells, got {cells}"
            )));
        }
        Ok(Grid { length, cells })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn nodes(&self) -> usize {
        self.cells + 1
    }

    pub fn dx(&self) -> f64 {
        self.length / self.cells as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.length / self.cells as f64
    }

    pub fn midpoint(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.length / self.cells as f64
    }

    /// Index of the node nearest to `x`.
    pub fn nearest_node(&self, x: f64) -> usize {
        let j = (x / self.dx()).round();
        (j.max(0.0) as usize).min(self.cells)
    }

    /// Grid over [0, length'] reusing this grid's spacing, so that node
    /// `k` of the result coincides with node `k` of `self`.
    pub fn prefix(&self, cells: usize) -> Result<Grid> {
        Grid::new(self.dx() * cells as f64, cells)
    }
}

/// Real-valued function sampled at the nodes of a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFn {
    grid: Grid,
    values: Vec<f64>,
    zero_left: bool,
    zero_right: bool,
}

impl GridFn {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nodes() {
            return Err(Error::DomainMismatch(format!(
                "expected {} nodal values, got {}",
                grid.nodes(),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("nodal value at index {bad}"),
            });
        }
        let zero_left = values[0] == 0.0;
        let zero_right = values[grid.cells()] == 0.0;
        Ok(GridFn {
            grid,
            values,
            zero_left,
            zero_right,
        })
    }

    pub fn sample<F: Fn(f64) -> f64>(grid: Grid, f: F) -> Result<Self> {
        let values = (0..grid.nodes()).map(|j| f(grid.node(j))).collect();
        Self::from_values(grid, values)
    }

    /// Sample and pin both endpoint values to exactly zero.
    pub fn sample_h10<F: Fn(f64) -> f64>(grid: Grid, f: F) -> Result<Self> {
        let mut g = Self::sample(grid, f)?;
        g.values[0] = 0.0;
        let last = g.grid.cells();
        g.values[last] = 0.0;
        g.zero_left = true;
        g.zero_right = true;
        Ok(g)
    }

    pub fn zeros(grid: Grid) -> Self {
        GridFn {
            grid,
            values: vec![0.0; grid.nodes()],
            zero_left: true,
            zero_right: true,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, j: usize) -> f64 {
        self.values[j]
    }

    pub fn last(&self) -> f64 {
        self.values[self.grid.cells()]
    }

    pub fn zero_endpoints(&self) -> bool {
        self.zero_left && self.zero_right
    }

    pub fn set_value(&mut self, j: usize, v: f64) {
        self.values[j] = v;
        if j == 0 {
            self.zero_left = v == 0.0;
        }
        if j == self.grid.cells() {
            self.zero_right = v == 0.0;
        }
    }

    /// Piecewise-linear interpolation.
    pub fn interp(&self, x: f64) -> f64 {
        let dx = self.grid.dx();
        if x <= 0.0 {
            return self.values[0];
        }
        if x >= self.grid.length() {
            return self.values[self.grid.cells()];
        }
        let j = ((x / dx) as usize).min(self.grid.cells() - 1);
        let t = (x - self.grid.node(j)) / dx;
        self.values[j] * (1.0 - t) + self.values[j + 1] * t
    }

    /// Per-cell difference quotients (the derivative of the piecewise-linear
    /// interpolant).
    pub fn cell_slopes(&self) -> Vec<f64> {
        let dx = self.grid.dx();
        self.values
            .windows(2)
            .map(|w| (w[1] - w[0]) / dx)
            .collect()
    }

    /// Nodal derivative: centered differences inside, one-sided at the ends.
    /// Exact for affine functions.
    pub fn differentiate(&self) -> GridFn {
        let n = self.grid.cells();
        let dx = self.grid.dx();
        let mut out = vec![0.0; n + 1];
        out[0] = (self.values[1] - self.values[0]) / dx;
        out[n] = (self.values[n] - self.values[n - 1]) / dx;
        for j in 1..n {
            out[j] = (self.values[j + 1] - self.values[j - 1]) / (2.0 * dx);
        }
        GridFn {
            grid: self.grid,
            values: out,
            zero_left: false,
            zero_right: false,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete L^2 norm (trapezoid weights at the nodes).
    pub fn l2(&self) -> f64 {
        let dx = self.grid.dx();
        let n = self.grid.cells();
        let mut acc = 0.5 * (self.values[0].powi(2) + self.values[n].powi(2));
        for v in &self.values[1..n] {
            acc += v * v;
        }
        (acc * dx).sqrt()
    }

    /// Discrete H^1 seminorm: the exact L^2 norm of the derivative of the
    /// piecewise-linear interpolant.
    pub fn h1_semi(&self) -> f64 {
        let dx = self.grid.dx();
        let acc: f64 = self
            .values
            .windows(2)
            .map(|w| {
                let s = (w[1] - w[0]) / dx;
                s * s
            })
            .sum();
        (acc * dx).sqrt()
    }

    /// Discrete Hoelder-1/2 seminorm: max over node pairs of
    /// |u(x) - u(y)| / sqrt(|x - y|).
    pub fn holder_half(&self) -> f64 {
        let dx = self.grid.dx();
        let n = self.values.len();
        let mut best = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let gap = ((j - i) as f64 * dx).sqrt();
                let q = (self.values[j] - self.values[i]).abs() / gap;
                if q > best {
                    best = q;
                }
            }
        }
        best
    }

    pub fn norms(&self) -> Norms {
        Norms {
            l2: self.l2(),
            h1_semi: self.h1_semi(),
            sup: self.sup_norm(),
            holder_half: self.holder_half(),
        }
    }

    /// Piecewise-linear resampling onto `target`, which must span the same
    /// domain. Exact when `target` refines this grid.
    pub fn resample(&self, target: Grid) -> Result<GridFn> {
        if (target.length() - self.grid.length()).abs()
            > 1e-12 * self.grid.length().max(1.0)
        {
            return Err(Error::DomainMismatch(format!(
                "cannot resample from length {} to length {}",
                self.grid.length(),
                target.length()
            )));
        }
        let values = (0..target.nodes())
            .map(|j| self.interp(target.node(j)))
            .collect();
        let mut out = GridFn::from_values(target, values)?;
        out.zero_left = self.zero_left;
        out.zero_right = self.zero_right;
        Ok(out)
    }

    /// Sup distance to another nodal function on the same grid.
    pub fn sup_distance(&self, other: &GridFn) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Values of the linear interpolant at cell midpoints.
    pub fn midpoint_values(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

/// Bundle of the discrete norms used by the a priori estimates.
#[derive(Clone, Copy, Debug)]
pub struct Norms {
    pub l2: f64,
    pub h1_semi: f64,
    pub sup: f64,
    pub holder_half: f64,
}

/// Real-valued data sampled once per cell (piecewise-constant L^2/L^infty
/// coefficients and sources).
#[derive(Clone, Debug, PartialEq)]
pub struct CellFn {
    grid: Grid,
    values: Vec<f64>,
}

impl CellFn {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(Error::DomainMismatch(format!(
                "expected {} cell values, got {}",
                grid.cells(),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("cell value at index {bad}"),
            });
        }
        Ok(CellFn { grid, values })
    }

    /// Sample a function at cell midpoints.
    pub fn sample<F: Fn(f64) -> f64>(grid: Grid, f: F) -> Result<Self> {
        let values = (0..grid.cells()).map(|j| f(grid.midpoint(j))).collect();
        Self::from_values(grid, values)
    }

    pub fn constant(grid: Grid, v: f64) -> Self {
        CellFn {
            grid,
            values: vec![v; grid.cells()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, j: usize) -> f64 {
        self.values[j]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, v| m.min(*v))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v))
    }

    pub fn l2(&self) -> f64 {
        let dx = self.grid.dx();
        (self.values.iter().map(|v| v * v).sum::<f64>() * dx).sqrt()
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<CellFn> {
        CellFn::from_values(self.grid, self.values.iter().map(|v| f(*v)).collect())
    }

    pub fn zip<F: Fn(f64, f64) -> f64>(&self, other: &CellFn, f: F) -> Result<CellFn> {
        if self.grid != other.grid {
            return Err(Error::DomainMismatch("cell grids differ".into()));
        }
        CellFn::from_values(
            self.grid,
            self.values
                .iter()
                .zip(other.values.iter())
                .map(|(a, b)| f(*a, *b))
                .collect(),
        )
    }

    /// Project to nodes by averaging the two adjacent cells (endpoints copy
    /// the nearest cell). For display and export only; the solvers keep cell
    /// values.
    pub fn to_nodes(&self) -> GridFn {
        let n = self.grid.cells();
        let mut out = vec![0.0; n + 1];
        out[0] = self.values[0];
        out[n] = self.values[n - 1];
        for j in 1..n {
            out[j] = 0.5 * (self.values[j - 1] + self.values[j]);
        }
        GridFn {
            grid: self.grid,
            values: out,
            zero_left: false,
            zero_right: false,
        }
    }
}

/// Midpoint-rule integral of per-cell samples.
pub fn integrate(f: &CellFn) -> Result<f64> {
    if let Some(bad) = f.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: format!("integrand cell {bad}"),
        });
    }
    Ok(f.values().iter().sum::<f64>() * f.grid().dx())
}

/// Graded quadrature over (a, b) for integrands singular at one or both ends;
/// see [`crate::quad::graded`].
pub fn integrate_graded<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    toward: crate::quad::Graded,
) -> Result<f64> {
    crate::quad::graded(&f, a, b, toward)
}
