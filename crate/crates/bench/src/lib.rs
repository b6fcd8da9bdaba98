//! Shared fixtures for the solver benchmarks.

use sfl_core::{CellFn, Grid, GridFn, Nonlinearity};

pub fn unit_grid(n: usize) -> Grid {
    Grid::new(1.0, n).unwrap()
}

pub fn gamma_third() -> Nonlinearity {
    Nonlinearity::power(1.0, 1.0 / 3.0).unwrap()
}

pub fn bump(grid: &Grid) -> GridFn {
    GridFn::sample_h10(*grid, |x| x * (1.0 - x)).unwrap()
}

pub fn unit_coefficient(grid: &Grid) -> CellFn {
    CellFn::constant(*grid, 1.0)
}
