//! Surface Riesz transforms, principal symbols and their quantization on
//! periodic chart grids.

mod direct;
mod quantize;
mod symbols;

pub use direct::{surface_riesz_apply, DirectOptions};
pub use quantize::{quantize, r_matrix_apply, ChartOperator, Provenance};
pub use symbols::{riesz_symbol, sigma_symbols, sigma_symbol_function, riesz_symbol_function, Atom, SymbolFunction, SymbolTerm};

use crate::geometry::GeometryError;
use crate::riesz::{PeriodicGrid, RieszError};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PsidoError {
    #[error("symbol is singular at ξ = 0")]
    SingularSymbol,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Riesz(#[from] RieszError),
    #[error("density support reaches the chart grid boundary (|f| = {value:e} at node {index})")]
    SupportLeak { index: usize, value: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// Radial mollifier: 0 for `|ξ| ≤ 1/2`, 1 for `|ξ| ≥ 1`, quintic smoothstep between.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mollifier;

impl Mollifier {
    pub fn radial(&self, r: f64) -> f64 {
        let t = ((r - 0.5) / 0.5).clamp(0.0, 1.0);
        t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }

    pub fn eval(&self, xi: [f64; 2]) -> f64 {
        self.radial(xi[0].hypot(xi[1]))
    }
}

/// `n × n` grid on the chart torus `[π/2 − π, π/2 + π) × [−π, π)` (period 2π in both
/// variables, integer frequencies). Node `(a, b)` is stored at `a·n + b`.
#[derive(Debug, Clone)]
pub struct ChartGrid {
    periodic: PeriodicGrid,
    origin: [f64; 2],
}

impl ChartGrid {
    pub fn new(n: usize) -> Result<Self, PsidoError> {
        Self::with_origin(n, [0.5 * PI - PI, -PI])
    }

    pub fn with_origin(n: usize, origin: [f64; 2]) -> Result<Self, PsidoError> {
        Ok(Self { periodic: PeriodicGrid::new(n, 2.0 * PI)?, origin })
    }

    pub fn n(&self) -> usize {
        self.periodic.n()
    }

    pub fn len(&self) -> usize {
        self.periodic.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.periodic.spacing()
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn periodic(&self) -> &PeriodicGrid {
        &self.periodic
    }

    pub fn coordinate(&self, axis: usize, k: usize) -> f64 {
        self.origin[axis] + k as f64 * self.spacing()
    }

    pub fn point(&self, index: usize) -> [f64; 2] {
        let n = self.n();
        [self.coordinate(0, index / n), self.coordinate(1, index % n)]
    }

    /// Signed integer frequency of FFT index `k`.
    pub fn frequency(&self, k: usize) -> i64 {
        self.periodic.frequency(k)
    }

    pub fn is_nyquist(&self, k: usize) -> bool {
        k == self.n() / 2
    }

    pub fn same_as(&self, other: &ChartGrid) -> bool {
        self.n() == other.n() && self.origin == other.origin
    }

    /// Sample a function of chart coordinates.
    pub fn sample<F: Fn([f64; 2]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|i| f(self.point(i))).collect()
    }

    /// Discrete L² norm with the cell area.
    pub fn l2_norm(&self, f: &[f64]) -> f64 {
        f.iter().map(|v| v * v).sum::<f64>().sqrt() * self.spacing()
    }
}
