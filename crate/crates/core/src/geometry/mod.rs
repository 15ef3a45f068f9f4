//! Parametrized closed surfaces, charts and metric quantities.

mod chart;
mod surface;

pub use chart::{
    chart_kernel_coefficients, metric_at, normal_at, second_derivatives, smooth_step, taylor_metric_residual, Atlas,
    Chart, Cutoff, FlatChart, KernelCoefficients, MetricTensor, ParamRect, Reparametrized, SphericalChart,
    DEGENERATE_JACOBIAN, INNER_CUTOFF, K1_ENTRIES, OUTER_CUTOFF,
};
pub use surface::{spherical_angles, spherical_frame, Harmonic, Surface, SurfaceKind};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("parameter ({0}, {1}) lies outside the chart domain")]
    OutsideDomain(f64, f64),
    #[error("degenerate Jacobian: |d1 x d2| = {0:e}")]
    DegenerateJacobian(f64),
    #[error("invalid surface: {0}")]
    InvalidSurface(String),
    #[error("patch radius {radius} exceeds the admissible bound {bound}")]
    PatchTooLarge { radius: f64, bound: f64 },
}

/// Surface fixture with its two-chart atlas.
#[derive(Debug, Clone)]
pub struct SurfaceSpec {
    pub surface: Surface,
    pub atlas: Atlas,
}

impl SurfaceSpec {
    pub fn new(kind: SurfaceKind) -> Result<Self, GeometryError> {
        let surface = Surface::new(kind)?;
        Ok(Self {
            surface,
            atlas: Atlas::two_chart(surface),
        })
    }
}
