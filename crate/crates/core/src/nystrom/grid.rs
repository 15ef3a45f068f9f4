//! Quadrature grids: a reduced latitude–longitude grid on closed surfaces and
//! a periodic trapezoid grid on a flat square.

use super::NystromError;
use crate::geometry::{spherical_frame, Surface, SurfaceSpec};
use crate::lame::SurfacePoint;
use crate::linalg::fejer_sin_weights;
use nalgebra::Vector3;
use std::f64::consts::PI;

/// Smallest admissible resolution.
pub const MIN_RESOLUTION: usize = 8;

/// One latitude row of the reduced grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRow {
    pub theta: f64,
    /// Number of equispaced φ nodes (even).
    pub count: usize,
    /// Index of the row's first node.
    pub offset: usize,
    /// Fejér weight of `∫ f sinθ dθ` for this row.
    pub fejer: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridLayout {
    /// Rows at `θ_k = (k + ½)π/n`, row `k` holding `max(6, 2⌈n sinθ_k⌉)` nodes.
    Sphere { surface: Surface, n: usize, rows: Vec<GridRow> },
    /// `n × n` nodes at `(i, j)·side/n` on the plane `z = 0`.
    Flat { n: usize, side: f64, orientation: f64 },
}

/// Nodes, normals and area weights of a Nyström rule.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub layout: GridLayout,
    pub nodes: Vec<SurfacePoint>,
    pub weights: Vec<f64>,
    pub chart_id: Vec<usize>,
    /// `(θ, φ)` for closed surfaces, `(u1, u2)` for the flat grid.
    pub chart_coords: Vec<[f64; 2]>,
    /// Parameter-sphere direction ω of each node (flat grid: `(u1, u2, 0)`).
    pub directions: Vec<Vector3<f64>>,
    /// Parameter spacing (π/n, or side/n).
    pub spacing: f64,
    /// Largest distance between neighbouring nodes.
    pub h: f64,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn resolution(&self) -> usize {
        match self.layout {
            GridLayout::Sphere { n, .. } | GridLayout::Flat { n, .. } => n,
        }
    }
}

/// Row node count for resolution `n` at colatitude `theta`.
pub fn row_count(n: usize, theta: f64) -> usize {
    (2 * (n as f64 * theta.sin()).ceil() as usize).max(6)
}

/// Surface point, outward normal and area element (relative to the unit sphere) at ω(θ, φ).
pub fn surface_frame(surface: &Surface, theta: f64, phi: f64) -> (Vector3<f64>, SurfacePoint, f64) {
    let (w, et, ep) = spherical_frame(theta, phi);
    let a = surface.tangent_map(&w, &et);
    let b = surface.tangent_map(&w, &ep);
    let c = a.cross(&b);
    let jac = c.norm();
    let point = SurfacePoint {
        position: surface.point(&w),
        normal: c / jac,
    };
    (w, point, jac)
}

/// Reduced latitude–longitude grid of resolution `n` (number of rows).
pub fn build_grid(spec: &SurfaceSpec, resolution: usize) -> Result<QuadratureGrid, NystromError> {
    build_surface_grid(&spec.surface, resolution)
}

pub fn build_surface_grid(surface: &Surface, n: usize) -> Result<QuadratureGrid, NystromError> {
    if n < MIN_RESOLUTION {
        return Err(NystromError::Config(format!("resolution {n} is below the minimum {MIN_RESOLUTION}")));
    }
    let fejer = fejer_sin_weights(n);
    let mut rows = Vec::with_capacity(n);
    let mut offset = 0;
    for (k, &fw) in fejer.iter().enumerate() {
        let theta = (k as f64 + 0.5) * PI / n as f64;
        let count = row_count(n, theta);
        rows.push(GridRow { theta, count, offset, fejer: fw });
        offset += count;
    }
    let total = offset;
    let mut nodes = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut coords = Vec::with_capacity(total);
    let mut dirs = Vec::with_capacity(total);
    for row in &rows {
        for l in 0..row.count {
            let phi = 2.0 * PI * l as f64 / row.count as f64;
            let (w, point, jac) = surface_frame(surface, row.theta, phi);
            nodes.push(point);
            weights.push(row.fejer * 2.0 * PI / row.count as f64 * jac);
            coords.push([row.theta, phi]);
            dirs.push(w);
        }
    }
    let h = max_neighbour_spacing(&rows, &nodes);
    Ok(QuadratureGrid {
        layout: GridLayout::Sphere { surface: *surface, n, rows },
        chart_id: vec![0; nodes.len()],
        nodes,
        weights,
        chart_coords: coords,
        directions: dirs,
        spacing: PI / n as f64,
        h,
    })
}

fn max_neighbour_spacing(rows: &[GridRow], nodes: &[SurfacePoint]) -> f64 {
    let mut h = 0.0_f64;
    for (k, row) in rows.iter().enumerate() {
        for l in 0..row.count {
            let a = nodes[row.offset + l].position;
            let b = nodes[row.offset + (l + 1) % row.count].position;
            h = h.max((a - b).norm());
            if let Some(next) = rows.get(k + 1) {
                let nearest = (0..next.count)
                    .map(|m| (nodes[next.offset + m].position - a).norm())
                    .fold(f64::INFINITY, f64::min);
                h = h.max(nearest);
            }
        }
    }
    h
}

/// Periodic trapezoid grid with `n × n` nodes (n even) on the square `[0, side)²` in the plane z = 0.
pub fn build_flat_grid(n: usize, side: f64, upward: bool) -> Result<QuadratureGrid, NystromError> {
    if n < MIN_RESOLUTION || !n.is_multiple_of(2) {
        return Err(NystromError::Config(format!("flat grid needs an even n >= {MIN_RESOLUTION}, got {n}")));
    }
    if !(side > 0.0) {
        return Err(NystromError::Config(format!("flat grid side must be positive, got {side}")));
    }
    let h = side / n as f64;
    let orientation = if upward { 1.0 } else { -1.0 };
    let normal = Vector3::new(0.0, 0.0, orientation);
    let mut nodes = Vec::with_capacity(n * n);
    let mut coords = Vec::with_capacity(n * n);
    let mut dirs = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let u = [i as f64 * h, j as f64 * h];
            let p = Vector3::new(u[0], u[1], 0.0);
            nodes.push(SurfacePoint { position: p, normal });
            coords.push(u);
            dirs.push(p);
        }
    }
    Ok(QuadratureGrid {
        layout: GridLayout::Flat { n, side, orientation },
        weights: vec![h * h; n * n],
        chart_id: vec![0; n * n],
        nodes,
        chart_coords: coords,
        directions: dirs,
        spacing: h,
        h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SurfaceKind;
    use approx::assert_relative_eq;

    #[test]
    fn sphere_area_and_normals() {
        let g = build_surface_grid(&Surface::unit_sphere(), 16).unwrap();
        assert_relative_eq!(g.area(), 4.0 * PI, epsilon = 1e-12);
        assert!(g.weights.iter().all(|w| *w > 0.0));
        for (p, d) in g.nodes.iter().zip(&g.directions) {
            assert_relative_eq!(p.normal, *d, epsilon = 1e-14);
        }
    }

    #[test]
    fn ellipsoid_area() {
        // Prolate spheroid a = b = 1, c = 2: area = 2π(1 + c·asin(e)/e), e = √(1 − 1/c²).
        let s = Surface::new(SurfaceKind::Ellipsoid { a: 1.0, b: 1.0, c: 2.0 }).unwrap();
        let g = build_surface_grid(&s, 24).unwrap();
        let e = (1.0_f64 - 0.25).sqrt();
        let exact = 2.0 * PI * (1.0 + 2.0 * e.asin() / e);
        assert_relative_eq!(g.area(), exact, max_relative = 1e-10);
    }

    #[test]
    fn rows_and_sizes() {
        assert!(build_surface_grid(&Surface::unit_sphere(), 4).is_err());
        let a = build_surface_grid(&Surface::unit_sphere(), 16).unwrap().len();
        let b = build_surface_grid(&Surface::unit_sphere(), 32).unwrap().len();
        let ratio = b as f64 / a as f64;
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    }

    #[test]
    fn flat_grid_area_is_exact() {
        let g = build_flat_grid(16, 3.0, true).unwrap();
        assert_eq!(g.area(), 9.0);
        assert!(build_flat_grid(15, 3.0, true).is_err());
    }
}
