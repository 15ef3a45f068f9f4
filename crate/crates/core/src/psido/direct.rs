//! Direct principal-value quadrature of the surface Riesz transform
//! `R_j^g f(u) = (1/2π) PV ∫ (u_j − v_j) ⟨u−v, G(u)(u−v)⟩^{−3/2} f(v) dv`.
//!
//! Near each output point a polar patch with antipodally paired angles carries the
//! singular part (the odd kernel cancels in pairs); the rest of the support uses the
//! grid point rule with weight `1 − χ(|u−v|/ρ)`.

use super::{ChartGrid, PsidoError};
use crate::geometry::{metric_at, Chart};
use crate::linalg::gauss_legendre;
use crate::nystrom::cutoff;
use nalgebra::Vector2;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Samples closer than this many cells to the torus boundary must vanish.
const BOUNDARY_BAND: usize = 4;
const STENCIL: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectOptions {
    pub radial: usize,
    pub angular: usize,
    /// Patch radius in grid spacings.
    pub patch_factor: f64,
}

impl Default for DirectOptions {
    fn default() -> Self {
        Self { radial: 16, angular: 32, patch_factor: 8.0 }
    }
}

/// Eight-point Lagrange weights at fractional index `s`; returns the first node.
fn lagrange(s: f64, w: &mut [f64; STENCIL]) -> i64 {
    let i0 = s.floor() as i64 - (STENCIL as i64 / 2 - 1);
    let t = s - i0 as f64;
    for (m, wm) in w.iter_mut().enumerate() {
        let mut num = 1.0;
        let mut den = 1.0;
        for k in 0..STENCIL {
            if k != m {
                num *= t - k as f64;
                den *= m as f64 - k as f64;
            }
        }
        *wm = num / den;
    }
    i0
}

fn check_support(grid: &ChartGrid, f: &[f64]) -> Result<(f64, [usize; 4]), PsidoError> {
    if f.len() != grid.len() {
        return Err(PsidoError::Shape(format!("function has {} samples, grid has {}", f.len(), grid.len())));
    }
    let n = grid.n();
    let peak = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut bbox = [n, 0, n, 0];
    for (i, v) in f.iter().enumerate() {
        if v.abs() <= 1e-16 * peak || peak == 0.0 {
            continue;
        }
        let (a, b) = (i / n, i % n);
        let edge = |k: usize| k < BOUNDARY_BAND || k >= n - BOUNDARY_BAND;
        if v.abs() > 1e-12 * peak && (edge(a) || edge(b)) {
            return Err(PsidoError::SupportLeak { index: i, value: *v });
        }
        bbox = [bbox[0].min(a), bbox[1].max(a), bbox[2].min(b), bbox[3].max(b)];
    }
    Ok((peak, bbox))
}

/// `R_j^g f` on the chart grid, `j ∈ {1, 2}`. Zero where the metric is degenerate.
pub fn surface_riesz_apply<C: Chart + ?Sized>(
    chart: &C,
    j: usize,
    grid: &ChartGrid,
    f: &[f64],
    opts: &DirectOptions,
) -> Result<Vec<f64>, PsidoError> {
    if j != 1 && j != 2 {
        return Err(PsidoError::Shape(format!("Riesz index {j} is not 1 or 2")));
    }
    if !opts.angular.is_multiple_of(2) || opts.angular == 0 || opts.radial == 0 {
        return Err(PsidoError::Shape("polar patch needs an even angular count and radial nodes".into()));
    }
    let (peak, bbox) = check_support(grid, f)?;
    let n = grid.n();
    if peak == 0.0 {
        return Ok(vec![0.0; n * n]);
    }
    let h = grid.spacing();
    let rho = opts.patch_factor * h;
    let support: Vec<([f64; 2], f64)> = f
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > 1e-16 * peak)
        .map(|(i, v)| ([grid.coordinate(0, i / n), grid.coordinate(1, i % n)], *v))
        .collect();
    let (gx, gw) = gauss_legendre(opts.radial);
    let radial: Vec<(f64, f64)> = gx.iter().zip(&gw).map(|(x, w)| (0.5 * rho * (x + 1.0), 0.5 * rho * w)).collect();
    let angles: Vec<[f64; 2]> = (0..opts.angular)
        .map(|a| {
            let t = 2.0 * PI * (a as f64 + 0.5) / opts.angular as f64;
            [t.cos(), t.sin()]
        })
        .collect();
    let dalpha = 2.0 * PI / opts.angular as f64;
    let reach = (rho / h).ceil() as i64 + STENCIL as i64;
    let near_box = |a: usize, b: usize| {
        let inside = |k: i64, lo: usize, hi: usize| k >= lo as i64 - reach && k <= hi as i64 + reach;
        inside(a as i64, bbox[0], bbox[1]) && inside(b as i64, bbox[2], bbox[3])
    };
    let origin = grid.origin();
    let wrap = |k: i64| k.rem_euclid(n as i64) as usize;
    let out: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|a| {
            let mut row = vec![0.0; n];
            let mut wa = [0.0; STENCIL];
            let mut wb = [0.0; STENCIL];
            for (b, slot) in row.iter_mut().enumerate() {
                let u = [grid.coordinate(0, a), grid.coordinate(1, b)];
                let g = match metric_at(chart, &Vector2::new(u[0], u[1])) {
                    Ok(g) => g,
                    Err(_) => continue,
                };
                let kernel = |z: [f64; 2]| {
                    let q = g.g11 * z[0] * z[0] + 2.0 * g.g12 * z[0] * z[1] + g.g22 * z[1] * z[1];
                    z[j - 1] / (q * q.sqrt())
                };
                let mut acc = 0.0;
                if near_box(a, b) {
                    for e in &angles {
                        let ke = kernel(*e);
                        let mut ray = 0.0;
                        for &(r, w) in &radial {
                            let s0 = (u[0] - r * e[0] - origin[0]) / h;
                            let s1 = (u[1] - r * e[1] - origin[1]) / h;
                            let i0 = lagrange(s0, &mut wa);
                            let j0 = lagrange(s1, &mut wb);
                            let mut v = 0.0;
                            for (p, wp) in wa.iter().enumerate() {
                                let base = wrap(i0 + p as i64) * n;
                                let mut inner = 0.0;
                                for (q, wq) in wb.iter().enumerate() {
                                    inner += wq * f[base + wrap(j0 + q as i64)];
                                }
                                v += wp * inner;
                            }
                            ray += w * cutoff(r / rho) * v / r;
                        }
                        acc += dalpha * ke * ray;
                    }
                }
                let mut far = 0.0;
                for &(v, fv) in &support {
                    let z = [u[0] - v[0], u[1] - v[1]];
                    let r2 = z[0] * z[0] + z[1] * z[1];
                    if r2 >= rho * rho {
                        far += kernel(z) * fv;
                    } else if r2 > 0.0 {
                        far += (1.0 - cutoff(r2.sqrt() / rho)) * kernel(z) * fv;
                    }
                }
                acc += h * h * far;
                *slot = acc / (2.0 * PI);
            }
            row
        })
        .collect();
    Ok(out.concat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FlatChart;
    use crate::riesz::{riesz_apply, PeriodicGrid};

    #[test]
    fn lagrange_reproduces_polynomials() {
        let mut w = [0.0; STENCIL];
        let s = 5.37;
        let i0 = lagrange(s, &mut w);
        let p = |x: f64| 1.0 - 2.0 * x + 0.3 * x.powi(5) - 0.01 * x.powi(7);
        let v: f64 = (0..STENCIL).map(|m| w[m] * p((i0 + m as i64) as f64)).sum();
        assert!((v - p(s)).abs() < 1e-9 * p(s).abs().max(1.0));
    }

    #[test]
    fn constant_patch_gives_zero_at_center() {
        let g = ChartGrid::with_origin(64, [-PI, -PI]).unwrap();
        let f = g.sample(|u| if u[0].hypot(u[1]) < 1.5 { 1.0 } else { 0.0 });
        let center = 32 * 64 + 32;
        let r = surface_riesz_apply(&FlatChart::new(true), 1, &g, &f, &DirectOptions::default()).unwrap();
        assert!(r[center].abs() < 1e-12);
    }

    #[test]
    fn flat_metric_matches_padded_fft() {
        // free-space reference: the same samples embedded in a 4× larger periodic grid
        let n = 64;
        let g = ChartGrid::with_origin(n, [-PI, -PI]).unwrap();
        let s = 0.3;
        let bump = |u: [f64; 2]| u[0] * (-(u[0] * u[0] + u[1] * u[1]) / (2.0 * s * s)).exp();
        let f = g.sample(bump);
        let d = surface_riesz_apply(&FlatChart::new(true), 2, &g, &f, &DirectOptions::default()).unwrap();
        let big = PeriodicGrid::new(4 * n, 8.0 * PI).unwrap();
        let fb: Vec<f64> = (0..big.len()).map(|i| { let x = big.point(i); bump([x[0] - 4.0 * PI, x[1] - 4.0 * PI]) }).collect();
        let rb = riesz_apply(&big, &fb, 2).unwrap();
        let r: Vec<f64> = (0..g.len()).map(|i| rb[(i / n + 3 * n / 2) * 4 * n + i % n + 3 * n / 2]).collect();
        let err = g.l2_norm(&d.iter().zip(&r).map(|(a, b)| a - b).collect::<Vec<_>>()) / g.l2_norm(&r);
        assert!(err < 1e-4, "relative error {err}");
    }

    #[test]
    fn support_leak_is_reported() {
        let g = ChartGrid::new(32).unwrap();
        let mut f = vec![0.0; g.len()];
        f[40] = 1.0;
        f[g.len() / 2 + 16] = 1.0;
        let e = surface_riesz_apply(&FlatChart::new(true), 1, &g, &f, &DirectOptions::default()).unwrap_err();
        assert!(matches!(e, PsidoError::SupportLeak { index: 40, .. }));
    }
}
