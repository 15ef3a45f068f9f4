//! Check suites shared by the command-line tool and the acceptance runner.
//!
//! Every check returns a [`CheckResult`]; randomness flows from a caller-supplied seed.

use crate::geometry::{smooth_step, Chart, GeometryError, Harmonic, SphericalChart, Surface, SurfaceKind, SurfaceSpec};
use crate::lame::{conormal_kernel, conormal_kernel_fd, k1_kernel, k2_kernel, max_abs};
use crate::linalg::{fit_slope, gauss_legendre_on};
use crate::nystrom::surface_frame;
use crate::psido::{
    quantize, r_matrix_apply, riesz_symbol, riesz_symbol_function, sigma_symbol_function, sigma_symbols, surface_riesz_apply, ChartGrid,
    ChartOperator, DirectOptions, Mollifier, PsidoError,
};
use crate::riesz::{halfspace_t_apply, riesz_apply, PeriodicGrid, RieszError};
use crate::nystrom::{assemble, build_surface_grid, KernelFamily, NystromError, OperatorMatrix, QuadratureOptions};
use crate::spectral::{spectrum, symmetrization_defect, CompactnessDiagnostic, ProbeKind, SpectralError, SpectrumOptions, SpectrumReport};
use crate::{LameParameters, SurfacePoint};
use nalgebra::Vector2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    /// Passes when `residual ≤ tolerance` (and is not NaN).
    pub fn at_most(name: &str, residual: f64, tolerance: f64, detail: String) -> Self {
        Self { name: name.into(), max_residual: residual, tolerance, passed: residual <= tolerance, detail }
    }

    pub fn with_outcome(name: &str, residual: f64, tolerance: f64, passed: bool, detail: String) -> Self {
        Self { name: name.into(), max_residual: residual, tolerance, passed, detail }
    }
}

pub fn all_passed(checks: &[CheckResult]) -> bool {
    checks.iter().all(|c| c.passed)
}

/// Named surface fixtures: `sphere`, `ellipsoid` (1, 1, 2), `star` (ε = 0.1, degree-3 harmonic).
pub fn fixture(name: &str) -> Result<Surface, GeometryError> {
    match name {
        "sphere" => Ok(Surface::unit_sphere()),
        "ellipsoid" => Surface::new(SurfaceKind::Ellipsoid { a: 1.0, b: 1.0, c: 2.0 }),
        "star" => Surface::new(SurfaceKind::StarPerturbed { epsilon: 0.1, harmonic: Harmonic::new(3, 2)? }),
        other => Err(GeometryError::InvalidSurface(format!("unknown surface '{other}' (expected sphere, ellipsoid or star)"))),
    }
}

pub const FIXTURES: [&str; 3] = ["sphere", "ellipsoid", "star"];

fn random_angles(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let z: f64 = rng.gen_range(-1.0..1.0);
    (z.acos(), rng.gen_range(-PI..PI))
}

fn random_point(surface: &Surface, rng: &mut ChaCha8Rng) -> SurfacePoint {
    let (t, p) = random_angles(rng);
    surface_frame(surface, t, p).1
}

// ---------------------------------------------------------------- kernels

/// Split `conormal = k0·K1 − K2` against an independent evaluation, plus exact
/// (anti)symmetry of `K1` and `K2`, over random pairs.
pub fn kernel_split_checks(p: &LameParameters, surface: &Surface, pairs: usize, rng: &mut ChaCha8Rng) -> Vec<CheckResult> {
    let name = surface.name();
    let (mut split, mut anti, mut sym) = (0.0f64, 0.0f64, 0.0f64);
    let (lam, mu) = (p.lambda(), p.mu());
    for _ in 0..pairs {
        let x = random_point(surface, rng);
        let y = random_point(surface, rng).position;
        let (Ok(k), Ok(k1), Ok(k2)) = (conormal_kernel(p, &x, &y), k1_kernel(&x, &y), k2_kernel(p, &x, &y)) else {
            continue;
        };
        // closed form written out independently of the kernel module
        let z = x.position - y;
        let r = z.norm();
        let zn = z.dot(&x.normal);
        let scale = max_abs(&k).max(1e-300);
        let mut reference = nalgebra::Matrix3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let cauchy = (z[i] * x.normal[j] - x.normal[i] * z[j]) / (2.0 * PI * r.powi(3));
                let delta = if i == j { 1.0 } else { 0.0 };
                let weak = mu / (2.0 * mu + lam) * zn / (4.0 * PI * r.powi(3)) * delta
                    + 3.0 * (mu + lam) / (2.0 * mu + lam) * zn * z[i] * z[j] / (4.0 * PI * r.powi(5));
                reference[(i, j)] = p.k0() * cauchy + weak;
            }
        }
        split = split.max(max_abs(&(k - reference)) / scale);
        anti = anti.max(max_abs(&(k1 + k1.transpose())));
        sym = sym.max(max_abs(&(k2 - k2.transpose())));
    }
    vec![
        CheckResult::at_most("kernel_split", split, 1e-13, format!("{name}: {pairs} pairs, relative entrywise")),
        CheckResult::at_most("k1_antisymmetric", anti, 0.0, format!("{name}: max |K1 + K1ᵀ|")),
        CheckResult::at_most("k2_symmetric", sym, 0.0, format!("{name}: max |K2 − K2ᵀ|")),
    ]
}

/// Conormal kernel against central differences of the Kelvin matrix.
pub fn conormal_fd_check(p: &LameParameters, surface: &Surface, pairs: usize, rng: &mut ChaCha8Rng) -> CheckResult {
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let x = random_point(surface, rng);
        let y = random_point(surface, rng).position;
        if (x.position - y).norm() < 0.2 {
            continue;
        }
        let (Ok(k), Ok(fd)) = (conormal_kernel(p, &x, &y), conormal_kernel_fd(p, &x, &y, 1e-5)) else { continue };
        worst = worst.max(max_abs(&(k - fd)) / max_abs(&k).max(1e-300));
    }
    CheckResult::at_most("conormal_vs_finite_differences", worst, 1e-6, format!("{}: relative, h = 1e-5", surface.name()))
}

/// `sup |K2(x,y)|·|x−y|` at approach scales 1e−1, 1e−2, 1e−3; residual is the
/// largest growth factor between consecutive scales.
pub fn weak_singularity_check(p: &LameParameters, surface: &Surface, samples: usize, rng: &mut ChaCha8Rng) -> CheckResult {
    let scales = [1e-1, 1e-2, 1e-3];
    let mut sups = [0.0f64; 3];
    for _ in 0..samples {
        let (t, ph) = random_angles(rng);
        let t = t.clamp(0.1, PI - 0.1);
        let x = surface_frame(surface, t, ph).1;
        let dir: f64 = rng.gen_range(0.0..2.0 * PI);
        for (k, s) in scales.iter().enumerate() {
            let y = surface_frame(surface, t + s * dir.cos(), ph + s * dir.sin() / t.sin()).1.position;
            if let Ok(k2) = k2_kernel(p, &x, &y) {
                sups[k] = sups[k].max(max_abs(&k2) * (x.position - y).norm());
            }
        }
    }
    let growth = sups.windows(2).map(|w| w[1] / w[0]).fold(0.0f64, f64::max);
    let finite = sups.iter().all(|v| v.is_finite());
    CheckResult::with_outcome(
        "k2_weak_singularity",
        growth,
        1.25,
        finite && growth <= 1.25,
        format!("{}: sup|K2|·r at scales 1e-1, 1e-2, 1e-3 = {:.4e}, {:.4e}, {:.4e}", surface.name(), sups[0], sups[1], sups[2]),
    )
}

pub fn kernel_suite(p: &LameParameters, seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for name in ["sphere", "ellipsoid"] {
        let s = fixture(name).expect("built-in fixture");
        out.extend(kernel_split_checks(p, &s, 10_000, &mut rng));
        out.push(conormal_fd_check(p, &s, 200, &mut rng));
        out.push(weak_singularity_check(p, &s, 400, &mut rng));
    }
    out
}

// ---------------------------------------------------------------- flat Riesz

/// Zero-mean field with random modes `1 ≤ |k| ≤ kmax`, scaled to unit max norm.
pub fn band_limited_field(grid: &PeriodicGrid, kmax: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = grid.n();
    let mut spec = vec![Complex64::new(0.0, 0.0); n * n];
    for k1 in 0..n {
        for k2 in 0..n {
            let r = (grid.frequency(k1) as f64).hypot(grid.frequency(k2) as f64);
            if r >= 1.0 && r <= kmax {
                spec[k1 * n + k2] = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
    }
    let f = grid.inverse(spec);
    let peak = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    f.into_iter().map(|v| v / peak).collect()
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// `‖(R1² + R2²) f + f‖_∞` on a band-limited zero-mean field.
pub fn riesz_sum_of_squares_check(n: usize, rng: &mut ChaCha8Rng) -> Result<CheckResult, RieszError> {
    let g = PeriodicGrid::new(n, 2.0 * PI)?;
    let f = band_limited_field(&g, n as f64 / 4.0, rng);
    let a = riesz_apply(&g, &riesz_apply(&g, &f, 1)?, 1)?;
    let b = riesz_apply(&g, &riesz_apply(&g, &f, 2)?, 2)?;
    let res = (0..f.len()).map(|i| (a[i] + b[i] + f[i]).abs()).fold(0.0, f64::max);
    Ok(CheckResult::at_most("riesz_sum_of_squares", res, 1e-10, format!("grid {n}², sup norm, ‖f‖_∞ = 1")))
}

/// `‖T³ f − T f‖_∞` for the half-space operator on band-limited fields.
pub fn halfspace_cube_check(n: usize, rng: &mut ChaCha8Rng) -> Result<CheckResult, RieszError> {
    let g = PeriodicGrid::new(n, 2.0 * PI)?;
    let f = [band_limited_field(&g, n as f64 / 4.0, rng), band_limited_field(&g, n as f64 / 4.0, rng), band_limited_field(&g, n as f64 / 4.0, rng)];
    let t1 = halfspace_t_apply(&g, &f, 1.0)?;
    let t2 = halfspace_t_apply(&g, &t1, 1.0)?;
    let t3 = halfspace_t_apply(&g, &t2, 1.0)?;
    let res = (0..3).map(|c| max_norm(&t3[c].iter().zip(&t1[c]).map(|(a, b)| a - b).collect::<Vec<_>>())).fold(0.0, f64::max);
    Ok(CheckResult::at_most("halfspace_t_cubed", res, 1e-10, format!("grid {n}², sup norm")))
}

// ---------------------------------------------------------------- symbols

/// Fourier transform of the frozen kernel `(1/2π) z_j ⟨z, G z⟩^{−3/2}` at `ξ`, by
/// quadrature: pairing `z` with `−z` gives
/// `(1/2π) ∫_0^π (e_α)_j q(α)^{−3/2} (−2i) ∫_0^R sin(r e_α·ξ)/r · w(r/R) dr dα`
/// with a smooth window `w` and `R = 400/|ξ|`.
pub fn symbol_fourier_oracle(g: [f64; 3], xi: [f64; 2], j: usize) -> Complex64 {
    let norm = xi[0].hypot(xi[1]);
    let big_r = 400.0 / norm;
    let window = |t: f64| smooth_step((1.0 - t) / 0.5);
    // radial panels: ~4 per oscillation at the largest frequency
    let panels = 256;
    let mut radial = Vec::new();
    for k in 0..panels {
        let (a, b) = (big_r * k as f64 / panels as f64, big_r * (k + 1) as f64 / panels as f64);
        let (x, w) = gauss_legendre_on(10, a, b);
        radial.extend(x.into_iter().zip(w).map(|(r, wr)| (r, wr * window(r / big_r) / r)));
    }
    let radial_integral = |s: f64| -> f64 { radial.iter().map(|(r, w)| w * (r * s).sin()).sum() };
    // α panels graded toward the zero of e_α·ξ, where the inner integral turns over
    let crossing = (xi[1].atan2(xi[0]) + 0.5 * PI).rem_euclid(PI);
    let mut breaks = vec![0.0, PI, crossing];
    for k in 1..=12 {
        let d = PI * 0.5f64.powi(k);
        for c in [crossing - d, crossing + d] {
            if c > 0.0 && c < PI {
                breaks.push(c);
            }
        }
    }
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let mut acc = 0.0;
    for w in breaks.windows(2) {
        let (x, wt) = gauss_legendre_on(24, w[0], w[1]);
        for (alpha, wa) in x.into_iter().zip(wt) {
            let e = [alpha.cos(), alpha.sin()];
            let q = g[0] * e[0] * e[0] + 2.0 * g[1] * e[0] * e[1] + g[2] * e[1] * e[1];
            acc += wa * e[j - 1] * q.powf(-1.5) * radial_integral(e[0] * xi[0] + e[1] * xi[1]);
        }
    }
    Complex64::new(0.0, -2.0 * acc / (2.0 * PI))
}

fn sphere_charts() -> Vec<SphericalChart> {
    ["sphere", "ellipsoid"]
        .iter()
        .flat_map(|n| SurfaceSpec { surface: fixture(n).unwrap(), atlas: crate::geometry::Atlas::two_chart(fixture(n).unwrap()) }.atlas.charts)
        .collect()
}

/// Symbol formula against the numerically transformed kernel over `pairs` random `(u, ξ)`.
pub fn symbol_formula_check(pairs: usize, rng: &mut ChaCha8Rng) -> Result<CheckResult, PsidoError> {
    let charts = sphere_charts();
    let mut worst = 0.0f64;
    for k in 0..pairs {
        let chart = &charts[k % charts.len()];
        let u = Vector2::new(rng.gen_range(0.2 * PI..0.8 * PI), rng.gen_range(-PI..PI));
        let mag = 10f64.powf(rng.gen_range(0.0..3.0));
        let ang: f64 = rng.gen_range(0.0..2.0 * PI);
        let xi = Vector2::new(mag * ang.cos(), mag * ang.sin());
        let m = crate::geometry::metric_at(chart, &u)?;
        let p = riesz_symbol(chart, &u, &xi)?;
        for j in 1..=2 {
            let o = symbol_fourier_oracle([m.g11, m.g12, m.g22], [xi[0], xi[1]], j);
            worst = worst.max((o - p[j - 1]).norm());
        }
    }
    Ok(CheckResult::at_most("riesz_symbol_vs_fourier_transform", worst, 1e-3, format!("{pairs} (u, ξ) pairs on sphere and ellipsoid charts, |ξ| in [1, 1000]")))
}

/// One `(u, ξ, residual)` sample of the sum-of-squares identity.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentitySample {
    pub chart: usize,
    pub u: [f64; 2],
    pub xi: [f64; 2],
    pub residual: f64,
}

/// `|σ12² + σ13² + σ23² + χ1²|` at random `(u, ξ)` on every fixture chart.
pub fn sum_of_squares_samples(count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<IdentitySample>, PsidoError> {
    let charts: Vec<SphericalChart> = FIXTURES.iter().flat_map(|n| crate::geometry::Atlas::two_chart(fixture(n).unwrap()).charts).collect();
    (0..count)
        .map(|k| {
            let c = k % charts.len();
            let u = Vector2::new(rng.gen_range(0.05 * PI..0.95 * PI), rng.gen_range(-PI..PI));
            let mag = 10f64.powf(rng.gen_range(-2.0..4.0));
            let ang: f64 = rng.gen_range(0.0..2.0 * PI);
            let xi = Vector2::new(mag * ang.cos(), mag * ang.sin());
            let s = sigma_symbols(&charts[c], &u, &xi)?;
            let chi = charts[c].inner_cutoff(&u);
            let total: Complex64 = s.iter().map(|v| v * v).sum::<Complex64>() + chi * chi;
            Ok(IdentitySample { chart: c, u: [u[0], u[1]], xi: [xi[0], xi[1]], residual: total.norm() })
        })
        .collect()
}

pub fn sum_of_squares_check(samples: &[IdentitySample]) -> CheckResult {
    let worst = samples.iter().fold(0.0f64, |m, s| m.max(s.residual));
    CheckResult::at_most("sigma_sum_of_squares", worst, 1e-12, format!("{} samples on sphere, ellipsoid and star charts", samples.len()))
}

fn chart_band_field(grid: &ChartGrid, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = grid.n();
    let (lo, hi) = (n as f64 / 16.0, n as f64 / 8.0);
    let mut spec = vec![Complex64::new(0.0, 0.0); n * n];
    for k1 in 0..n {
        for k2 in 0..n {
            let r = (grid.frequency(k1) as f64).hypot(grid.frequency(k2) as f64);
            if r >= lo && r <= hi {
                spec[k1 * n + k2] = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
    }
    grid.periodic().inverse(spec)
}

fn relative(num: &[f64], den: &[f64]) -> f64 {
    let a: f64 = num.iter().map(|v| v * v).sum();
    let b: f64 = den.iter().map(|v| v * v).sum();
    (a / b).sqrt()
}

/// `‖Op(σa)Op(σb)f − Op(σaσb)f‖ / ‖f‖` for `f` band-limited to `|ξ| ∈ [n/16, n/8]`,
/// with its fitted order across grids. Uses `σ12` and `σ13` on the sphere chart.
pub fn composition_check(grids: &[usize], seed: u64) -> Result<(CheckResult, Vec<(usize, f64)>), PsidoError> {
    let chart: Arc<dyn Chart> = Arc::new(SphericalChart::standard(Surface::unit_sphere()));
    let a = sigma_symbol_function(chart.clone(), 0);
    let b = sigma_symbol_function(chart, 1);
    let ab = a.product(&b);
    let mut rows = Vec::new();
    for &n in grids {
        let g = ChartGrid::new(n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = chart_band_field(&g, &mut rng);
        let lhs = quantize(&a, &Mollifier, &g).apply(&quantize(&b, &Mollifier, &g).apply(&f)?)?;
        let rhs = quantize(&ab, &Mollifier, &g).apply(&f)?;
        let d: Vec<f64> = lhs.iter().zip(&rhs).map(|(x, y)| x - y).collect();
        rows.push((n, relative(&d, &f)));
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.0 as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1.ln()).collect();
    let slope = fit_slope(&xs, &ys);
    let detail = rows.iter().map(|(n, e)| format!("{n}: {e:.3e}")).collect::<Vec<_>>().join(", ");
    Ok((
        CheckResult::with_outcome("composition_order", (slope + 1.0).abs(), 0.3, (slope + 1.0).abs() <= 0.3, format!("fitted order {slope:.3} ({detail})")),
        rows,
    ))
}

fn block_operators(chart: Arc<dyn Chart>, grid: &ChartGrid) -> Vec<ChartOperator> {
    (0..3).map(|e| quantize(&sigma_symbol_function(chart.clone(), e), &Mollifier, grid)).collect()
}

/// `‖R³f − χ1²Rf‖ / ‖f‖` for band-limited `f` across grids; passes when the fitted order is ≤ −0.7.
pub fn r_cube_check(grids: &[usize], seed: u64) -> Result<CheckResult, PsidoError> {
    let surface = fixture("ellipsoid").expect("built-in fixture");
    let chart: Arc<dyn Chart> = Arc::new(SphericalChart::standard(surface));
    let mut rows = Vec::new();
    for &n in grids {
        let g = ChartGrid::new(n)?;
        let ops = block_operators(chart.clone(), &g);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = [chart_band_field(&g, &mut rng), chart_band_field(&g, &mut rng), chart_band_field(&g, &mut rng)];
        let chi2 = g.sample(|u| chart.inner_cutoff(&Vector2::new(u[0], u[1])).powi(2));
        let r1 = r_matrix_apply(&ops[0], &ops[1], &ops[2], &f)?;
        let r2 = r_matrix_apply(&ops[0], &ops[1], &ops[2], &r1)?;
        let r3 = r_matrix_apply(&ops[0], &ops[1], &ops[2], &r2)?;
        let diff: Vec<f64> = (0..3).flat_map(|c| (0..g.len()).map(move |i| (c, i))).map(|(c, i)| r3[c][i] - chi2[i] * r1[c][i]).collect();
        rows.push((n, relative(&diff, &f.concat())));
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.0 as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1.ln()).collect();
    let slope = fit_slope(&xs, &ys);
    let detail = rows.iter().map(|(n, e)| format!("{n}: {e:.3e}")).collect::<Vec<_>>().join(", ");
    Ok(CheckResult::with_outcome("r_cubed_minus_chi_squared_r", slope, -0.7, slope <= -0.7, format!("fitted order {slope:.3} ({detail})")))
}

/// Hutchinson estimate of the diagonal of `R² − χ1²` averaged along grid rows,
/// correlated against the predicted pointwise trace `−χ1²`.
pub fn trace_probe_check(n: usize, vectors: usize, seed: u64) -> Result<CheckResult, PsidoError> {
    let surface = fixture("ellipsoid").expect("built-in fixture");
    let chart: Arc<dyn Chart> = Arc::new(SphericalChart::standard(surface));
    let g = ChartGrid::new(n)?;
    let ops = block_operators(chart.clone(), &g);
    let chi2 = g.sample(|u| chart.inner_cutoff(&Vector2::new(u[0], u[1])).powi(2));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut diag = vec![0.0; g.len()];
    for _ in 0..vectors {
        let v: [Vec<f64>; 3] = std::array::from_fn(|_| (0..g.len()).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect());
        let a = r_matrix_apply(&ops[0], &ops[1], &ops[2], &v)?;
        let b = r_matrix_apply(&ops[0], &ops[1], &ops[2], &a)?;
        for i in 0..g.len() {
            for c in 0..3 {
                diag[i] += v[c][i] * (b[c][i] - chi2[i] * v[c][i]) / vectors as f64;
            }
        }
    }
    let rows: Vec<f64> = (0..n).map(|a| diag[a * n..(a + 1) * n].iter().sum::<f64>() / n as f64).collect();
    let predicted: Vec<f64> = (0..n).map(|a| -chi2[a * n]).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mr, mp) = (mean(&rows), mean(&predicted));
    let cov: f64 = rows.iter().zip(&predicted).map(|(r, p)| (r - mr) * (p - mp)).sum();
    let vr: f64 = rows.iter().map(|r| (r - mr).powi(2)).sum();
    let vp: f64 = predicted.iter().map(|p| (p - mp).powi(2)).sum();
    let corr = cov / (vr * vp).sqrt();
    let worst = rows.iter().zip(&predicted).map(|(r, p)| (r - p).abs()).fold(0.0, f64::max);
    Ok(CheckResult::with_outcome(
        "trace_r_squared_minus_chi_squared",
        1.0 - corr,
        0.05,
        1.0 - corr <= 0.05,
        format!("grid {n}², {vectors} probe vectors: correlation {corr:.4}, max row deviation {worst:.3e}"),
    ))
}

/// Zero-mean difference of Gaussians centred at `(θ0, 0)` in chart coordinates.
pub fn chart_bump(theta0: f64, width: f64) -> impl Fn([f64; 2]) -> f64 {
    move |u| {
        let r2 = (u[0] - theta0).powi(2) + u[1] * u[1];
        (-r2 / (2.0 * width * width)).exp() - 0.25 * (-r2 / (8.0 * width * width)).exp()
    }
}

/// Direct quadrature of `R_j^g` against quantization of its symbol on a sphere
/// chart at mid-latitude, compared with the outer cutoff as weight.
pub fn riesz_quadrature_agreement(grids: &[usize], j: usize) -> Result<(CheckResult, Vec<(usize, f64)>), PsidoError> {
    let chart: Arc<dyn Chart> = Arc::new(SphericalChart::standard(Surface::unit_sphere()));
    let bump = chart_bump(0.3 * PI, 0.06);
    let mut rows = Vec::new();
    for &n in grids {
        let g = ChartGrid::new(n)?;
        let f = g.sample(&bump);
        let w = g.sample(|u| chart.outer_cutoff(&Vector2::new(u[0], u[1])));
        let d = surface_riesz_apply(chart.as_ref(), j, &g, &f, &DirectOptions::default())?;
        let q = quantize(&riesz_symbol_function(chart.clone(), j), &Mollifier, &g).apply(&f)?;
        let diff: Vec<f64> = (0..g.len()).map(|i| w[i] * (d[i] - q[i])).collect();
        let reference: Vec<f64> = (0..g.len()).map(|i| w[i] * q[i]).collect();
        rows.push((n, relative(&diff, &reference)));
    }
    let last = rows.last().map(|r| r.1).unwrap_or(f64::NAN);
    let halving = rows.windows(2).all(|w| w[1].1 <= 0.5 * w[0].1);
    let detail = rows.iter().map(|(n, e)| format!("{n}: {e:.3e}")).collect::<Vec<_>>().join(", ");
    Ok((
        CheckResult::with_outcome(&format!("surface_riesz_{j}_direct_vs_quantized"), last, 0.05, last <= 0.05 && halving, format!("relative L² ({detail}), halving required")),
        rows,
    ))
}

// ---------------------------------------------------------------- spectra

/// Clustering criteria across resolutions (reports ordered coarse to fine).
pub fn clustering_checks(reports: &[SpectrumReport]) -> Vec<CheckResult> {
    let Some(finest) = reports.last() else { return Vec::new() };
    let c = &finest.clustering;
    let frac = c.inlier_fraction();
    let counts: Vec<usize> = reports.iter().map(|r| r.clustering.outliers.len()).collect();
    let non_increasing = counts.windows(2).all(|w| w[1] <= w[0]);
    let growth = counts.windows(2).map(|w| w[1] as f64 - w[0] as f64).fold(f64::NEG_INFINITY, f64::max);
    vec![
        CheckResult::with_outcome(
            "cluster_fraction",
            frac,
            0.95,
            frac >= 0.95,
            format!("resolution {}: {} of {} eigenvalues within δ = {:.4} of {{0, ±k0}}", finest.resolution, c.assignments.len() - c.outliers.len(), c.assignments.len(), c.delta),
        ),
        CheckResult::with_outcome(
            "clusters_non_empty",
            c.counts.iter().copied().min().unwrap_or(0) as f64,
            1.0,
            c.counts.iter().all(|&k| k > 0),
            format!("counts at 0, +k0, −k0: {:?}", c.counts),
        ),
        CheckResult::with_outcome("outliers_non_increasing", growth.max(0.0), 0.0, non_increasing, format!("outlier counts by resolution: {counts:?}")),
    ]
}

/// Compactness dichotomy: `σ_k(p3(K))` halves from the first to the last resolution,
/// the other three composites vary by less than 50% and stay above `floor`.
pub fn compactness_checks(diags: &[CompactnessDiagnostic], floor: f64) -> Vec<CheckResult> {
    diags
        .iter()
        .map(|d| {
            let s = &d.sigma_index;
            let (first, last) = (s[0], *s.last().unwrap());
            if d.kind == ProbeKind::P3 {
                let ratio = first / last;
                CheckResult::with_outcome(
                    "p3_singular_value_decay",
                    ratio,
                    2.0,
                    ratio >= 2.0,
                    format!("σ_{}(p3(K)) by resolution {:?}: {:?}", d.index, d.resolutions, s),
                )
            } else {
                let (lo, hi) = s.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
                let variation = hi / lo - 1.0;
                CheckResult::with_outcome(
                    &format!("non_compact_{}", d.kind.name()),
                    variation,
                    0.5,
                    variation < 0.5 && lo > floor,
                    format!("σ_{} by resolution {:?}: {:?}, floor {floor:.3e}", d.index, d.resolutions, s),
                )
            }
        })
        .collect()
}

/// Plemelj defect strictly decreasing across resolutions.
pub fn symmetrization_check(defects: &[(usize, f64)]) -> CheckResult {
    let decreasing = defects.windows(2).all(|w| w[1].1 < w[0].1);
    let worst = defects.windows(2).map(|w| w[1].1 / w[0].1).fold(0.0f64, f64::max);
    let detail = defects.iter().map(|(n, d)| format!("{n}: {d:.4e}")).collect::<Vec<_>>().join(", ");
    CheckResult::with_outcome("plemelj_defect_decreasing", worst, 1.0, decreasing && defects.len() >= 2, format!("‖KS − SKᵀ‖/‖S‖ by resolution ({detail})"))
}

// ---------------------------------------------------------------- pipeline

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Nystrom(#[from] NystromError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Assembled operators and derived quantities at one resolution.
pub struct ResolutionRun {
    pub resolution: usize,
    pub k: OperatorMatrix,
    pub s: OperatorMatrix,
    pub report: SpectrumReport,
    pub plemelj_defect: f64,
    pub assembly_seconds: f64,
    pub eigen_seconds: f64,
}

/// Assemble `K` and `S` on `surface` at resolution `n`, then compute the spectrum and Plemelj defect.
pub fn run_resolution(
    surface: &Surface,
    p: &LameParameters,
    n: usize,
    quad: &QuadratureOptions,
    spec: &SpectrumOptions,
) -> Result<ResolutionRun, PipelineError> {
    let start = Instant::now();
    let grid = build_surface_grid(surface, n)?;
    let a = assemble(&grid, p, &[KernelFamily::T, KernelFamily::K2Part, KernelFamily::S], quad)?;
    let k = a.k_split().expect("both parts assembled");
    let s = a.s.expect("assembled");
    let assembly_seconds = start.elapsed().as_secs_f64();
    let report = spectrum(&k, &s, p, spec)?;
    let plemelj_defect = symmetrization_defect(&k, &s)?;
    let eigen_seconds = start.elapsed().as_secs_f64() - assembly_seconds;
    Ok(ResolutionRun { resolution: n, k, s, report, plemelj_defect, assembly_seconds, eigen_seconds })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_matches_closed_form_for_the_identity_metric() {
        // G = I: the transform is −iξ_j/|ξ|
        for xi in [[1.0f64, 0.0], [3.0, -4.0], [-20.0, 7.0]] {
            let n = xi[0].hypot(xi[1]);
            for j in 1..=2 {
                let o = symbol_fourier_oracle([1.0, 0.0, 1.0], xi, j);
                assert!((o - Complex64::new(0.0, -xi[j - 1] / n)).norm() < 1e-4, "{xi:?} {j} {o}");
            }
        }
    }

    #[test]
    fn oracle_matches_exact_one_dimensional_form() {
        // sign form of the α-integral, evaluated with many midpoint nodes
        let g = [1.3, 0.2, 0.6];
        let xi = [2.0, -5.0];
        for j in 1..=2 {
            let m = 200_000;
            let mut acc = 0.0;
            for k in 0..m {
                let a = PI * (k as f64 + 0.5) / m as f64;
                let e = [a.cos(), a.sin()];
                let q = g[0] * e[0] * e[0] + 2.0 * g[1] * e[0] * e[1] + g[2] * e[1] * e[1];
                acc += PI / m as f64 * e[j - 1] * q.powf(-1.5) * (e[0] * xi[0] + e[1] * xi[1]).signum();
            }
            let exact = Complex64::new(0.0, -PI * acc / (2.0 * PI));
            let o = symbol_fourier_oracle(g, xi, j);
            assert!((o - exact).norm() < 2e-4, "{o} {exact}");
        }
    }

    #[test]
    fn fixtures_and_unknown_names() {
        for n in FIXTURES {
            assert!(fixture(n).is_ok());
        }
        assert!(fixture("torus").is_err());
    }

    #[test]
    fn trend_checks() {
        assert!(symmetrization_check(&[(16, 3.0), (24, 2.0), (32, 1.0)]).passed);
        assert!(!symmetrization_check(&[(16, 3.0), (24, 2.0), (32, 2.5)]).passed);
    }
}
