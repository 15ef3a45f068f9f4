//! Charts, metric tensors and the chart-level kernel coefficients.

use super::surface::{spherical_angles, spherical_frame, Surface};
use super::GeometryError;
use nalgebra::{Matrix3, Vector2, Vector3};
use std::f64::consts::PI;

/// Below this area element a chart is treated as degenerate.
pub const DEGENERATE_JACOBIAN: f64 = 1e-10;

/// Closed parameter rectangle `[lo, hi]` (open in θ for spherical charts).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRect {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub open: bool,
}

impl ParamRect {
    pub fn contains(&self, u: &Vector2<f64>) -> bool {
        (0..2).all(|k| {
            if self.open {
                u[k] > self.lo[k] && u[k] < self.hi[k]
            } else {
                u[k] >= self.lo[k] && u[k] <= self.hi[k]
            }
        })
    }
}

/// Smooth step from 0 (t ≤ 0) to 1 (t ≥ 1) built from `exp(−1/t)`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let f = |s: f64| (-1.0 / s).exp();
    let a = f(t);
    a / (a + f(1.0 - t))
}

/// Radial cutoff: 1 for `d ≤ support − ramp`, 0 for `d ≥ support`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub support: f64,
    pub ramp: f64,
}

impl Cutoff {
    pub fn eval(&self, d: f64) -> f64 {
        smooth_step((self.support - d) / self.ramp)
    }
}

/// Cutoffs of spherical charts, in units of the chart's θ-extent π, measured from the equator.
pub const INNER_CUTOFF: Cutoff = Cutoff { support: 0.35 * PI, ramp: 0.08 * PI };
pub const OUTER_CUTOFF: Cutoff = Cutoff { support: 0.45 * PI, ramp: 0.08 * PI };

/// A local parametrization `Φ: U ⊂ ℝ² → ℝ³`.
pub trait Chart: Send + Sync {
    fn domain(&self) -> ParamRect;
    /// `Φ(u)`; no domain check.
    fn map(&self, u: &Vector2<f64>) -> Vector3<f64>;
    /// `(∂1Φ, ∂2Φ)`; no domain check.
    fn derivatives(&self, u: &Vector2<f64>) -> (Vector3<f64>, Vector3<f64>);
    /// +1 when `∂1Φ × ∂2Φ` points outward, −1 otherwise.
    fn orientation(&self) -> f64 {
        1.0
    }
    /// Inner cutoff χ1 in chart coordinates.
    fn inner_cutoff(&self, _u: &Vector2<f64>) -> f64 {
        1.0
    }
    /// Outer cutoff χ2 in chart coordinates.
    fn outer_cutoff(&self, _u: &Vector2<f64>) -> f64 {
        1.0
    }
    /// True when the metric depends on `u1` only.
    fn metric_row_invariant(&self) -> bool {
        false
    }
}

fn check_domain<C: Chart + ?Sized>(chart: &C, u: &Vector2<f64>) -> Result<(), GeometryError> {
    if chart.domain().contains(u) {
        Ok(())
    } else {
        Err(GeometryError::OutsideDomain(u[0], u[1]))
    }
}

/// First fundamental form with its inverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricTensor {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
    pub inv11: f64,
    pub inv12: f64,
    pub inv22: f64,
    pub det: f64,
}

impl MetricTensor {
    pub fn from_derivatives(d1: &Vector3<f64>, d2: &Vector3<f64>) -> Result<Self, GeometryError> {
        let area = d1.cross(d2).norm();
        if !(area >= DEGENERATE_JACOBIAN) {
            return Err(GeometryError::DegenerateJacobian(area));
        }
        let (g11, g12, g22) = (d1.dot(d1), d1.dot(d2), d2.dot(d2));
        Ok(Self::from_entries(g11, g12, g22))
    }

    /// Caller guarantees positive definiteness.
    pub fn from_entries(g11: f64, g12: f64, g22: f64) -> Self {
        let det = g11 * g22 - g12 * g12;
        Self {
            g11,
            g12,
            g22,
            inv11: g22 / det,
            inv12: -g12 / det,
            inv22: g11 / det,
            det,
        }
    }

    /// `⟨z, G z⟩`.
    pub fn quadratic(&self, z: &Vector2<f64>) -> f64 {
        self.g11 * z[0] * z[0] + 2.0 * self.g12 * z[0] * z[1] + self.g22 * z[1] * z[1]
    }

    /// `⟨ξ, G⁻¹ ξ⟩`.
    pub fn inverse_quadratic(&self, xi: &Vector2<f64>) -> f64 {
        self.inv11 * xi[0] * xi[0] + 2.0 * self.inv12 * xi[0] * xi[1] + self.inv22 * xi[1] * xi[1]
    }

    pub fn inverse_apply(&self, xi: &Vector2<f64>) -> Vector2<f64> {
        Vector2::new(self.inv11 * xi[0] + self.inv12 * xi[1], self.inv12 * xi[0] + self.inv22 * xi[1])
    }
}

pub fn metric_at<C: Chart + ?Sized>(chart: &C, u: &Vector2<f64>) -> Result<MetricTensor, GeometryError> {
    check_domain(chart, u)?;
    let (d1, d2) = chart.derivatives(u);
    MetricTensor::from_derivatives(&d1, &d2)
}

/// Outward unit normal `±(∂1Φ × ∂2Φ)/|∂1Φ × ∂2Φ|`.
pub fn normal_at<C: Chart + ?Sized>(chart: &C, u: &Vector2<f64>) -> Result<Vector3<f64>, GeometryError> {
    check_domain(chart, u)?;
    let (d1, d2) = chart.derivatives(u);
    let c = d1.cross(&d2);
    let area = c.norm();
    if !(area >= DEGENERATE_JACOBIAN) {
        return Err(GeometryError::DegenerateJacobian(area));
    }
    Ok(c * (chart.orientation() / area))
}

/// `|Φ(u) − Φ(v)|² − ⟨u − v, G(u)(u − v)⟩`.
pub fn taylor_metric_residual<C: Chart + ?Sized>(
    chart: &C,
    u: &Vector2<f64>,
    v: &Vector2<f64>,
) -> Result<f64, GeometryError> {
    check_domain(chart, v)?;
    let g = metric_at(chart, u)?;
    let d = chart.map(u) - chart.map(v);
    Ok(d.norm_squared() - g.quadratic(&(u - v)))
}

/// Second derivatives `(∂11Φ, ∂12Φ, ∂22Φ)` by central differences of the first derivatives.
pub fn second_derivatives<C: Chart + ?Sized>(
    chart: &C,
    u: &Vector2<f64>,
) -> Result<(Vector3<f64>, Vector3<f64>, Vector3<f64>), GeometryError> {
    check_domain(chart, u)?;
    let h = 1e-5;
    let e1 = Vector2::new(h, 0.0);
    let e2 = Vector2::new(0.0, h);
    let (a1, _) = chart.derivatives(&(u + e1));
    let (b1, _) = chart.derivatives(&(u - e1));
    let (c1, c2) = chart.derivatives(&(u + e2));
    let (d1, d2) = chart.derivatives(&(u - e2));
    Ok(((a1 - b1) / (2.0 * h), (c1 - d1) / (2.0 * h), (c2 - d2) / (2.0 * h)))
}

/// Off-diagonal entries of the `K1` numerator, in the order (1,2), (1,3), (2,3).
pub const K1_ENTRIES: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Linear-term coefficients `(a_k, b_k)` for the entries (1,2), (1,3), (2,3) with k = 3, 2, 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelCoefficients {
    pub pairs: [(f64, f64); 3],
}

impl KernelCoefficients {
    /// Leading term of the `K1` numerator entry `(i, j)` at `Φ(u), Φ(v)` as a function of `δ = u − v`.
    ///
    /// `(x−y)_i n_j − n_i (x−y)_j ≈ −ε_ijk [a_k δ1 − b_k δ2]`, the sign coming from
    /// `n × (x−y)` expressed through the metric.
    pub fn linear_form(&self, entry: usize, delta: &Vector2<f64>) -> f64 {
        let (a, b) = self.pairs[entry];
        let sign = match entry {
            0 => -1.0, // ε_123
            1 => 1.0,  // ε_132
            _ => -1.0, // ε_231
        };
        sign * (a * delta[0] - b * delta[1])
    }
}

/// `((g11∂2φ_k − g12∂1φ_k), (g22∂1φ_k − g21∂2φ_k)) / |∂1Φ × ∂2Φ|` for k = 3, 2, 1.
pub fn chart_kernel_coefficients<C: Chart + ?Sized>(chart: &C, u: &Vector2<f64>) -> Result<KernelCoefficients, GeometryError> {
    check_domain(chart, u)?;
    let (d1, d2) = chart.derivatives(u);
    let g = MetricTensor::from_derivatives(&d1, &d2)?;
    let area = d1.cross(&d2).norm() * chart.orientation();
    let pair = |k: usize| {
        (
            (g.g11 * d2[k] - g.g12 * d1[k]) / area,
            (g.g22 * d1[k] - g.g12 * d2[k]) / area,
        )
    };
    Ok(KernelCoefficients {
        pairs: [pair(2), pair(1), pair(0)],
    })
}

/// Spherical-coordinate chart `Φ(θ, φ) = X(R ω(θ, φ))` on a surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalChart {
    surface: Surface,
    rotation: Matrix3<f64>,
}

impl SphericalChart {
    pub fn new(surface: Surface, rotation: Matrix3<f64>) -> Self {
        Self { surface, rotation }
    }

    /// Chart with the identity rotation (poles on the z-axis).
    pub fn standard(surface: Surface) -> Self {
        Self::new(surface, Matrix3::identity())
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    /// Chart coordinates of the parameter-sphere direction `w`.
    pub fn coordinates_of(&self, w: &Vector3<f64>) -> Vector2<f64> {
        let local = self.rotation.transpose() * w;
        let (t, p) = spherical_angles(&local);
        Vector2::new(t, p)
    }

    /// Distance of `u` from the chart's equator, the argument of both cutoffs.
    pub fn equator_distance(u: &Vector2<f64>) -> f64 {
        (u[0] - 0.5 * PI).abs()
    }
}

impl Chart for SphericalChart {
    fn domain(&self) -> ParamRect {
        ParamRect {
            lo: [0.0, -PI - 1e-12],
            hi: [PI, PI + 1e-12],
            open: true,
        }
    }

    fn map(&self, u: &Vector2<f64>) -> Vector3<f64> {
        let (w, _, _) = spherical_frame(u[0], u[1]);
        self.surface.point(&(self.rotation * w))
    }

    fn derivatives(&self, u: &Vector2<f64>) -> (Vector3<f64>, Vector3<f64>) {
        let (w, et, ep) = spherical_frame(u[0], u[1]);
        let rw = self.rotation * w;
        let d1 = self.surface.tangent_map(&rw, &(self.rotation * et));
        let d2 = self.surface.tangent_map(&rw, &(self.rotation * ep * u[0].sin()));
        (d1, d2)
    }

    fn inner_cutoff(&self, u: &Vector2<f64>) -> f64 {
        INNER_CUTOFF.eval(Self::equator_distance(u))
    }

    fn outer_cutoff(&self, u: &Vector2<f64>) -> f64 {
        OUTER_CUTOFF.eval(Self::equator_distance(u))
    }

    fn metric_row_invariant(&self) -> bool {
        self.surface.is_revolution_about(&(self.rotation * Vector3::z()))
    }
}

/// Flat chart `Φ(u) = (u1, u2, 0)` with an orientation flag for the normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatChart {
    pub orientation: f64,
    pub half_width: f64,
}

impl FlatChart {
    pub fn new(upward: bool) -> Self {
        Self {
            orientation: if upward { 1.0 } else { -1.0 },
            half_width: 1e6,
        }
    }
}

impl Chart for FlatChart {
    fn domain(&self) -> ParamRect {
        ParamRect {
            lo: [-self.half_width; 2],
            hi: [self.half_width; 2],
            open: false,
        }
    }

    fn map(&self, u: &Vector2<f64>) -> Vector3<f64> {
        Vector3::new(u[0], u[1], 0.0)
    }

    fn derivatives(&self, _u: &Vector2<f64>) -> (Vector3<f64>, Vector3<f64>) {
        (Vector3::x(), Vector3::y())
    }

    fn orientation(&self) -> f64 {
        self.orientation
    }

    fn metric_row_invariant(&self) -> bool {
        true
    }
}

/// `Φ̃(w) = Φ(w / scale)`: the reparametrization `u ↦ scale·u`.
#[derive(Debug, Clone, Copy)]
pub struct Reparametrized<C> {
    pub inner: C,
    pub scale: f64,
}

impl<C: Chart> Chart for Reparametrized<C> {
    fn domain(&self) -> ParamRect {
        let d = self.inner.domain();
        ParamRect {
            lo: [d.lo[0] * self.scale, d.lo[1] * self.scale],
            hi: [d.hi[0] * self.scale, d.hi[1] * self.scale],
            open: d.open,
        }
    }

    fn map(&self, u: &Vector2<f64>) -> Vector3<f64> {
        self.inner.map(&(u / self.scale))
    }

    fn derivatives(&self, u: &Vector2<f64>) -> (Vector3<f64>, Vector3<f64>) {
        let (a, b) = self.inner.derivatives(&(u / self.scale));
        (a / self.scale, b / self.scale)
    }

    fn orientation(&self) -> f64 {
        self.inner.orientation()
    }

    fn inner_cutoff(&self, u: &Vector2<f64>) -> f64 {
        self.inner.inner_cutoff(&(u / self.scale))
    }

    fn outer_cutoff(&self, u: &Vector2<f64>) -> f64 {
        self.inner.outer_cutoff(&(u / self.scale))
    }

    fn metric_row_invariant(&self) -> bool {
        self.inner.metric_row_invariant()
    }
}

/// Two spherical charts, the second rotated by 90° about the y-axis.
#[derive(Debug, Clone)]
pub struct Atlas {
    pub charts: Vec<SphericalChart>,
}

impl Atlas {
    pub fn two_chart(surface: Surface) -> Self {
        let r = Matrix3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0);
        Self {
            charts: vec![SphericalChart::standard(surface), SphericalChart::new(surface, r)],
        }
    }

    /// `Σ_charts χ1²` at the surface point with parameter direction `w`.
    pub fn inner_cutoff_square_sum(&self, w: &Vector3<f64>) -> f64 {
        self.charts
            .iter()
            .map(|c| {
                let u = c.coordinates_of(w);
                c.inner_cutoff(&u).powi(2)
            })
            .sum()
    }
}
