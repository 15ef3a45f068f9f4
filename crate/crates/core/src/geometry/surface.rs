//! Closed surfaces given as maps `X: S² → ℝ³` from the unit sphere.

use super::GeometryError;
use nalgebra::Vector3;
use serde::Serialize;

/// Real harmonic polynomial of degree 1–3, scaled so that `max |Y| = 1` on the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Harmonic {
    degree: u32,
    order: i32,
    scale: f64,
}

impl Harmonic {
    pub fn new(degree: u32, order: i32) -> Result<Self, GeometryError> {
        if !(1..=3).contains(&degree) || order.unsigned_abs() > degree {
            return Err(GeometryError::InvalidSurface(format!(
                "harmonic (degree {degree}, order {order}) not available; degree must be 1..=3 and |order| <= degree"
            )));
        }
        let raw = Self { degree, order, scale: 1.0 };
        let scale = 1.0 / raw.max_abs_on_sphere();
        Ok(Self { scale, ..raw })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn order(&self) -> i32 {
        self.order
    }

    fn max_abs_on_sphere(&self) -> f64 {
        let (nt, np) = (400, 800);
        let mut best = 0.0_f64;
        for i in 0..=nt {
            let t = std::f64::consts::PI * i as f64 / nt as f64;
            for j in 0..np {
                let f = 2.0 * std::f64::consts::PI * j as f64 / np as f64;
                let w = Vector3::new(t.sin() * f.cos(), t.sin() * f.sin(), t.cos());
                best = best.max(self.value(&w).abs());
            }
        }
        best
    }

    /// Polynomial value at `w` (any point of ℝ³).
    pub fn value(&self, w: &Vector3<f64>) -> f64 {
        self.scale * self.value_and_gradient(w).0
    }

    /// Euclidean gradient of the polynomial at `w`.
    pub fn gradient(&self, w: &Vector3<f64>) -> Vector3<f64> {
        self.value_and_gradient(w).1 * self.scale
    }

    fn value_and_gradient(&self, w: &Vector3<f64>) -> (f64, Vector3<f64>) {
        let (x, y, z) = (w[0], w[1], w[2]);
        let v = Vector3::new;
        match (self.degree, self.order) {
            (1, -1) => (y, v(0.0, 1.0, 0.0)),
            (1, 0) => (z, v(0.0, 0.0, 1.0)),
            (1, 1) => (x, v(1.0, 0.0, 0.0)),
            (2, -2) => (x * y, v(y, x, 0.0)),
            (2, -1) => (y * z, v(0.0, z, y)),
            (2, 0) => (2.0 * z * z - x * x - y * y, v(-2.0 * x, -2.0 * y, 4.0 * z)),
            (2, 1) => (x * z, v(z, 0.0, x)),
            (2, 2) => (x * x - y * y, v(2.0 * x, -2.0 * y, 0.0)),
            (3, -3) => (3.0 * x * x * y - y * y * y, v(6.0 * x * y, 3.0 * x * x - 3.0 * y * y, 0.0)),
            (3, -2) => (x * y * z, v(y * z, x * z, x * y)),
            (3, -1) => (
                y * (4.0 * z * z - x * x - y * y),
                v(-2.0 * x * y, 4.0 * z * z - x * x - 3.0 * y * y, 8.0 * y * z),
            ),
            (3, 0) => (
                z * (2.0 * z * z - 3.0 * x * x - 3.0 * y * y),
                v(-6.0 * x * z, -6.0 * y * z, 6.0 * z * z - 3.0 * x * x - 3.0 * y * y),
            ),
            (3, 1) => (
                x * (4.0 * z * z - x * x - y * y),
                v(4.0 * z * z - 3.0 * x * x - y * y, -2.0 * x * y, 8.0 * x * z),
            ),
            (3, 2) => (z * (x * x - y * y), v(2.0 * x * z, -2.0 * y * z, x * x - y * y)),
            (3, 3) => (x * x * x - 3.0 * x * y * y, v(3.0 * x * x - 3.0 * y * y, -6.0 * x * y, 0.0)),
            _ => unreachable!("validated in Harmonic::new"),
        }
    }
}

/// Surface fixtures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceKind {
    UnitSphere,
    Ellipsoid { a: f64, b: f64, c: f64 },
    /// Radius `1 + epsilon·Y(ω)` in direction ω.
    StarPerturbed { epsilon: f64, harmonic: Harmonic },
}

/// A smooth closed surface `X(ω)` with analytic tangent map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Surface {
    kind: SurfaceKind,
}

impl Surface {
    pub fn new(kind: SurfaceKind) -> Result<Self, GeometryError> {
        match kind {
            SurfaceKind::UnitSphere => {}
            SurfaceKind::Ellipsoid { a, b, c } => {
                if !(a > 0.0 && b > 0.0 && c > 0.0 && a.is_finite() && b.is_finite() && c.is_finite()) {
                    return Err(GeometryError::InvalidSurface(format!("ellipsoid axes must be positive, got ({a}, {b}, {c})")));
                }
            }
            SurfaceKind::StarPerturbed { epsilon, .. } => {
                if !(epsilon.abs() <= 0.2) {
                    return Err(GeometryError::InvalidSurface(format!("star perturbation |epsilon| must be <= 0.2, got {epsilon}")));
                }
            }
        }
        Ok(Self { kind })
    }

    pub fn unit_sphere() -> Self {
        Self { kind: SurfaceKind::UnitSphere }
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    /// Short identifier used in reports.
    pub fn name(&self) -> String {
        match self.kind {
            SurfaceKind::UnitSphere => "sphere".into(),
            SurfaceKind::Ellipsoid { a, b, c } => format!("ellipsoid({a},{b},{c})"),
            SurfaceKind::StarPerturbed { epsilon, harmonic } => {
                format!("star(eps={epsilon},l={},m={})", harmonic.degree, harmonic.order)
            }
        }
    }

    /// `X(ω)` for a unit vector ω.
    pub fn point(&self, w: &Vector3<f64>) -> Vector3<f64> {
        match self.kind {
            SurfaceKind::UnitSphere => *w,
            SurfaceKind::Ellipsoid { a, b, c } => Vector3::new(a * w[0], b * w[1], c * w[2]),
            SurfaceKind::StarPerturbed { epsilon, harmonic } => w * (1.0 + epsilon * harmonic.value(w)),
        }
    }

    /// `DX(ω)·t` for a tangent vector `t ⊥ ω`.
    pub fn tangent_map(&self, w: &Vector3<f64>, t: &Vector3<f64>) -> Vector3<f64> {
        match self.kind {
            SurfaceKind::UnitSphere => *t,
            SurfaceKind::Ellipsoid { a, b, c } => Vector3::new(a * t[0], b * t[1], c * t[2]),
            SurfaceKind::StarPerturbed { epsilon, harmonic } => {
                t * (1.0 + epsilon * harmonic.value(w)) + w * (epsilon * harmonic.gradient(w).dot(t))
            }
        }
    }

    /// True when the surface is invariant under rotations about `axis`.
    pub fn is_revolution_about(&self, axis: &Vector3<f64>) -> bool {
        let a = axis.normalize();
        match self.kind {
            SurfaceKind::UnitSphere => true,
            SurfaceKind::Ellipsoid { a: ax, b, c } => {
                let tol = 1e-14;
                let e = [ax, b, c];
                for k in 0..3 {
                    if (a[k].abs() - 1.0).abs() < tol {
                        let (p, q) = ((k + 1) % 3, (k + 2) % 3);
                        return (e[p] - e[q]).abs() <= tol * e[p].max(e[q]);
                    }
                }
                (ax - b).abs() <= tol && (b - c).abs() <= tol
            }
            SurfaceKind::StarPerturbed { epsilon, harmonic } => {
                epsilon == 0.0 || (harmonic.order == 0 && (a[2].abs() - 1.0).abs() < 1e-14)
            }
        }
    }
}

/// Spherical coordinates `(θ, φ)` of a unit vector, `φ ∈ (−π, π]`.
pub fn spherical_angles(w: &Vector3<f64>) -> (f64, f64) {
    (w[2].clamp(-1.0, 1.0).acos(), w[1].atan2(w[0]))
}

/// Unit vector and the orthonormal frame `(e_θ, e_φ)` at `(θ, φ)`.
pub fn spherical_frame(theta: f64, phi: f64) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    (
        Vector3::new(st * cp, st * sp, ct),
        Vector3::new(ct * cp, ct * sp, -st),
        Vector3::new(-sp, cp, 0.0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonics_are_normalized_and_harmonic() {
        for l in 1..=3u32 {
            for m in -(l as i32)..=(l as i32) {
                let h = Harmonic::new(l, m).unwrap();
                assert!((h.max_abs_on_sphere() - 1.0).abs() < 1e-12);
                // Euler: x·∇p = l p for homogeneous polynomials.
                let w = Vector3::new(0.3, -0.5, 0.7);
                assert!((w.dot(&h.gradient(&w)) - l as f64 * h.value(&w)).abs() < 1e-12);
            }
        }
        assert!(Harmonic::new(4, 0).is_err());
        assert!(Harmonic::new(2, 3).is_err());
    }

    #[test]
    fn harmonic_gradient_matches_differences() {
        let h = Harmonic::new(3, -1).unwrap();
        let w = Vector3::new(0.2, 0.4, -0.6);
        let g = h.gradient(&w);
        for k in 0..3 {
            let mut e = Vector3::zeros();
            e[k] = 1e-6;
            let fd = (h.value(&(w + e)) - h.value(&(w - e))) / 2e-6;
            assert!((fd - g[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_fixtures() {
        assert!(Surface::new(SurfaceKind::Ellipsoid { a: 1.0, b: 0.0, c: 1.0 }).is_err());
        let harmonic = Harmonic::new(2, 0).unwrap();
        assert!(Surface::new(SurfaceKind::StarPerturbed { epsilon: 0.3, harmonic }).is_err());
    }

    #[test]
    fn revolution_detection() {
        let e = Surface::new(SurfaceKind::Ellipsoid { a: 1.0, b: 1.0, c: 2.0 }).unwrap();
        assert!(e.is_revolution_about(&Vector3::z()));
        assert!(!e.is_revolution_about(&Vector3::x()));
        assert!(Surface::unit_sphere().is_revolution_about(&Vector3::x()));
    }
}
