//! Isotropic elasticity kernels.
//!
//! The Kelvin matrix Γ, the conormal (traction) derivative of its columns,
//! and the split of that derivative into a Cauchy-type part `k0·K1` and a
//! weakly singular part `K2`.

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

/// Errors raised by kernel evaluation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("Lamé parameters violate strong convexity (lambda = {lambda}, mu = {mu})")]
    NotStronglyConvex { lambda: f64, mu: f64 },
    #[error("kernel evaluated at coincident points")]
    Coincident,
    #[error("normal must be a unit vector, got |n| = {0}")]
    NonUnitNormal(f64),
}

/// Lamé constants with the derived quantities used throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LameParameters {
    lambda: f64,
    mu: f64,
}

impl LameParameters {
    /// Rejects parameters outside the strong convexity cone `mu > 0`, `3 lambda + 2 mu > 0`.
    pub fn new(lambda: f64, mu: f64) -> Result<Self, KernelError> {
        let ok = lambda.is_finite() && mu.is_finite() && mu > 0.0 && 3.0 * lambda + 2.0 * mu > 0.0;
        if !ok {
            return Err(KernelError::NotStronglyConvex { lambda, mu });
        }
        Ok(Self { lambda, mu })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn alpha1(&self) -> f64 {
        0.5 * (1.0 / self.mu + 1.0 / (2.0 * self.mu + self.lambda))
    }

    pub fn alpha2(&self) -> f64 {
        0.5 * (1.0 / self.mu - 1.0 / (2.0 * self.mu + self.lambda))
    }

    /// Accumulation constant `mu / (2 (2 mu + lambda))`.
    pub fn k0(&self) -> f64 {
        self.mu / (2.0 * (2.0 * self.mu + self.lambda))
    }
}

/// A point on a surface together with its outward unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub position: Vector3<f64>,
    pub normal: Vector3<f64>,
}

impl SurfacePoint {
    pub fn new(position: Vector3<f64>, normal: Vector3<f64>) -> Result<Self, KernelError> {
        let len = normal.norm();
        if (len - 1.0).abs() > 1e-12 {
            return Err(KernelError::NonUnitNormal(len));
        }
        Ok(Self { position, normal })
    }

    /// Normalizes `normal` instead of validating it.
    pub fn with_direction(position: Vector3<f64>, normal: Vector3<f64>) -> Self {
        Self {
            position,
            normal: normal.normalize(),
        }
    }
}

fn separation(x: &Vector3<f64>, y: &Vector3<f64>) -> Result<(Vector3<f64>, f64), KernelError> {
    let d = x - y;
    let r = d.norm();
    if r == 0.0 || !r.is_finite() {
        return Err(KernelError::Coincident);
    }
    Ok((d, r))
}

/// Kelvin matrix `Γ(x) = -(α1/4π) I/|x| - (α2/4π) x xᵀ/|x|³`.
pub fn kelvin_matrix(p: &LameParameters, x: &Vector3<f64>) -> Result<Matrix3<f64>, KernelError> {
    let r = x.norm();
    if r == 0.0 || !r.is_finite() {
        return Err(KernelError::Coincident);
    }
    let a = -p.alpha1() / (4.0 * PI * r);
    let b = -p.alpha2() / (4.0 * PI * r * r * r);
    Ok(Matrix3::from_fn(|i, j| {
        let diag = if i == j { a } else { 0.0 };
        diag + b * x[i] * x[j]
    }))
}

/// Numerator of `K1`: `(x−y) nᵀ − n (x−y)ᵀ`, antisymmetric with zero diagonal.
pub fn k1_numerator(x: &SurfacePoint, y: &Vector3<f64>) -> Matrix3<f64> {
    let d = x.position - y;
    let n = &x.normal;
    let mut m = Matrix3::zeros();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let v = d[i] * n[j] - n[i] * d[j];
        m[(i, j)] = v;
        m[(j, i)] = -v;
    }
    m
}

/// Cauchy-type kernel `K1(x,y) = [(x−y) n_xᵀ − n_x (x−y)ᵀ] / (2π|x−y|³)`.
pub fn k1_kernel(x: &SurfacePoint, y: &Vector3<f64>) -> Result<Matrix3<f64>, KernelError> {
    let (_, r) = separation(&x.position, y)?;
    Ok(k1_numerator(x, y) / (2.0 * PI * r * r * r))
}

/// Weakly singular kernel, sign chosen so that the conormal kernel equals `k0·K1 − K2`.
///
/// `K2 = −[μ/(2μ+λ)·(z·n)/(4π r³) I + 3(μ+λ)/(2μ+λ)·(z·n)/(4π r⁵) z zᵀ]` with `z = x − y`.
pub fn k2_kernel(p: &LameParameters, x: &SurfacePoint, y: &Vector3<f64>) -> Result<Matrix3<f64>, KernelError> {
    let (d, r) = separation(&x.position, y)?;
    let (lam, mu) = (p.lambda, p.mu);
    let dn = d.dot(&x.normal);
    let r3 = r * r * r;
    let c1 = -(mu / (2.0 * mu + lam)) * dn / (4.0 * PI * r3);
    let c2 = -(3.0 * (mu + lam) / (2.0 * mu + lam)) * dn / (4.0 * PI * r3 * r * r);
    let mut m = Matrix3::zeros();
    for i in 0..3 {
        for j in i..3 {
            let diag = if i == j { c1 } else { 0.0 };
            let v = diag + c2 * d[i] * d[j];
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Conormal derivative `∂ν_x Γ(x − y)`, assembled as `k0·K1 − K2`.
pub fn conormal_kernel(p: &LameParameters, x: &SurfacePoint, y: &Vector3<f64>) -> Result<Matrix3<f64>, KernelError> {
    let k1 = k1_kernel(x, y)?;
    let k2 = k2_kernel(p, x, y)?;
    Ok(k1 * p.k0() - k2)
}

/// Traction of the Kelvin columns computed by central differences of Γ.
///
/// Column `b` is `λ(∇·u) n + μ(∇u + ∇uᵀ) n` for `u(x) = Γ(x − y) e_b`. Used as a
/// definition-level cross-check of [`conormal_kernel`]; error is O(h²).
pub fn conormal_kernel_fd(
    p: &LameParameters,
    x: &SurfacePoint,
    y: &Vector3<f64>,
    h: f64,
) -> Result<Matrix3<f64>, KernelError> {
    separation(&x.position, y)?;
    // grad[k] = ∂_k Γ(x − y)
    let mut grad = [Matrix3::zeros(); 3];
    for (k, g) in grad.iter_mut().enumerate() {
        let mut e = Vector3::zeros();
        e[k] = h;
        let plus = kelvin_matrix(p, &(x.position + e - y))?;
        let minus = kelvin_matrix(p, &(x.position - e - y))?;
        *g = (plus - minus) / (2.0 * h);
    }
    let n = &x.normal;
    let mut out = Matrix3::zeros();
    for b in 0..3 {
        // ∂_k u_i = grad[k][(i, b)]
        let div: f64 = (0..3).map(|k| grad[k][(k, b)]).sum();
        for i in 0..3 {
            let mut t = p.lambda * div * n[i];
            for k in 0..3 {
                t += p.mu * (grad[k][(i, b)] + grad[i][(k, b)]) * n[k];
            }
            out[(i, b)] = t;
        }
    }
    Ok(out)
}

/// Largest absolute entry.
pub fn max_abs(m: &Matrix3<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}
