//! Small numerical utilities: quadrature rules, trigonometric interpolation,
//! matrix-free operators and partial singular values.

use faer::Mat;
use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    (
        x.iter().map(|t| a + half * (t + 1.0)).collect(),
        w.iter().map(|t| t * half).collect(),
    )
}

/// Fejér first-rule weights for `∫_0^π f(θ) sinθ dθ` at `θ_k = (k + ½)π/n`.
pub fn fejer_sin_weights(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let t = (k as f64 + 0.5) * PI / n as f64;
            let s: f64 = (1..=n / 2)
                .map(|j| (2.0 * j as f64 * t).cos() / (4.0 * (j * j) as f64 - 1.0))
                .sum();
            (2.0 / n as f64) * (1.0 - 2.0 * s)
        })
        .collect()
}

/// Periodic Dirichlet interpolation kernel for `m` (even) equispaced nodes on `[0, 2π)`.
///
/// `D(x) = sin(m x/2) / (m tan(x/2))`, equal to 1 at multiples of 2π.
pub fn dirichlet(x: f64, m: usize) -> f64 {
    let half = 0.5 * x;
    let t = half.tan();
    if t.abs() < 1e-13 {
        // x ≈ 2πk, where the kernel equals 1 for even m
        return 1.0;
    }
    (0.5 * m as f64 * x).sin() / (m as f64 * t)
}

/// Weights `D(x − 2πl/m)` for `l = 0..m` written into `out`.
///
/// Uses one sine/cosine per call; each entry costs a handful of flops.
pub fn dirichlet_row(x: f64, m: usize, cos_nodes: &[f64], sin_nodes: &[f64], out: &mut [f64]) {
    let mf = m as f64;
    let (sa, ca) = (0.5 * x).sin_cos();
    let s_m = (0.5 * mf * x).sin();
    for l in 0..m {
        // a − b with a = x/2, b = πl/m
        let (cb, sb) = (cos_nodes[l], sin_nodes[l]);
        let s = sa * cb - ca * sb;
        let c = ca * cb + sa * sb;
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        out[l] = if s.abs() < 1e-13 {
            // x = 2πl/m (mod 2π)
            1.0
        } else {
            sign * s_m * c / (mf * s)
        };
    }
}

/// Cosines and sines of `πl/m` for [`dirichlet_row`].
pub fn dirichlet_tables(m: usize) -> (Vec<f64>, Vec<f64>) {
    (0..m)
        .map(|l| {
            let b = PI * l as f64 / m as f64;
            (b.cos(), b.sin())
        })
        .unzip()
}

/// A real linear operator applied matrix-free.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]);
}

/// Dense column-major matrix as an operator.
pub struct DenseOperator<'a>(pub &'a Mat<f64>);

impl LinearOperator for DenseOperator<'_> {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        matvec(self.0, x, y);
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        matvec_transpose(self.0, x, y);
    }
}

/// `y = A x` for a column-major matrix.
pub fn matvec(a: &Mat<f64>, x: &[f64], y: &mut [f64]) {
    y.iter_mut().for_each(|v| *v = 0.0);
    for j in 0..a.ncols() {
        let xj = x[j];
        if xj == 0.0 {
            continue;
        }
        for (yi, aij) in y.iter_mut().zip(a.col_as_slice(j)) {
            *yi += aij * xj;
        }
    }
}

/// `y = Aᵀ x` for a column-major matrix.
pub fn matvec_transpose(a: &Mat<f64>, x: &[f64], y: &mut [f64]) {
    for (j, yj) in y.iter_mut().enumerate() {
        *yj = dot(a.col_as_slice(j), x);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
    }
}

/// Largest `k` singular values by Golub–Kahan–Lanczos bidiagonalization with
/// full reorthogonalization, `steps` Lanczos steps from the start vector `start`.
pub fn top_singular_values(op: &dyn LinearOperator, k: usize, steps: usize, start: &[f64]) -> Vec<f64> {
    let n = op.dim();
    let m = steps.min(n).max(k.min(n));
    let mut us: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut alphas = Vec::with_capacity(m);
    let mut betas = Vec::with_capacity(m);
    let mut v = start.to_vec();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut u = vec![0.0; n];
    let mut beta = 0.0;
    for step in 0..m {
        // u = A v − β u_prev
        let mut au = vec![0.0; n];
        op.apply(&v, &mut au);
        if step > 0 {
            au.iter_mut().zip(&u).for_each(|(a, b)| *a -= beta * b);
        }
        orthogonalize(&mut au, &us);
        let alpha = norm(&au);
        vs.push(v.clone());
        alphas.push(alpha);
        if alpha <= 1e-300 {
            break;
        }
        au.iter_mut().for_each(|x| *x /= alpha);
        u = au;
        us.push(u.clone());
        // v = Aᵀ u − α v
        let mut atv = vec![0.0; n];
        op.apply_transpose(&u, &mut atv);
        atv.iter_mut().zip(&v).for_each(|(a, b)| *a -= alpha * b);
        orthogonalize(&mut atv, &vs);
        beta = norm(&atv);
        if beta <= 1e-300 || step + 1 == m {
            break;
        }
        betas.push(beta);
        atv.iter_mut().for_each(|x| *x /= beta);
        v = atv;
    }
    let r = alphas.len();
    let b = Mat::<f64>::from_fn(r, r, |i, j| {
        if i == j {
            alphas[i]
        } else if j == i + 1 && i < betas.len() {
            betas[i]
        } else {
            0.0
        }
    });
    let mut s = b.singular_values().unwrap_or_default();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s.truncate(k);
    s
}

/// Operator 2-norm estimate.
pub fn spectral_norm(op: &dyn LinearOperator, steps: usize, start: &[f64]) -> f64 {
    top_singular_values(op, 1, steps, start).first().copied().unwrap_or(0.0)
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1, 2, 5, 20] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(a, b)| a.powi(deg as i32) * b).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert_relative_eq!(q, exact, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn fejer_integrates_sphere_area() {
        for n in [4, 9, 16] {
            let s: f64 = fejer_sin_weights(n).iter().sum();
            assert_relative_eq!(s, 2.0, epsilon = 1e-14);
        }
        // ∫ cos²θ sinθ dθ = 2/3
        let n = 12;
        let w = fejer_sin_weights(n);
        let q: f64 = (0..n).map(|k| ((k as f64 + 0.5) * PI / n as f64).cos().powi(2) * w[k]).sum();
        assert_relative_eq!(q, 2.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn dirichlet_interpolates_trig_polynomials() {
        let m = 10;
        let f = |x: f64| 0.3 + (2.0 * x).sin() - 0.5 * (4.0 * x).cos();
        let (c, s) = dirichlet_tables(m);
        let mut row = vec![0.0; m];
        for x in [0.1, 1.7, 3.0, 5.9, 2.0 * PI / 10.0 * 3.0] {
            dirichlet_row(x, m, &c, &s, &mut row);
            let v: f64 = (0..m).map(|l| row[l] * f(2.0 * PI * l as f64 / m as f64)).sum();
            assert_relative_eq!(v, f(x), epsilon = 1e-12);
            let direct: f64 = (0..m).map(|l| dirichlet(x - 2.0 * PI * l as f64 / m as f64, m) * f(2.0 * PI * l as f64 / m as f64)).sum();
            assert_relative_eq!(direct, f(x), epsilon = 1e-12);
        }
    }

    #[test]
    fn lanczos_recovers_singular_values() {
        let n = 60;
        let a = Mat::<f64>::from_fn(n, n, |i, j| ((i * 31 + j * 17) % 23) as f64 / 23.0 - 0.5 + if i == j { 0.1 * i as f64 } else { 0.0 });
        let mut exact = a.singular_values().unwrap();
        exact.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let start: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64).sin()).collect();
        let s = top_singular_values(&DenseOperator(&a), 5, n, &start);
        for k in 0..5 {
            assert_relative_eq!(s[k], exact[k], epsilon = 1e-9);
        }
    }

    #[test]
    fn slope_of_line() {
        assert_relative_eq!(fit_slope(&[1.0, 2.0, 3.0], &[2.0, 0.0, -2.0]), -2.0, epsilon = 1e-15);
    }
}
