//! Riesz transforms on periodic planar grids and the half-space operator
//! `T = [[0,0,R1],[0,0,R2],[−R1,−R2,0]]`.
//!
//! `R_j` has multiplier `−iξ_j/|ξ|`; the zero mode and both Nyquist lines are set
//! to zero, so the discrete operators are real and `T³ = T` holds exactly.

use crate::linalg::LinearOperator;
use nalgebra::{Complex, Matrix3};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RieszError {
    #[error("grid size {0} must be even and at least 4")]
    BadGrid(usize),
    #[error("field has length {got}, expected {expected}")]
    Length { got: usize, expected: usize },
    #[error("component index {0} is not 1 or 2")]
    Component(usize),
}

/// `n × n` periodic grid on `[0, side)²`, node `(a, b)` stored at `a·n + b`.
#[derive(Clone)]
pub struct PeriodicGrid {
    n: usize,
    side: f64,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PeriodicGrid").field("n", &self.n).field("side", &self.side).finish()
    }
}

impl PeriodicGrid {
    pub fn new(n: usize, side: f64) -> Result<Self, RieszError> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(RieszError::BadGrid(n));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            side,
            fft: planner.plan_fft_forward(n),
            ifft: planner.plan_fft_inverse(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.side / self.n as f64
    }

    pub fn point(&self, index: usize) -> [f64; 2] {
        let h = self.spacing();
        [(index / self.n) as f64 * h, (index % self.n) as f64 * h]
    }

    /// Signed integer frequency of FFT index `k`.
    pub fn frequency(&self, k: usize) -> i64 {
        if k <= self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// Angular wave vector of FFT index `(k1, k2)`.
    pub fn wave_vector(&self, k1: usize, k2: usize) -> [f64; 2] {
        let s = 2.0 * PI / self.side;
        [s * self.frequency(k1) as f64, s * self.frequency(k2) as f64]
    }

    fn check(&self, f: &[f64]) -> Result<(), RieszError> {
        if f.len() != self.len() {
            return Err(RieszError::Length { got: f.len(), expected: self.len() });
        }
        Ok(())
    }

    /// In-place 2D DFT; the inverse includes the `1/n²` factor.
    pub fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        let plan = if inverse { &self.ifft } else { &self.fft };
        for row in data.chunks_mut(n) {
            plan.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for b in 0..n {
            for a in 0..n {
                col[a] = data[a * n + b];
            }
            plan.process(&mut col);
            for a in 0..n {
                data[a * n + b] = col[a];
            }
        }
        if inverse {
            let scale = 1.0 / (n * n) as f64;
            data.iter_mut().for_each(|v| *v *= scale);
        }
    }

    /// Forward 2D DFT of a real field.
    pub fn forward(&self, f: &[f64]) -> Result<Vec<Complex64>, RieszError> {
        self.check(f)?;
        let mut data: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, false);
        Ok(data)
    }

    /// Inverse 2D DFT, returning the real part.
    pub fn inverse(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut spectrum, true);
        spectrum.into_iter().map(|v| v.re).collect()
    }

    /// Apply a Fourier multiplier `m(k1, k2)` given on FFT indices.
    pub fn apply_multiplier<M: Fn(usize, usize) -> Complex64>(&self, f: &[f64], m: M) -> Result<Vec<f64>, RieszError> {
        let mut s = self.forward(f)?;
        let n = self.n;
        for k1 in 0..n {
            for k2 in 0..n {
                s[k1 * n + k2] *= m(k1, k2);
            }
        }
        Ok(self.inverse(s))
    }

    /// Multiplier of `R_j` (j = 1, 2) at FFT index `(k1, k2)`.
    pub fn riesz_multiplier(&self, j: usize, k1: usize, k2: usize) -> Complex64 {
        if (k1 == 0 && k2 == 0) || k1 == self.n / 2 || k2 == self.n / 2 {
            return Complex64::new(0.0, 0.0);
        }
        let xi = self.wave_vector(k1, k2);
        let norm = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        Complex64::new(0.0, -xi[j - 1] / norm)
    }
}

/// `R_j f` for `j ∈ {1, 2}`.
pub fn riesz_apply(grid: &PeriodicGrid, f: &[f64], j: usize) -> Result<Vec<f64>, RieszError> {
    if j != 1 && j != 2 {
        return Err(RieszError::Component(j));
    }
    grid.apply_multiplier(f, |k1, k2| grid.riesz_multiplier(j, k1, k2))
}

/// `T f` for a vector field given as three component arrays; `orientation` is the
/// sign of the normal's third component.
pub fn halfspace_t_apply(grid: &PeriodicGrid, f: &[Vec<f64>; 3], orientation: f64) -> Result<[Vec<f64>; 3], RieszError> {
    let r1f3 = riesz_apply(grid, &f[2], 1)?;
    let r2f3 = riesz_apply(grid, &f[2], 2)?;
    let r1f1 = riesz_apply(grid, &f[0], 1)?;
    let r2f2 = riesz_apply(grid, &f[1], 2)?;
    let third: Vec<f64> = r1f1.iter().zip(&r2f2).map(|(a, b)| -orientation * (a + b)).collect();
    Ok([
        r1f3.into_iter().map(|v| orientation * v).collect(),
        r2f3.into_iter().map(|v| orientation * v).collect(),
        third,
    ])
}

/// `k0·T` on interleaved vector fields (`3·(a·n + b) + c`), as a linear operator.
///
/// The multipliers are odd and imaginary, so each `R_j` is real antisymmetric and
/// `T` is symmetric.
#[derive(Debug, Clone)]
pub struct HalfSpaceOperator {
    pub grid: PeriodicGrid,
    pub scale: f64,
    pub orientation: f64,
}

impl HalfSpaceOperator {
    pub fn new(grid: PeriodicGrid, scale: f64) -> Self {
        Self { grid, scale, orientation: 1.0 }
    }
}

/// Split an interleaved field into components.
pub fn deinterleave(x: &[f64]) -> [Vec<f64>; 3] {
    let comp = |c: usize| x.iter().skip(c).step_by(3).copied().collect::<Vec<f64>>();
    [comp(0), comp(1), comp(2)]
}

/// Inverse of [`deinterleave`].
pub fn interleave(f: &[Vec<f64>; 3], out: &mut [f64]) {
    for (i, chunk) in out.chunks_mut(3).enumerate() {
        for c in 0..3 {
            chunk[c] = f[c][i];
        }
    }
}

impl LinearOperator for HalfSpaceOperator {
    fn dim(&self) -> usize {
        3 * self.grid.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let f = deinterleave(x);
        let mut t = halfspace_t_apply(&self.grid, &f, self.orientation).expect("field sized to grid");
        for comp in t.iter_mut() {
            comp.iter_mut().for_each(|v| *v *= self.scale);
        }
        interleave(&t, y);
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        self.apply(x, y);
    }
}

/// Symbol of `T` at a nonzero frequency: a Hermitian 3×3 matrix.
pub fn halfspace_symbol(xi: [f64; 2]) -> Matrix3<Complex<f64>> {
    let norm = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
    let r1 = Complex::new(0.0, -xi[0] / norm);
    let r2 = Complex::new(0.0, -xi[1] / norm);
    let z = Complex::new(0.0, 0.0);
    Matrix3::new(z, z, r1, z, z, r2, -r1, -r2, z)
}

/// Eigenvalues of [`halfspace_symbol`], ascending; analytically `{−1, 0, 1}`.
pub fn halfspace_symbol_eigenvalues(xi: [f64; 2]) -> [f64; 3] {
    let eig = halfspace_symbol(xi).symmetric_eigenvalues();
    let mut v = [eig[0], eig[1], eig[2]];
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn field(grid: &PeriodicGrid) -> Vec<f64> {
        (0..grid.len())
            .map(|i| {
                let [x, y] = grid.point(i);
                (2.0 * x + 3.0 * y).sin() + 0.5 * (x - 4.0 * y).cos()
            })
            .collect()
    }

    #[test]
    fn riesz_of_a_plane_wave() {
        // R_j e^{i ξ·x} = −i ξ_j/|ξ| e^{i ξ·x}: for sin(ξ·x) this gives −(ξ_j/|ξ|) cos(ξ·x).
        let g = PeriodicGrid::new(32, 2.0 * PI).unwrap();
        let f: Vec<f64> = (0..g.len()).map(|i| { let [x, y] = g.point(i); (3.0 * x + 4.0 * y).sin() }).collect();
        let r1 = riesz_apply(&g, &f, 1).unwrap();
        for i in 0..g.len() {
            let [x, y] = g.point(i);
            assert_relative_eq!(r1[i], -0.6 * (3.0 * x + 4.0 * y).cos(), epsilon = 1e-12);
        }
    }

    #[test]
    fn sum_of_squares_is_minus_identity() {
        let g = PeriodicGrid::new(64, 2.0 * PI).unwrap();
        let f = field(&g);
        let r11 = riesz_apply(&g, &riesz_apply(&g, &f, 1).unwrap(), 1).unwrap();
        let r22 = riesz_apply(&g, &riesz_apply(&g, &f, 2).unwrap(), 2).unwrap();
        for i in 0..g.len() {
            assert!((r11[i] + r22[i] + f[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn symbol_eigenvalues() {
        for xi in [[1.0, 0.0], [0.3, -2.0], [-5.0, 5.0]] {
            let e = halfspace_symbol_eigenvalues(xi);
            assert_relative_eq!(e[0], -1.0, epsilon = 1e-12);
            assert_relative_eq!(e[1], 0.0, epsilon = 1e-12);
            assert_relative_eq!(e[2], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn bad_input() {
        assert_eq!(PeriodicGrid::new(7, 1.0).unwrap_err(), RieszError::BadGrid(7));
        let g = PeriodicGrid::new(8, 1.0).unwrap();
        assert!(riesz_apply(&g, &[0.0; 3], 1).is_err());
        assert_eq!(riesz_apply(&g, &[0.0; 64], 3).unwrap_err(), RieszError::Component(3));
    }
}
