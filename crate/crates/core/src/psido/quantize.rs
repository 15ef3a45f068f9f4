//! Kohn–Nirenberg quantization on the chart torus and matrix-free chart operators.
//!
//! `Op(σ)f(u) = Σ_ξ e^{i u·ξ} σ(u, ξ) η(ξ) f̂(ξ)` over integer frequencies, with the
//! Nyquist modes dropped.

use super::direct::{surface_riesz_apply, DirectOptions};
use super::{ChartGrid, Mollifier, PsidoError, SymbolFunction};
use crate::geometry::Chart;
use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Provenance {
    DirectQuadrature,
    SymbolQuantization,
}

#[derive(Clone)]
enum Body {
    Symbol { symbol: SymbolFunction, mollifier: Mollifier },
    Riesz { chart: Arc<dyn Chart>, j: usize, opts: DirectOptions },
}

/// Linear operator on scalar chart-grid functions, applied matrix-free.
#[derive(Clone)]
pub struct ChartOperator {
    pub provenance: Provenance,
    grid: ChartGrid,
    body: Body,
}

impl std::fmt::Debug for ChartOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChartOperator").field("provenance", &self.provenance).field("n", &self.grid.n()).finish()
    }
}

/// Quantize a symbol on a chart grid.
pub fn quantize(symbol: &SymbolFunction, mollifier: &Mollifier, grid: &ChartGrid) -> ChartOperator {
    ChartOperator {
        provenance: Provenance::SymbolQuantization,
        grid: grid.clone(),
        body: Body::Symbol { symbol: symbol.clone(), mollifier: *mollifier },
    }
}

impl ChartOperator {
    /// Surface Riesz transform `R_j^g` by direct principal-value quadrature.
    pub fn direct_riesz(chart: Arc<dyn Chart>, j: usize, grid: &ChartGrid, opts: DirectOptions) -> Self {
        ChartOperator { provenance: Provenance::DirectQuadrature, grid: grid.clone(), body: Body::Riesz { chart, j, opts } }
    }

    pub fn grid(&self) -> &ChartGrid {
        &self.grid
    }

    fn check(&self, len: usize) -> Result<(), PsidoError> {
        if len != self.grid.len() {
            return Err(PsidoError::Shape(format!("function has {len} samples, grid has {}", self.grid.len())));
        }
        Ok(())
    }

    pub fn apply_complex(&self, f: &[Complex64]) -> Result<Vec<Complex64>, PsidoError> {
        self.check(f.len())?;
        match &self.body {
            Body::Symbol { symbol, mollifier } => Ok(apply_symbol(&self.grid, symbol, mollifier, f)),
            Body::Riesz { chart, j, opts } => {
                let re: Vec<f64> = f.iter().map(|v| v.re).collect();
                let im: Vec<f64> = f.iter().map(|v| v.im).collect();
                let a = surface_riesz_apply(chart.as_ref(), *j, &self.grid, &re, opts)?;
                let b = if im.iter().any(|v| *v != 0.0) {
                    surface_riesz_apply(chart.as_ref(), *j, &self.grid, &im, opts)?
                } else {
                    vec![0.0; im.len()]
                };
                Ok(a.into_iter().zip(b).map(|(x, y)| Complex64::new(x, y)).collect())
            }
        }
    }

    /// Real part of the operator applied to a real function.
    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>, PsidoError> {
        let c: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Ok(self.apply_complex(&c)?.into_iter().map(|v| v.re).collect())
    }

    /// Dense matrix (columns are images of unit vectors); small grids only.
    pub fn to_dense(&self) -> Result<Mat<f64>, PsidoError> {
        let m = self.grid.len();
        if m > 32 * 32 {
            return Err(PsidoError::Shape(format!("dense form limited to 32² points, got {m}")));
        }
        let mut out = Mat::zeros(m, m);
        let mut e = vec![0.0; m];
        for j in 0..m {
            e[j] = 1.0;
            let col = self.apply(&e)?;
            e[j] = 0.0;
            for (i, v) in col.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }
}

fn twiddles(n: usize) -> Vec<Complex64> {
    (0..n).map(|m| Complex64::from_polar(1.0, 2.0 * PI * m as f64 / n as f64)).collect()
}

/// `η(ξ)` on FFT indices, zero on the Nyquist lines.
fn mollifier_table(grid: &ChartGrid, mollifier: &Mollifier) -> Vec<f64> {
    let n = grid.n();
    let mut t = vec![0.0; n * n];
    for k1 in 0..n {
        for k2 in 0..n {
            if grid.is_nyquist(k1) || grid.is_nyquist(k2) {
                continue;
            }
            t[k1 * n + k2] = mollifier.eval([grid.frequency(k1) as f64, grid.frequency(k2) as f64]);
        }
    }
    t
}

fn apply_symbol(grid: &ChartGrid, symbol: &SymbolFunction, mollifier: &Mollifier, f: &[Complex64]) -> Vec<Complex64> {
    let n = grid.n();
    let mut spec = f.to_vec();
    grid.periodic().transform(&mut spec, false);
    let eta = mollifier_table(grid, mollifier);
    for (s, e) in spec.iter_mut().zip(&eta) {
        *s *= e / (n * n) as f64;
    }
    let tw = twiddles(n);
    let freqs: Vec<f64> = (0..n).map(|k| grid.frequency(k) as f64).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for term in &symbol.terms {
        let rows: Vec<Vec<Complex64>> = if symbol.row_invariant {
            let ifft = FftPlanner::new().plan_fft_inverse(n);
            (0..n)
                .into_par_iter()
                .map(|a| {
                    let u1 = grid.coordinate(0, a);
                    let atoms = (term.atoms)([u1, grid.origin()[1]]);
                    let mut g = vec![Complex64::new(0.0, 0.0); n];
                    for k1 in 0..n {
                        let phase = tw[(k1 * a) % n];
                        let row = &spec[k1 * n..(k1 + 1) * n];
                        for k2 in 0..n {
                            if row[k2] == Complex64::new(0.0, 0.0) {
                                continue;
                            }
                            let xi = [freqs[k1], freqs[k2]];
                            let m = atoms.iter().fold(phase, |acc, at| acc * at.eval(xi));
                            g[k2] += m * row[k2];
                        }
                    }
                    ifft.process(&mut g);
                    (0..n).map(|b| (term.coef)([u1, grid.coordinate(1, b)]) * g[b]).collect()
                })
                .collect()
        } else {
            (0..n)
                .into_par_iter()
                .map(|a| {
                    (0..n)
                        .map(|b| {
                            let u = [grid.coordinate(0, a), grid.coordinate(1, b)];
                            let c = (term.coef)(u);
                            if c == Complex64::new(0.0, 0.0) {
                                return c;
                            }
                            let atoms = (term.atoms)(u);
                            let mut acc = Complex64::new(0.0, 0.0);
                            for k1 in 0..n {
                                for k2 in 0..n {
                                    let s = spec[k1 * n + k2];
                                    if s == Complex64::new(0.0, 0.0) {
                                        continue;
                                    }
                                    let xi = [freqs[k1], freqs[k2]];
                                    let m = atoms.iter().fold(tw[(k1 * a + k2 * b) % n], |acc, at| acc * at.eval(xi));
                                    acc += m * s;
                                }
                            }
                            c * acc
                        })
                        .collect()
                })
                .collect()
        };
        for (a, row) in rows.into_iter().enumerate() {
            for (b, v) in row.into_iter().enumerate() {
                out[a * n + b] += v;
            }
        }
    }
    out
}

/// Apply the antisymmetric block operator `[[0, X12, X13], [−X12, 0, X23], [−X13, −X23, 0]]`.
pub fn r_matrix_apply(
    x12: &ChartOperator,
    x13: &ChartOperator,
    x23: &ChartOperator,
    f: &[Vec<f64>; 3],
) -> Result<[Vec<f64>; 3], PsidoError> {
    let g = x12.grid();
    if !g.same_as(x13.grid()) || !g.same_as(x23.grid()) {
        return Err(PsidoError::Shape("operators live on different grids".into()));
    }
    if f.iter().any(|c| c.len() != g.len()) {
        return Err(PsidoError::Shape(format!("components must have {} samples", g.len())));
    }
    let a = x12.apply(&f[1])?;
    let b = x13.apply(&f[2])?;
    let c = x12.apply(&f[0])?;
    let d = x23.apply(&f[2])?;
    let e = x13.apply(&f[0])?;
    let h = x23.apply(&f[1])?;
    let add = |p: &[f64], q: &[f64], sp: f64, sq: f64| p.iter().zip(q).map(|(x, y)| sp * x + sq * y).collect::<Vec<f64>>();
    Ok([add(&a, &b, 1.0, 1.0), add(&c, &d, -1.0, 1.0), add(&e, &h, -1.0, -1.0)])
}
