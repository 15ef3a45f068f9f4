//! Principal symbols of the surface Riesz transforms and of the chart blocks
//! `X_ij`, plus a small algebra of symbols built from them.

use super::PsidoError;
use crate::geometry::{metric_at, Chart, MetricTensor};
use nalgebra::Vector2;
use num_complex::Complex64;
use std::sync::Arc;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn check_xi(xi: &Vector2<f64>) -> Result<(), PsidoError> {
    if xi[0] == 0.0 && xi[1] == 0.0 {
        Err(PsidoError::SingularSymbol)
    } else {
        Ok(())
    }
}

/// `p_j(u, ξ) = −i (G⁻¹ξ)_j / (√det G · √(ξᵀG⁻¹ξ))` for j = 1, 2.
pub fn riesz_symbol<C: Chart + ?Sized>(chart: &C, u: &Vector2<f64>, xi: &Vector2<f64>) -> Result<[Complex64; 2], PsidoError> {
    check_xi(xi)?;
    let g = metric_at(chart, u)?;
    let gi = g.inverse_apply(xi);
    let s = g.det.sqrt() * g.inverse_quadratic(xi).sqrt();
    Ok([-I * (gi[0] / s), -I * (gi[1] / s)])
}

/// `(σ12, σ13, σ23)` with `σ = −i χ1 √det(G⁻¹) (∂2φ_k ξ1 − ∂1φ_k ξ2) / √(ξᵀG⁻¹ξ)`, k = 3, 2, 1.
pub fn sigma_symbols<C: Chart + ?Sized>(chart: &C, u: &Vector2<f64>, xi: &Vector2<f64>) -> Result<[Complex64; 3], PsidoError> {
    check_xi(xi)?;
    let g = metric_at(chart, u)?;
    let (d1, d2) = chart.derivatives(u);
    let c = chart.inner_cutoff(u) / (g.det.sqrt() * g.inverse_quadratic(xi).sqrt());
    let entry = |k: usize| -I * (c * (d2[k] * xi[0] - d1[k] * xi[1]));
    Ok([entry(2), entry(1), entry(0)])
}

/// `(a·ξ) / √(ξᵀBξ)`, zero where the quadratic form vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub a: [Complex64; 2],
    /// `(B11, B12, B22)`.
    pub b: [f64; 3],
}

impl Atom {
    pub fn zero() -> Self {
        Self { a: [Complex64::new(0.0, 0.0); 2], b: [1.0, 0.0, 1.0] }
    }

    /// `−i e_j·ξ/|ξ|`, the flat Riesz multiplier.
    pub fn flat_riesz(j: usize) -> Self {
        let mut a = [Complex64::new(0.0, 0.0); 2];
        a[j - 1] = -I;
        Self { a, b: [1.0, 0.0, 1.0] }
    }

    fn inverse_metric(g: &MetricTensor) -> [f64; 3] {
        [g.inv11, g.inv12, g.inv22]
    }

    #[inline]
    pub fn eval(&self, xi: [f64; 2]) -> Complex64 {
        let q = self.b[0] * xi[0] * xi[0] + 2.0 * self.b[1] * xi[0] * xi[1] + self.b[2] * xi[1] * xi[1];
        if q <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        (self.a[0] * xi[0] + self.a[1] * xi[1]) / q.sqrt()
    }
}

type CoefFn = Arc<dyn Fn([f64; 2]) -> Complex64 + Send + Sync>;
type AtomFn = Arc<dyn Fn([f64; 2]) -> Vec<Atom> + Send + Sync>;

/// `coef(u) · Π atoms(u)(ξ)`.
#[derive(Clone)]
pub struct SymbolTerm {
    pub coef: CoefFn,
    pub atoms: AtomFn,
}

/// Finite sum of [`SymbolTerm`]s, homogeneous of degree 0 in ξ.
///
/// `row_invariant` means every term's atoms depend on `u1` only, which lets the
/// quantizer work row by row.
#[derive(Clone)]
pub struct SymbolFunction {
    pub terms: Vec<SymbolTerm>,
    pub row_invariant: bool,
    pub order: i32,
}

impl std::fmt::Debug for SymbolFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SymbolFunction")
            .field("terms", &self.terms.len())
            .field("row_invariant", &self.row_invariant)
            .field("order", &self.order)
            .finish()
    }
}

impl SymbolFunction {
    pub fn constant(c: Complex64) -> Self {
        Self {
            terms: vec![SymbolTerm { coef: Arc::new(move |_| c), atoms: Arc::new(|_| Vec::new()) }],
            row_invariant: true,
            order: 0,
        }
    }

    /// Flat Riesz symbol `−iξ_j/|ξ|`.
    pub fn flat_riesz(j: usize) -> Self {
        Self {
            terms: vec![SymbolTerm {
                coef: Arc::new(|_| Complex64::new(1.0, 0.0)),
                atoms: Arc::new(move |_| vec![Atom::flat_riesz(j)]),
            }],
            row_invariant: true,
            order: 0,
        }
    }

    pub fn eval(&self, u: [f64; 2], xi: [f64; 2]) -> Complex64 {
        self.terms
            .iter()
            .map(|t| (t.atoms)(u).iter().fold((t.coef)(u), |acc, a| acc * a.eval(xi)))
            .sum()
    }

    /// Pointwise product `σ(u, ξ)·τ(u, ξ)`.
    pub fn product(&self, other: &SymbolFunction) -> SymbolFunction {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let (ca, cb) = (a.coef.clone(), b.coef.clone());
                let (aa, ab) = (a.atoms.clone(), b.atoms.clone());
                terms.push(SymbolTerm {
                    coef: Arc::new(move |u| ca(u) * cb(u)),
                    atoms: Arc::new(move |u| {
                        let mut v = aa(u);
                        v.extend(ab(u));
                        v
                    }),
                });
            }
        }
        SymbolFunction { terms, row_invariant: self.row_invariant && other.row_invariant, order: self.order + other.order }
    }

    /// Sum of two symbols.
    pub fn sum(&self, other: &SymbolFunction) -> SymbolFunction {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        SymbolFunction { terms, row_invariant: self.row_invariant && other.row_invariant, order: self.order.max(other.order) }
    }

    /// `c·σ`.
    pub fn scaled(&self, c: Complex64) -> SymbolFunction {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let coef = t.coef.clone();
                SymbolTerm { coef: Arc::new(move |u| c * coef(u)), atoms: t.atoms.clone() }
            })
            .collect();
        SymbolFunction { terms, ..self.clone() }
    }

    /// The symbol with `u` frozen at `u0`: a pure Fourier multiplier.
    pub fn frozen(&self, u0: [f64; 2]) -> SymbolFunction {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let c = (t.coef)(u0);
                let atoms = (t.atoms)(u0);
                SymbolTerm { coef: Arc::new(move |_| c), atoms: Arc::new(move |_| atoms.clone()) }
            })
            .collect();
        SymbolFunction { terms, row_invariant: true, order: self.order }
    }
}

/// [`riesz_symbol`] as a quantizable symbol; zero where the metric is degenerate.
pub fn riesz_symbol_function(chart: Arc<dyn Chart>, j: usize) -> SymbolFunction {
    let row_invariant = chart.metric_row_invariant();
    let atoms = move |u: [f64; 2]| match metric_at(chart.as_ref(), &Vector2::new(u[0], u[1])) {
        Ok(g) => {
            let s = g.det.sqrt();
            let row = if j == 1 { [g.inv11, g.inv12] } else { [g.inv12, g.inv22] };
            vec![Atom { a: [-I * (row[0] / s), -I * (row[1] / s)], b: Atom::inverse_metric(&g) }]
        }
        Err(_) => vec![Atom::zero()],
    };
    SymbolFunction {
        terms: vec![SymbolTerm { coef: Arc::new(|_| Complex64::new(1.0, 0.0)), atoms: Arc::new(atoms) }],
        row_invariant,
        order: 0,
    }
}

/// [`sigma_symbols`] entry `e` (0: σ12, 1: σ13, 2: σ23) as a quantizable symbol.
///
/// Split as `χ1∂2φ_k · (−iwξ1/q) − χ1∂1φ_k · (−iwξ2/q)`, `w = 1/√det G`, so the
/// atoms depend on the metric only.
pub fn sigma_symbol_function(chart: Arc<dyn Chart>, e: usize) -> SymbolFunction {
    let k = 2 - e;
    let row_invariant = chart.metric_row_invariant();
    let coef = |chart: Arc<dyn Chart>, which: usize| -> CoefFn {
        Arc::new(move |u: [f64; 2]| {
            let v = Vector2::new(u[0], u[1]);
            let chi = chart.inner_cutoff(&v);
            if chi == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let (d1, d2) = chart.derivatives(&v);
            Complex64::new(if which == 0 { chi * d2[k] } else { -chi * d1[k] }, 0.0)
        })
    };
    let atom = |chart: Arc<dyn Chart>, which: usize| -> AtomFn {
        Arc::new(move |u: [f64; 2]| match metric_at(chart.as_ref(), &Vector2::new(u[0], u[1])) {
            Ok(g) => {
                let w = 1.0 / g.det.sqrt();
                let mut a = [Complex64::new(0.0, 0.0); 2];
                a[which] = -I * w;
                vec![Atom { a, b: Atom::inverse_metric(&g) }]
            }
            Err(_) => vec![Atom::zero()],
        })
    };
    SymbolFunction {
        terms: (0..2)
            .map(|which| SymbolTerm { coef: coef(chart.clone(), which), atoms: atom(chart.clone(), which) })
            .collect(),
        row_invariant,
        order: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{FlatChart, SphericalChart, Surface, SurfaceKind};

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn flat_reductions() {
        let c = FlatChart::new(true);
        let u = Vector2::new(0.3, -0.2);
        let xi = Vector2::new(3.0, -4.0);
        let p = riesz_symbol(&c, &u, &xi).unwrap();
        assert!(close(p[0], -I * 0.6, 1e-15) && close(p[1], I * 0.8, 1e-15));
        let s = sigma_symbols(&c, &u, &xi).unwrap();
        assert!(close(s[0], Complex64::new(0.0, 0.0), 1e-15));
        assert!(close(s[1], -I * 0.6, 1e-15));
        assert!(close(s[2], -I * 0.8, 1e-15)); // +iξ2/|ξ| with ξ2 = −4
        assert_eq!(riesz_symbol(&c, &u, &Vector2::zeros()).unwrap_err(), PsidoError::SingularSymbol);
    }

    #[test]
    fn homogeneity_and_sum_of_squares() {
        let s = Surface::new(SurfaceKind::Ellipsoid { a: 1.0, b: 1.0, c: 2.0 }).unwrap();
        let c = SphericalChart::standard(s);
        let u = Vector2::new(1.2, 0.4);
        let xi = Vector2::new(0.7, -2.1);
        let p = riesz_symbol(&c, &u, &xi).unwrap();
        let p3 = riesz_symbol(&c, &u, &(xi * 3.0)).unwrap();
        assert!(close(p[0], p3[0], 1e-14) && close(p[1], p3[1], 1e-14));
        let sg = sigma_symbols(&c, &u, &xi).unwrap();
        let chi = c.inner_cutoff(&u);
        let total: Complex64 = sg.iter().map(|v| v * v).sum();
        assert!((total + chi * chi).norm() < 1e-13);
    }

    #[test]
    fn symbol_functions_agree_with_closed_forms() {
        let chart: Arc<dyn Chart> = Arc::new(SphericalChart::standard(Surface::unit_sphere()));
        let u = [1.0, 0.7];
        let xi = [2.0, -1.0];
        let v = Vector2::new(u[0], u[1]);
        let x = Vector2::new(xi[0], xi[1]);
        let p = riesz_symbol(chart.as_ref(), &v, &x).unwrap();
        let s = sigma_symbols(chart.as_ref(), &v, &x).unwrap();
        for j in 1..=2 {
            assert!(close(riesz_symbol_function(chart.clone(), j).eval(u, xi), p[j - 1], 1e-14));
        }
        for e in 0..3 {
            let f = sigma_symbol_function(chart.clone(), e);
            assert!(f.row_invariant);
            assert!(close(f.eval(u, xi), s[e], 1e-14));
        }
        let prod = sigma_symbol_function(chart.clone(), 0).product(&sigma_symbol_function(chart.clone(), 1));
        assert!(close(prod.eval(u, xi), s[0] * s[1], 1e-14));
        let frozen = prod.frozen(u);
        assert!(close(frozen.eval([0.0, 0.0], xi), s[0] * s[1], 1e-14));
        // outside the chart domain the symbols vanish instead of failing
        assert_eq!(riesz_symbol_function(chart, 1).eval([-0.3, 0.0], xi), Complex64::new(0.0, 0.0));
    }
}
