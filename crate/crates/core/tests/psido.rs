use elastic_np::geometry::{Atlas, Chart, SphericalChart, Surface};
use elastic_np::psido::{quantize, riesz_symbol, riesz_symbol_function, sigma_symbols, surface_riesz_apply, ChartGrid, DirectOptions, Mollifier, PsidoError};
use elastic_np::verify::{self, chart_bump, fixture};
use nalgebra::Vector2;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

fn charts() -> Vec<SphericalChart> {
    verify::FIXTURES.iter().flat_map(|name| Atlas::two_chart(fixture(name).unwrap()).charts).collect()
}

#[test]
fn direct_quadrature_converges_to_quantized_symbol() {
    let (check, rows) = verify::riesz_quadrature_agreement(&[128, 256], 1).unwrap();
    assert!(check.passed, "{rows:?}");
}

#[test]
fn frozen_symbol_quantizes_to_a_fourier_multiplier() {
    let chart: Arc<dyn Chart> = Arc::new(SphericalChart::standard(fixture("ellipsoid").unwrap()));
    let u0 = [0.4 * PI, 0.3];
    let g = ChartGrid::new(64).unwrap();
    let f = g.sample(chart_bump(0.4 * PI, 0.2));
    for j in 1..=2 {
        let op = quantize(&riesz_symbol_function(chart.clone(), j).frozen(u0), &Mollifier, &g);
        let q = op.apply(&f).unwrap();
        let n = g.n();
        let m = g.periodic().apply_multiplier(&f, |k1, k2| {
            if (k1 == 0 && k2 == 0) || g.is_nyquist(k1) || g.is_nyquist(k2) {
                return Complex64::new(0.0, 0.0);
            }
            let xi = Vector2::new(g.frequency(k1) as f64, g.frequency(k2) as f64);
            riesz_symbol(chart.as_ref(), &Vector2::new(u0[0], u0[1]), &xi).unwrap()[j - 1]
        });
        let m = m.unwrap();
        let err = (0..n * n).fold(0.0f64, |e, i| e.max((q[i] - m[i]).abs()));
        assert!(err < 1e-12, "j = {j}: {err:.3e}");
    }
}

#[test]
fn direct_transform_rejects_bad_index() {
    let chart = SphericalChart::standard(Surface::unit_sphere());
    let g = ChartGrid::new(32).unwrap();
    let f = g.sample(chart_bump(0.5 * PI, 0.1));
    let e = surface_riesz_apply(&chart, 3, &g, &f, &DirectOptions::default()).unwrap_err();
    assert!(matches!(e, PsidoError::Shape(_)));
}

fn chart_point() -> impl Strategy<Value = (usize, [f64; 2], [f64; 2])> {
    (0usize..6, 0.2 * PI..0.8 * PI, -PI..PI, 0.0..2.0 * PI, 0.0f64..3.0)
        .prop_map(|(c, t, p, a, logr)| (c, [t, p], [10f64.powf(logr) * a.cos(), 10f64.powf(logr) * a.sin()]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn riesz_symbol_is_odd_and_zero_homogeneous((c, u, xi) in chart_point(), t in 0.01f64..100.0) {
        let chart = &charts()[c];
        let u = Vector2::from(u);
        let xi = Vector2::from(xi);
        let a = riesz_symbol(chart, &u, &xi).unwrap();
        let b = riesz_symbol(chart, &u, &(xi * t)).unwrap();
        let m = riesz_symbol(chart, &u, &(-xi)).unwrap();
        for j in 0..2 {
            prop_assert!((a[j] - b[j]).norm() <= 1e-13);
            prop_assert!((a[j] + m[j]).norm() <= 1e-13);
            prop_assert!(a[j].re == 0.0);
        }
    }

    #[test]
    fn riesz_symbol_has_fixed_metric_length((c, u, xi) in chart_point()) {
        // Im p = −G⁻¹ξ / (√det G · |ξ|_{G⁻¹}), so det G · ⟨Im p, G Im p⟩ = 1
        let chart = &charts()[c];
        let u = Vector2::from(u);
        let xi = Vector2::from(xi);
        let g = elastic_np::geometry::metric_at(chart, &u).unwrap();
        let s = riesz_symbol(chart, &u, &xi).unwrap();
        let v = Vector2::new(s[0].im, s[1].im);
        prop_assert!((g.det * g.quadratic(&v) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn sigma_sum_of_squares_equals_minus_inner_cutoff((c, u, xi) in chart_point()) {
        let chart = &charts()[c];
        let u = Vector2::from(u);
        let xi = Vector2::from(xi);
        let s = sigma_symbols(chart, &u, &xi).unwrap();
        let total: Complex64 = s.iter().map(|v| v * v).sum();
        let chi = chart.inner_cutoff(&u);
        prop_assert!((total + chi * chi).norm() <= 1e-12);
    }
}
