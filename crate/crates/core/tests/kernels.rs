use elastic_np::geometry::Surface;
use elastic_np::lame::{conormal_kernel, conormal_kernel_fd, k1_kernel, k2_kernel, kelvin_matrix, max_abs};
use elastic_np::nystrom::surface_frame;
use elastic_np::verify;
use elastic_np::{LameParameters, SurfacePoint};
use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;
use std::f64::consts::PI;

fn params() -> impl Strategy<Value = LameParameters> {
    (0.2f64..5.0, -0.6f64..4.0).prop_map(|(mu, t)| LameParameters::new(t * mu, mu).unwrap())
}

fn angles() -> impl Strategy<Value = (f64, f64)> {
    (0.05f64..PI - 0.05, -PI..PI)
}

#[test]
fn k1_on_the_reference_configuration() {
    let x = SurfacePoint::new(Vector3::zeros(), Vector3::z()).unwrap();
    let k = k1_kernel(&x, &Vector3::x()).unwrap();
    let expected = Matrix3::new(0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0) / (2.0 * PI);
    assert!(max_abs(&(k - expected)) < 1e-15);
}

#[test]
fn kelvin_matrix_reference_value() {
    // λ = μ = 1: Γ(e1) = −(α1 + α2)/(4π) e1e1ᵀ − α1/(4π)(I − e1e1ᵀ)
    let p = LameParameters::new(1.0, 1.0).unwrap();
    let g = kelvin_matrix(&p, &Vector3::x()).unwrap();
    assert!((g[(0, 0)] + 1.0 / (4.0 * PI)).abs() < 1e-15);
    assert!((g[(1, 1)] + p.alpha1() / (4.0 * PI)).abs() < 1e-15);
    assert!(g[(0, 1)].abs() < 1e-15);
}

#[test]
fn parameters_outside_the_convexity_cone_are_rejected() {
    assert!(LameParameters::new(1.0, -1.0).is_err());
    assert!(LameParameters::new(-1.0, 1.0).is_err());
    assert!(LameParameters::new(f64::NAN, 1.0).is_err());
}

#[test]
fn coincident_points_are_errors() {
    let p = LameParameters::new(1.0, 1.0).unwrap();
    let x = SurfacePoint::new(Vector3::x(), Vector3::x()).unwrap();
    assert!(k2_kernel(&p, &x, &Vector3::x()).is_err());
    assert!(conormal_kernel(&p, &x, &Vector3::x()).is_err());
}

#[test]
fn kernel_suite_passes_on_fixtures() {
    let p = LameParameters::new(2.0, 0.7).unwrap();
    let checks = verify::kernel_suite(&p, 7);
    assert!(verify::all_passed(&checks), "{checks:#?}");
}

proptest! {
    #[test]
    fn kelvin_matrix_is_symmetric_and_homogeneous(p in params(), v in prop::array::uniform3(-2.0f64..2.0), t in 0.1f64..10.0) {
        let x = Vector3::from(v);
        prop_assume!(x.norm() > 1e-2);
        let g = kelvin_matrix(&p, &x).unwrap();
        prop_assert!(max_abs(&(g - g.transpose())) <= 1e-15 * max_abs(&g));
        let gt = kelvin_matrix(&p, &(x * t)).unwrap();
        prop_assert!(max_abs(&(gt * t - g)) <= 1e-13 * max_abs(&g));
    }

    #[test]
    fn split_holds_on_the_ellipsoid(p in params(), a in angles(), b in angles()) {
        let s = verify::fixture("ellipsoid").unwrap();
        let x = surface_frame(&s, a.0, a.1).1;
        let y = surface_frame(&s, b.0, b.1).1;
        prop_assume!((x.position - y.position).norm() > 1e-3);
        let k = conormal_kernel(&p, &x, &y.position).unwrap();
        let split = k1_kernel(&x, &y.position).unwrap() * p.k0() - k2_kernel(&p, &x, &y.position).unwrap();
        prop_assert!(max_abs(&(k - split)) <= 1e-13 * max_abs(&k).max(1.0));
    }

    #[test]
    fn conormal_matches_finite_differences(p in params(), a in angles(), b in angles()) {
        let s = Surface::unit_sphere();
        let x = surface_frame(&s, a.0, a.1).1;
        let y = surface_frame(&s, b.0, b.1).1;
        prop_assume!((x.position - y.position).norm() > 0.1);
        let k = conormal_kernel(&p, &x, &y.position).unwrap();
        let fd = conormal_kernel_fd(&p, &x, &y.position, 1e-5).unwrap();
        prop_assert!(max_abs(&(k - fd)) <= 1e-6 * max_abs(&k).max(1.0));
    }

    #[test]
    fn k1_is_antisymmetric_and_k2_symmetric(p in params(), a in angles(), b in angles()) {
        let s = verify::fixture("star").unwrap();
        let x = surface_frame(&s, a.0, a.1).1;
        let y = surface_frame(&s, b.0, b.1).1;
        prop_assume!((x.position - y.position).norm() > 1e-3);
        let k1 = k1_kernel(&x, &y.position).unwrap();
        let k2 = k2_kernel(&p, &x, &y.position).unwrap();
        prop_assert!(max_abs(&(k1 + k1.transpose())) == 0.0);
        prop_assert!(max_abs(&(k2 - k2.transpose())) == 0.0);
    }
}
