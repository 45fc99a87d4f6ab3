//! Kernels and special functions checked against quadrature and
//! elementary closed forms.

mod common;

use std::f64::consts::PI;

use approx::assert_relative_eq;
use common::{bessel_k_integral, heat, interval_kernel_images, resolvent_quadrature, trapezoid};
use gsdecay_core::kernels::*;
use gsdecay_core::special::{bessel_k, bessel_k_scaled, rgamma};

#[test]
fn gauss_kernel_matches_direct_formula() {
    for d in 1..=3 {
        let x = vec![0.3; d];
        let y: Vec<f64> = (0..d).map(|i| -0.2 * i as f64).collect();
        let r2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
        for t in [0.01, 0.5, 3.0] {
            assert_relative_eq!(gauss_kernel(t, &x, &y).unwrap(), heat(t, r2, d), max_relative = 1e-14);
        }
    }
}

#[test]
fn gauss_kernel_has_unit_mass() {
    let t = 0.7;
    let m1 = trapezoid(|u| gauss_kernel(t, &[0.2], &[u]).unwrap(), -15.0, 15.0, 3000);
    assert!((m1 - 1.0).abs() < 1e-6, "{m1}");
    let m2 = trapezoid(
        |u| trapezoid(|v| gauss_kernel(t, &[0.0, 0.0], &[u, v]).unwrap(), -12.0, 12.0, 240),
        -12.0,
        12.0,
        240,
    );
    assert!((m2 - 1.0).abs() < 1e-6, "{m2}");
    // d = 3 through the radial measure.
    let m3 = trapezoid(|r| sphere_area(3) * r * r * gauss_kernel_radial(t, r * r, 3), 0.0, 15.0, 3000);
    assert!((m3 - 1.0).abs() < 1e-6, "{m3}");
}

#[test]
fn gauss_kernel_chapman_kolmogorov() {
    let (s, t, x, y) = (0.3, 0.8, 0.4, -1.1);
    let conv = trapezoid(
        |z| gauss_kernel(s, &[x], &[z]).unwrap() * gauss_kernel(t, &[z], &[y]).unwrap(),
        -20.0,
        20.0,
        4000,
    );
    assert_relative_eq!(conv, gauss_kernel(s + t, &[x], &[y]).unwrap(), max_relative = 1e-10);
}

#[test]
fn bessel_k_matches_integral_representation() {
    for nu in [0.0, 0.3, 0.5, 1.0, 1.5, 2.5, 4.0] {
        for x in [0.1, 0.7, 1.9, 2.0, 2.1, 5.0, 20.0] {
            let got = bessel_k(nu, x).unwrap();
            let want = bessel_k_integral(nu, x);
            assert_relative_eq!(got, want, max_relative = 1e-10);
        }
    }
}

#[test]
fn bessel_k_half_integer_closed_forms() {
    for x in [0.2, 1.0, 3.0, 9.0] {
        let k_half = (PI / (2.0 * x)).sqrt() * (-x).exp();
        assert_relative_eq!(bessel_k(0.5, x).unwrap(), k_half, max_relative = 1e-14);
        assert_relative_eq!(bessel_k(1.5, x).unwrap(), k_half * (1.0 + 1.0 / x), max_relative = 1e-13);
        assert_relative_eq!(bessel_k_scaled(0.5, x).unwrap(), (PI / (2.0 * x)).sqrt(), max_relative = 1e-14);
    }
}

#[test]
fn bessel_k_asymptotic_ratio_bound() {
    for nu in [0.0, 0.5, 1.0, 1.5] {
        let mut r = 5.0;
        while r <= 200.0 {
            let dev = ((2.0 * r / PI).sqrt() * bessel_k_scaled(nu, r).unwrap() - 1.0).abs();
            let bound = (4.0 * nu * nu - 1.0).abs() / (8.0 * r) + 1e-3;
            assert!(dev <= bound, "ν = {nu}, r = {r}: {dev} > {bound}");
            r *= 1.3;
        }
    }
}

#[test]
fn reciprocal_gamma_known_values() {
    assert_relative_eq!(rgamma(1.0), 1.0, max_relative = 1e-15);
    assert_relative_eq!(rgamma(0.5), 1.0 / PI.sqrt(), max_relative = 1e-14);
    assert_relative_eq!(rgamma(5.0), 1.0 / 24.0, max_relative = 1e-14);
    assert_eq!(rgamma(0.0), 0.0);
    assert_eq!(rgamma(-2.0), 0.0);
}

#[test]
fn resolvent_closed_forms_in_odd_dimensions() {
    for lambda in [0.25, 1.0, 4.0, 16.0] {
        let k = f64::sqrt(lambda);
        for r in [0.1, 0.5, 1.0, 2.0, 4.0, 10.0] {
            let d1 = (-k * r).exp() / (2.0 * k);
            let d3 = (-k * r).exp() / (4.0 * PI * r);
            assert_relative_eq!(resolvent_kernel_radial(lambda, r, 1).unwrap(), d1, max_relative = 1e-8);
            assert_relative_eq!(resolvent_kernel_radial(lambda, r, 3).unwrap(), d3, max_relative = 1e-8);
        }
    }
}

#[test]
fn resolvent_matches_time_quadrature() {
    for d in 1..=4 {
        for lambda in [0.5, 1.0, 9.0] {
            for r in [0.3, 1.0, 3.0] {
                let got = resolvent_kernel_radial(lambda, r, d).unwrap();
                let want = resolvent_quadrature(lambda, r, d);
                assert_relative_eq!(got, want, max_relative = 1e-6);
            }
        }
    }
}

#[test]
fn resolvent_scaled_form_consistent() {
    for d in 1..=3 {
        for (lambda, r) in [(1.0, 2.0), (4.0, 0.5), (16.0, 3.0)] {
            let plain = resolvent_kernel_radial(lambda, r, d).unwrap();
            let scaled = resolvent_kernel_scaled(lambda, r, d).unwrap();
            assert_relative_eq!(scaled, plain * (f64::sqrt(lambda) * r).exp(), max_relative = 1e-12);
        }
    }
}

#[test]
fn resolvent_total_mass_is_inverse_lambda() {
    for d in 1..=3 {
        for lambda in [0.5, 2.0] {
            let mass = common::half_line(
                |r| sphere_area(d) * r.powi(d as i32 - 1) * resolvent_kernel_radial(lambda, r, d).unwrap(),
                -30.0,
                5.0,
                20_000,
            );
            assert_relative_eq!(mass, 1.0 / lambda, max_relative = 1e-6);
        }
    }
}

#[test]
fn half_laplacian_resolvent_relation() {
    for d in 1..=4 {
        for mu in [0.5, 1.0, 8.0] {
            for r in [0.2, 1.0, 5.0] {
                let mut y = vec![0.0; d];
                y[d - 1] = r;
                let lhs = resolvent_half_laplacian(mu, &y).unwrap();
                let rhs = 2.0 * resolvent_kernel_radial(2.0 * mu, r, d).unwrap();
                assert_relative_eq!(lhs, rhs, max_relative = 1e-9);
            }
        }
    }
}

#[test]
fn resolvent_witness_found_in_low_dimensions() {
    for d in 1..=3 {
        let w = resolvent_lower_bound_witness(0.1, d, WitnessWindow::default()).unwrap();
        assert!(w.holds && w.c > 0.0 && w.rho > 0.0, "{w:?}");
        // Spot-check the claimed inequality away from the scan nodes.
        for (lambda, r) in [(1.3, w.rho + 0.37), (55.5, w.rho * 3.1), (99.0, 40.2)] {
            let v = resolvent_kernel_radial(lambda, r, d).unwrap();
            assert!(v >= w.c * (-(1.1) * f64::sqrt(lambda) * r).exp() * (1.0 - 1e-9));
        }
    }
}

#[test]
fn interval_kernel_series_matches_images() {
    for t in [0.02, 0.1, 0.5, 2.0] {
        for (x, y) in [(0.0, 0.0), (0.5, -0.5), (0.9, 0.2), (-0.3, -0.99)] {
            let series = interval_dirichlet_heat_kernel(t, x, y, 1.0).unwrap();
            let images = interval_kernel_images(t, x, y, 1.0);
            assert!((series - images).abs() <= 1e-10 * images.abs().max(1e-3), "t={t} {x} {y}");
        }
    }
}

#[test]
fn principal_eigenvalues_against_known_zeros() {
    assert_relative_eq!(principal_dirichlet_eigenvalue(1).unwrap(), PI * PI / 4.0, max_relative = 1e-15);
    // First zero of J_0.
    assert_relative_eq!(principal_dirichlet_eigenvalue(2).unwrap(), 2.404_825_557_695_773f64.powi(2), max_relative = 1e-12);
    assert_relative_eq!(principal_dirichlet_eigenvalue(3).unwrap(), PI * PI, max_relative = 1e-15);
    // First zero of J_1.
    assert_relative_eq!(principal_dirichlet_eigenvalue(4).unwrap(), 3.831_705_970_207_512f64.powi(2), max_relative = 1e-12);
}

#[test]
fn dirichlet_fit_against_image_kernel() {
    let pts = [-0.5, 0.0, 0.5];
    let mut samples = Vec::new();
    let mut c_min = f64::INFINITY;
    let mu0 = PI * PI / 4.0;
    for k in 1..=20 {
        let t = 0.1 * k as f64;
        for &x in &pts {
            for &y in &pts {
                samples.push((t, x, y));
                let q = DirichletBallBoundQuery {
                    t,
                    x: vec![x],
                    y: vec![y],
                    r: 1.0,
                    mu0,
                    c: 1.0,
                };
                let unit = dirichlet_ball_lower_bound(&q).unwrap();
                c_min = c_min.min(interval_kernel_images(t, x, y, 1.0) / unit);
            }
        }
    }
    let fit = fit_dirichlet_constant(&samples, 1.0).unwrap();
    assert_relative_eq!(fit.c, c_min, max_relative = 1e-9);
    assert!(fit.c >= 0.2);
}

#[test]
fn sphere_areas() {
    assert_relative_eq!(sphere_area(1), 2.0, max_relative = 1e-15);
    assert_relative_eq!(sphere_area(2), 2.0 * PI, max_relative = 1e-15);
    assert_relative_eq!(sphere_area(3), 4.0 * PI, max_relative = 1e-15);
    assert_relative_eq!(sphere_area(4), 2.0 * PI * PI, max_relative = 1e-14);
}
