//! Quadrature helpers shared by the oracle tests. They deliberately avoid
//! the crate's own special functions.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Composite trapezoid rule on `[a, b]` with `n` panels.
pub fn trapezoid<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = 0.5 * (f(a) + f(b));
    for i in 1..n {
        s += f(a + h * i as f64);
    }
    s * h
}

/// `∫₀^∞ f(u) du` through `u = e^s`, trapezoid in `s` over `[s_lo, s_hi]`.
/// Spectrally accurate for integrands that decay at both ends of the
/// logarithmic axis.
pub fn half_line<F: Fn(f64) -> f64>(f: F, s_lo: f64, s_hi: f64, n: usize) -> f64 {
    trapezoid(|s| {
        let u = s.exp();
        f(u) * u
    }, s_lo, s_hi, n)
}

/// Heat kernel of `Δ` written out directly.
pub fn heat(t: f64, r2: f64, d: usize) -> f64 {
    (4.0 * PI * t).powf(-0.5 * d as f64) * (-r2 / (4.0 * t)).exp()
}

/// `K_ν(x) = ∫₀^∞ e^{−x cosh s} cosh(νs) ds`.
pub fn bessel_k_integral(nu: f64, x: f64) -> f64 {
    let upper = (2.0 * (60.0 / x).max(1.0)).ln() + 4.0;
    trapezoid(|s| (-x * s.cosh()).exp() * (nu * s).cosh(), 0.0, upper, 20_000)
}

/// `∫₀^∞ e^{−λt} g_t(r) dt` by quadrature.
pub fn resolvent_quadrature(lambda: f64, r: f64, d: usize) -> f64 {
    half_line(|t| (-lambda * t).exp() * heat(t, r * r, d), -40.0, 8.0, 40_000)
}

/// Dirichlet heat kernel of `Δ` on `(−r, r)` by the method of images.
pub fn interval_kernel_images(t: f64, x: f64, y: f64, r: f64) -> f64 {
    let w = 2.0 * r;
    let (a, b) = (x + r, y + r);
    let mut s = 0.0;
    for n in -40i32..=40 {
        let shift = 2.0 * w * n as f64;
        s += heat(t, (a - b + shift).powi(2), 1) - heat(t, (a + b + shift).powi(2), 1);
    }
    s
}
