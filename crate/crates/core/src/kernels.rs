//! Closed-form kernels: the Gauss–Weierstrass heat kernel of `Δ`, the
//! resolvent (λ-potential) kernel, the Dirichlet-ball heat-kernel lower
//! bound and the principal Dirichlet eigenvalue of the unit ball.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;


use crate::error::{invalid, Error, Result};
use crate::linalg::norm;
pub use crate::special::{bessel_k, bessel_k_scaled};
use crate::special::{bessel_j_first_zero, rgamma};

/// `g_t(x, y) = (4πt)^{−d/2} exp(−|y−x|²/(4t))`.
pub fn gauss_kernel(t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!("time must be positive, got {t}")));
    }
    let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(gauss_kernel_radial(t, r2, x.len()))
}

/// Heat kernel as a function of the squared displacement.
pub fn gauss_kernel_radial(t: f64, r2: f64, d: usize) -> f64 {
    (4.0 * PI * t).powf(-0.5 * d as f64) * (-r2 / (4.0 * t)).exp()
}

/// A point query `r_λ(y)` for the resolvent of `Δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventQuery {
    pub lambda: f64,
    pub y: Vec<f64>,
}

impl ResolventQuery {
    pub fn new(lambda: f64, y: Vec<f64>) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid(format!("lambda must be positive, got {lambda}")));
        }
        if y.is_empty() {
            return Err(invalid("displacement needs at least one coordinate"));
        }
        Ok(Self { lambda, y })
    }

    pub fn dimension(&self) -> usize {
        self.y.len()
    }
}

/// `e^{√(2μ)|y|} r̃_μ(y)` for the resolvent of `Δ/2`,
/// `r̃_μ(y) = π^{−d/2} (√(2μ)/(2|y|))^{d/2−1} K_{d/2−1}(√(2μ)|y|)`.
fn half_laplacian_scaled(mu: f64, r: f64, d: usize) -> Result<f64> {
    let order = 0.5 * d as f64 - 1.0;
    let k = (2.0 * mu).sqrt();
    let z = k * r;
    if r == 0.0 {
        if d == 1 {
            // K_{−1/2}(z) z^{1/2} is regular at zero.
            return Ok(1.0 / (2.0 * mu).sqrt());
        }
        return Err(Error::Singular(d));
    }
    Ok(PI.powf(-0.5 * d as f64) * (k / (2.0 * r)).powf(order) * bessel_k_scaled(order, z)?)
}

/// Resolvent kernel of `Δ/2`: `r̃_μ(y) = ∫₀^∞ e^{−μt} g_{t/2}(y) dt`.
pub fn resolvent_half_laplacian(mu: f64, y: &[f64]) -> Result<f64> {
    let q = ResolventQuery::new(mu, y.to_vec())?;
    let r = norm(&q.y);
    Ok(half_laplacian_scaled(mu, r, q.dimension())? * (-(2.0 * mu).sqrt() * r).exp())
}

/// `r_λ(y) = ∫₀^∞ e^{−λt} g_t(y) dt`, computed as `½ r̃_{λ/2}(y)`.
pub fn resolvent_kernel(q: &ResolventQuery) -> Result<f64> {
    let r = norm(&q.y);
    resolvent_kernel_radial(q.lambda, r, q.dimension())
}

/// `r_λ` as a function of `|y|`.
pub fn resolvent_kernel_radial(lambda: f64, r: f64, d: usize) -> Result<f64> {
    Ok(resolvent_kernel_scaled(lambda, r, d)? * (-lambda.sqrt() * r).exp())
}

/// `e^{√λ|y|} r_λ(y)`, free of underflow for large `√λ|y|`.
pub fn resolvent_kernel_scaled(lambda: f64, r: f64, d: usize) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(invalid(format!("|y| must be finite and nonnegative, got {r}")));
    }
    Ok(0.5 * half_laplacian_scaled(0.5 * lambda, r, d)?)
}

/// Scan grid for [`resolvent_lower_bound_witness`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessWindow {
    pub lambda_max: f64,
    pub y_max: f64,
    pub lambda_points: usize,
    pub y_points: usize,
}

impl Default for WitnessWindow {
    fn default() -> Self {
        Self {
            lambda_max: 100.0,
            y_max: 50.0,
            lambda_points: 60,
            y_points: 200,
        }
    }
}

/// Witness `(ρ, c)` for `r_λ(y) ≥ c e^{−(1+ε)√λ|y|}` on `λ ∈ [1, λ_max]`,
/// `|y| ∈ [ρ, y_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventWitness {
    pub epsilon: f64,
    pub dimension: usize,
    pub rho: f64,
    pub c: f64,
    /// `(λ, |y|)` where the minimum ratio was attained.
    pub argmin: (f64, f64),
    pub points_checked: usize,
    pub holds: bool,
    pub window: WitnessWindow,
}

/// Largest deviation `|√(2r/π) K_ν(r) e^r − 1|` accepted when choosing ρ.
const ASYMPTOTIC_SLACK: f64 = 0.5;

pub fn resolvent_lower_bound_witness(
    epsilon: f64,
    d: usize,
    window: WitnessWindow,
) -> Result<ResolventWitness> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    if d == 0 {
        return Err(invalid("dimension must be positive"));
    }
    if !(window.lambda_max >= 1.0 && window.y_max > 0.0)
        || window.lambda_points < 2
        || window.y_points < 2
    {
        return Err(invalid("witness window needs λ_max ≥ 1, y_max > 0 and ≥ 2 points per axis"));
    }
    let order = 0.5 * d as f64 - 1.0;

    // ρ: past the last argument where the Bessel asymptotic is off by more
    // than the slack (λ ≥ 1, so the argument √λ|y| ≥ |y|).
    let z_max = window.lambda_max.sqrt() * window.y_max;
    let samples = 4000;
    let mut rho = 1.0f64;
    for i in (1..=samples).rev() {
        let z = z_max * i as f64 / samples as f64;
        let ratio = (2.0 * z / PI).sqrt() * bessel_k_scaled(order, z)?;
        if (ratio - 1.0).abs() > ASYMPTOTIC_SLACK {
            rho = rho.max(z * (1.0 + 1.0 / samples as f64));
            break;
        }
    }
    if rho >= window.y_max {
        return Err(invalid(format!(
            "y_max = {} does not reach past ρ = {rho}",
            window.y_max
        )));
    }

    let mut c = f64::INFINITY;
    let mut argmin = (1.0, rho);
    let mut checked = 0;
    for i in 0..window.lambda_points {
        let lambda = (window.lambda_max.ln() * i as f64 / (window.lambda_points - 1) as f64).exp();
        for j in 0..window.y_points {
            let r = rho + (window.y_max - rho) * j as f64 / (window.y_points - 1) as f64;
            let scaled = resolvent_kernel_scaled(lambda, r, d)?;
            let ratio = scaled * (epsilon * lambda.sqrt() * r).exp();
            checked += 1;
            if ratio < c {
                c = ratio;
                argmin = (lambda, r);
            }
        }
    }
    Ok(ResolventWitness {
        epsilon,
        dimension: d,
        rho,
        c,
        argmin,
        points_checked: checked,
        holds: c > 0.0 && c.is_finite(),
        window,
    })
}

/// Inputs of the Dirichlet-ball heat-kernel lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletBallBoundQuery {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub r: f64,
    pub mu0: f64,
    pub c: f64,
}

/// `c [1 ∧ (r−|x|)(r−|y|)/t] / (1 ∧ r²/t)^{(d+2)/2} · e^{−μ₀ t/r²} g_t(x,y)`.
pub fn dirichlet_ball_lower_bound(q: &DirichletBallBoundQuery) -> Result<f64> {
    if q.x.len() != q.y.len() {
        return Err(Error::DimensionMismatch {
            expected: q.x.len(),
            got: q.y.len(),
        });
    }
    if !(q.t > 0.0 && q.r > 0.0 && q.mu0 > 0.0) {
        return Err(invalid("t, r and μ₀ must be positive"));
    }
    if !(q.c > 0.0 && q.c <= 1.0) {
        return Err(invalid(format!("c must lie in (0, 1], got {}", q.c)));
    }
    let (nx, ny) = (norm(&q.x), norm(&q.y));
    if nx > q.r || ny > q.r {
        return Err(invalid(format!(
            "points must lie in the ball of radius {} (|x| = {nx}, |y| = {ny})",
            q.r
        )));
    }
    let d = q.x.len() as f64;
    let boundary = ((q.r - nx) * (q.r - ny) / q.t).min(1.0);
    let scale = (q.r * q.r / q.t).min(1.0).powf(0.5 * (d + 2.0));
    Ok(q.c * boundary / scale * (-q.mu0 * q.t / (q.r * q.r)).exp() * gauss_kernel(q.t, &q.x, &q.y)?)
}

/// Principal eigenvalue of the Dirichlet Laplacian on the unit ball of
/// `ℝ^d`: the squared first zero of `J_{d/2−1}`.
pub fn principal_dirichlet_eigenvalue(d: usize) -> Result<f64> {
    match d {
        0 => Err(invalid("dimension must be positive")),
        1 => Ok(0.25 * PI * PI),
        3 => Ok(PI * PI),
        _ if d <= 20 => {
            let j = bessel_j_first_zero(0.5 * d as f64 - 1.0)?;
            Ok(j * j)
        }
        _ => Err(invalid(format!("dimension {d} beyond the supported range"))),
    }
}

/// Dirichlet heat kernel of `Δ` on the interval `(−r, r)` by its
/// eigenfunction expansion.
pub fn interval_dirichlet_heat_kernel(t: f64, x: f64, y: f64, r: f64) -> Result<f64> {
    if !(t > 0.0 && r > 0.0) {
        return Err(invalid("t and r must be positive"));
    }
    if x.abs() > r || y.abs() > r {
        return Err(invalid("points must lie in the interval"));
    }
    let width = 2.0 * r;
    let mut sum = 0.0;
    let mut k = 1u32;
    loop {
        let kf = k as f64;
        let freq = kf * PI / width;
        let decay = (-freq * freq * t).exp();
        sum += decay * (freq * (x + r)).sin() * (freq * (y + r)).sin();
        if decay < 1e-18 * sum.abs().max(1e-300) || k > 100_000 {
            break;
        }
        k += 1;
    }
    Ok(sum * 2.0 / width)
}

/// Largest constant `c` for which the ball bound holds against the exact
/// interval kernel at every sample `(t, x, y)` (one dimension).
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletFit {
    pub c: f64,
    pub worst: (f64, f64, f64),
    pub samples: usize,
}

pub fn fit_dirichlet_constant(samples: &[(f64, f64, f64)], r: f64) -> Result<DirichletFit> {
    if samples.is_empty() {
        return Err(invalid("no samples"));
    }
    let mu0 = principal_dirichlet_eigenvalue(1)?;
    let mut c = f64::INFINITY;
    let mut worst = samples[0];
    for &(t, x, y) in samples {
        let bound = dirichlet_ball_lower_bound(&DirichletBallBoundQuery {
            t,
            x: alloc::vec![x],
            y: alloc::vec![y],
            r,
            mu0,
            c: 1.0,
        })?;
        if bound == 0.0 {
            continue;
        }
        let exact = interval_dirichlet_heat_kernel(t, x, y, r)?;
        let ratio = exact / bound;
        if ratio < c {
            c = ratio;
            worst = (t, x, y);
        }
    }
    Ok(DirichletFit {
        c,
        worst,
        samples: samples.len(),
    })
}

/// Surface area of the unit sphere in `ℝ^d`.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(0.5 * d as f64) * rgamma(0.5 * d as f64)
}
