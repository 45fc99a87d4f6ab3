//! Monte Carlo for the Schrödinger semigroup kernel `u_t(x, y)` and for
//! exit-time Laplace transforms, with the two kernel sandwich checks.
//!
//! The driving process has generator `Δ`, so each coordinate has variance
//! `2s` at time `s` and the free transition density is the Gauss–Weierstrass
//! kernel. Paths are simulated in batches; batch `k` draws from its own
//! ChaCha stream keyed by `(seed, k)` and batches are reduced in index order,
//! which makes every estimate a pure function of its inputs.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::kernels::{gauss_kernel, principal_dirichlet_eigenvalue};
use crate::linalg::norm;
use crate::potentials::{
    profile_inf, profile_sup, PotentialKind, PotentialSpec, ProfileShape,
};

/// Samples per batch; each batch owns one random stream.
const BATCH: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathScheme {
    /// Brownian bridge pinned at both ends; the free kernel factors out.
    Bridge,
    /// Forward paths from `x`, weighted by the exact last-step density at `y`.
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSamplerConfig {
    pub paths: usize,
    pub steps: usize,
    pub seed: u64,
    pub scheme: PathScheme,
    pub antithetic: bool,
}

impl Default for PathSamplerConfig {
    fn default() -> Self {
        Self {
            paths: 100_000,
            steps: 200,
            seed: 0x5eed,
            scheme: PathScheme::Bridge,
            antithetic: true,
        }
    }
}

impl PathSamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths < 100 {
            return Err(invalid(format!("need at least 100 paths, got {}", self.paths)));
        }
        if self.steps < 10 {
            return Err(invalid(format!("need at least 10 time steps, got {}", self.steps)));
        }
        Ok(())
    }

    /// Independent samples: antithetic pairs count once.
    fn samples(&self) -> usize {
        if self.antithetic {
            self.paths / 2
        } else {
            self.paths
        }
    }
}

/// Streaming mean and second moment (Chan et al. merge).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1.0;
        let d = v - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (v - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0.0 {
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n / n;
        self.m2 += other.m2 + d * d * self.n * other.n / n;
        self.n = n;
    }

    fn stderr(&self) -> f64 {
        if self.n < 2.0 {
            return f64::INFINITY;
        }
        (self.m2 / (self.n - 1.0) / self.n).sqrt()
    }
}

#[derive(Debug, Clone, Copy)]
struct Summary {
    all: Moments,
    halves: [Moments; 2],
}

/// Runs `sample(rng, sign)` over the configured number of samples; the
/// path's Gaussian increments are `sign` times the draws from `rng`. With
/// antithetic pairs the sample is the average of the `+1` and `−1` paths on
/// the same draws, and the stream resumes after the longer of the two.
fn monte_carlo<F: FnMut(&mut ChaCha8Rng, f64) -> f64>(cfg: &PathSamplerConfig, mut sample: F) -> Summary {
    let antithetic = cfg.antithetic;
    batched(cfg, |rng| {
        if antithetic {
            let mut mirror = rng.clone();
            let plus = sample(rng, 1.0);
            let minus = sample(&mut mirror, -1.0);
            if mirror.get_word_pos() > rng.get_word_pos() {
                *rng = mirror;
            }
            0.5 * (plus + minus)
        } else {
            sample(rng, 1.0)
        }
    })
}

/// [`monte_carlo`] for paths that always use `count` draws: they are taken
/// once into a buffer and `path(draws, sign)` replays them, so an
/// antithetic pair costs one set of draws. Results match [`monte_carlo`]
/// bit for bit.
fn monte_carlo_fixed<F: FnMut(&[f64], f64) -> f64>(cfg: &PathSamplerConfig, count: usize, mut path: F) -> Summary {
    let antithetic = cfg.antithetic;
    let mut draws = vec![0.0; count];
    batched(cfg, |rng| {
        for w in draws.iter_mut() {
            *w = normal(rng);
        }
        if antithetic {
            0.5 * (path(&draws, 1.0) + path(&draws, -1.0))
        } else {
            path(&draws, 1.0)
        }
    })
}

/// Splits the samples into batches of [`BATCH`], each with its own ChaCha8
/// stream `(seed, batch)`, and accumulates `next(rng)`.
fn batched<F: FnMut(&mut ChaCha8Rng) -> f64>(cfg: &PathSamplerConfig, mut next: F) -> Summary {
    let total = cfg.samples();
    let batches = total.div_ceil(BATCH);
    let mut all = Moments::default();
    let mut halves = [Moments::default(); 2];
    for b in 0..batches {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(b as u64);
        let mut local = Moments::default();
        let mut local_halves = [Moments::default(); 2];
        let start = b * BATCH;
        for k in start..(start + BATCH).min(total) {
            let v = next(&mut rng);
            local.push(v);
            local_halves[usize::from(2 * k >= total)].push(v);
        }
        all.merge(&local);
        halves[0].merge(&local_halves[0]);
        halves[1].merge(&local_halves[1]);
    }
    Summary { all, halves }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Monte Carlo (or exact) value of `u_t(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelEstimate {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub mean: f64,
    pub stderr: f64,
    pub paths: usize,
    pub steps: usize,
    /// `g_t(x, y)`
    pub free: f64,
    /// Estimates from the first and second half of the samples.
    pub half_means: [f64; 2],
    /// `stderr / mean > 0.5`
    pub low_precision: bool,
}

impl KernelEstimate {
    pub fn ratio_to_free(&self) -> f64 {
        self.mean / self.free
    }

    fn exact(t: f64, x: &[f64], y: &[f64], value: f64) -> Result<Self> {
        Ok(Self {
            t,
            x: x.to_vec(),
            y: y.to_vec(),
            mean: value,
            stderr: 0.0,
            paths: 0,
            steps: 0,
            free: gauss_kernel(t, x, y)?,
            half_means: [value; 2],
            low_precision: false,
        })
    }
}

/// Anything that can produce `u_t(x, y)` for a potential.
pub trait KernelSource {
    fn kernel(&self, potential: &PotentialSpec, t: f64, x: &[f64], y: &[f64]) -> Result<KernelEstimate>;
}

/// Feynman–Kac Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloKernel {
    pub config: PathSamplerConfig,
}

impl KernelSource for MonteCarloKernel {
    fn kernel(&self, potential: &PotentialSpec, t: f64, x: &[f64], y: &[f64]) -> Result<KernelEstimate> {
        fk_kernel_estimate(potential, t, x, y, &self.config)
    }
}

/// Closed-form kernel for quadratic potentials `c + Σ ω_i² z_i²`
/// (Mehler's formula per axis). Other potentials are rejected.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HarmonicKernel;

impl KernelSource for HarmonicKernel {
    fn kernel(&self, potential: &PotentialSpec, t: f64, x: &[f64], y: &[f64]) -> Result<KernelEstimate> {
        let value = mehler_kernel(potential, t, x, y)?;
        KernelEstimate::exact(t, x, y, value)
    }
}

/// Per-axis `ω²` and constant shift of a quadratic potential.
fn quadratic_form(kind: &PotentialKind, d: usize) -> Option<(Vec<f64>, f64)> {
    match kind {
        PotentialKind::Radial(p) => match p.shape {
            ProfileShape::Power {
                coefficient,
                exponent: 2.0,
            } => Some((vec![coefficient; d], p.offset)),
            ProfileShape::Flat => Some((vec![0.0; d], p.offset)),
            _ => None,
        },
        PotentialKind::Anisotropic { weights } => Some((weights.clone(), 0.0)),
        PotentialKind::ConstantPlus { constant, base } => match base {
            None => Some((vec![0.0; d], *constant)),
            Some(b) => quadratic_form(b, d).map(|(w, c)| (w, c + constant)),
        },
        PotentialKind::Table(_) => None,
    }
}

/// `u_t(x, y)` for `−Δ + c + Σ ω_i² z_i²`.
pub fn mehler_kernel(potential: &PotentialSpec, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(invalid(format!("time must be positive, got {t}")));
    }
    let d = potential.dimension();
    if x.len() != d || y.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: if x.len() != d { x.len() } else { y.len() },
        });
    }
    let (omega2, shift) = quadratic_form(potential.kind(), d)
        .ok_or_else(|| invalid("closed-form kernel needs a quadratic potential"))?;
    let mut value = (-shift * t).exp();
    for i in 0..d {
        let w = omega2[i].sqrt();
        value *= if w == 0.0 {
            (4.0 * PI * t).powf(-0.5) * (-(x[i] - y[i]).powi(2) / (4.0 * t)).exp()
        } else {
            let s = (2.0 * w * t).sinh();
            let c = (2.0 * w * t).cosh();
            (w / (2.0 * PI * s)).sqrt()
                * (-w * ((x[i] * x[i] + y[i] * y[i]) * c - 2.0 * x[i] * y[i]) / (2.0 * s)).exp()
        };
    }
    Ok(value)
}

/// Feynman–Kac estimate of `u_t(x, y)` with `m` midpoint-rule steps.
pub fn fk_kernel_estimate(
    potential: &PotentialSpec,
    t: f64,
    x: &[f64],
    y: &[f64],
    cfg: &PathSamplerConfig,
) -> Result<KernelEstimate> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!("time must be positive, got {t}")));
    }
    cfg.validate()?;
    let d = potential.dimension();
    if x.len() != d || y.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: if x.len() != d { x.len() } else { y.len() },
        });
    }
    // Surface table-box violations at the endpoints before sampling.
    potential.eval(x)?;
    potential.eval(y)?;
    let m = cfg.steps;
    let dt = t / m as f64;
    let free = gauss_kernel(t, x, y)?;
    let mut z = vec![0.0; d];
    let summary = match cfg.scheme {
        PathScheme::Bridge => {
            // Bridge drift fraction and spread for each step; they depend
            // only on the step index.
            let mut coef = Vec::with_capacity(m);
            let mut s = 0.0;
            for k in 0..m {
                let s_next = (k as f64 + 0.5) * dt;
                let frac = (s_next - s) / (t - s);
                let sd = (2.0 * (s_next - s) * (t - s_next) / (t - s)).sqrt();
                coef.push((frac, sd));
                s = s_next;
            }
            monte_carlo_fixed(cfg, m * d, |draws, sign| {
                z.copy_from_slice(x);
                let mut action = 0.0;
                for (&(frac, sd), w) in coef.iter().zip(draws.chunks_exact(d)) {
                    for i in 0..d {
                        z[i] += frac * (y[i] - z[i]) + sign * sd * w[i];
                    }
                    action += potential.eval_unchecked(&z);
                }
                (-action * dt).exp()
            })
        }
        PathScheme::Forward => {
            let sd = (2.0 * dt).sqrt();
            let ends = 0.5 * (potential.eval_unchecked(x) + potential.eval_unchecked(y));
            monte_carlo_fixed(cfg, (m - 1) * d, |draws, sign| {
                z.copy_from_slice(x);
                let mut action = ends;
                for w in draws.chunks_exact(d) {
                    for (zi, wi) in z.iter_mut().zip(w) {
                        *zi += sign * sd * wi;
                    }
                    action += potential.eval_unchecked(&z);
                }
                let last = gauss_kernel(dt, &z, y).unwrap_or(0.0);
                (-action * dt).exp() * last
            })
        }
    };
    let factor = match cfg.scheme {
        PathScheme::Bridge => free,
        PathScheme::Forward => 1.0,
    };
    let mean = factor * summary.all.mean;
    let stderr = factor * summary.all.stderr();
    Ok(KernelEstimate {
        t,
        x: x.to_vec(),
        y: y.to_vec(),
        mean,
        stderr,
        paths: cfg.paths,
        steps: m,
        free,
        half_means: [factor * summary.halves[0].mean, factor * summary.halves[1].mean],
        low_precision: !(stderr <= 0.5 * mean),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Converged<T> {
    pub value: T,
    pub steps: usize,
    /// False when the step budget ran out before the shift criterion held.
    pub converged: bool,
}

/// Doubles the number of time steps until the estimate moves by less than
/// one combined standard error, at most `max_doublings` times.
pub fn fk_kernel_converged(
    potential: &PotentialSpec,
    t: f64,
    x: &[f64],
    y: &[f64],
    cfg: &PathSamplerConfig,
    max_doublings: usize,
) -> Result<Converged<KernelEstimate>> {
    let mut current = fk_kernel_estimate(potential, t, x, y, cfg)?;
    let mut c = *cfg;
    for _ in 0..max_doublings {
        c.steps *= 2;
        let next = fk_kernel_estimate(potential, t, x, y, &c)?;
        let shift = (next.mean - current.mean).abs();
        let tol = current.stderr.hypot(next.stderr);
        current = next;
        if shift < tol {
            return Ok(Converged {
                value: current,
                steps: c.steps,
                converged: true,
            });
        }
    }
    Ok(Converged {
        steps: c.steps,
        value: current,
        converged: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitTimeEstimate {
    pub lambda: f64,
    pub radius: f64,
    pub mean: f64,
    pub stderr: f64,
    pub steps_per_unit: usize,
    /// Time step, `r²/m`.
    pub dt: f64,
}

/// `E₀[exp(−λ τ)]` for the exit time of `B_r(0)`.
///
/// Steps have variance `2Δt` per coordinate with `Δt = r²/m`. Within a
/// step that stays inside, the path still leaves with the bridge hitting
/// probability `exp(−d₀d₁/Δt)` (distances to the sphere at both ends);
/// this is applied as a survival weight instead of a coin flip. Exits are
/// dated at mid-step.
pub fn exit_time_laplace(lambda: f64, r: f64, d: usize, cfg: &PathSamplerConfig) -> Result<ExitTimeEstimate> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("λ must be positive, got {lambda}")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid(format!("radius must be positive, got {r}")));
    }
    if d == 0 {
        return Err(invalid("dimension must be positive"));
    }
    cfg.validate()?;
    let mu0 = principal_dirichlet_eigenvalue(d)?;
    let dt = r * r / cfg.steps as f64;
    // Beyond this horizon both the discount and the survival are below e^−40.
    let horizon = (40.0 / lambda).min(40.0 * r * r / mu0);
    let max_steps = (horizon / dt).ceil() as usize;
    let sd = (2.0 * dt).sqrt();
    let decay = (-lambda * dt).exp();
    let mut z = vec![0.0; d];
    let summary = monte_carlo(cfg, |rng, sign| {
        z.iter_mut().for_each(|v| *v = 0.0);
        let mut survival = 1.0;
        let mut discount = (-0.5 * lambda * dt).exp();
        let mut value = 0.0;
        for _ in 0..max_steps {
            let d0 = r - norm(&z);
            for zi in z.iter_mut() {
                *zi += sign * sd * normal(rng);
            }
            let d1 = r - norm(&z);
            if d1 <= 0.0 {
                value += survival * discount;
                return value;
            }
            let hit = (-d0 * d1 / dt).exp();
            value += survival * hit * discount;
            survival *= 1.0 - hit;
            discount *= decay;
            if survival * discount < 1e-16 {
                break;
            }
        }
        value
    });
    Ok(ExitTimeEstimate {
        lambda,
        radius: r,
        mean: summary.all.mean,
        stderr: summary.all.stderr(),
        steps_per_unit: cfg.steps,
        dt,
    })
}

/// Exit-time estimate with the discretization bias check: the step is
/// halved until the estimate moves by at most two combined standard
/// errors.
pub fn exit_time_laplace_converged(
    lambda: f64,
    r: f64,
    d: usize,
    cfg: &PathSamplerConfig,
    max_halvings: usize,
) -> Result<Converged<ExitTimeEstimate>> {
    let mut current = exit_time_laplace(lambda, r, d, cfg)?;
    let mut c = *cfg;
    for _ in 0..max_halvings {
        c.steps *= 2;
        let next = exit_time_laplace(lambda, r, d, &c)?;
        let biased = (next.mean - current.mean).abs() > 2.0 * current.stderr.hypot(next.stderr);
        current = next;
        if !biased {
            return Ok(Converged {
                value: current,
                steps: c.steps,
                converged: true,
            });
        }
    }
    Ok(Converged {
        steps: c.steps,
        value: current,
        converged: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Lower => "lower",
            Side::Upper => "upper",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
}

impl SandwichSample {
    pub fn new(x: Vec<f64>, y: Vec<f64>, t: f64) -> Self {
        Self { x, y, t }
    }
}

/// One evaluated sample of a sandwich check.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichPoint {
    pub sample: SandwichSample,
    pub estimate: f64,
    pub stderr: f64,
    /// The envelope without its constant.
    pub envelope: f64,
    /// `estimate / envelope`
    pub ratio: f64,
    /// Ratios of the two half-sample estimates.
    pub half_ratios: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichCheckResult {
    pub side: Side,
    pub epsilon: f64,
    pub delta: f64,
    /// `c₁` (lower, a minimum) or `c` (upper, a maximum) of the ratios.
    pub fitted: f64,
    /// The same fit pushed three standard errors toward failure.
    pub fitted_conservative: f64,
    pub points: Vec<SandwichPoint>,
    pub violations: Vec<String>,
    pub rejected: Vec<(SandwichSample, String)>,
    /// Largest `3·stderr / envelope` among the points.
    pub stderr_budget: f64,
    /// Lower side: the `ρ₁` radius used for admission.
    pub radius: Option<f64>,
    /// Upper side: the Hölder exponent `a = b/(b−1)`.
    pub a: Option<f64>,
    pub pass: bool,
    pub notes: Vec<String>,
}

/// Smallest `R > 2` with `μ₀/(R+δ)² + 1/δ² ≤ ε V^δ(R e₁)`; `V^δ` depends
/// on `|x|` only and grows with it, so the inequality then holds beyond `R`.
pub fn lower_sandwich_radius(potential: &PotentialSpec, epsilon: f64, delta: f64) -> Result<f64> {
    let d = potential.dimension();
    let mu0 = principal_dirichlet_eigenvalue(d)?;
    let holds = |r: f64| -> Result<bool> {
        let mut x = vec![0.0; d];
        x[0] = r;
        let w = profile_sup(potential, &x, delta)?.value;
        Ok(mu0 / ((r + delta) * (r + delta)) + 1.0 / (delta * delta) <= epsilon * w)
    };
    let mut lo = 2.0;
    if holds(lo)? {
        return Ok(lo);
    }
    let mut hi = lo;
    loop {
        hi *= 1.25;
        if hi > 1e6 {
            return Err(invalid(format!(
                "no radius up to 1e6 satisfies the lower-sandwich size condition for ε = {epsilon}, δ = {delta}"
            )));
        }
        if holds(hi)? {
            break;
        }
        lo = hi;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if holds(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Lower sandwich `u_t(x,y) ≥ c₁ e^{−(1+ε)V^δ(x)t} g_t(x,y)` for `y` in the
/// unit ball and `|x| ≥ ρ₁`.
pub fn check_lower_sandwich<S: KernelSource>(
    potential: &PotentialSpec,
    epsilon: f64,
    delta: f64,
    samples: &[SandwichSample],
    source: &S,
) -> Result<SandwichCheckResult> {
    if !(epsilon > 0.0) {
        return Err(invalid(format!("ε must be positive, got {epsilon}")));
    }
    if !(delta > 0.0) {
        return Err(invalid(format!("δ must be positive, got {delta}")));
    }
    let mut notes = Vec::new();
    let radius = if potential.is_confining() {
        Some(lower_sandwich_radius(potential, epsilon, delta)?)
    } else {
        notes.push(String::from(
            "potential is not confining; the size condition on |x| does not apply",
        ));
        None
    };
    let mut rejected = Vec::new();
    let mut points = Vec::new();
    for s in samples {
        if norm(&s.y) >= 1.0 {
            rejected.push((s.clone(), format!("|y| = {} is not inside the unit ball", norm(&s.y))));
            continue;
        }
        if let Some(r1) = radius {
            if norm(&s.x) < r1 {
                rejected.push((s.clone(), format!("|x| = {} is below ρ₁ = {r1:.4}", norm(&s.x))));
                continue;
            }
        }
        let w = profile_sup(potential, &s.x, delta)?.value;
        let est = source.kernel(potential, s.t, &s.x, &s.y)?;
        let envelope = (-(1.0 + epsilon) * w * s.t).exp() * est.free;
        points.push(point(s, &est, envelope));
    }
    finish_sandwich(Side::Lower, epsilon, delta, points, rejected, radius, None, notes)
}

/// Upper sandwich `u_t(x,y) ≤ c e^{−min(V_δ(x)t/a, (1−ε)δ√V_δ(x)|x|)} g_{at}(x,y)`
/// with `a = b/(b−1)`; requires `(1−ε)√b < 1`.
pub fn check_upper_sandwich<S: KernelSource>(
    potential: &PotentialSpec,
    epsilon: f64,
    delta: f64,
    b: f64,
    samples: &[SandwichSample],
    source: &S,
) -> Result<SandwichCheckResult> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid(format!("ε must lie in (0,1), got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("δ must lie in (0,1), got {delta}")));
    }
    if !(b > 1.0) || (1.0 - epsilon) * b.sqrt() >= 1.0 {
        return Err(invalid(format!(
            "Hölder exponent b = {b} needs b > 1 and (1−ε)√b < 1 (ε = {epsilon})"
        )));
    }
    let a = b / (b - 1.0);
    let mut rejected = Vec::new();
    let mut points = Vec::new();
    for s in samples {
        let rx = norm(&s.x);
        if rx == 0.0 {
            rejected.push((s.clone(), String::from("x = 0 has no lower profile")));
            continue;
        }
        let w = profile_inf(potential, &s.x, delta)?.value;
        let est = source.kernel(potential, s.t, &s.x, &s.y)?;
        let exponent = (w * s.t / a).min((1.0 - epsilon) * delta * w.sqrt() * rx);
        let envelope = (-exponent).exp() * gauss_kernel(a * s.t, &s.x, &s.y)?;
        points.push(point(s, &est, envelope));
    }
    finish_sandwich(Side::Upper, epsilon, delta, points, rejected, None, Some(a), Vec::new())
}

fn point(s: &SandwichSample, est: &KernelEstimate, envelope: f64) -> SandwichPoint {
    SandwichPoint {
        sample: s.clone(),
        estimate: est.mean,
        stderr: est.stderr,
        envelope,
        ratio: est.mean / envelope,
        half_ratios: [est.half_means[0] / envelope, est.half_means[1] / envelope],
    }
}

#[allow(clippy::too_many_arguments)]
fn finish_sandwich(
    side: Side,
    epsilon: f64,
    delta: f64,
    points: Vec<SandwichPoint>,
    rejected: Vec<(SandwichSample, String)>,
    radius: Option<f64>,
    a: Option<f64>,
    mut notes: Vec<String>,
) -> Result<SandwichCheckResult> {
    if points.is_empty() {
        return Err(Error::Configuration(String::from(
            "no admissible samples for the sandwich check",
        )));
    }
    let mut violations = Vec::new();
    let mut budget = 0.0f64;
    for p in &points {
        let margin = 3.0 * p.stderr;
        budget = budget.max(margin / p.envelope);
        let bad = match side {
            Side::Lower => !(p.estimate + margin > 0.0) || !p.envelope.is_finite(),
            Side::Upper => !(p.estimate - margin).is_finite() || !(p.envelope > 0.0),
        };
        if bad {
            violations.push(format!(
                "t = {}, x = {:?}, y = {:?}: estimate {:e} ± {:e} against envelope {:e}",
                p.sample.t, p.sample.x, p.sample.y, p.estimate, margin, p.envelope
            ));
        }
    }
    let (fitted, conservative, halves) = match side {
        Side::Lower => (
            points.iter().map(|p| p.ratio).fold(f64::INFINITY, f64::min),
            points
                .iter()
                .map(|p| (p.estimate - 3.0 * p.stderr) / p.envelope)
                .fold(f64::INFINITY, f64::min),
            [0, 1].map(|h| points.iter().map(|p| p.half_ratios[h]).fold(f64::INFINITY, f64::min)),
        ),
        Side::Upper => (
            points.iter().map(|p| p.ratio).fold(0.0, f64::max),
            points
                .iter()
                .map(|p| (p.estimate + 3.0 * p.stderr) / p.envelope)
                .fold(0.0, f64::max),
            [0, 1].map(|h| points.iter().map(|p| p.half_ratios[h]).fold(0.0, f64::max)),
        ),
    };
    // Refining the sample (first half versus all of it) must not move the
    // fitted constant by more than a factor of two.
    let stable = halves
        .iter()
        .all(|h| *h > 0.0 && h.is_finite() && (h / fitted).max(fitted / h) <= 2.0);
    if !stable {
        notes.push(format!(
            "fitted constant {fitted:e} is unstable across half samples {halves:?}"
        ));
    }
    let pass = violations.is_empty()
        && stable
        && match side {
            Side::Lower => fitted > 0.0,
            Side::Upper => fitted.is_finite(),
        };
    Ok(SandwichCheckResult {
        side,
        epsilon,
        delta,
        fitted,
        fitted_conservative: conservative,
        points,
        violations,
        rejected,
        stderr_budget: budget,
        radius,
        a,
        pass,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(paths: usize, steps: usize) -> PathSamplerConfig {
        PathSamplerConfig {
            paths,
            steps,
            ..PathSamplerConfig::default()
        }
    }

    #[test]
    fn buffered_draws_match_streamed_draws() {
        let (steps, d) = (7, 2);
        let path = |draws: &mut dyn FnMut() -> f64, sign: f64| {
            let mut acc = 0.0;
            for k in 0..steps * d {
                acc += (sign * draws() + 0.1 * k as f64).powi(2);
            }
            (-acc / 50.0).exp()
        };
        for antithetic in [false, true] {
            let c = PathSamplerConfig {
                antithetic,
                ..cfg(300, steps)
            };
            let streamed = monte_carlo(&c, |rng, sign| path(&mut || normal(rng), sign));
            let buffered = monte_carlo_fixed(&c, steps * d, |w, sign| {
                let mut it = w.iter();
                path(&mut || *it.next().unwrap(), sign)
            });
            assert_eq!(streamed.all.mean.to_bits(), buffered.all.mean.to_bits());
            assert_eq!(streamed.all.m2.to_bits(), buffered.all.m2.to_bits());
        }
    }

    #[test]
    fn free_and_constant_potentials() {
        let zero = PotentialSpec::constant(0.0, 1).unwrap();
        let est = fk_kernel_estimate(&zero, 1.0, &[0.3], &[-0.2], &cfg(1000, 20)).unwrap();
        assert_eq!(est.ratio_to_free(), 1.0);
        assert_eq!(est.stderr, 0.0);
        let three = PotentialSpec::constant(3.0, 1).unwrap();
        let est = fk_kernel_estimate(&three, 0.5, &[0.0], &[1.0], &cfg(1000, 20)).unwrap();
        assert!((est.ratio_to_free() - (-1.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let v = PotentialSpec::power(1.0, 1).unwrap();
        assert!(fk_kernel_estimate(&v, 0.0, &[0.0], &[0.0], &cfg(1000, 20)).is_err());
        assert!(fk_kernel_estimate(&v, 1.0, &[0.0], &[0.0], &cfg(50, 20)).is_err());
        assert!(fk_kernel_estimate(&v, 1.0, &[0.0, 1.0], &[0.0], &cfg(1000, 20)).is_err());
    }

    #[test]
    fn reproducible() {
        let v = PotentialSpec::power(1.0, 2).unwrap();
        let c = cfg(3000, 30);
        let a = fk_kernel_estimate(&v, 0.7, &[0.5, 0.0], &[0.0, 0.5], &c).unwrap();
        let b = fk_kernel_estimate(&v, 0.7, &[0.5, 0.0], &[0.0, 0.5], &c).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mehler_reference_value() {
        let v = PotentialSpec::power(1.0, 1).unwrap();
        let u = mehler_kernel(&v, 0.5, &[0.0], &[0.0]).unwrap();
        assert!((u - (2.0 * PI * 1f64.sinh()).powf(-0.5)).abs() < 1e-15);
        assert!((u - 0.3680).abs() < 5e-5);
        let shifted = PotentialSpec::shifted(v, 2.0).unwrap();
        let us = mehler_kernel(&shifted, 0.5, &[0.0], &[0.0]).unwrap();
        assert!((us - u * (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn harmonic_monte_carlo_near_mehler() {
        let v = PotentialSpec::power(1.0, 1).unwrap();
        let est = fk_kernel_estimate(&v, 0.5, &[0.0], &[0.0], &cfg(20_000, 100)).unwrap();
        let exact = mehler_kernel(&v, 0.5, &[0.0], &[0.0]).unwrap();
        assert!((est.mean - exact).abs() < 4.0 * est.stderr + 1e-4, "{est:?} vs {exact}");
    }

    #[test]
    fn exit_time_small_lambda_tends_to_one() {
        let e = exit_time_laplace(1e-6, 1.0, 1, &cfg(2000, 100)).unwrap();
        assert!((e.mean - 1.0).abs() < 1e-4, "{e:?}");
    }

    #[test]
    fn sandwich_examples() {
        let v = PotentialSpec::power(1.0, 1).unwrap();
        let samples: Vec<_> = [3.0, 4.0]
            .iter()
            .flat_map(|&x| [0.1, 0.5, 1.0].map(move |t| SandwichSample::new(vec![x], vec![0.0], t)))
            .collect();
        let lower = check_lower_sandwich(&v, 0.5, 0.5, &samples, &HarmonicKernel).unwrap();
        assert!(lower.pass && lower.fitted > 0.0, "{lower:?}");
        assert!(lower.rejected.is_empty());

        let zero = PotentialSpec::constant(0.0, 1).unwrap();
        let lower = check_lower_sandwich(&zero, 0.1, 0.5, &samples, &HarmonicKernel).unwrap();
        assert!((lower.fitted - 1.0).abs() < 1e-12);

        let upper = check_upper_sandwich(
            &v,
            0.5,
            0.5,
            2.0,
            &[SandwichSample::new(vec![3.0], vec![0.0], 0.5)],
            &HarmonicKernel,
        )
        .unwrap();
        assert!(upper.pass && upper.fitted.is_finite());
        assert_eq!(upper.a, Some(2.0));

        // (1 − 0.1)√2 > 1
        assert!(check_upper_sandwich(&v, 0.1, 0.5, 2.0, &samples, &HarmonicKernel).is_err());
    }

    #[test]
    fn lower_radius_for_harmonic() {
        let v = PotentialSpec::power(1.0, 1).unwrap();
        let r = lower_sandwich_radius(&v, 0.5, 0.5).unwrap();
        // (r+δ)² solves μ₀/s + 4 = s/2.
        let mu0 = PI * PI / 4.0;
        let s = 4.0 + (16.0 + 2.0 * mu0).sqrt();
        assert!((r - (s.sqrt() - 0.5)).abs() < 1e-9, "{r}");
    }
}
