//! Windowed checks of the two-sided decay envelopes, the decay-ratio
//! profile, the power-law sharpness check and the report that ties them
//! together.
//!
//! Every assertion quantifies over the tail window of a computed ground
//! state: nodes on a fixed set of rays where `φ₀` lies between a floor and
//! `10⁻³·max φ₀`. Constants are always fitted on the window, never assumed.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::feynman_kac::Side;
use crate::linalg::norm;
use crate::potentials::{
    check_condition_one, check_condition_two, profile_inf, profile_sup, ConditionOneVerdict,
    ConditionTwoVerdict, PotentialSpec, ProfileShape, ScanWindow,
};
use crate::spectral::{solve_ground_state, GridSpec, GroundState, SolverOptions};

/// Upper edge of the tail window relative to `max φ₀`.
pub const WINDOW_CAP: f64 = 1e-3;
/// Lower edge of the tail window relative to `max φ₀`.
pub const WINDOW_FLOOR: f64 = 1e-12;
/// Largest factor by which a fitted constant may degrade between the inner
/// and outer half of the window.
pub const STABILITY_FACTOR: f64 = 2.0;
/// Relative slack for window violations, covering solver error in `φ₀`.
pub const VIOLATION_SLACK: f64 = 1e-6;
const MAX_RAYS: usize = 8;

/// A ray from the origin and the grid nodes on it, ordered outward.
#[derive(Debug, Clone, PartialEq)]
pub struct Ray {
    pub direction: Vec<f64>,
    pub nodes: Vec<usize>,
}

/// Coordinate half-axes first, then diagonals with a positive first
/// component, at most eight rays. Radial grids have the single ray `e₁`.
pub fn rays(grid: &GridSpec) -> Vec<Ray> {
    let d = grid.dimension;
    if grid.radial {
        let mut direction = vec![0.0; d];
        direction[0] = 1.0;
        return vec![Ray {
            direction,
            nodes: (0..grid.points).collect(),
        }];
    }
    let n = grid.points;
    // Index of the first node at or right of the origin; the grid is
    // symmetric, so node n−1−i mirrors node i.
    let center = n / 2;
    let steps = n - center;
    let mut signs: Vec<Vec<i8>> = Vec::new();
    for axis in 0..d {
        for s in [1i8, -1] {
            let mut v = vec![0i8; d];
            v[axis] = s;
            signs.push(v);
        }
    }
    if d >= 2 {
        for mask in 0..(1usize << (d - 1)) {
            let mut v = vec![1i8; d];
            for (axis, item) in v.iter_mut().enumerate().skip(1) {
                if mask >> (axis - 1) & 1 == 1 {
                    *item = -1;
                }
            }
            signs.push(v);
        }
    }
    signs.truncate(MAX_RAYS);
    signs
        .into_iter()
        .map(|s| {
            let nodes = (0..steps)
                .map(|k| {
                    s.iter().fold(0usize, |acc, &si| {
                        let i = match si {
                            1 => center + k,
                            -1 => n - 1 - (center + k),
                            _ => center,
                        };
                        acc * n + i
                    })
                })
                .collect();
            let len = (s.iter().filter(|&&v| v != 0).count() as f64).sqrt();
            Ray {
                direction: s.iter().map(|&v| f64::from(v) / len).collect(),
                nodes,
            }
        })
        .collect()
}

/// A node of the tail window.
#[derive(Debug, Clone, PartialEq)]
pub struct TailPoint {
    pub ray: usize,
    pub node: usize,
    pub x: Vec<f64>,
    pub radius: f64,
    pub phi: f64,
}

/// Nodes on the rays with `φ₀ ∈ [floor, 10⁻³ max φ₀]`, where the floor is
/// `10⁻¹² max φ₀` or the solver's resolution, whichever is larger.
pub fn tail_window(gs: &GroundState) -> Vec<TailPoint> {
    let max = gs.max_value();
    let floor = (WINDOW_FLOOR * max).max(gs.noise_floor());
    let cap = WINDOW_CAP * max;
    let mut out = Vec::new();
    for (r, ray) in rays(&gs.grid).iter().enumerate() {
        for &node in &ray.nodes {
            let phi = gs.phi0[node];
            if phi >= floor && phi <= cap {
                let x = gs.point(node);
                out.push(TailPoint {
                    ray: r,
                    node,
                    radius: norm(&x),
                    x,
                    phi,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeSpec {
    pub side: Side,
    pub epsilon: f64,
    pub delta: f64,
}

impl EnvelopeSpec {
    pub fn lower(epsilon: f64, delta: f64) -> Self {
        Self {
            side: Side::Lower,
            epsilon,
            delta,
        }
    }

    pub fn upper(epsilon: f64, delta: f64) -> Self {
        Self {
            side: Side::Upper,
            epsilon,
            delta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.side {
            Side::Lower if !(self.epsilon > 0.0 && self.epsilon.is_finite()) => {
                return Err(invalid(format!("lower envelope needs ε > 0, got {}", self.epsilon)))
            }
            Side::Upper if !(self.epsilon > 0.0 && self.epsilon < 1.0) => {
                return Err(invalid(format!(
                    "upper envelope needs ε in (0,1), got {}",
                    self.epsilon
                )))
            }
            _ => {}
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid(format!("δ must lie in (0,1), got {}", self.delta)));
        }
        Ok(())
    }

    /// Envelope exponent at `x` given the profile value `w`.
    pub fn exponent(&self, w: f64, radius: f64) -> f64 {
        match self.side {
            Side::Lower => (1.0 + self.epsilon) * w.sqrt() * radius,
            Side::Upper => (1.0 - self.epsilon) * self.delta * w.sqrt() * radius,
        }
    }

    /// `V^δ(x)` for the lower side, `V_δ(x)` for the upper side.
    pub fn profile(&self, potential: &PotentialSpec, x: &[f64]) -> Result<f64> {
        match self.side {
            Side::Lower => profile_sup(potential, x, self.delta).map(|p| p.value),
            Side::Upper => profile_inf(potential, x, self.delta).map(|p| p.value),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopePoint {
    pub ray: usize,
    pub radius: f64,
    pub phi: f64,
    pub profile: f64,
    pub exponent: f64,
    /// `φ₀ / exp(−exponent)`
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeResult {
    pub spec: EnvelopeSpec,
    /// Minimum (lower side) or maximum (upper side) ratio over the window.
    pub c: f64,
    /// Inner radius of the window.
    pub r: f64,
    /// Constant fitted on the inner half of the window.
    pub c_inner: f64,
    /// Constant fitted on the outer half of the window.
    pub c_outer: f64,
    pub stable: bool,
    /// Outer-half points that fall outside the inner-half envelope.
    pub violations: Vec<EnvelopePoint>,
    pub points: Vec<EnvelopePoint>,
    pub pass: bool,
}

/// `φ₀(x) ≥ c exp(−(1+ε)√V^δ(x)|x|)` on the tail window.
pub fn theorem_lower_envelope(
    gs: &GroundState,
    potential: &PotentialSpec,
    epsilon: f64,
    delta: f64,
) -> Result<EnvelopeResult> {
    envelope(gs, potential, EnvelopeSpec::lower(epsilon, delta))
}

/// `φ₀(x) ≤ c exp(−(1−ε)δ√V_δ(x)|x|)` on the tail window.
pub fn theorem_upper_envelope(
    gs: &GroundState,
    potential: &PotentialSpec,
    epsilon: f64,
    delta: f64,
) -> Result<EnvelopeResult> {
    envelope(gs, potential, EnvelopeSpec::upper(epsilon, delta))
}

/// Fits the envelope constant on the window.
///
/// The window is split at its median radius. The constant fitted on the
/// inner half must keep bounding the outer half (no violations), and the
/// constant refitted on the outer half may not be worse than the inner one
/// by more than [`STABILITY_FACTOR`]. Improvement is allowed in any amount:
/// the envelopes are not sharp, so the ratio drifts in the favourable
/// direction as the window moves out.
pub fn envelope(gs: &GroundState, potential: &PotentialSpec, spec: EnvelopeSpec) -> Result<EnvelopeResult> {
    spec.validate()?;
    if !potential.is_confining() {
        return Err(Error::Configuration(format!(
            "envelope checks need a confining potential; `{}` is not",
            potential.tag()
        )));
    }
    let window = tail_window(gs);
    if window.len() < 2 {
        return Err(Error::Configuration(String::from(
            "tail window has fewer than two nodes; widen the domain or refine the grid",
        )));
    }
    let mut points = Vec::with_capacity(window.len());
    for p in &window {
        let w = spec.profile(potential, &p.x)?;
        let exponent = spec.exponent(w, p.radius);
        points.push(EnvelopePoint {
            ray: p.ray,
            radius: p.radius,
            phi: p.phi,
            profile: w,
            exponent,
            ratio: p.phi * exponent.exp(),
        });
    }
    let mut radii: Vec<f64> = points.iter().map(|p| p.radius).collect();
    radii.sort_by(f64::total_cmp);
    let split = radii[radii.len() / 2];
    let r = radii[0];
    let lower = spec.side == Side::Lower;
    let fit = |pred: &dyn Fn(&EnvelopePoint) -> bool| {
        let it = points.iter().filter(|p| pred(p)).map(|p| p.ratio);
        if lower {
            it.fold(f64::INFINITY, f64::min)
        } else {
            it.fold(0.0, f64::max)
        }
    };
    let c = fit(&|_| true);
    let c_inner = fit(&|p| p.radius < split);
    let c_outer = fit(&|p| p.radius >= split);
    let violations: Vec<EnvelopePoint> = points
        .iter()
        .filter(|p| p.radius >= split)
        .filter(|p| {
            if lower {
                p.ratio < c_inner * (1.0 - VIOLATION_SLACK)
            } else {
                p.ratio > c_inner * (1.0 + VIOLATION_SLACK)
            }
        })
        .cloned()
        .collect();
    let stable = if lower {
        c_outer >= c_inner / STABILITY_FACTOR
    } else {
        c_outer <= c_inner * STABILITY_FACTOR
    };
    let valid = c > 0.0 && c.is_finite();
    Ok(EnvelopeResult {
        spec,
        c,
        r,
        c_inner,
        c_outer,
        stable,
        pass: valid && stable && violations.is_empty(),
        violations,
        points,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioPoint {
    pub ray: usize,
    pub radius: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayRatioProfile {
    pub points: Vec<RatioPoint>,
    /// Least-squares fit `ratio ≈ intercept + slope/|x|`.
    pub slope: f64,
    pub intercept: f64,
    pub min: f64,
    pub max: f64,
}

/// `−ln φ₀(x) / ϱ(x)` over the tail window, with a linear trend in `1/|x|`.
pub fn decay_ratio_profile<R: Fn(&[f64]) -> f64>(gs: &GroundState, rho: R) -> Result<DecayRatioProfile> {
    let window = tail_window(gs);
    if window.is_empty() {
        return Err(Error::Configuration(String::from("tail window is empty")));
    }
    let mut points = Vec::with_capacity(window.len());
    for p in &window {
        let denom = rho(&p.x);
        if !(denom > 0.0 && denom.is_finite()) {
            return Err(invalid(format!("ϱ must be positive on the window, got {denom} at {:?}", p.x)));
        }
        points.push(RatioPoint {
            ray: p.ray,
            radius: p.radius,
            ratio: -p.phi.ln() / denom,
        });
    }
    let (slope, intercept) = least_squares(points.iter().map(|p| (1.0 / p.radius, p.ratio)));
    let min = points.iter().map(|p| p.ratio).fold(f64::INFINITY, f64::min);
    let max = points.iter().map(|p| p.ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(DecayRatioProfile {
        points,
        slope,
        intercept,
        min,
        max,
    })
}

/// The default rate `ϱ(x) = √V(x)·|x|`.
pub fn default_rho(potential: &PotentialSpec) -> impl Fn(&[f64]) -> f64 + '_ {
    move |x| potential.eval(x).map_or(f64::NAN, |v| v.sqrt() * norm(x))
}

/// `(slope, intercept)` of the least-squares line through the pairs.
fn least_squares<I: Iterator<Item = (f64, f64)>>(pairs: I) -> (f64, f64) {
    let (mut n, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (x, y) in pairs {
        n += 1.0;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let det = n * sxx - sx * sx;
    if det.abs() <= f64::EPSILON * n * sxx {
        return (0.0, sy / n);
    }
    let slope = (n * sxy - sx * sy) / det;
    (slope, (sy - slope * sx) / n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSharpPoint {
    pub radius: f64,
    /// `−ln φ₀ / (|x|^{1+β}/(1+β))`
    pub exponent_ratio: f64,
    /// `φ₀ |x|^{β/2−(d−1)/2} exp(|x|^{1+β}/(1+β))`
    pub comparability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSharpResult {
    pub beta: f64,
    pub window: (f64, f64),
    pub points: Vec<PowerSharpPoint>,
    pub exponent_range: (f64, f64),
    /// `max/min` of the comparability quantity.
    pub band: f64,
    pub pass: bool,
    pub notes: Vec<String>,
}

/// Accepted range of the exponent ratio in [`power_sharp_check`].
pub const EXPONENT_BAND: (f64, f64) = (0.85, 1.15);
/// Largest accepted `max/min` of the comparability quantity.
pub const COMPARABILITY_BAND: f64 = 3.0;

/// Compares `φ₀` with `|x|^{−β/2+(d−1)/2} exp(−|x|^{1+β}/(1+β))` at the
/// ray nodes whose radius lies in `window` (for `V = |x|^{2β}`).
pub fn power_sharp_check(gs: &GroundState, beta: f64, window: (f64, f64)) -> Result<PowerSharpResult> {
    let d = gs.grid.dimension as f64;
    if !(window.0 > 0.0 && window.1 > window.0) {
        return Err(invalid(format!("bad radius window {window:?}")));
    }
    let mut notes = Vec::new();
    if beta <= 1.0 {
        notes.push(format!(
            "β = {beta} ≤ 1 lies outside the regime of the sharp power asymptotics; reported only"
        ));
    }
    let mut points = Vec::new();
    for ray in rays(&gs.grid) {
        for node in ray.nodes {
            let x = gs.point(node);
            let r = norm(&x);
            if r < window.0 || r > window.1 {
                continue;
            }
            let phi = gs.phi0[node];
            if !(phi > 0.0) {
                return Err(Error::Discretization(format!("φ₀ not positive at |x| = {r}")));
            }
            let e = r.powf(1.0 + beta) / (1.0 + beta);
            points.push(PowerSharpPoint {
                radius: r,
                exponent_ratio: -phi.ln() / e,
                comparability: phi * r.powf(0.5 * beta - 0.5 * (d - 1.0)) * e.exp(),
            });
        }
    }
    if points.is_empty() {
        return Err(Error::Configuration(format!("no grid nodes with radius in {window:?}")));
    }
    let lo = points.iter().map(|p| p.exponent_ratio).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.exponent_ratio).fold(f64::NEG_INFINITY, f64::max);
    let cmin = points.iter().map(|p| p.comparability).fold(f64::INFINITY, f64::min);
    let cmax = points.iter().map(|p| p.comparability).fold(0.0, f64::max);
    let band = cmax / cmin;
    let pass = beta > 1.0 && lo >= EXPONENT_BAND.0 && hi <= EXPONENT_BAND.1 && band <= COMPARABILITY_BAND;
    Ok(PowerSharpResult {
        beta,
        window,
        points,
        exponent_range: (lo, hi),
        band,
        pass,
        notes,
    })
}

/// `ε′` with `(1+ε′)^{3/2} = 1+ε`, used on the lower side.
pub fn lower_epsilon_prime(epsilon: f64) -> f64 {
    (1.0 + epsilon).powf(2.0 / 3.0) - 1.0
}

/// `ε′` with `(1−ε′)² = 1−ε`, used on the upper side.
pub fn upper_epsilon_prime(epsilon: f64) -> f64 {
    1.0 - (1.0 - epsilon).sqrt()
}

/// Parameters of the slow-variation scans.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionPlan {
    /// `ε` for condition (I).
    pub epsilon_one: f64,
    /// `ε` and `δ` for condition (II).
    pub epsilon_two: f64,
    pub delta_two: f64,
    pub window: ScanWindow,
}

impl Default for ConditionPlan {
    fn default() -> Self {
        Self {
            epsilon_one: 0.1,
            epsilon_two: 0.1,
            delta_two: 0.9,
            window: ScanWindow::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionVerdicts {
    pub one: ConditionOneVerdict,
    pub two: ConditionTwoVerdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationPlan {
    pub grid: GridSpec,
    pub solver: SolverOptions,
    pub envelopes: Vec<EnvelopeSpec>,
    pub conditions: Option<ConditionPlan>,
    /// Band for `−ln φ₀ / ϱ` when both slow-variation conditions hold.
    pub ratio_band: (f64, f64),
    /// Largest accepted `|intercept − 1|` of the ratio trend.
    pub intercept_tolerance: f64,
    /// Radius window for the power sharpness check (power kinds only).
    pub power_window: Option<(f64, f64)>,
}

impl VerificationPlan {
    pub fn new(grid: GridSpec) -> Self {
        Self {
            grid,
            solver: SolverOptions::default(),
            envelopes: [0.1, 0.5]
                .iter()
                .flat_map(|&e| {
                    [0.1, 0.5].iter().flat_map(move |&d| [EnvelopeSpec::lower(e, d), EnvelopeSpec::upper(e, d)])
                })
                .collect(),
            conditions: Some(ConditionPlan::default()),
            ratio_band: (0.7, 1.3),
            intercept_tolerance: 0.15,
            power_window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    pub result: EnvelopeResult,
    /// `ε′` from the requested `ε` for this side.
    pub epsilon_prime: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub potential_id: String,
    pub grid: GridSpec,
    pub lambda0: f64,
    pub residual: f64,
    pub gap: Option<f64>,
    pub envelopes: Vec<EnvelopeReport>,
    pub ratio: DecayRatioProfile,
    /// Whether the ratio band applies (both slow-variation conditions hold).
    pub ratio_checked: bool,
    pub ratio_pass: bool,
    pub conditions: Option<ConditionVerdicts>,
    pub power: Option<PowerSharpResult>,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl VerificationReport {
    /// `(check name, pass)` for every check that ran, in report order.
    pub fn summary(&self) -> Vec<(String, bool)> {
        let mut out = Vec::new();
        for e in &self.envelopes {
            let s = e.result.spec;
            out.push((
                format!("envelope {} eps={} delta={}", s.side.as_str(), s.epsilon, s.delta),
                e.result.pass,
            ));
        }
        if self.ratio_checked {
            out.push((String::from("decay ratio band"), self.ratio_pass));
        }
        if let Some(p) = &self.power {
            out.push((String::from("power sharpness"), p.pass));
        }
        out
    }
}

/// Solves for the ground state and runs every applicable check.
///
/// Condition verdicts are reported for radial potentials. The ratio band
/// is asserted only when both conditions hold; otherwise the profile is
/// reported as information. Power kinds with `β > 1` get the sharpness
/// check when `plan.power_window` is set.
pub fn run_verification(potential: &PotentialSpec, plan: &VerificationPlan) -> Result<VerificationReport> {
    if !potential.is_confining() {
        return Err(Error::Configuration(format!(
            "potential `{}` is not confining",
            potential.tag()
        )));
    }
    for e in &plan.envelopes {
        e.validate()?;
    }
    let gs = solve_ground_state(&plan.grid, potential, &plan.solver)?;
    verify_ground_state(&gs, potential, plan)
}

/// [`run_verification`] on an existing ground state.
pub fn verify_ground_state(
    gs: &GroundState,
    potential: &PotentialSpec,
    plan: &VerificationPlan,
) -> Result<VerificationReport> {
    let mut notes = Vec::new();
    let mut envelopes = Vec::with_capacity(plan.envelopes.len());
    for spec in &plan.envelopes {
        let result = envelope(gs, potential, *spec)?;
        let epsilon_prime = match spec.side {
            Side::Lower => lower_epsilon_prime(spec.epsilon),
            Side::Upper => upper_epsilon_prime(spec.epsilon),
        };
        envelopes.push(EnvelopeReport {
            result,
            epsilon_prime,
        });
    }
    let ratio = decay_ratio_profile(gs, default_rho(potential))?;
    let profile = potential.radial_profile();
    let conditions = match (plan.conditions, &profile) {
        (Some(c), Some(g)) => {
            let one = check_condition_one(|r| g.eval(r), c.epsilon_one, c.window)?;
            let two = check_condition_two(|r| g.eval(r), c.epsilon_two, c.delta_two, c.window)?;
            if let ProfileShape::Power { exponent, .. } = g.shape {
                if one.holds && exponent > 1.0 {
                    notes.push(format!(
                        "condition (I) holds numerically for r^{exponent} although the growth is faster than linear"
                    ));
                }
            }
            Some(ConditionVerdicts { one, two })
        }
        _ => None,
    };
    let ratio_checked = conditions.as_ref().is_some_and(|c| c.one.holds && c.two.holds);
    let ratio_pass = ratio.min >= plan.ratio_band.0
        && ratio.max <= plan.ratio_band.1
        && (ratio.intercept - 1.0).abs() <= plan.intercept_tolerance;
    if ratio_checked {
        notes.push(format!(
            "decay ratio band [{}, {}] and intercept tolerance {} are conventions, not derived bounds",
            plan.ratio_band.0, plan.ratio_band.1, plan.intercept_tolerance
        ));
    }
    let power = match (plan.power_window, &profile) {
        (Some(w), Some(g)) => match g.shape {
            ProfileShape::Power {
                coefficient,
                exponent,
            } if coefficient == 1.0 && g.offset == 0.0 => Some(power_sharp_check(gs, 0.5 * exponent, w)?),
            _ => None,
        },
        _ => None,
    };
    let pass = envelopes.iter().all(|e| e.result.pass)
        && (!ratio_checked || ratio_pass)
        && power.as_ref().is_none_or(|p| p.pass || p.beta <= 1.0);
    Ok(VerificationReport {
        potential_id: String::from(potential.tag()),
        grid: gs.grid,
        lambda0: gs.lambda0,
        residual: gs.residual,
        gap: gs.gap(),
        envelopes,
        ratio,
        ratio_checked,
        ratio_pass,
        conditions,
        power,
        warnings: gs.warnings.clone(),
        notes,
        pass,
    })
}
