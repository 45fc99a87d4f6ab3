//! Confining potentials, their ball profiles `V^δ` / `V_δ`, and windowed
//! checks of the slow-variation conditions on radial profiles.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::E;


use crate::error::{invalid, Error, Result};
use crate::linalg::norm;

/// Growth law of a radial profile `g`, before the additive offset.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileShape {
    /// `coefficient · r^exponent`
    Power { coefficient: f64, exponent: f64 },
    /// `ln(e + r^power)`
    Log { power: f64 },
    /// `exp(rate · r)`
    Exponential { rate: f64 },
    /// identically zero
    Flat,
}

/// A radial profile `g(r) = shape(r) + offset`, so that `V(x) = g(|x|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub shape: ProfileShape,
    pub offset: f64,
}

impl RadialProfile {
    /// `g(r) = r^(2β)`, the power potential `|x|^(2β)`.
    pub fn power(beta: f64) -> Self {
        Self::affine_power(1.0, 2.0 * beta, 0.0)
    }

    /// `g(r) = a r^α + b`.
    pub fn affine_power(a: f64, alpha: f64, b: f64) -> Self {
        Self {
            shape: ProfileShape::Power {
                coefficient: a,
                exponent: alpha,
            },
            offset: b,
        }
    }

    /// `g(r) = ln(e + r^p)`.
    pub fn log(power: f64) -> Self {
        Self {
            shape: ProfileShape::Log { power },
            offset: 0.0,
        }
    }

    /// `g(r) = e^(rate r)`.
    pub fn exponential(rate: f64) -> Self {
        Self {
            shape: ProfileShape::Exponential { rate },
            offset: 0.0,
        }
    }

    /// `g(r) = c`.
    pub fn constant(c: f64) -> Self {
        Self {
            shape: ProfileShape::Flat,
            offset: c,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let base = match self.shape {
            ProfileShape::Power {
                coefficient,
                exponent,
            } => coefficient * r.powf(exponent),
            ProfileShape::Log { power } => (E + r.powf(power)).ln(),
            ProfileShape::Exponential { rate } => (rate * r).exp(),
            ProfileShape::Flat => 0.0,
        };
        base + self.offset
    }

    /// True when `g(r) → ∞`.
    pub fn is_unbounded(&self) -> bool {
        match self.shape {
            ProfileShape::Power {
                coefficient,
                exponent,
            } => coefficient > 0.0 && exponent > 0.0,
            ProfileShape::Log { power } => power > 0.0,
            ProfileShape::Exponential { rate } => rate > 0.0,
            ProfileShape::Flat => false,
        }
    }

    /// Exponent of polynomial growth, if the shape is a power law.
    pub fn power_exponent(&self) -> Option<f64> {
        match self.shape {
            ProfileShape::Power { exponent, .. } => Some(exponent),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.offset.is_finite() && self.offset >= 0.0) {
            return Err(invalid(format!(
                "profile offset must be finite and nonnegative, got {}",
                self.offset
            )));
        }
        match self.shape {
            ProfileShape::Power {
                coefficient,
                exponent,
            } => {
                if !(coefficient.is_finite() && coefficient >= 0.0) {
                    return Err(invalid(format!(
                        "power coefficient must be nonnegative, got {coefficient}"
                    )));
                }
                if !(exponent.is_finite() && exponent > 0.0) {
                    return Err(invalid(format!(
                        "power exponent must be positive, got {exponent}"
                    )));
                }
            }
            ProfileShape::Log { power } => {
                if !(power.is_finite() && power > 0.0) {
                    return Err(invalid(format!("log power must be positive, got {power}")));
                }
            }
            ProfileShape::Exponential { rate } => {
                if !(rate.is_finite() && rate >= 0.0) {
                    return Err(invalid(format!(
                        "exponential rate must be nonnegative, got {rate}"
                    )));
                }
            }
            ProfileShape::Flat => {}
        }
        Ok(())
    }

    fn shifted(&self, c: f64) -> Self {
        Self {
            shape: self.shape.clone(),
            offset: self.offset + c,
        }
    }
}

/// Tabulated potential on a tensor grid, interpolated multilinearly and
/// undefined outside its bounding box.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    axes: Vec<Vec<f64>>,
    /// Row-major, last axis fastest.
    values: Vec<f64>,
    confining: bool,
}

impl Table {
    pub fn new(axes: Vec<Vec<f64>>, values: Vec<f64>, confining: bool) -> Result<Self> {
        if axes.is_empty() {
            return Err(invalid("table needs at least one axis"));
        }
        let mut expected = 1usize;
        for (i, axis) in axes.iter().enumerate() {
            if axis.len() < 2 {
                return Err(invalid(format!("table axis {i} needs at least two nodes")));
            }
            if axis.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(invalid(format!("table axis {i} must be strictly increasing")));
            }
            expected *= axis.len();
        }
        if values.len() != expected {
            return Err(invalid(format!(
                "table has {} values, grid needs {expected}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| v.is_nan() || **v < 0.0) {
            return Err(invalid(format!("table values must be nonnegative, found {v}")));
        }
        Ok(Self {
            axes,
            values,
            confining,
        })
    }

    /// Builds a table from scattered `(point, value)` rows that together
    /// cover a full tensor grid, in any order.
    pub fn from_samples(samples: &[(Vec<f64>, f64)], confining: bool) -> Result<Self> {
        let dim = samples
            .first()
            .map(|(p, _)| p.len())
            .ok_or_else(|| invalid("table has no rows"))?;
        if dim == 0 || samples.iter().any(|(p, _)| p.len() != dim) {
            return Err(invalid("table rows must share one positive dimension"));
        }
        let mut axes: Vec<Vec<f64>> = (0..dim)
            .map(|k| {
                let mut a: Vec<f64> = samples.iter().map(|(p, _)| p[k]).collect();
                a.sort_by(|x, y| x.total_cmp(y));
                a.dedup();
                a
            })
            .collect();
        let total: usize = axes.iter().map(Vec::len).product();
        if total != samples.len() {
            return Err(invalid(format!(
                "table rows ({}) do not form a full tensor grid ({total} nodes)",
                samples.len()
            )));
        }
        let mut values = vec![f64::NAN; total];
        for (p, v) in samples {
            let mut flat = 0usize;
            for (k, axis) in axes.iter().enumerate() {
                let idx = axis
                    .binary_search_by(|a| a.total_cmp(&p[k]))
                    .map_err(|_| invalid("table coordinate not on grid"))?;
                flat = flat * axis.len() + idx;
            }
            if !values[flat].is_nan() {
                return Err(invalid("duplicate table row"));
            }
            values[flat] = *v;
        }
        axes.shrink_to_fit();
        Self::new(axes, values, confining)
    }

    pub fn dimension(&self) -> usize {
        self.axes.len()
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.axes
            .iter()
            .map(|a| (a[0], a[a.len() - 1]))
            .collect()
    }

    pub fn interpolate(&self, x: &[f64]) -> Result<f64> {
        let d = self.axes.len();
        let mut cell = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for k in 0..d {
            let axis = &self.axes[k];
            let (lo, hi) = (axis[0], axis[axis.len() - 1]);
            if !(x[k] >= lo && x[k] <= hi) {
                return Err(Error::Domain(format!(
                    "point coordinate {} = {} outside table range [{lo}, {hi}]",
                    k, x[k]
                )));
            }
            let i = axis.partition_point(|a| *a <= x[k]).clamp(1, axis.len() - 1) - 1;
            cell[k] = i;
            frac[k] = (x[k] - axis[i]) / (axis[i + 1] - axis[i]);
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let mut weight = 1.0;
            let mut flat = 0usize;
            for k in 0..d {
                let up = (corner >> k) & 1 == 1;
                weight *= if up { frac[k] } else { 1.0 - frac[k] };
                flat = flat * self.axes[k].len() + cell[k] + usize::from(up);
            }
            if weight != 0.0 {
                acc += weight * self.values[flat];
            }
        }
        Ok(acc)
    }
}

/// Catalog of potentials.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    Radial(RadialProfile),
    /// `Σ w_i z_i²`
    Anisotropic { weights: Vec<f64> },
    /// `c + base(x)`, or `c` alone.
    ConstantPlus {
        constant: f64,
        base: Option<Box<PotentialKind>>,
    },
    Table(Table),
}

/// A nonnegative, locally bounded potential on `ℝ^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    kind: PotentialKind,
    dimension: usize,
}

impl PotentialSpec {
    pub fn new(kind: PotentialKind, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(invalid("dimension must be positive"));
        }
        validate_kind(&kind, dimension)?;
        Ok(Self { kind, dimension })
    }

    /// `|x|^(2β)`
    pub fn power(beta: f64, dimension: usize) -> Result<Self> {
        Self::new(PotentialKind::Radial(RadialProfile::power(beta)), dimension)
    }

    /// `a|x|^α + b`
    pub fn affine_power(a: f64, alpha: f64, b: f64, dimension: usize) -> Result<Self> {
        Self::new(
            PotentialKind::Radial(RadialProfile::affine_power(a, alpha, b)),
            dimension,
        )
    }

    /// `ln(e + |x|²)`
    pub fn log(dimension: usize) -> Result<Self> {
        Self::new(PotentialKind::Radial(RadialProfile::log(2.0)), dimension)
    }

    /// `exp(rate |x|)`
    pub fn exponential(rate: f64, dimension: usize) -> Result<Self> {
        Self::new(
            PotentialKind::Radial(RadialProfile::exponential(rate)),
            dimension,
        )
    }

    pub fn anisotropic(weights: Vec<f64>) -> Result<Self> {
        let d = weights.len();
        Self::new(PotentialKind::Anisotropic { weights }, d)
    }

    /// `V ≡ c`
    pub fn constant(c: f64, dimension: usize) -> Result<Self> {
        Self::new(
            PotentialKind::ConstantPlus {
                constant: c,
                base: None,
            },
            dimension,
        )
    }

    /// `c + base`
    pub fn shifted(base: PotentialSpec, c: f64) -> Result<Self> {
        Self::new(
            PotentialKind::ConstantPlus {
                constant: c,
                base: Some(Box::new(base.kind)),
            },
            base.dimension,
        )
    }

    pub fn table(table: Table) -> Result<Self> {
        let d = table.dimension();
        Self::new(PotentialKind::Table(table), d)
    }

    /// Looks a potential up by catalog tag and named parameters.
    ///
    /// Tags: `power` (beta), `affine-power` (a, alpha, b), `log` (power,
    /// default 2), `exponential` (rate, default 1), `anisotropic-quadratic`
    /// (w1..wd), `constant-plus` (c).
    pub fn from_catalog(tag: &str, params: &[(&str, f64)], dimension: usize) -> Result<Self> {
        let get = |name: &str| params.iter().find(|(k, _)| *k == name).map(|(_, v)| *v);
        let need = |name: &str| {
            get(name).ok_or_else(|| invalid(format!("potential `{tag}` needs parameter `{name}`")))
        };
        let allowed: &[&str] = match tag {
            "power" => &["beta"],
            "affine-power" => &["a", "alpha", "b"],
            "log" => &["power"],
            "exponential" => &["rate"],
            "constant-plus" => &["c"],
            "anisotropic-quadratic" => &[],
            other => return Err(invalid(format!("unknown potential kind `{other}`"))),
        };
        for (k, _) in params {
            let weight_key = tag == "anisotropic-quadratic"
                && k.strip_prefix('w')
                    .and_then(|n| n.parse::<usize>().ok())
                    .is_some_and(|n| n >= 1 && n <= dimension);
            if !allowed.contains(k) && !weight_key {
                return Err(invalid(format!("potential `{tag}` has no parameter `{k}`")));
            }
        }
        match tag {
            "power" => Self::power(need("beta")?, dimension),
            "affine-power" => Self::affine_power(need("a")?, need("alpha")?, need("b")?, dimension),
            "log" => Self::new(
                PotentialKind::Radial(RadialProfile::log(get("power").unwrap_or(2.0))),
                dimension,
            ),
            "exponential" => Self::exponential(get("rate").unwrap_or(1.0), dimension),
            "constant-plus" => Self::constant(need("c")?, dimension),
            _ => {
                let weights = (1..=dimension)
                    .map(|i| need(&format!("w{i}")))
                    .collect::<Result<Vec<_>>>()?;
                Self::anisotropic(weights)
            }
        }
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Catalog tag of the outermost kind.
    pub fn tag(&self) -> &'static str {
        match &self.kind {
            PotentialKind::Radial(p) => match p.shape {
                ProfileShape::Power { coefficient, .. } if coefficient == 1.0 && p.offset == 0.0 => {
                    "power"
                }
                ProfileShape::Power { .. } => "affine-power",
                ProfileShape::Log { .. } => "log",
                ProfileShape::Exponential { .. } => "exponential",
                ProfileShape::Flat => "constant-plus",
            },
            PotentialKind::Anisotropic { .. } => "anisotropic-quadratic",
            PotentialKind::ConstantPlus { .. } => "constant-plus",
            PotentialKind::Table(_) => "table",
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: x.len(),
            });
        }
        eval_kind(&self.kind, x)
    }

    /// Evaluation for callers that already validated the dimension and
    /// stay inside any table box.
    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        eval_kind(&self.kind, x).unwrap_or(f64::INFINITY)
    }

    /// `Some(g)` when `V(x) = g(|x|)`.
    pub fn radial_profile(&self) -> Option<RadialProfile> {
        radial_of(&self.kind)
    }

    pub fn is_radial(&self) -> bool {
        self.radial_profile().is_some()
    }

    pub fn is_confining(&self) -> bool {
        confining_of(&self.kind)
    }

    /// Radius beyond which evaluation fails (table box), if any.
    pub fn table_bounds(&self) -> Option<Vec<(f64, f64)>> {
        match &self.kind {
            PotentialKind::Table(t) => Some(t.bounds()),
            _ => None,
        }
    }
}

fn validate_kind(kind: &PotentialKind, dimension: usize) -> Result<()> {
    match kind {
        PotentialKind::Radial(p) => p.validate(),
        PotentialKind::Anisotropic { weights } => {
            if weights.len() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: weights.len(),
                });
            }
            if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                return Err(invalid("anisotropic weights must be finite and nonnegative"));
            }
            Ok(())
        }
        PotentialKind::ConstantPlus { constant, base } => {
            if !(constant.is_finite() && *constant >= 0.0) {
                return Err(invalid(format!(
                    "constant must be finite and nonnegative, got {constant}"
                )));
            }
            match base {
                Some(b) => validate_kind(b, dimension),
                None => Ok(()),
            }
        }
        PotentialKind::Table(t) => {
            if t.dimension() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: t.dimension(),
                });
            }
            Ok(())
        }
    }
}

fn eval_kind(kind: &PotentialKind, x: &[f64]) -> Result<f64> {
    Ok(match kind {
        PotentialKind::Radial(p) => p.eval(norm(x)),
        PotentialKind::Anisotropic { weights } => {
            weights.iter().zip(x).map(|(w, z)| w * z * z).sum()
        }
        PotentialKind::ConstantPlus { constant, base } => {
            constant
                + match base {
                    Some(b) => eval_kind(b, x)?,
                    None => 0.0,
                }
        }
        PotentialKind::Table(t) => t.interpolate(x)?,
    })
}

fn radial_of(kind: &PotentialKind) -> Option<RadialProfile> {
    match kind {
        PotentialKind::Radial(p) => Some(p.clone()),
        PotentialKind::Anisotropic { weights } => {
            let w0 = weights[0];
            weights
                .iter()
                .all(|w| *w == w0)
                .then(|| RadialProfile::affine_power(w0, 2.0, 0.0))
        }
        PotentialKind::ConstantPlus { constant, base } => match base {
            None => Some(RadialProfile::constant(*constant)),
            Some(b) => radial_of(b).map(|p| p.shifted(*constant)),
        },
        PotentialKind::Table(_) => None,
    }
}

fn confining_of(kind: &PotentialKind) -> bool {
    match kind {
        PotentialKind::Radial(p) => p.is_unbounded(),
        PotentialKind::Anisotropic { weights } => weights.iter().all(|w| *w > 0.0),
        PotentialKind::ConstantPlus { base, .. } => base.as_deref().is_some_and(confining_of),
        PotentialKind::Table(t) => t.confining,
    }
}

/// Value of a ball profile with its (approximate) extremizer.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfilePoint {
    pub x: Vec<f64>,
    pub delta: f64,
    pub value: f64,
    pub extremizer: Vec<f64>,
    /// Bound on how far `value` may sit from the true extremum; zero when
    /// the profile is evaluated in closed form.
    pub tolerance: f64,
}

/// `V^δ(x) = sup { V(z) : |z| ≤ |x| + δ }`.
pub fn profile_sup(spec: &PotentialSpec, x: &[f64], delta: f64) -> Result<ProfilePoint> {
    check_point(spec, x)?;
    if !(delta.is_finite() && delta > 0.0) {
        return Err(invalid(format!("delta must be positive, got {delta}")));
    }
    let radius = norm(x) + delta;
    if let Some(g) = spec.radial_profile() {
        let value = g.eval(radius);
        if !value.is_finite() {
            return Err(Error::Domain(format!("profile unbounded at radius {radius}")));
        }
        return Ok(ProfilePoint {
            x: x.to_vec(),
            delta,
            value,
            extremizer: along(x, radius),
            tolerance: 0.0,
        });
    }
    let origin = vec![0.0; spec.dimension()];
    let (value, extremizer, tolerance) = sampled_extremum(spec, &origin, radius, Extremum::Max)?;
    Ok(ProfilePoint {
        x: x.to_vec(),
        delta,
        value,
        extremizer,
        tolerance,
    })
}

/// `V_δ(x) = inf { V(z) : |z − x| < δ|x| }`.
pub fn profile_inf(spec: &PotentialSpec, x: &[f64], delta: f64) -> Result<ProfilePoint> {
    check_point(spec, x)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0,1), got {delta}")));
    }
    let r = norm(x);
    if r == 0.0 {
        return Err(invalid("V_δ is undefined at the origin (the ball degenerates)"));
    }
    if let Some(g) = spec.radial_profile() {
        let inner = (1.0 - delta) * r;
        return Ok(ProfilePoint {
            x: x.to_vec(),
            delta,
            value: g.eval(inner),
            extremizer: along(x, inner),
            tolerance: 0.0,
        });
    }
    let (value, extremizer, tolerance) = sampled_extremum(spec, x, delta * r, Extremum::Min)?;
    Ok(ProfilePoint {
        x: x.to_vec(),
        delta,
        value,
        extremizer,
        tolerance,
    })
}

fn check_point(spec: &PotentialSpec, x: &[f64]) -> Result<()> {
    if x.len() != spec.dimension() {
        return Err(Error::DimensionMismatch {
            expected: spec.dimension(),
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(invalid("point has non-finite coordinates"));
    }
    Ok(())
}

/// Point at distance `radius` from the origin in the direction of `x`
/// (first axis when `x = 0`).
fn along(x: &[f64], radius: f64) -> Vec<f64> {
    let r = norm(x);
    if r == 0.0 {
        let mut e = vec![0.0; x.len()];
        e[0] = radius;
        e
    } else {
        x.iter().map(|v| v * radius / r).collect()
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Extremum {
    Min,
    Max,
}

impl Extremum {
    fn better(self, a: f64, b: f64) -> bool {
        match self {
            Extremum::Min => a < b,
            Extremum::Max => a > b,
        }
    }
}

fn lattice_points_per_axis(d: usize) -> usize {
    match d {
        1 => 1001,
        2 => 121,
        3 => 27,
        4 => 11,
        _ => 5,
    }
}

/// Lattice scan of the closed ball followed by compass-search refinement
/// from the best few lattice points. Returns `(value, argument, tolerance)`
/// where the tolerance is a Lipschitz bound on the lattice gap.
fn sampled_extremum(
    spec: &PotentialSpec,
    center: &[f64],
    radius: f64,
    mode: Extremum,
) -> Result<(f64, Vec<f64>, f64)> {
    let d = spec.dimension();
    let k = lattice_points_per_axis(d);
    let h = 2.0 * radius / (k - 1) as f64;
    let total = k.pow(d as u32);

    let mut values = vec![f64::NAN; total];
    let mut point = vec![0.0; d];
    let mut ranked: Vec<(f64, usize)> = Vec::new();
    for (flat, slot) in values.iter_mut().enumerate() {
        lattice_point(flat, k, center, radius, h, &mut point);
        if dist(&point, center) > radius * (1.0 + 1e-12) {
            continue;
        }
        let v = spec.eval(&point)?;
        if !v.is_finite() {
            return Err(Error::Domain(format!(
                "potential is not locally bounded near {point:?}"
            )));
        }
        *slot = v;
        ranked.push((v, flat));
    }
    if ranked.is_empty() {
        return Err(Error::Domain("empty sampling ball".into()));
    }

    // Largest axis-neighbor slope over the lattice.
    let mut lipschitz = 0.0f64;
    for flat in 0..total {
        if values[flat].is_nan() {
            continue;
        }
        let mut stride = 1usize;
        for _ in 0..d {
            let idx = (flat / stride) % k;
            if idx + 1 < k {
                let nb = values[flat + stride];
                if !nb.is_nan() {
                    lipschitz = lipschitz.max((nb - values[flat]).abs() / h);
                }
            }
            stride *= k;
        }
    }

    ranked.sort_by(|a, b| match mode {
        Extremum::Min => a.0.total_cmp(&b.0),
        Extremum::Max => b.0.total_cmp(&a.0),
    });
    let mut best_value = ranked[0].0;
    let mut best_point = vec![0.0; d];
    lattice_point(ranked[0].1, k, center, radius, h, &mut best_point);

    for &(start_value, flat) in ranked.iter().take(4) {
        let mut current = vec![0.0; d];
        lattice_point(flat, k, center, radius, h, &mut current);
        let (v, p) = compass_refine(spec, center, radius, current, start_value, h, mode)?;
        if mode.better(v, best_value) {
            best_value = v;
            best_point = p;
        }
    }
    let tolerance = lipschitz * h * (d as f64).sqrt() / 2.0;
    Ok((best_value, best_point, tolerance))
}

fn lattice_point(flat: usize, k: usize, center: &[f64], radius: f64, h: f64, out: &mut [f64]) {
    let mut rest = flat;
    for axis in (0..out.len()).rev() {
        let idx = rest % k;
        rest /= k;
        out[axis] = center[axis] - radius + h * idx as f64;
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn project_into_ball(p: &mut [f64], center: &[f64], radius: f64) {
    let r = dist(p, center);
    if r > radius {
        for (v, c) in p.iter_mut().zip(center) {
            *v = c + (*v - c) * radius / r;
        }
    }
}

fn compass_refine(
    spec: &PotentialSpec,
    center: &[f64],
    radius: f64,
    mut current: Vec<f64>,
    mut value: f64,
    h: f64,
    mode: Extremum,
) -> Result<(f64, Vec<f64>)> {
    let d = current.len();
    let mut step = h;
    let floor = h * 1e-7;
    let mut trial = vec![0.0; d];
    while step > floor {
        let mut improved = false;
        for axis in 0..d {
            for sign in [1.0, -1.0] {
                trial.copy_from_slice(&current);
                trial[axis] += sign * step;
                project_into_ball(&mut trial, center, radius);
                let v = spec.eval(&trial)?;
                if !v.is_finite() {
                    return Err(Error::Domain(format!(
                        "potential is not locally bounded near {trial:?}"
                    )));
                }
                if mode.better(v, value) {
                    value = v;
                    current.copy_from_slice(&trial);
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((value, current))
}

/// Log-spaced sampling window `[t_min, t_max]` for the condition scans.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanWindow {
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
}

impl Default for ScanWindow {
    fn default() -> Self {
        Self {
            t_min: 1.0,
            t_max: 1e30,
            samples: 2000,
        }
    }
}

impl ScanWindow {
    fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0 && self.t_max > self.t_min && self.t_max.is_finite()) {
            return Err(invalid(format!(
                "scan window needs 0 < t_min < t_max < ∞, got [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        if self.samples < 8 {
            return Err(invalid("scan window needs at least 8 samples"));
        }
        Ok(())
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let ratio = (self.t_max / self.t_min).ln();
        let n = self.samples - 1;
        (0..self.samples).map(move |i| {
            if i == n {
                self.t_max
            } else {
                self.t_min * (ratio * i as f64 / n as f64).exp()
            }
        })
    }

    /// First sample index of the trailing quarter, which must be free of
    /// failures for a "holds" verdict.
    fn tail_start(&self) -> usize {
        self.samples - self.samples / 4
    }
}

/// Windowed verdict for the growth condition `g((1+δ)t) ≤ (1+ε) g(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionOneVerdict {
    pub holds: bool,
    /// Largest δ found that satisfies the inequality on the tail.
    pub delta: f64,
    /// Last scanned `t` where the inequality failed (or `t_min`).
    pub t0: f64,
}

/// Windowed verdict for `g((1−δ)t) ≥ (1−ε) g(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionTwoVerdict {
    pub holds: bool,
    pub t0: f64,
}

fn check_monotone<G: Fn(f64) -> f64>(g: &G, window: &ScanWindow) -> Result<()> {
    let mut prev: Option<(f64, f64)> = None;
    for t in window.points() {
        let v = g(t);
        if v.is_nan() {
            return Err(invalid(format!("profile is NaN at t = {t}")));
        }
        if let Some((pt, pv)) = prev {
            if v < pv - 1e-12 * pv.abs() {
                return Err(invalid(format!(
                    "profile decreases between t = {pt} and t = {t}"
                )));
            }
        }
        prev = Some((t, v));
    }
    Ok(())
}

/// Scans the window and returns `(holds, t0)`; `fails(t)` is true when the
/// inequality is violated (or cannot be evaluated) at `t`.
fn scan<F: Fn(f64) -> bool>(window: &ScanWindow, fails: F) -> (bool, f64) {
    let tail = window.tail_start();
    let mut t0 = window.t_min;
    let mut tail_clean = true;
    for (i, t) in window.points().enumerate() {
        if fails(t) {
            t0 = t;
            if i >= tail {
                tail_clean = false;
            }
        }
    }
    (tail_clean, t0)
}

const DELTA_FLOOR: f64 = 1e-4;

/// Condition (I): searches δ ∈ {1/2, 1/4, …} ≥ 1e-4, then bisects towards
/// the largest admissible δ.
pub fn check_condition_one<G: Fn(f64) -> f64>(
    g: G,
    epsilon: f64,
    window: ScanWindow,
) -> Result<ConditionOneVerdict> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    window.validate()?;
    check_monotone(&g, &window)?;

    let attempt = |delta: f64| {
        scan(&window, |t| {
            let lhs = g((1.0 + delta) * t);
            let rhs = (1.0 + epsilon) * g(t);
            !(lhs.is_finite() && rhs.is_finite() && lhs <= rhs)
        })
    };

    let mut delta = 0.5;
    let mut failing: Option<f64> = None;
    while delta >= DELTA_FLOOR {
        let (holds, t0) = attempt(delta);
        if holds {
            let (mut lo, mut lo_t0) = (delta, t0);
            if let Some(mut hi) = failing {
                for _ in 0..40 {
                    let mid = 0.5 * (lo + hi);
                    let (ok, t) = attempt(mid);
                    if ok {
                        lo = mid;
                        lo_t0 = t;
                    } else {
                        hi = mid;
                    }
                }
            }
            return Ok(ConditionOneVerdict {
                holds: true,
                delta: lo,
                t0: lo_t0,
            });
        }
        failing = Some(delta);
        delta *= 0.5;
    }
    let (_, t0) = attempt(delta * 2.0);
    Ok(ConditionOneVerdict {
        holds: false,
        delta: delta * 2.0,
        t0,
    })
}

/// Condition (II) at fixed `(ε, δ)`.
pub fn check_condition_two<G: Fn(f64) -> f64>(
    g: G,
    epsilon: f64,
    delta: f64,
    window: ScanWindow,
) -> Result<ConditionTwoVerdict> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid(format!("epsilon must lie in (0,1), got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0,1), got {delta}")));
    }
    window.validate()?;
    check_monotone(&g, &window)?;
    let (holds, t0) = scan(&window, |t| {
        let lhs = g((1.0 - delta) * t);
        let rhs = (1.0 - epsilon) * g(t);
        !(lhs.is_finite() && rhs.is_finite() && lhs >= rhs)
    });
    Ok(ConditionTwoVerdict { holds, t0 })
}
