//! JSON run configuration, its validation, and conversion into core types.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use gsdecay_core::feynman_kac::{PathSamplerConfig, PathScheme, SandwichSample};
use gsdecay_core::potentials::{PotentialSpec, ScanWindow, Table};
use gsdecay_core::spectral::{GridSpec, SolverOptions};
use gsdecay_core::verify::{ConditionPlan, EnvelopeSpec, VerificationPlan};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialConfig,
    pub dimension: usize,
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_envelopes")]
    pub envelopes: Vec<EnvelopeConfig>,
    #[serde(default)]
    pub conditions: ConditionConfig,
    #[serde(default)]
    pub decay: DecayConfig,
    #[serde(default)]
    pub fk: FkConfig,
    #[serde(default)]
    pub resolvent: ResolventConfig,
    #[serde(default)]
    pub dirichlet: DirichletConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    /// Catalog tag, or `table` for a CSV file.
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// CSV of `x1,…,xd,value` rows; relative paths resolve against the
    /// config file's directory.
    #[serde(default)]
    pub table: Option<PathBuf>,
    /// Whether a table potential should be treated as confining.
    #[serde(default)]
    pub confining: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: f64,
    pub points: usize,
    #[serde(default)]
    pub radial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub gap: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            tol: o.tol,
            max_iter: o.max_iter,
            gap: o.compute_gap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SideConfig {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeConfig {
    pub side: SideConfig,
    pub epsilon: f64,
    pub delta: f64,
}

fn default_envelopes() -> Vec<EnvelopeConfig> {
    let mut out = Vec::new();
    for epsilon in [0.1, 0.5] {
        for delta in [0.1, 0.5] {
            for side in [SideConfig::Lower, SideConfig::Upper] {
                out.push(EnvelopeConfig {
                    side,
                    epsilon,
                    delta,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConditionConfig {
    pub epsilon_one: f64,
    pub epsilon_two: f64,
    pub delta_two: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
}

impl Default for ConditionConfig {
    fn default() -> Self {
        let p = ConditionPlan::default();
        Self {
            epsilon_one: p.epsilon_one,
            epsilon_two: p.epsilon_two,
            delta_two: p.delta_two,
            t_min: p.window.t_min,
            t_max: p.window.t_max,
            samples: p.window.samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayConfig {
    pub ratio_band: [f64; 2],
    pub intercept_tolerance: f64,
    pub power_window: Option<[f64; 2]>,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            ratio_band: [0.7, 1.3],
            intercept_tolerance: 0.15,
            power_window: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeConfig {
    Bridge,
    Forward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExitConfig {
    pub lambda: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FkConfig {
    pub paths: usize,
    pub steps: usize,
    pub seed: u64,
    pub scheme: SchemeConfig,
    pub antithetic: bool,
    pub epsilon: f64,
    pub delta: f64,
    /// Hölder exponent for the upper sandwich; `a = b/(b−1)`.
    pub b: f64,
    /// Sandwich sample plan; empty means `x = 3e₁, 4e₁`, `y = 0`,
    /// `t ∈ {0.1, 0.5, 1}`.
    pub samples: Vec<SampleConfig>,
    pub exit_time: Vec<ExitConfig>,
    /// Step halvings allowed while the exit-time bias flag is up.
    pub max_halvings: usize,
}

impl Default for FkConfig {
    fn default() -> Self {
        let c = PathSamplerConfig::default();
        Self {
            paths: c.paths,
            steps: c.steps,
            seed: c.seed,
            scheme: SchemeConfig::Bridge,
            antithetic: c.antithetic,
            epsilon: 0.5,
            delta: 0.5,
            b: 2.0,
            samples: Vec::new(),
            exit_time: [1.0, 4.0]
                .iter()
                .flat_map(|&lambda| [1.0, 2.0].map(|r| ExitConfig { lambda, r }))
                .collect(),
            max_halvings: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResolventConfig {
    pub lambdas: Vec<f64>,
    pub radii: Vec<f64>,
    pub epsilon: f64,
}

impl Default for ResolventConfig {
    fn default() -> Self {
        Self {
            lambdas: vec![1.0, 4.0, 16.0],
            radii: vec![0.5, 1.0, 2.0, 4.0],
            epsilon: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DirichletConfig {
    pub radius: f64,
    pub times: Vec<f64>,
    pub points: Vec<f64>,
    /// Smallest accepted fitted constant.
    pub min_c: f64,
}

impl Default for DirichletConfig {
    fn default() -> Self {
        Self {
            radius: 1.0,
            times: (0..=19).map(|k| 0.1 * (1.0 + k as f64)).collect(),
            points: vec![-0.5, 0.0, 0.5],
            min_c: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksConfig {
    pub envelopes: bool,
    pub conditions: bool,
    pub sandwich: bool,
    pub exit_time: bool,
    pub resolvent: bool,
    pub dirichlet: bool,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        Self {
            envelopes: true,
            conditions: true,
            sandwich: true,
            exit_time: true,
            resolvent: true,
            dirichlet: true,
        }
    }
}

/// A validated configuration with its resolved potential.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub potential: PotentialSpec,
    /// First 12 hex digits of SHA-256 over the canonical JSON.
    pub hash: String,
}

impl Loaded {
    pub fn potential_id(&self) -> String {
        self.potential.tag().to_string()
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            dimension: self.config.dimension,
            half_width: self.config.grid.half_width,
            points: self.config.grid.points,
            radial: self.config.grid.radial,
        }
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions {
            tol: self.config.solver.tol,
            max_iter: self.config.solver.max_iter,
            compute_gap: self.config.solver.gap,
        }
    }

    pub fn plan(&self) -> VerificationPlan {
        let c = &self.config;
        let mut plan = VerificationPlan::new(self.grid());
        plan.solver = self.solver();
        plan.envelopes = if c.checks.envelopes {
            c.envelopes
                .iter()
                .map(|e| match e.side {
                    SideConfig::Lower => EnvelopeSpec::lower(e.epsilon, e.delta),
                    SideConfig::Upper => EnvelopeSpec::upper(e.epsilon, e.delta),
                })
                .collect()
        } else {
            Vec::new()
        };
        plan.conditions = c.checks.conditions.then_some(ConditionPlan {
            epsilon_one: c.conditions.epsilon_one,
            epsilon_two: c.conditions.epsilon_two,
            delta_two: c.conditions.delta_two,
            window: ScanWindow {
                t_min: c.conditions.t_min,
                t_max: c.conditions.t_max,
                samples: c.conditions.samples,
            },
        });
        plan.ratio_band = (c.decay.ratio_band[0], c.decay.ratio_band[1]);
        plan.intercept_tolerance = c.decay.intercept_tolerance;
        plan.power_window = c.decay.power_window.map(|w| (w[0], w[1]));
        plan
    }

    pub fn sampler(&self) -> PathSamplerConfig {
        let f = &self.config.fk;
        PathSamplerConfig {
            paths: f.paths,
            steps: f.steps,
            seed: f.seed,
            scheme: match f.scheme {
                SchemeConfig::Bridge => PathScheme::Bridge,
                SchemeConfig::Forward => PathScheme::Forward,
            },
            antithetic: f.antithetic,
        }
    }

    pub fn sandwich_samples(&self) -> Vec<SandwichSample> {
        let d = self.config.dimension;
        if self.config.fk.samples.is_empty() {
            let mut out = Vec::new();
            for r in [3.0, 4.0] {
                for t in [0.1, 0.5, 1.0] {
                    let mut x = vec![0.0; d];
                    x[0] = r;
                    out.push(SandwichSample::new(x, vec![0.0; d], t));
                }
            }
            out
        } else {
            self.config
                .fk
                .samples
                .iter()
                .map(|s| SandwichSample::new(s.x.clone(), s.y.clone(), s.t))
                .collect()
        }
    }
}

/// Reads, overrides and validates a config file.
pub fn load(path: &Path, seed: Option<u64>) -> Result<Loaded, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut config: RunConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if let Some(s) = seed {
        config.fk.seed = s;
    }
    validate(&config)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let potential = build_potential(&config, base)?;
    let hash = config_hash(&config);
    Ok(Loaded {
        config,
        potential,
        hash,
    })
}

pub fn config_hash(config: &RunConfig) -> String {
    let canonical = serde_json::to_string(config).expect("config serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

fn field_err(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field} {msg}"))
}

fn in_open_unit(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(field_err(field, format!("must lie in (0,1), got {v}")))
    }
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field_err(field, format!("must be positive, got {v}")))
    }
}

/// Checks every field before any computation; messages name the field.
pub fn validate(c: &RunConfig) -> Result<(), CliError> {
    if c.dimension == 0 {
        return Err(field_err("dimension", "must be positive"));
    }
    positive("grid.half_width", c.grid.half_width)?;
    if c.grid.points < 16 {
        return Err(field_err("grid.points", format!("must be at least 16, got {}", c.grid.points)));
    }
    if !c.grid.radial && c.dimension > 3 {
        return Err(field_err(
            "grid.radial",
            format!("must be true for dimension {} (full grids support d ≤ 3)", c.dimension),
        ));
    }
    positive("solver.tol", c.solver.tol)?;
    if c.solver.max_iter == 0 {
        return Err(field_err("solver.max_iter", "must be positive"));
    }
    for (i, e) in c.envelopes.iter().enumerate() {
        match e.side {
            SideConfig::Lower => positive(&format!("envelopes[{i}].epsilon"), e.epsilon)?,
            SideConfig::Upper => in_open_unit(&format!("envelopes[{i}].epsilon"), e.epsilon)?,
        }
        in_open_unit(&format!("envelopes[{i}].delta"), e.delta)?;
    }
    positive("conditions.epsilon_one", c.conditions.epsilon_one)?;
    in_open_unit("conditions.epsilon_two", c.conditions.epsilon_two)?;
    in_open_unit("conditions.delta_two", c.conditions.delta_two)?;
    positive("conditions.t_min", c.conditions.t_min)?;
    if !(c.conditions.t_max > c.conditions.t_min) {
        return Err(field_err("conditions.t_max", "must exceed conditions.t_min"));
    }
    if c.conditions.samples < 8 {
        return Err(field_err("conditions.samples", "must be at least 8"));
    }
    let [lo, hi] = c.decay.ratio_band;
    if !(lo < hi) {
        return Err(field_err("decay.ratio_band", format!("must be increasing, got [{lo}, {hi}]")));
    }
    positive("decay.intercept_tolerance", c.decay.intercept_tolerance)?;
    if let Some([a, b]) = c.decay.power_window {
        if !(a > 0.0 && b > a) {
            return Err(field_err("decay.power_window", format!("must satisfy 0 < a < b, got [{a}, {b}]")));
        }
    }
    let f = &c.fk;
    if f.paths < 100 {
        return Err(field_err("fk.paths", format!("must be at least 100, got {}", f.paths)));
    }
    if f.steps < 10 {
        return Err(field_err("fk.steps", format!("must be at least 10, got {}", f.steps)));
    }
    in_open_unit("fk.epsilon", f.epsilon)?;
    in_open_unit("fk.delta", f.delta)?;
    if !(f.b > 1.0) {
        return Err(field_err("fk.b", format!("must exceed 1, got {}", f.b)));
    }
    if (1.0 - f.epsilon) * f.b.sqrt() >= 1.0 {
        return Err(field_err(
            "fk.b",
            format!("needs (1 − fk.epsilon)·√b < 1, got {}", (1.0 - f.epsilon) * f.b.sqrt()),
        ));
    }
    for (i, s) in f.samples.iter().enumerate() {
        if s.x.len() != c.dimension || s.y.len() != c.dimension {
            return Err(field_err(
                &format!("fk.samples[{i}]"),
                format!("points must have {} coordinates", c.dimension),
            ));
        }
        positive(&format!("fk.samples[{i}].t"), s.t)?;
    }
    for (i, e) in f.exit_time.iter().enumerate() {
        positive(&format!("fk.exit_time[{i}].lambda"), e.lambda)?;
        positive(&format!("fk.exit_time[{i}].r"), e.r)?;
    }
    for (i, l) in c.resolvent.lambdas.iter().enumerate() {
        positive(&format!("resolvent.lambdas[{i}]"), *l)?;
    }
    for (i, r) in c.resolvent.radii.iter().enumerate() {
        positive(&format!("resolvent.radii[{i}]"), *r)?;
    }
    positive("resolvent.epsilon", c.resolvent.epsilon)?;
    let dir = &c.dirichlet;
    positive("dirichlet.radius", dir.radius)?;
    for (i, t) in dir.times.iter().enumerate() {
        positive(&format!("dirichlet.times[{i}]"), *t)?;
    }
    for (i, p) in dir.points.iter().enumerate() {
        if !(p.abs() < dir.radius) {
            return Err(field_err(
                &format!("dirichlet.points[{i}]"),
                format!("must lie inside the ball of radius {}, got {p}", dir.radius),
            ));
        }
    }
    if !(dir.min_c > 0.0 && dir.min_c <= 1.0) {
        return Err(field_err("dirichlet.min_c", format!("must lie in (0,1], got {}", dir.min_c)));
    }
    match (c.potential.kind.as_str(), &c.potential.table) {
        ("table", None) => return Err(field_err("potential.table", "is required for kind `table`")),
        ("table", Some(_)) => {
            if !c.potential.params.is_empty() {
                return Err(field_err("potential.params", "must be empty for kind `table`"));
            }
        }
        (_, Some(_)) => return Err(field_err("potential.table", "is only allowed for kind `table`")),
        (_, None) => {
            if c.potential.confining.is_some() {
                return Err(field_err("potential.confining", "is only allowed for kind `table`"));
            }
        }
    }
    Ok(())
}

fn build_potential(c: &RunConfig, base: &Path) -> Result<PotentialSpec, CliError> {
    let p = &c.potential;
    if p.kind == "table" {
        let rel = p.table.as_ref().expect("validated");
        let path = if rel.is_absolute() { rel.clone() } else { base.join(rel) };
        let table = read_table(&path, c.dimension, p.confining.unwrap_or(true))?;
        return PotentialSpec::table(table).map_err(|e| field_err("potential.table", e));
    }
    let params: Vec<(&str, f64)> = p.params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    PotentialSpec::from_catalog(&p.kind, &params, c.dimension).map_err(|e| field_err("potential", e))
}

/// Reads `x1,…,xd,value` rows. A first row that does not parse as numbers
/// is taken as a header; lines starting with `#` are comments.
pub fn read_table(path: &Path, dimension: usize, confining: bool) -> Result<Table, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("potential.table: cannot read {}: {e}", path.display())))?;
    let mut samples = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Config(format!("potential.table: {e}")))?;
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if row == 0 => continue,
            Err(e) => {
                return Err(CliError::Config(format!(
                    "potential.table: row {}: {e}",
                    row + 1
                )))
            }
        };
        if values.len() != dimension + 1 {
            return Err(CliError::Config(format!(
                "potential.table: row {} has {} columns, expected {}",
                row + 1,
                values.len(),
                dimension + 1
            )));
        }
        samples.push((values[..dimension].to_vec(), values[dimension]));
    }
    Table::from_samples(&samples, confining).map_err(|e| field_err("potential.table", e))
}
