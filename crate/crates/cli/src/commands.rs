use gsdecay_core::feynman_kac::{
    check_lower_sandwich, check_upper_sandwich, exit_time_laplace_converged, MonteCarloKernel,
    SandwichCheckResult,
};
use gsdecay_core::kernels::{
    fit_dirichlet_constant, resolvent_half_laplacian, resolvent_kernel_radial,
    resolvent_lower_bound_witness, WitnessWindow,
};
use gsdecay_core::spectral::{solve_ground_state, GroundState};
use gsdecay_core::verify::{verify_ground_state, VerificationReport};

use crate::config::Loaded;
use crate::error::CliError;
use crate::output::{num, point, OutputDir};

/// Outcome of one command: named verdicts plus human-readable lines.
#[derive(Default)]
pub struct Outcome {
    pub checks: Vec<(String, bool)>,
    pub lines: Vec<String>,
}

impl Outcome {
    fn check(&mut self, name: impl Into<String>, pass: bool) {
        self.checks.push((name.into(), pass));
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|(_, ok)| !ok)
            .map(|(n, _)| n.clone())
            .collect()
    }

    pub fn merge(&mut self, other: Outcome) {
        self.checks.extend(other.checks);
        self.lines.extend(other.lines);
    }
}

fn grid_meta(gs: &GroundState) -> String {
    format!(
        "d={} L={} n={} radial={} h={}",
        gs.grid.dimension,
        num(gs.grid.half_width),
        gs.grid.points,
        gs.grid.radial,
        num(gs.grid.spacing())
    )
}

pub fn solve(cfg: &Loaded, out: &mut OutputDir) -> Result<(GroundState, Outcome), CliError> {
    let gs = solve_ground_state(&cfg.grid(), &cfg.potential, &cfg.solver())?;
    let d = gs.grid.dimension;
    let mut header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    header.push("phi0".into());
    header.push("V".into());
    let mut rows = Vec::with_capacity(gs.phi0.len());
    for (i, phi) in gs.phi0.iter().enumerate() {
        let x = gs.point(i);
        let mut row: Vec<String> = x.iter().map(|v| num(*v)).collect();
        row.push(num(*phi));
        row.push(num(cfg.potential.eval(&x)?));
        rows.push(row);
    }
    let mut meta = vec![
        ("potential", cfg.potential_id()),
        ("lambda0", num(gs.lambda0)),
        ("residual", num(gs.residual)),
        ("grid", grid_meta(&gs)),
    ];
    if let Some(gap) = gs.gap() {
        meta.push(("gap", num(gap)));
    }
    out.csv("ground-state.csv", &meta, &header, &rows)?;
    let mut o = Outcome::default();
    o.lines.push(format!("lambda0 = {}", gs.lambda0));
    o.lines.push(format!("residual = {:e}", gs.residual));
    if let Some(gap) = gs.gap() {
        o.lines.push(format!("gap = {gap}"));
    }
    for w in &gs.warnings {
        o.lines.push(format!("warning: {w}"));
    }
    Ok((gs, o))
}

pub fn envelope(cfg: &Loaded, out: &mut OutputDir) -> Result<(VerificationReport, Outcome), CliError> {
    let (gs, mut o) = solve(cfg, out)?;
    let report = verify_ground_state(&gs, &cfg.potential, &cfg.plan())?;

    let header = [
        "side", "epsilon", "delta", "epsilon_prime", "c", "r", "c_inner", "c_outer", "violations",
        "stable", "pass",
    ]
    .map(String::from);
    let rows: Vec<Vec<String>> = report
        .envelopes
        .iter()
        .map(|e| {
            let r = &e.result;
            vec![
                r.spec.side.as_str().into(),
                num(r.spec.epsilon),
                num(r.spec.delta),
                num(e.epsilon_prime),
                num(r.c),
                num(r.r),
                num(r.c_inner),
                num(r.c_outer),
                r.violations.len().to_string(),
                r.stable.to_string(),
                r.pass.to_string(),
            ]
        })
        .collect();
    let meta = [("potential", cfg.potential_id()), ("grid", grid_meta(&gs))];
    out.csv("envelopes.csv", &meta, &header, &rows)?;

    let rows: Vec<Vec<String>> = report
        .ratio
        .points
        .iter()
        .map(|p| vec![p.ray.to_string(), num(p.radius), num(p.ratio)])
        .collect();
    out.csv("ratio.csv", &meta, &["ray", "radius", "ratio"].map(String::from), &rows)?;

    if let Some(p) = &report.power {
        let rows: Vec<Vec<String>> = p
            .points
            .iter()
            .map(|q| vec![num(q.radius), num(q.exponent_ratio), num(q.comparability)])
            .collect();
        out.csv(
            "power-sharp.csv",
            &meta,
            &["radius", "exponent_ratio", "comparability"].map(String::from),
            &rows,
        )?;
    }

    let mut kv: Vec<(String, String)> = vec![
        ("potential".into(), report.potential_id.clone()),
        ("grid".into(), grid_meta(&gs)),
        ("lambda0".into(), num(report.lambda0)),
        ("residual".into(), num(report.residual)),
        ("seed".into(), cfg.config.fk.seed.to_string()),
        ("ratio.min".into(), num(report.ratio.min)),
        ("ratio.max".into(), num(report.ratio.max)),
        ("ratio.intercept".into(), num(report.ratio.intercept)),
        ("ratio.slope".into(), num(report.ratio.slope)),
        ("ratio.checked".into(), report.ratio_checked.to_string()),
    ];
    if let Some(c) = &report.conditions {
        kv.push(("condition_one.holds".into(), c.one.holds.to_string()));
        kv.push(("condition_one.delta".into(), num(c.one.delta)));
        kv.push(("condition_one.t0".into(), num(c.one.t0)));
        kv.push(("condition_two.holds".into(), c.two.holds.to_string()));
        kv.push(("condition_two.t0".into(), num(c.two.t0)));
    }
    if let Some(p) = &report.power {
        kv.push(("power.exponent_min".into(), num(p.exponent_range.0)));
        kv.push(("power.exponent_max".into(), num(p.exponent_range.1)));
        kv.push(("power.band".into(), num(p.band)));
    }
    for (name, pass) in report.summary() {
        kv.push((format!("check.{name}"), verdict(pass).into()));
    }
    for w in &report.warnings {
        kv.push(("warning".into(), w.clone()));
    }
    for n in &report.notes {
        kv.push(("note".into(), n.clone()));
    }
    for p in report.power.iter().flat_map(|p| &p.notes) {
        kv.push(("note".into(), p.clone()));
    }
    kv.push(("pass".into(), report.pass.to_string()));
    out.text("report.txt", &kv)?;

    for (name, pass) in report.summary() {
        o.check(name, pass);
    }
    if let Some(c) = &report.conditions {
        o.lines.push(format!(
            "condition (I): {} (delta = {}), condition (II): {}",
            holds(c.one.holds),
            c.one.delta,
            holds(c.two.holds)
        ));
    }
    o.lines.push(format!(
        "decay ratio on window: [{:.4}, {:.4}], intercept {:.4}",
        report.ratio.min, report.ratio.max, report.ratio.intercept
    ));
    for n in &report.notes {
        o.lines.push(format!("note: {n}"));
    }
    Ok((report, o))
}

pub fn kernel_checks(cfg: &Loaded, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let c = &cfg.config;
    let d = c.dimension;
    let mut o = Outcome::default();
    let meta = [("potential", cfg.potential_id()), ("seed", c.fk.seed.to_string())];

    if c.checks.sandwich {
        let source = MonteCarloKernel {
            config: cfg.sampler(),
        };
        let samples = cfg.sandwich_samples();
        let lower = check_lower_sandwich(&cfg.potential, c.fk.epsilon, c.fk.delta, &samples, &source)?;
        let upper =
            check_upper_sandwich(&cfg.potential, c.fk.epsilon, c.fk.delta, c.fk.b, &samples, &source)?;
        for r in [&lower, &upper] {
            write_sandwich(out, &meta, r)?;
            o.check(format!("sandwich {}", r.side.as_str()), r.pass);
            o.lines.push(format!(
                "sandwich {}: fitted {:e} (conservative {:e}), {} points, {} rejected",
                r.side.as_str(),
                r.fitted,
                r.fitted_conservative,
                r.points.len(),
                r.rejected.len()
            ));
        }
    }

    if c.checks.exit_time {
        let sampler = cfg.sampler();
        let mut rows = Vec::new();
        for e in &c.fk.exit_time {
            let est = exit_time_laplace_converged(e.lambda, e.r, d, &sampler, c.fk.max_halvings)?;
            let v = est.value;
            let bound = (-(1.0 - c.fk.epsilon) * e.lambda.sqrt() * e.r).exp();
            let fitted_c = v.mean / bound;
            let (exact, ok) = if d == 1 {
                let exact = 1.0 / (e.r * e.lambda.sqrt()).cosh();
                let tol = (3.0 * v.stderr).max(0.02 * exact);
                (exact, est.converged && (v.mean - exact).abs() <= tol && fitted_c <= 2.0)
            } else {
                (f64::NAN, est.converged)
            };
            o.check(format!("exit time lambda={} r={}", e.lambda, e.r), ok);
            rows.push(vec![
                num(e.lambda),
                num(e.r),
                num(v.mean),
                num(v.stderr),
                num(exact),
                est.steps.to_string(),
                est.converged.to_string(),
                num(fitted_c),
                verdict(ok).into(),
            ]);
        }
        out.csv(
            "exit-time.csv",
            &meta,
            &["lambda", "r", "mean", "stderr", "closed_form", "steps", "bias_cleared", "fitted_C", "verdict"]
                .map(String::from),
            &rows,
        )?;
    }

    if c.checks.resolvent {
        let mut rows = Vec::new();
        let mut all_ok = true;
        for &lambda in &c.resolvent.lambdas {
            let mut prev = f64::INFINITY;
            for &r in &c.resolvent.radii {
                let value = resolvent_kernel_radial(lambda, r, d)?;
                let k = lambda.sqrt();
                let closed = match d {
                    1 => (-k * r).exp() / (2.0 * k),
                    3 => (-k * r).exp() / (4.0 * std::f64::consts::PI * r),
                    _ => f64::NAN,
                };
                let mut y = vec![0.0; d];
                y[0] = r;
                let relation = resolvent_half_laplacian(lambda, &y)? - 2.0 * resolvent_kernel_radial(2.0 * lambda, r, d)?;
                let rel_err = ((value - closed) / closed).abs();
                let ok = (closed.is_nan() || rel_err <= 1e-8)
                    && relation.abs() <= 1e-9 * value.max(1e-300)
                    && value < prev;
                all_ok &= ok;
                prev = value;
                rows.push(vec![num(lambda), num(r), num(value), num(closed), num(relation), verdict(ok).into()]);
            }
        }
        let witness = resolvent_lower_bound_witness(c.resolvent.epsilon, d, WitnessWindow::default())?;
        o.check("resolvent closed forms", all_ok);
        o.check("resolvent lower-bound witness", witness.holds);
        o.lines.push(format!(
            "resolvent witness: rho = {}, c = {:e} over {} points",
            witness.rho, witness.c, witness.points_checked
        ));
        let mut wmeta = meta.to_vec();
        wmeta.push(("witness_rho", num(witness.rho)));
        wmeta.push(("witness_c", num(witness.c)));
        out.csv(
            "resolvent.csv",
            &wmeta,
            &["lambda", "r", "value", "closed_form", "relation_residual", "verdict"].map(String::from),
            &rows,
        )?;
    }

    if c.checks.dirichlet {
        if d == 1 {
            let dc = &c.dirichlet;
            let mut samples = Vec::new();
            for &t in &dc.times {
                for &x in &dc.points {
                    for &y in &dc.points {
                        samples.push((t, x, y));
                    }
                }
            }
            let fit = fit_dirichlet_constant(&samples, dc.radius)?;
            let ok = fit.c >= dc.min_c;
            o.check("dirichlet ball bound", ok);
            o.lines.push(format!("dirichlet ball bound: fitted c = {}", fit.c));
            out.csv(
                "dirichlet.csv",
                &meta,
                &["c", "worst_t", "worst_x", "worst_y", "samples", "verdict"].map(String::from),
                &[vec![
                    num(fit.c),
                    num(fit.worst.0),
                    num(fit.worst.1),
                    num(fit.worst.2),
                    fit.samples.to_string(),
                    verdict(ok).into(),
                ]],
            )?;
        } else {
            o.lines.push("dirichlet ball bound: skipped (exact kernel available in d = 1 only)".into());
        }
    }
    Ok(o)
}

fn write_sandwich(out: &mut OutputDir, meta: &[(&str, String)], r: &SandwichCheckResult) -> Result<(), CliError> {
    let mut m = meta.to_vec();
    m.push(("epsilon", num(r.epsilon)));
    m.push(("delta", num(r.delta)));
    m.push(("fitted", num(r.fitted)));
    m.push(("fitted_conservative", num(r.fitted_conservative)));
    m.push(("stderr_budget", num(r.stderr_budget)));
    if let Some(rho) = r.radius {
        m.push(("rho1", num(rho)));
    }
    if let Some(a) = r.a {
        m.push(("a", num(a)));
    }
    m.push(("pass", r.pass.to_string()));
    let rows: Vec<Vec<String>> = r
        .points
        .iter()
        .map(|p| {
            vec![
                point(&p.sample.x),
                point(&p.sample.y),
                num(p.sample.t),
                num(p.estimate),
                num(p.stderr),
                num(p.envelope),
                num(p.ratio),
            ]
        })
        .chain(r.rejected.iter().map(|(s, why)| {
            vec![point(&s.x), point(&s.y), num(s.t), String::new(), String::new(), String::new(), format!("rejected: {why}")]
        }))
        .collect();
    out.csv(
        &format!("sandwich-{}.csv", r.side.as_str()),
        &m,
        &["x", "y", "t", "estimate", "stderr", "envelope", "ratio"].map(String::from),
        &rows,
    )
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

fn holds(h: bool) -> &'static str {
    if h {
        "holds"
    } else {
        "fails"
    }
}
