//! Randomized invariants across the modules.

use std::f64::consts::PI;
use std::sync::OnceLock;

use gsdecay_core::feynman_kac::*;
use gsdecay_core::kernels::*;
use gsdecay_core::potentials::*;
use gsdecay_core::special::bessel_k_scaled;
use gsdecay_core::spectral::*;
use gsdecay_core::verify::*;
use proptest::prelude::*;

fn catalog_1d() -> Vec<PotentialSpec> {
    vec![
        PotentialSpec::power(1.0, 1).unwrap(),
        PotentialSpec::power(2.0, 1).unwrap(),
        PotentialSpec::log(1).unwrap(),
        PotentialSpec::affine_power(1.0, 1.0, 1.0, 1).unwrap(),
        PotentialSpec::exponential(1.0, 1).unwrap(),
    ]
}

fn unit_vector(angles: &[f64], d: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..d).map(|i| angles[i % angles.len()] + 0.1 * i as f64).collect();
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-9);
    v.iter_mut().for_each(|a| *a /= n);
    v
}

struct Cached {
    harmonic: GroundState,
    log: GroundState,
}

fn cached() -> &'static Cached {
    static CELL: OnceLock<Cached> = OnceLock::new();
    CELL.get_or_init(|| {
        let opts = SolverOptions::default();
        Cached {
            harmonic: solve_ground_state(
                &GridSpec::full(1, 10.0, 2000).unwrap(),
                &PotentialSpec::power(1.0, 1).unwrap(),
                &opts,
            )
            .unwrap(),
            log: solve_ground_state(&GridSpec::full(1, 30.0, 3001).unwrap(), &PotentialSpec::log(1).unwrap(), &opts)
                .unwrap(),
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sup_profile_dominates_the_ball(
        w in prop::collection::vec(0.2f64..5.0, 2),
        dir in prop::collection::vec(-1.0f64..1.0, 2),
        r in 0.5f64..6.0,
        delta in 0.05f64..2.0,
        probe in prop::collection::vec(-1.0f64..1.0, 2),
        frac in 0.0f64..1.0,
    ) {
        let v = PotentialSpec::anisotropic(w).unwrap();
        let x: Vec<f64> = unit_vector(&dir, 2).iter().map(|a| a * r).collect();
        let p = profile_sup(&v, &x, delta).unwrap();
        let rad = frac * (r + delta);
        let z: Vec<f64> = unit_vector(&probe, 2).iter().map(|a| a * rad).collect();
        prop_assert!(p.value + p.tolerance >= v.eval(&z).unwrap() * (1.0 - 1e-12));
    }

    #[test]
    fn inf_profile_is_below_the_ball(
        w in prop::collection::vec(0.2f64..5.0, 2),
        dir in prop::collection::vec(-1.0f64..1.0, 2),
        r in 0.5f64..6.0,
        delta in 0.05f64..0.95,
        probe in prop::collection::vec(-1.0f64..1.0, 2),
        frac in 0.0f64..0.999,
    ) {
        let v = PotentialSpec::anisotropic(w).unwrap();
        let x: Vec<f64> = unit_vector(&dir, 2).iter().map(|a| a * r).collect();
        let p = profile_inf(&v, &x, delta).unwrap();
        let off = unit_vector(&probe, 2);
        let z: Vec<f64> = x.iter().zip(&off).map(|(a, o)| a + o * frac * delta * r).collect();
        prop_assert!(p.value - p.tolerance <= v.eval(&z).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn radial_profiles_are_exact(
        which in 0usize..5,
        d in 1usize..4,
        dir in prop::collection::vec(-1.0f64..1.0, 3),
        r in 0.1f64..20.0,
        delta in 0.01f64..0.99,
    ) {
        let g = catalog_1d()[which].radial_profile().unwrap();
        let v = PotentialSpec::new(PotentialKind::Radial(g.clone()), d).unwrap();
        let x: Vec<f64> = unit_vector(&dir, d).iter().map(|a| a * r).collect();
        let sup = profile_sup(&v, &x, delta).unwrap();
        let inf = profile_inf(&v, &x, delta).unwrap();
        let rr = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        prop_assert_eq!(sup.value, g.eval(rr + delta));
        prop_assert!((inf.value - g.eval((1.0 - delta) * rr)).abs() <= 1e-12 * inf.value.max(1.0));
    }

    #[test]
    fn profiles_are_monotone_in_delta(
        w in prop::collection::vec(0.2f64..5.0, 2),
        dir in prop::collection::vec(-1.0f64..1.0, 2),
        r in 0.5f64..6.0,
        d1 in 0.05f64..0.9,
        gap in 0.01f64..0.09,
    ) {
        let v = PotentialSpec::anisotropic(w).unwrap();
        let x: Vec<f64> = unit_vector(&dir, 2).iter().map(|a| a * r).collect();
        let d2 = d1 + gap;
        let (s1, s2) = (profile_sup(&v, &x, d1).unwrap(), profile_sup(&v, &x, d2).unwrap());
        prop_assert!(s2.value + s2.tolerance + s1.tolerance >= s1.value);
        let (i1, i2) = (profile_inf(&v, &x, d1).unwrap(), profile_inf(&v, &x, d2).unwrap());
        prop_assert!(i2.value <= i1.value + i1.tolerance + i2.tolerance);
    }

    #[test]
    fn resolvent_decreases_in_radius_and_lambda(
        d in 1usize..5,
        lambda in 0.05f64..50.0,
        r in 0.01f64..20.0,
        dl in 0.001f64..5.0,
        dr in 0.001f64..5.0,
    ) {
        let base = resolvent_kernel_radial(lambda, r, d).unwrap();
        prop_assert!(resolvent_kernel_radial(lambda, r + dr, d).unwrap() < base);
        prop_assert!(resolvent_kernel_radial(lambda + dl, r, d).unwrap() < base);
        prop_assert!(base > 0.0);
    }

    #[test]
    fn bessel_asymptotic_ratio(nu_idx in 0usize..4, r in 5.0f64..500.0) {
        let nu = [0.0, 0.5, 1.0, 1.5][nu_idx];
        let dev = ((2.0 * r / PI).sqrt() * bessel_k_scaled(nu, r).unwrap() - 1.0).abs();
        prop_assert!(dev <= (4.0 * nu * nu - 1.0).abs() / (8.0 * r) + 1e-3);
    }

    #[test]
    fn dirichlet_ball_bound_holds_with_fitted_constant(
        t in 0.1f64..2.0,
        x in -0.5f64..0.5,
        y in -0.5f64..0.5,
    ) {
        let q = DirichletBallBoundQuery {
            t, x: vec![x], y: vec![y], r: 1.0,
            mu0: principal_dirichlet_eigenvalue(1).unwrap(),
            c: 0.2,
        };
        let bound = dirichlet_ball_lower_bound(&q).unwrap();
        prop_assert!(bound <= interval_dirichlet_heat_kernel(t, x, y, 1.0).unwrap());
    }

    #[test]
    fn epsilon_bookkeeping_round_trips(eps in 0.001f64..0.999) {
        let lo = lower_epsilon_prime(eps);
        prop_assert!(((1.0 + lo).powf(1.5) - 1.0 - eps).abs() < 1e-12);
        prop_assert!(lo > 0.0 && lo < eps);
        let up = upper_epsilon_prime(eps);
        prop_assert!(((1.0 - up).powi(2) - (1.0 - eps)).abs() < 1e-12);
        prop_assert!(up > 0.0 && up < eps);
    }

    #[test]
    fn upper_exponent_ordering_on_power_profiles(
        beta in 0.5f64..3.0,
        eps in 0.05f64..0.95,
        d1 in 0.02f64..0.95,
        d2 in 0.02f64..0.95,
        r in 1.0f64..50.0,
    ) {
        prop_assume!((d1 - d2).abs() > 1e-3);
        let v = PotentialSpec::power(beta, 1).unwrap();
        let exp_at = |delta: f64| {
            let s = EnvelopeSpec::upper(eps, delta);
            s.exponent(s.profile(&v, &[r]).unwrap(), r)
        };
        let arith = |delta: f64| delta * (1.0 - delta).powf(beta);
        let (e1, e2) = (exp_at(d1), exp_at(d2));
        prop_assert!(((e1 / e2) - arith(d1) / arith(d2)).abs() < 1e-9 * (e1 / e2));
        prop_assert_eq!(e1 < e2, arith(d1) < arith(d2));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn ground_state_is_positive(beta in 0.5f64..2.5, l in 4.0f64..8.0, n in 200usize..800) {
        let v = PotentialSpec::power(beta, 1).unwrap();
        let gs = solve_ground_state(&GridSpec::full(1, l, n).unwrap(), &v, &SolverOptions::default()).unwrap();
        let (first, last) = (0, gs.phi0.len() - 1);
        for (i, p) in gs.phi0.iter().enumerate() {
            if i != first && i != last {
                prop_assert!(*p > 0.0);
            }
        }
    }

    #[test]
    fn constant_shift_moves_lambda(c in 0.0f64..10.0, which in 0usize..4) {
        let v = catalog_1d()[which].clone();
        let grid = GridSpec::full(1, 6.0, 400).unwrap();
        let opts = SolverOptions { compute_gap: false, ..SolverOptions::default() };
        let a = solve_ground_state(&grid, &v, &opts).unwrap();
        let b = solve_ground_state(&grid, &PotentialSpec::shifted(v, c).unwrap(), &opts).unwrap();
        prop_assert!((b.lambda0 - a.lambda0 - c).abs() < 1e-7);
    }

    #[test]
    fn envelope_constants_are_positive_and_finite(
        eps in 0.05f64..0.95,
        delta in 0.05f64..0.95,
        use_log in any::<bool>(),
    ) {
        let c = cached();
        let (gs, v) = if use_log {
            (&c.log, PotentialSpec::log(1).unwrap())
        } else {
            (&c.harmonic, PotentialSpec::power(1.0, 1).unwrap())
        };
        let lower = theorem_lower_envelope(gs, &v, eps, delta).unwrap();
        prop_assert!(lower.c > 0.0 && lower.c.is_finite());
        prop_assert!(lower.violations.is_empty(), "{:?}", lower.violations);
        // With the fitted constant the envelope never exceeds φ₀.
        for p in &lower.points {
            prop_assert!(lower.c * (-p.exponent).exp() <= p.phi * (1.0 + 1e-12));
        }
        let upper = theorem_upper_envelope(gs, &v, eps, delta).unwrap();
        prop_assert!(upper.c.is_finite() && upper.c > 0.0);
        prop_assert!(upper.violations.is_empty());
    }

    #[test]
    fn decay_ratio_shift_under_rescaling(scale in 0.1f64..10.0) {
        let c = cached();
        let v = PotentialSpec::power(1.0, 1).unwrap();
        let base = decay_ratio_profile(&c.harmonic, default_rho(&v)).unwrap();
        let mut scaled = c.harmonic.clone();
        scaled.phi0.iter_mut().for_each(|p| *p *= scale);
        let moved = decay_ratio_profile(&scaled, default_rho(&v)).unwrap();
        prop_assert_eq!(base.points.len(), moved.points.len());
        for (a, b) in base.points.iter().zip(&moved.points) {
            let x = [a.radius];
            let rho = default_rho(&v)(&x);
            // The shift is exactly −ln(scale)/ϱ and fades as the window moves out.
            prop_assert!((b.ratio - a.ratio + scale.ln() / rho).abs() < 1e-10);
            if rho * 0.02 >= scale.ln().abs() {
                prop_assert!((b.ratio - a.ratio).abs() < 0.02);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn kernel_estimates_dominated_and_symmetric(
        x in -1.5f64..1.5,
        y in -1.5f64..1.5,
        t in 0.1f64..1.0,
        seed in any::<u64>(),
    ) {
        let v = PotentialSpec::log(1).unwrap();
        let cfg = PathSamplerConfig { paths: 8_000, steps: 40, seed, ..PathSamplerConfig::default() };
        let a = fk_kernel_estimate(&v, t, &[x], &[y], &cfg).unwrap();
        let b = fk_kernel_estimate(&v, t, &[y], &[x], &cfg).unwrap();
        prop_assert!(a.mean > 0.0);
        prop_assert!(a.mean <= a.free * (1.0 + 3.0 * a.stderr / a.mean));
        prop_assert!((a.mean - b.mean).abs() <= 3.0 * a.stderr.hypot(b.stderr) + 1e-12);
    }
}

#[test]
fn profiles_grow_without_bound_for_confining_kinds() {
    for v in catalog_1d() {
        let mut prev = (0.0, 0.0);
        for r in [10.0, 50.0, 200.0, 600.0] {
            let s = profile_sup(&v, &[r], 0.5).unwrap().value;
            let i = profile_inf(&v, &[r], 0.5).unwrap().value;
            assert!(s > prev.0 && i > prev.1, "{}", v.tag());
            prev = (s, i);
        }
        assert!(prev.1 > 10.0, "{}: {prev:?}", v.tag());
    }
}

#[test]
fn condition_verdicts_are_deterministic() {
    let g = |r: f64| (std::f64::consts::E + r).ln();
    let a = check_condition_one(g, 0.1, ScanWindow::default()).unwrap();
    let b = check_condition_one(g, 0.1, ScanWindow::default()).unwrap();
    assert_eq!(a, b);
    let a = check_condition_two(g, 0.1, 0.9, ScanWindow::default()).unwrap();
    let b = check_condition_two(g, 0.1, 0.9, ScanWindow::default()).unwrap();
    assert_eq!(a, b);
}
