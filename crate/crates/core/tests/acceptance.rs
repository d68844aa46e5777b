//! Acceptance suite: every criterion pinned here with its tolerance and
//! runtime budget. Run with `cargo test --test acceptance -- --nocapture`
//! to see one pass/fail line per criterion.

use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use riccati_nonosc_core::linalg::CMatrix;
use riccati_nonosc_core::oscillation::{
    delta_experiment, integrate_system, verify_theorem, Verdict,
};
use riccati_nonosc_core::riccati::{
    det_lower_bound_check, hermitian_flow_residual, integrate_linear_pair, integrate_riccati,
    liouville_phi_residual, FrozenCoefficients, IntervalEnd,
};
use riccati_nonosc_core::scenario::{build_scenario, builtin_scenario, BuiltScenario};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn built(name: &str) -> BuiltScenario {
    build_scenario(&builtin_scenario(name).unwrap()).unwrap()
}

fn built_with_horizon(name: &str, horizon: f64) -> BuiltScenario {
    let mut file = builtin_scenario(name).unwrap();
    file.horizon_end = horizon;
    build_scenario(&file).unwrap()
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// `G* G`: Hermitian PSD by construction.
fn gram(g: &CMatrix) -> CMatrix {
    &g.adjoint() * g
}

const PROP_DIMS: [usize; 5] = [1, 2, 3, 5, 8];
const PROP_INSTANCES: usize = 1000;

#[test]
fn criterion_1_trace_and_cone_property_suites() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_260_808);

    for &n in &PROP_DIMS {
        for _ in 0..PROP_INSTANCES {
            // Trace cyclicity.
            let m1 = random_matrix(&mut rng, n);
            let m2 = random_matrix(&mut rng, n);
            let lhs = (&m1 * &m2).trace();
            let rhs = (&m2 * &m1).trace();
            let scale = 1.0 + m1.norm_fro() * m2.norm_fro();
            assert!(
                (lhs - rhs).norm() <= 1e-12 * scale,
                "trace cyclicity violated at n = {n}"
            );

            // tr(H1 H2) >= 0 on the PSD cone.
            let h1 = gram(&random_matrix(&mut rng, n));
            let h2 = gram(&random_matrix(&mut rng, n));
            let tr = (&h1 * &h2).trace();
            let scale = 1.0 + h1.norm_fro() * h2.norm_fro();
            assert!(tr.re >= -1e-12 * scale, "Re tr(H1 H2) = {} at n = {n}", tr.re);
            assert!(tr.im.abs() <= 1e-12 * scale, "Im tr(H1 H2) = {} at n = {n}", tr.im);

            // Congruence V H V* stays in the cone.
            let v = random_matrix(&mut rng, n);
            let h = gram(&random_matrix(&mut rng, n));
            let vhv = &(&v * &h) * &v.adjoint();
            let herm = vhv.hermitian_part();
            let lambda = herm.min_eigenvalue().unwrap();
            let scale = 1.0f64.max(herm.norm_fro());
            assert!(
                lambda >= -1e-10 * scale,
                "lambda_min(V H V*) = {lambda} at n = {n}"
            );
        }
    }

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "property suites took {elapsed:.2} s (budget 5 s)");
    println!(
        "ACCEPTANCE 1 trace-and-cone-property-suites ({} instances per property, n in {PROP_DIMS:?}): PASS ({elapsed:.2} s)",
        PROP_INSTANCES
    );
}

#[test]
fn criterion_2_closed_form_riccati_oracles() {
    // E1: Y = 1/(1+t) on [0,10], sup error <= 1e-7.
    let t_e1 = Instant::now();
    let b = built("e1");
    let caps = b.thresholds.caps();
    let traj = integrate_system(&b.spec, &b.init, 10.0, &caps);
    let frozen = FrozenCoefficients::new(&b.spec, &traj).unwrap();
    let sol = integrate_riccati(&frozen, &b.init.y0, (0.0, 10.0), &caps).unwrap();
    let mut sup = 0.0f64;
    for m in sol.monitors() {
        sup = sup.max((m.norm_y - 1.0 / (1.0 + m.t)).abs());
    }
    assert!(sup <= 1e-7, "E1 sup error {sup:.3e}");
    let e1_s = t_e1.elapsed().as_secs_f64();
    assert!(e1_s < 1.0, "E1 took {e1_s:.2} s");

    // E2: Y = 1 stationary, sup error <= 1e-8.
    let t_e2 = Instant::now();
    let b = built("e2");
    let traj = integrate_system(&b.spec, &b.init, 10.0, &caps);
    let frozen = FrozenCoefficients::new(&b.spec, &traj).unwrap();
    let sol = integrate_riccati(&frozen, &b.init.y0, (0.0, 10.0), &caps).unwrap();
    let mut sup = 0.0f64;
    for m in sol.monitors() {
        sup = sup.max((m.norm_y - 1.0).abs());
    }
    assert!(sup <= 1e-8, "E2 sup error {sup:.3e}");
    let e2_s = t_e2.elapsed().as_secs_f64();
    assert!(e2_s < 1.0, "E2 took {e2_s:.2} s");

    // E3: blow-up at 3 pi / 4 within 1e-3.
    let t_e3 = Instant::now();
    let b = built("e3");
    let traj = integrate_system(&b.spec, &b.init, b.horizon_end, &caps);
    let frozen = FrozenCoefficients::new(&b.spec, &traj).unwrap();
    let sol = integrate_riccati(&frozen, &b.init.y0, (0.0, b.horizon_end), &caps).unwrap();
    let expected = 3.0 * std::f64::consts::FRAC_PI_4;
    match sol.interval_end() {
        IntervalEnd::Finite { t, .. } => {
            assert!((t - expected).abs() <= 1e-3, "E3 blow-up at {t}, expected {expected}")
        }
        other => panic!("E3 expected finite interval, got {other:?}"),
    }
    let e3_s = t_e3.elapsed().as_secs_f64();
    assert!(e3_s < 1.0, "E3 took {e3_s:.2} s");

    println!(
        "ACCEPTANCE 2 closed-form-riccati (E1 {e1_s:.2} s, E2 {e2_s:.2} s, E3 {e3_s:.2} s): PASS"
    );
}

/// Shared setup for criteria 3-5: both flows on a scenario's own horizon.
fn flows(
    name: &str,
) -> (
    BuiltScenario,
    riccati_nonosc_core::integrate::Trajectory,
) {
    let b = built(name);
    let caps = b.thresholds.caps();
    let traj = integrate_system(&b.spec, &b.init, b.horizon_end, &caps);
    assert!(traj.reached_end(), "{name} system integration");
    (b, traj)
}

#[test]
fn criterion_3_reconstruction_equivalence() {
    for name in ["e1", "e2", "e4"] {
        let (b, traj) = flows(name);
        let caps = b.thresholds.caps();
        let frozen = FrozenCoefficients::new(&b.spec, &traj).unwrap();
        let n = b.init.y0.dim();
        let sol =
            integrate_riccati(&frozen, &b.init.y0, (b.init.t1, b.horizon_end), &caps).unwrap();
        let pair = integrate_linear_pair(
            &frozen,
            &CMatrix::identity(n),
            &b.init.y0,
            (b.init.t1, b.horizon_end),
            &caps,
        )
        .unwrap();
        // Absolute sup over nodes with cond(Phi) <= 1e8.
        let mut sup_abs = 0.0f64;
        let mut checked = 0usize;
        for &t in sol.trajectory().nodes() {
            match riccati_nonosc_core::riccati::riccati_from_linear(&pair, t, 1e8) {
                Ok(y1) => {
                    let y = sol.eval(t).unwrap();
                    sup_abs = sup_abs.max((&y - &y1).norm_fro());
                    checked += 1;
                }
                Err(_) => continue,
            }
        }
        assert!(checked > 0, "{name}: no nodes passed the condition gate");
        assert!(sup_abs <= 1e-6, "{name}: equivalence sup {sup_abs:.3e}");
    }
    println!("ACCEPTANCE 3 reconstruction-equivalence (E1, E2, E4): PASS");
}

#[test]
fn criterion_4_liouville_and_flow_residuals() {
    for name in ["e1", "e2", "e4"] {
        let (b, traj) = flows(name);
        let caps = b.thresholds.caps();
        let frozen = FrozenCoefficients::new(&b.spec, &traj).unwrap();
        let n = b.init.y0.dim();
        let sol =
            integrate_riccati(&frozen, &b.init.y0, (b.init.t1, b.horizon_end), &caps).unwrap();
        let pair = integrate_linear_pair(
            &frozen,
            &CMatrix::identity(n),
            &b.init.y0,
            (b.init.t1, b.horizon_end),
            &caps,
        )
        .unwrap();
        let liouville = liouville_phi_residual(&pair, &frozen, &sol, None).unwrap();
        assert!(
            liouville.sup <= 1e-6,
            "{name}: Liouville residual {:.3e}",
            liouville.sup
        );
        let flow = hermitian_flow_residual(&sol, &frozen, None).unwrap();
        assert!(flow.sup <= 1e-6, "{name}: flow residual {:.3e}", flow.sup);
    }
    println!("ACCEPTANCE 4 liouville-determinant-and-hermitian-flow (E1, E2, E4): PASS");
}

#[test]
fn criterion_5_det_lower_bound() {
    let mut margins = Vec::new();
    for name in ["e1", "e2", "e4"] {
        let (b, traj) = flows(name);
        let caps = b.thresholds.caps();
        let frozen = FrozenCoefficients::new(&b.spec, &traj).unwrap();
        let sol =
            integrate_riccati(&frozen, &b.init.y0, (b.init.t1, b.horizon_end), &caps).unwrap();
        // The whole horizon is cone-interior for these scenarios.
        let check = det_lower_bound_check(&sol, &frozen, (b.init.t1, b.horizon_end)).unwrap();
        assert!(check.holds, "{name}: det bound failed, margin {}", check.worst_margin);
        margins.push((name, check.worst_margin));
    }

    // E1 analytic instance on [0, 1]: c = 2 ln 2, bound 0.5, det U(1) = 1.
    let (b, traj) = flows("e1");
    let caps = b.thresholds.caps();
    let frozen = FrozenCoefficients::new(&b.spec, &traj).unwrap();
    let sol = integrate_riccati(&frozen, &b.init.y0, (0.0, 10.0), &caps).unwrap();
    let check = det_lower_bound_check(&sol, &frozen, (0.0, 1.0)).unwrap();
    assert!((check.c - 2.0 * 2.0f64.ln()).abs() <= 1e-6, "c = {}", check.c);
    assert!((check.bound - 0.5).abs() <= 1e-6, "bound = {}", check.bound);
    let det_end = sol.eval(1.0).unwrap().hermitian_part().determinant_re();
    assert!((det_end - 1.0).abs() <= 1e-6, "det U(1) = {det_end}");
    assert!(check.holds);

    println!("ACCEPTANCE 5 det-lower-bound margins {margins:?} and E1 instance (c=2ln2, bound=0.5): PASS");
}

#[test]
fn criterion_6_theorem_engine() {
    let start = Instant::now();

    for name in ["e1", "e2", "e4"] {
        let b = built_with_horizon(name, 20.0);
        let report =
            verify_theorem(&b.spec, &b.init, 20.0, &b.plan, &b.thresholds, &b.deltas).unwrap();
        assert!(
            report.overall_pass,
            "{name}: reasons {:?}",
            report.reasons
        );
        assert_eq!(report.oscillation.verdict, Verdict::NonoscillatoryOnHorizon);
        assert!(
            report.riccati_cone.first_violation_time.is_none(),
            "{name}: lambda_min fell below -1e-7 scale at {:?}",
            report.riccati_cone.first_violation_time
        );
    }

    // E3: hypotheses violated; zero detected at 3 pi/4 within 1e-6 and a
    // cone exit recorded.
    let b = built("e3");
    let report =
        verify_theorem(&b.spec, &b.init, b.horizon_end, &b.plan, &b.thresholds, &b.deltas)
            .unwrap();
    assert!(!report.overall_pass);
    assert_eq!(report.oscillation.verdict, Verdict::ZeroDetected);
    let first = report.oscillation.zero_events[0];
    let expected = 3.0 * std::f64::consts::FRAC_PI_4;
    assert!(
        (first - expected).abs() <= 1e-6,
        "E3 zero at {first}, expected {expected}"
    );
    assert!(
        report.riccati_cone.first_nonpositive_time.is_some(),
        "E3 cone exit missing"
    );

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "theorem engine took {elapsed:.2} s (budget 10 s)");
    println!("ACCEPTANCE 6 theorem-engine (E1, E2, E4 pass; E3 zero+cone-exit): PASS ({elapsed:.2} s)");
}

#[test]
fn criterion_7_delta_regularization() {
    // E1 variant with Y(0) = 0: closed form Y_delta = delta/(1 + delta t).
    let b = built("e1");
    let caps = b.thresholds.caps();
    let traj = integrate_system(&b.spec, &b.init, 10.0, &caps);
    let frozen = FrozenCoefficients::new(&b.spec, &traj).unwrap();
    let deltas = [1e-1, 1e-2, 1e-3, 1e-4];
    let rep = delta_experiment(&frozen, &CMatrix::zeros(1), &deltas, (0.0, 10.0), &caps).unwrap();

    for run in &rep.runs {
        assert!(run.all_positive, "lambda_delta dipped for delta {}", run.delta);
        for (i, &t) in rep.grid.iter().enumerate() {
            let closed = 2.0 * run.delta / (1.0 + run.delta * t);
            assert!(
                (run.lambda_profile[i] - closed).abs() <= 1e-7 * closed.max(1e-10),
                "delta {}: lambda({t}) = {} vs closed form {closed}",
                run.delta,
                run.lambda_profile[i]
            );
        }
    }
    for (i, &t) in rep.grid.iter().enumerate() {
        assert!(
            rep.limit_profile[i].abs() <= 1e-3,
            "extrapolated limit {} at t = {t}",
            rep.limit_profile[i]
        );
    }
    assert!(rep.sup_limit_vs_base <= 1e-3);

    println!("ACCEPTANCE 7 delta-regularization (lambda_delta > 0, limit -> 0): PASS");
}
