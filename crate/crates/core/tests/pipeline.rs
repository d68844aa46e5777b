//! End-to-end pipeline checks on the four example scenarios, pinned to
//! their closed forms where available.

use num_complex::Complex64;
use riccati_nonosc_core::linalg::CMatrix;
use riccati_nonosc_core::oscillation::{
    delta_experiment, integrate_system, make_conjoined, oscillation_monitor, reconstruct_phi_check,
    verify_theorem, ConjoinedError, Verdict,
};
use riccati_nonosc_core::riccati::{FrozenCoefficients, IntervalEnd};
use riccati_nonosc_core::scenario::{build_scenario, builtin_scenario, BuiltScenario};
use riccati_nonosc_core::system::CoefficientModel;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn built(name: &str) -> BuiltScenario {
    build_scenario(&builtin_scenario(name).unwrap()).unwrap()
}

#[test]
fn e1_system_matches_closed_form() {
    // phi = 1 + t, psi = 1.
    let b = built("e1");
    let traj = integrate_system(&b.spec, &b.init, 10.0, &b.thresholds.caps());
    assert!(traj.reached_end());
    for (i, &t) in traj.nodes().iter().enumerate() {
        let s = traj.state_at_node(i);
        assert!((s[0].re - (1.0 + t)).abs() < 1e-7, "phi({t})");
        assert!((s[1].re - 1.0).abs() < 1e-9, "psi({t})");
    }
}

#[test]
fn e2_system_matches_exponentials() {
    let b = built("e2");
    let traj = integrate_system(&b.spec, &b.init, 10.0, &b.thresholds.caps());
    assert!(traj.reached_end());
    for (i, &t) in traj.nodes().iter().enumerate() {
        let s = traj.state_at_node(i);
        let e = t.exp();
        assert!((s[0].re - e).abs() / e < 1e-7, "phi({t})");
        assert!((s[1].re - e).abs() / e < 1e-7, "psi({t})");
    }
}

#[test]
fn e3_system_matches_trig() {
    let b = built("e3");
    let traj = integrate_system(&b.spec, &b.init, 2.0 * std::f64::consts::PI, &b.thresholds.caps());
    assert!(traj.reached_end());
    for (i, &t) in traj.nodes().iter().enumerate() {
        let s = traj.state_at_node(i);
        assert!((s[0].re - (t.cos() + t.sin())).abs() < 1e-8, "phi({t})");
        assert!((s[1].re - (t.cos() - t.sin())).abs() < 1e-8, "psi({t})");
    }
}

#[test]
fn make_conjoined_accepts_boundary_rejects_zero_and_negative() {
    let b = built("e1");
    // Purely imaginary scalar: Y + Y* = 0 (cone boundary) is accepted.
    let y_imag = CMatrix::from_rows(&[vec![c(0.0, 1.0)]]).unwrap();
    make_conjoined(&b.spec, 0.0, vec![c(1.0, 0.0)], y_imag).unwrap();
    // Zero phi rejected.
    let err = make_conjoined(
        &b.spec,
        0.0,
        vec![c(0.0, 0.0)],
        CMatrix::identity(1),
    )
    .unwrap_err();
    assert_eq!(err, ConjoinedError::ZeroPhi);
    // Negative Hermitian part rejected.
    let y_neg = CMatrix::from_rows(&[vec![c(-1.0, 0.0)]]).unwrap();
    let err = make_conjoined(&b.spec, 0.0, vec![c(1.0, 0.0)], y_neg).unwrap_err();
    assert!(matches!(err, ConjoinedError::NotConeAdmissible { .. }));
}

#[test]
fn oscillation_monitor_on_e1_and_e3() {
    let b = built("e1");
    let traj = integrate_system(&b.spec, &b.init, 10.0, &b.thresholds.caps());
    let v = oscillation_monitor(&traj, 1, 0.0, Some(1e-6));
    assert_eq!(v.verdict, Verdict::NonoscillatoryOnHorizon);
    assert!((v.min_phi_norm - 1.0).abs() < 1e-9, "min phi norm {}", v.min_phi_norm);

    let b3 = built("e3");
    let traj = integrate_system(&b3.spec, &b3.init, 2.0 * std::f64::consts::PI, &b3.thresholds.caps());
    let v = oscillation_monitor(&traj, 1, 0.0, Some(1e-6));
    assert_eq!(v.verdict, Verdict::ZeroDetected);
    let first = v.zero_events[0];
    let expected = 3.0 * std::f64::consts::FRAC_PI_4;
    assert!(
        (first - expected).abs() <= 1e-6,
        "first zero at {first}, expected {expected}"
    );
    // Second zero near 7 pi / 4.
    assert!(v.zero_events.len() >= 2, "events: {:?}", v.zero_events);
    let second = v.zero_events[1];
    assert!((second - 7.0 * std::f64::consts::FRAC_PI_4).abs() <= 1e-5);

    // Degenerate observation window.
    let v = oscillation_monitor(&traj, 1, traj.t_end(), Some(1e-6));
    assert_eq!(v.verdict, Verdict::Inconclusive);
}

#[test]
fn verify_theorem_e1_passes() {
    let b = built("e1");
    let report = verify_theorem(&b.spec, &b.init, b.horizon_end, &b.plan, &b.thresholds, &b.deltas)
        .unwrap();
    assert!(report.overall_pass, "reasons: {:?}", report.reasons);
    assert!(report.hypothesis.envelopes_ok());
    assert!(report.hypothesis.cone_ok());
    assert!(report.riccati_cone.min_lambda > 0.0);
    assert_eq!(report.oscillation.verdict, Verdict::NonoscillatoryOnHorizon);
    assert!(report.identity_residuals.hermitian_flow.pass);
    assert!(report.identity_residuals.liouville_det.pass);
    assert!(report.identity_residuals.reconstruction.pass);
}

#[test]
fn verify_theorem_e3_fails_with_exact_reasons() {
    let b = built("e3");
    let report = verify_theorem(&b.spec, &b.init, b.horizon_end, &b.plan, &b.thresholds, &b.deltas)
        .unwrap();
    assert!(!report.overall_pass);
    assert_eq!(
        report.reasons,
        vec!["cone_hypothesis_violated".to_string(), "zero_detected".to_string()],
        "reasons were {:?}",
        report.reasons
    );
    // Cone exit and finite interval are recorded as data.
    assert!(report.riccati_cone.first_nonpositive_time.is_some());
    match report.riccati_cone.interval_end {
        IntervalEnd::Finite { t, .. } => {
            assert!((t - 3.0 * std::f64::consts::FRAC_PI_4).abs() < 1e-3)
        }
        ref other => panic!("expected finite interval, got {other:?}"),
    }
}

#[test]
fn verify_theorem_e2_and_e4_pass() {
    for name in ["e2", "e4"] {
        let b = built(name);
        let report =
            verify_theorem(&b.spec, &b.init, b.horizon_end, &b.plan, &b.thresholds, &b.deltas)
                .unwrap();
        assert!(report.overall_pass, "{name} reasons: {:?}", report.reasons);
        assert!(report.riccati_cone.min_lambda > -1e-7);
    }
}

#[test]
fn e4_self_check_against_tighter_tolerances() {
    // No closed form for e4; the oracle is the same integration at a
    // hundredfold tighter tolerance.
    let b = built("e4");
    let coarse = integrate_system(&b.spec, &b.init, 20.0, &b.thresholds.caps());
    let mut tight_caps = b.thresholds.caps();
    tight_caps.rtol = 1e-12;
    tight_caps.atol = 1e-14;
    let tight = integrate_system(&b.spec, &b.init, 20.0, &tight_caps);
    assert!(coarse.reached_end() && tight.reached_end());
    let mut sup = 0.0f64;
    for k in 0..=200 {
        let t = 20.0 * k as f64 / 200.0;
        let a = coarse.dense_eval(t).unwrap();
        let bstate = tight.dense_eval(t).unwrap();
        let diff: f64 = a
            .iter()
            .zip(&bstate)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let scale: f64 = bstate.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        sup = sup.max(diff / scale.max(1.0));
    }
    assert!(sup <= 1e-6, "self-check deviation {sup:.3e}");
}

#[test]
fn coupling_identity_psi_equals_y_phi() {
    // psi0(t) = Y(t) phi0(t) along the Riccati interval, E1 and E2.
    for name in ["e1", "e2"] {
        let b = built(name);
        let caps = b.thresholds.caps();
        let traj = integrate_system(&b.spec, &b.init, b.horizon_end, &caps);
        let frozen = FrozenCoefficients::new(&b.spec, &traj).unwrap();
        let sol = riccati_nonosc_core::riccati::integrate_riccati(
            &frozen,
            &b.init.y0,
            (0.0, b.horizon_end),
            &caps,
        )
        .unwrap();
        for (i, &t) in traj.nodes().iter().enumerate() {
            let s = traj.state_at_node(i);
            let n = b.spec.dim();
            let y = sol.eval(t).unwrap();
            let y_phi = y.mul_vec(&s[..n]);
            let mut diff = 0.0f64;
            let mut scale = 1.0f64;
            for j in 0..n {
                diff += (s[n + j] - y_phi[j]).norm_sqr();
                scale = scale.max(s[n + j].norm());
            }
            assert!(
                diff.sqrt() <= 1e-6 * scale,
                "{name}: coupling residual {} at t = {t}",
                diff.sqrt()
            );
        }
    }
}

#[test]
fn reconstruct_phi_on_e1_e2_and_zero_field() {
    for (name, tol) in [("e1", 1e-6), ("e2", 1e-6)] {
        let b = built(name);
        let caps = b.thresholds.caps();
        let traj = integrate_system(&b.spec, &b.init, b.horizon_end, &caps);
        let frozen = FrozenCoefficients::new(&b.spec, &traj).unwrap();
        let sol = riccati_nonosc_core::riccati::integrate_riccati(
            &frozen,
            &b.init.y0,
            (0.0, b.horizon_end),
            &caps,
        )
        .unwrap();
        let res = reconstruct_phi_check(&frozen, &sol, &b.init.phi1, &caps).unwrap();
        assert!(res <= tol, "{name}: reconstruction residual {res}");
    }
}

#[test]
fn complex_three_dimensional_scenario_passes() {
    // Fully complex n = 3 system: B Hermitian PSD with state saturation,
    // C skew-Hermitian (cone boundary) under a decaying profile, complex
    // A, oscillating saturated mu. Exercises the eigensolver and LU paths
    // inside the whole pipeline at n > 2.
    use riccati_nonosc_core::scenario::{
        parse_scenario_str, ScenarioFile,
    };
    let json = r#"{
      "schema_version": 1,
      "name": "c3",
      "n": 3,
      "t0": 0.0,
      "t1": 0.0,
      "horizon_end": 8.0,
      "coefficients": {
        "A": {
          "kind": "constant",
          "base": [
            [{"re":0.0,"im":0.05}, {"re":0.1,"im":0.0}, {"re":0.0,"im":0.0}],
            [{"re":-0.1,"im":0.0}, {"re":0.0,"im":-0.05}, {"re":0.0,"im":0.1}],
            [{"re":0.0,"im":0.0}, {"re":0.0,"im":0.1}, {"re":0.0,"im":0.0}]
          ]
        },
        "B": {
          "kind": "state_saturated_v",
          "base": [
            [{"re":1.0,"im":0.0}, {"re":0.2,"im":0.1}, {"re":0.0,"im":0.0}],
            [{"re":0.2,"im":-0.1}, {"re":1.0,"im":0.0}, {"re":0.0,"im":0.0}],
            [{"re":0.0,"im":0.0}, {"re":0.0,"im":0.0}, {"re":0.5,"im":0.0}]
          ]
        },
        "C": {
          "kind": "time_scaled",
          "base": [
            [{"re":0.0,"im":0.0}, {"re":0.3,"im":0.0}, {"re":0.0,"im":0.1}],
            [{"re":-0.3,"im":0.0}, {"re":0.0,"im":0.0}, {"re":0.2,"im":0.0}],
            [{"re":0.0,"im":0.1}, {"re":-0.2,"im":0.0}, {"re":0.0,"im":0.0}]
          ],
          "time_profile": {"kind": "exp_decay", "rate": 0.5}
        },
        "mu": {
          "kind": "state_saturated_u",
          "base": [[{"re":0.3,"im":0.0}]],
          "time_profile": {"kind": "sinusoid", "omega": 2.0, "phase": 0.5}
        }
      },
      "envelopes": {
        "a0": {"amplitude": 0.25},
        "b0": {"amplitude": 1.6},
        "c0": {"amplitude": 0.55},
        "mu0": {"amplitude": 0.3}
      },
      "initial": {
        "phi1": [{"re":1.0,"im":0.0}, {"re":0.0,"im":1.0}, {"re":0.5,"im":0.0}],
        "Y0": [
          [{"re":1.0,"im":0.0}, {"re":0.0,"im":0.1}, {"re":0.0,"im":0.0}],
          [{"re":0.0,"im":0.1}, {"re":1.0,"im":0.0}, {"re":0.0,"im":0.0}],
          [{"re":0.0,"im":0.0}, {"re":0.0,"im":0.0}, {"re":1.0,"im":0.0}]
        ]
      },
      "tolerances": {"zero_threshold": 1e-6},
      "sample_plan": {"radius": 1.5, "count": 24, "seed": 11}
    }"#;
    let file: ScenarioFile = parse_scenario_str(json).unwrap();
    let b = build_scenario(&file).unwrap();
    let report = verify_theorem(&b.spec, &b.init, b.horizon_end, &b.plan, &b.thresholds, &b.deltas)
        .unwrap();
    assert!(report.overall_pass, "reasons: {:?}", report.reasons);
    assert!(report.riccati_cone.min_lambda > 0.0);
    assert!(report.identity_residuals.hermitian_flow.pass);
    assert!(report.identity_residuals.liouville_det.pass);
    assert!(report.identity_residuals.reconstruction.pass);
    assert_eq!(report.oscillation.verdict, Verdict::NonoscillatoryOnHorizon);
    // C + C* sits exactly on the cone boundary.
    assert!(report.hypothesis.c_plus_cstar_psd.worst_min_eigenvalue.abs() < 1e-10);
}

#[test]
fn hypothesis_checker_is_pluggable() {
    // Substituting a checker that certifies everything makes E3's only
    // remaining failure the detected zero — the rest of the pipeline is
    // untouched (the spurious Riccati escape is then flagged as well,
    // since the substituted hypotheses no longer predict it).
    use riccati_nonosc_core::oscillation::verify_theorem_with_checker;
    use riccati_nonosc_core::system::{ConeFinding, EnvelopeFinding, HypothesisReport};
    let b = built("e3");
    let always_ok = |_: &riccati_nonosc_core::system::SystemSpec,
                     plan: &riccati_nonosc_core::system::SamplePlan,
                     extra: &riccati_nonosc_core::system::StateSamples| {
        let env = || EnvelopeFinding {
            ok: true,
            worst_margin: 0.0,
        };
        let cone = || ConeFinding {
            ok: true,
            worst_min_eigenvalue: 0.0,
        };
        HypothesisReport {
            envelope_a: env(),
            envelope_b: env(),
            envelope_c: env(),
            envelope_mu: env(),
            b_psd: cone(),
            c_plus_cstar_psd: cone(),
            samples_used: extra.len(),
            radius: plan.radius,
            t_min: 0.0,
            t_max: 0.0,
            seed: plan.seed,
        }
    };
    let (report, _) = verify_theorem_with_checker(
        &b.spec,
        &b.init,
        b.horizon_end,
        &b.plan,
        &b.thresholds,
        &[],
        &always_ok,
    )
    .unwrap();
    assert!(!report.overall_pass);
    assert!(report.reasons.contains(&"zero_detected".to_string()));
    assert!(!report
        .reasons
        .contains(&"cone_hypothesis_violated".to_string()));
}

#[test]
fn system_trajectory_nodes_strictly_increase() {
    let b = built("e4");
    let traj = integrate_system(&b.spec, &b.init, 20.0, &b.thresholds.caps());
    assert!(traj.nodes().windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn reconstruct_phi_zero_field_is_exact() {
    // A = B = 0: phi' = 0, so the reconstruction stays at phi1.
    use riccati_nonosc_core::system::{
        CoefficientFamily, Envelope, Envelopes, SystemSpec,
    };
    let zero_fam = || CoefficientFamily::constant(CMatrix::zeros(1));
    let spec = SystemSpec::new(
        1,
        0.0,
        zero_fam(),
        zero_fam(),
        zero_fam(),
        zero_fam(),
        Envelopes {
            a0: Envelope::constant(0.0),
            b0: Envelope::constant(0.0),
            c0: Envelope::constant(0.0),
            mu0: Envelope::constant(0.0),
        },
    )
    .unwrap();
    let init = make_conjoined(&spec, 0.0, vec![c(1.0, -0.5)], CMatrix::zeros(1)).unwrap();
    let caps = riccati_nonosc_core::riccati::IntegrationCaps::default();
    let traj = integrate_system(&spec, &init, 3.0, &caps);
    let frozen = FrozenCoefficients::new(&spec, &traj).unwrap();
    let sol = riccati_nonosc_core::riccati::integrate_riccati(
        &frozen,
        &CMatrix::zeros(1),
        (0.0, 3.0),
        &caps,
    )
    .unwrap();
    let res = reconstruct_phi_check(&frozen, &sol, &init.phi1, &caps).unwrap();
    assert!(res <= 1e-12, "zero-field reconstruction residual {res}");
}

#[test]
fn delta_experiment_scalar_closed_form() {
    // E1 variant with Y(0) = 0: Y_delta(t) = delta / (1 + delta t), so
    // lambda_delta(t) = 2 delta / (1 + delta t) and the limit profile is 0.
    let b = built("e1");
    let caps = b.thresholds.caps();
    let traj = integrate_system(&b.spec, &b.init, 10.0, &caps);
    let frozen = FrozenCoefficients::new(&b.spec, &traj).unwrap();
    let y0 = CMatrix::zeros(1);
    let deltas = [1e-1, 1e-2, 1e-3, 1e-4];
    let rep = delta_experiment(&frozen, &y0, &deltas, (0.0, 10.0), &caps).unwrap();

    for run in &rep.runs {
        assert!(run.all_positive, "delta {} dipped", run.delta);
        assert!(run.reached_horizon);
        for (i, &t) in rep.grid.iter().enumerate() {
            let expected = 2.0 * run.delta / (1.0 + run.delta * t);
            assert!(
                (run.lambda_profile[i] - expected).abs() <= 1e-7 * expected.max(1e-12),
                "delta {} at t = {t}: {} vs {expected}",
                run.delta,
                run.lambda_profile[i]
            );
        }
    }
    // Unperturbed run stays exactly at zero; limit estimate within 1e-3.
    for (i, &t) in rep.grid.iter().enumerate() {
        assert!(rep.base_profile[i].abs() < 1e-12, "base at {t}");
        assert!(rep.limit_profile[i].abs() < 1e-3, "limit at {t}");
    }
    assert!(rep.sup_limit_vs_base < 1e-3);
    assert!(rep.continuity_ok);

    // Monotonicity in delta.
    for w in rep.runs.windows(2) {
        for i in 0..rep.grid.len() {
            assert!(
                w[0].lambda_profile[i] >= w[1].lambda_profile[i] - 1e-8,
                "ordering violated at grid {i}"
            );
        }
    }
}

#[test]
fn delta_experiment_stationary_attractor() {
    // E2 with Y0 = 1 + delta: the flow contracts back toward 1.
    let b = built("e2");
    let caps = b.thresholds.caps();
    let traj = integrate_system(&b.spec, &b.init, 10.0, &caps);
    let frozen = FrozenCoefficients::new(&b.spec, &traj).unwrap();
    let deltas = [1e-1, 1e-2];
    let rep = delta_experiment(&frozen, &CMatrix::identity(1), &deltas, (0.0, 10.0), &caps)
        .unwrap();
    for run in &rep.runs {
        assert!(run.all_positive);
        assert!(run.min_lambda >= 2.0 - 1e-9, "min lambda {}", run.min_lambda);
        // Decay toward the fixed point: final lambda close to 2.
        let last = *run.lambda_profile.last().unwrap();
        assert!((last - 2.0).abs() < 1e-6);
    }
}
