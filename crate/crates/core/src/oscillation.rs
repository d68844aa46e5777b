//! Top-level verification workflow: conjoined initial data, integration of
//! the nonlinear Hamiltonian system, finite-horizon zero monitoring of the
//! phi component, the delta-regularization experiment, and the assembled
//! verification report.

use num_complex::Complex64;
use thiserror::Error;

use crate::integrate::{integrate_ivp, IvpProblem, Termination, Trajectory};
use crate::linalg::{CMatrix, LinalgError};
use crate::riccati::{
    det_lower_bound_check, equivalence_residual, hermitian_flow_residual, integrate_linear_pair,
    integrate_riccati, liouville_phi_residual, FrozenCoefficients, IntegrationCaps, IntervalEnd,
    RiccatiError, RiccatiSolution,
};
use crate::system::{hypothesis_report, CoefficientModel, HypothesisReport, SamplePlan, StateSamples, SystemSpec};

/// Norm guard for the Hamiltonian system itself: quasi-linear systems are
/// globally solvable (solutions may grow, so this is far above the
/// Riccati blow-up cap and exists only to keep states finite).
pub const SYSTEM_NORM_CAP: f64 = 1e100;

/// When the Riccati flow escapes in finite time, identity residuals are
/// evaluated only while `‖Y‖_F` stays below this, keeping the checks
/// meaningful up to (not into) the blow-up.
pub const IDENTITY_WINDOW_NORM_CAP: f64 = 1e4;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ConjoinedError {
    #[error("phi(t1) must be nonzero")]
    ZeroPhi,
    #[error("Y0 + Y0* must be positive semidefinite (least eigenvalue {lambda_min:.3e})")]
    NotConeAdmissible { lambda_min: f64 },
    #[error("phi1 has dimension {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Errors that prevent the pipeline from completing (hypothesis
/// violations are findings, never errors).
#[derive(Debug, Clone, Error, PartialEq)]
pub enum PipelineError {
    #[error("integration of the Hamiltonian system failed at t = {t}")]
    SystemIntegration { t: f64 },
    #[error(transparent)]
    Riccati(#[from] RiccatiError),
    #[error(transparent)]
    Conjoined(#[from] ConjoinedError),
}

/// Validated conjoined initial data: an anchor time, a nonzero phi, and a
/// matrix whose Hermitian part is in the PSD cone; psi at the anchor is
/// `Y0 phi1`.
#[derive(Debug, Clone)]
pub struct ConjoinedInit {
    pub t1: f64,
    pub phi1: Vec<Complex64>,
    pub y0: CMatrix,
    pub psi1: Vec<Complex64>,
}

/// Validate and assemble conjoined initial data.
pub fn make_conjoined(
    model: &dyn CoefficientModel,
    t1: f64,
    phi1: Vec<Complex64>,
    y0: CMatrix,
) -> Result<ConjoinedInit, ConjoinedError> {
    let n = model.dim();
    if phi1.len() != n {
        return Err(ConjoinedError::DimensionMismatch {
            got: phi1.len(),
            expected: n,
        });
    }
    if y0.dim() != n {
        return Err(ConjoinedError::DimensionMismatch {
            got: y0.dim(),
            expected: n,
        });
    }
    let norm: f64 = phi1.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(ConjoinedError::ZeroPhi);
    }
    let herm = y0.hermitian_part();
    let lambda_min = herm.min_eigenvalue()?;
    if lambda_min < -1e-12 * 1.0f64.max(herm.norm_fro()) {
        return Err(ConjoinedError::NotConeAdmissible { lambda_min });
    }
    let psi1 = y0.mul_vec(&phi1);
    Ok(ConjoinedInit { t1, phi1, y0, psi1 })
}

/// Integrate the Hamiltonian system from conjoined data up to `t_end`.
pub fn integrate_system(
    model: &dyn CoefficientModel,
    init: &ConjoinedInit,
    t_end: f64,
    caps: &IntegrationCaps,
) -> Trajectory {
    assert!(t_end > init.t1, "horizon must extend past the anchor time");
    let n = model.dim();
    let rhs = move |t: f64, s: &[Complex64], ds: &mut [Complex64]| {
        let (u, v) = s.split_at(n);
        let vals = model.eval(t, u, v);
        let au = vals.a.mul_vec(u);
        let bv = vals.b.mul_vec(v);
        let cu = vals.c.mul_vec(u);
        let astar_v = vals.a.adjoint().mul_vec(v);
        for i in 0..n {
            ds[i] = au[i] + bv[i];
            ds[n + i] = cu[i] + v[i] * vals.mu - astar_v[i];
        }
    };
    let mut state = init.phi1.clone();
    state.extend(init.psi1.iter().copied());
    let problem = IvpProblem::new((init.t1, t_end), state, rhs)
        .rtol(caps.rtol)
        .atol(caps.atol)
        .blow_up_cap(SYSTEM_NORM_CAP);
    integrate_ivp(&problem)
}

/// Outcome of the finite-horizon zero monitor.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    NonoscillatoryOnHorizon,
    ZeroDetected,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct OscillationVerdict {
    pub horizon: (f64, f64),
    pub min_phi_norm: f64,
    pub zero_events: Vec<f64>,
    pub verdict: Verdict,
    /// The zero threshold actually used (resolved from the default rule
    /// when not given explicitly).
    pub threshold: f64,
}

/// Scan `‖phi(t)‖` over `[t_from, end]` for drops to `threshold` or below.
/// `threshold = None` resolves to `1e-6 * max observed ‖phi‖`.
pub fn oscillation_monitor(
    traj: &Trajectory,
    n: usize,
    t_from: f64,
    threshold: Option<f64>,
) -> OscillationVerdict {
    let t_end = traj.t_end();
    let phi_norm_at = |s: &[Complex64]| -> f64 {
        s[..n].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    };

    let max_phi = traj
        .states()
        .iter()
        .map(|s| phi_norm_at(s))
        .fold(0.0f64, f64::max);
    let eps = threshold.unwrap_or(1e-6 * 1.0f64.max(max_phi));

    if t_from >= t_end {
        return OscillationVerdict {
            horizon: (t_from, t_end),
            min_phi_norm: phi_norm_at(traj.states().last().unwrap()),
            zero_events: Vec::new(),
            verdict: Verdict::Inconclusive,
            threshold: eps,
        };
    }

    let g = move |_t: f64, s: &[Complex64]| phi_norm_at(s) - eps;
    let (crossings, g_min) = traj.scan_threshold(&g, t_from, t_end);
    let zero_events: Vec<f64> = crossings.iter().map(|c| c.t).collect();
    let verdict = if zero_events.is_empty() {
        Verdict::NonoscillatoryOnHorizon
    } else {
        Verdict::ZeroDetected
    };
    OscillationVerdict {
        horizon: (t_from, t_end),
        min_phi_norm: (g_min + eps).max(0.0),
        zero_events,
        verdict,
        threshold: eps,
    }
}

/// Reconstruct phi from `phi' = [A0(t) + B0(t) Y(t)] phi` and compare with
/// the frozen base solution; returns the sup of
/// `‖phi_rec - phi0‖ / max(1, ‖phi0‖)` over the reconstruction nodes.
pub fn reconstruct_phi_check(
    frozen: &FrozenCoefficients<'_>,
    y_path: &RiccatiSolution,
    phi1: &[Complex64],
    caps: &IntegrationCaps,
) -> Result<f64, RiccatiError> {
    let n = frozen.dim();
    let t_lo = y_path.t_start().max(frozen.span().0);
    let t_hi = y_path.t_end().min(frozen.span().1);
    let rhs = |t: f64, s: &[Complex64], ds: &mut [Complex64]| {
        let vals = match frozen.values(t.clamp(t_lo, t_hi)) {
            Ok(v) => v,
            Err(_) => {
                ds.fill(Complex64::new(f64::NAN, 0.0));
                return;
            }
        };
        let y = match y_path.eval(t.clamp(t_lo, t_hi)) {
            Ok(y) => y,
            Err(_) => {
                ds.fill(Complex64::new(f64::NAN, 0.0));
                return;
            }
        };
        let coef = &vals.a + &(&vals.b * &y);
        ds.copy_from_slice(&coef.mul_vec(s));
    };
    let problem = IvpProblem::new((t_lo, t_hi), phi1.to_vec(), rhs)
        .rtol(caps.rtol)
        .atol(caps.atol)
        .blow_up_cap(SYSTEM_NORM_CAP);
    let rec = integrate_ivp(&problem);

    let mut sup = 0.0f64;
    for (i, &t) in rec.nodes().iter().enumerate() {
        let base = frozen.base_state(t)?.0;
        let rec_state = rec.state_at_node(i);
        let mut diff = 0.0f64;
        let mut base_norm = 0.0f64;
        for j in 0..n {
            diff += (rec_state[j] - base[j]).norm_sqr();
            base_norm += base[j].norm_sqr();
        }
        sup = sup.max(diff.sqrt() / 1.0f64.max(base_norm.sqrt()));
    }
    Ok(sup)
}

/// One delta run of the regularization experiment.
#[derive(Debug, Clone)]
pub struct DeltaRun {
    pub delta: f64,
    /// Min over the comparison grid of the least eigenvalue of
    /// `Y_delta + Y_delta*`.
    pub min_lambda: f64,
    pub all_positive: bool,
    pub reached_horizon: bool,
    pub lambda_profile: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DeltaReport {
    pub grid: Vec<f64>,
    pub runs: Vec<DeltaRun>,
    /// Pointwise Richardson extrapolation from the two smallest deltas.
    pub limit_profile: Vec<f64>,
    pub limit_error_bar: Vec<f64>,
    /// The unperturbed least-eigenvalue profile on the same grid.
    pub base_profile: Vec<f64>,
    pub sup_limit_vs_base: f64,
    /// Logged Lipschitz estimate of the Riccati field along the base run.
    pub lipschitz_estimate: f64,
    /// Continuity check: `|lambda - lambda_delta_min| <= 10 delta_min e^{L (t - t1)}`
    /// at every grid point.
    pub continuity_ok: bool,
}

const DELTA_GRID_POINTS: usize = 33;

/// The delta-regularization experiment: perturb the initial value to
/// `Y0 + delta I` for each delta (descending), require the Hermitian part
/// to stay inside the open cone, and estimate the limit profile.
pub fn delta_experiment(
    frozen: &FrozenCoefficients<'_>,
    y0: &CMatrix,
    deltas: &[f64],
    t_span: (f64, f64),
    caps: &IntegrationCaps,
) -> Result<DeltaReport, RiccatiError> {
    assert!(!deltas.is_empty(), "need at least one delta");
    assert!(
        deltas.windows(2).all(|w| w[0] > w[1]) && *deltas.last().unwrap() > 0.0,
        "deltas must be positive and strictly descending"
    );
    let n = frozen.dim();
    let ident = CMatrix::identity(n);

    let base = integrate_riccati(frozen, y0, t_span, caps)?;
    let mut runs_sol: Vec<(f64, RiccatiSolution)> = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let y0_delta = &ident.scale_re(delta) + y0;
        let sol = integrate_riccati(frozen, &y0_delta, t_span, caps)?;
        runs_sol.push((delta, sol));
    }

    // Common comparison window: every run (and the base) must cover it.
    let mut t_hi = base.t_end();
    for (_, sol) in &runs_sol {
        t_hi = t_hi.min(sol.t_end());
    }
    let t_lo = t_span.0;
    let grid: Vec<f64> = (0..DELTA_GRID_POINTS)
        .map(|i| t_lo + (t_hi - t_lo) * i as f64 / (DELTA_GRID_POINTS - 1) as f64)
        .collect();

    let lambda_profile = |sol: &RiccatiSolution| -> Result<Vec<f64>, RiccatiError> {
        grid.iter()
            .map(|&t| Ok(sol.eval(t)?.hermitian_part().min_eigenvalue()?))
            .collect()
    };

    let base_profile = lambda_profile(&base)?;
    let mut runs = Vec::with_capacity(runs_sol.len());
    for (delta, sol) in &runs_sol {
        let profile = lambda_profile(sol)?;
        let min_lambda = profile.iter().copied().fold(f64::INFINITY, f64::min);
        runs.push(DeltaRun {
            delta: *delta,
            min_lambda,
            all_positive: min_lambda > 0.0,
            reached_horizon: *sol.interval_end() == IntervalEnd::Horizon,
            lambda_profile: profile,
        });
    }

    // Richardson extrapolation in delta from the last two runs (the
    // smallest deltas), assuming first-order dependence on delta.
    let k = runs.len() - 1;
    let (limit_profile, limit_error_bar): (Vec<f64>, Vec<f64>) = if k == 0 {
        (
            runs[0].lambda_profile.clone(),
            runs[0].lambda_profile.iter().map(|_| f64::NAN).collect(),
        )
    } else {
        let (d_prev, d_last) = (runs[k - 1].delta, runs[k].delta);
        let mut limit = Vec::with_capacity(grid.len());
        let mut bar = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let l_prev = runs[k - 1].lambda_profile[i];
            let l_last = runs[k].lambda_profile[i];
            let est = (d_prev * l_last - d_last * l_prev) / (d_prev - d_last);
            limit.push(est);
            bar.push((est - l_last).abs());
        }
        (limit, bar)
    };

    let sup_limit_vs_base = limit_profile
        .iter()
        .zip(&base_profile)
        .map(|(l, b)| (l - b).abs())
        .fold(0.0f64, f64::max);

    // Lipschitz estimate of the Riccati field along the base run.
    let mut lips = 0.0f64;
    for m in base.monitors() {
        let vals = frozen.values(m.t.clamp(t_lo, t_hi))?;
        let l = 2.0 * vals.b.norm_fro() * m.norm_y + 2.0 * vals.a.norm_fro() + vals.mu.abs();
        lips = lips.max(l);
    }

    let delta_min = *deltas.last().unwrap();
    let continuity_ok = grid.iter().enumerate().all(|(i, &t)| {
        let bound = 10.0 * delta_min * (lips * (t - t_lo)).exp();
        (base_profile[i] - runs[k].lambda_profile[i]).abs() <= bound
    });

    Ok(DeltaReport {
        grid,
        runs,
        limit_profile,
        limit_error_bar,
        base_profile,
        sup_limit_vs_base,
        lipschitz_estimate: lips,
        continuity_ok,
    })
}

/// Residual thresholds and knobs of the verification pipeline.
#[derive(Debug, Clone)]
pub struct Thresholds {
    pub rtol: f64,
    pub atol: f64,
    pub residual_hermitian_flow: f64,
    pub residual_liouville_det: f64,
    pub residual_reconstruction: f64,
    /// Absolute zero threshold; `None` resolves to `1e-6 max ‖phi‖`.
    pub zero_threshold: Option<f64>,
    pub psd_tol: f64,
    /// Cone invariance accepts `lambda_min >= -cone_lambda_tol * scale`.
    pub cone_lambda_tol: f64,
    pub cond_cap: f64,
    pub blow_up_cap: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            rtol: crate::integrate::DEFAULT_RTOL,
            atol: crate::integrate::DEFAULT_ATOL,
            residual_hermitian_flow: 1e-6,
            residual_liouville_det: 1e-6,
            residual_reconstruction: 1e-6,
            zero_threshold: None,
            psd_tol: crate::system::DEFAULT_PSD_TOL,
            cone_lambda_tol: 1e-7,
            cond_cap: 1e8,
            blow_up_cap: crate::integrate::DEFAULT_BLOW_UP_CAP,
        }
    }
}

impl Thresholds {
    pub fn caps(&self) -> IntegrationCaps {
        IntegrationCaps {
            rtol: self.rtol,
            atol: self.atol,
            blow_up_cap: self.blow_up_cap,
            max_step: None,
        }
    }
}

/// A residual check with its threshold.
#[derive(Debug, Clone)]
pub struct ResidualCheck {
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl ResidualCheck {
    fn new(value: f64, threshold: f64) -> Self {
        ResidualCheck {
            value,
            threshold,
            pass: value <= threshold,
        }
    }
}

/// Outcome of the determinant lower-bound check inside the pipeline.
#[derive(Debug, Clone)]
pub enum DetBoundOutcome {
    Checked {
        c: f64,
        bound: f64,
        worst_margin: f64,
        holds: bool,
        window: (f64, f64),
    },
    NotApplicable {
        reason: String,
    },
}

/// Summary of the Riccati cone monitors.
#[derive(Debug, Clone)]
pub struct ConeSummary {
    pub min_lambda: f64,
    pub min_lambda_time: f64,
    /// First node where `lambda_min` fell below `-tol * scale`, if any.
    pub first_violation_time: Option<f64>,
    /// First node where `lambda_min <= 0` (cone exit), if any.
    pub first_nonpositive_time: Option<f64>,
    pub interval_end: IntervalEnd,
}

#[derive(Debug, Clone)]
pub struct IdentityResiduals {
    pub hermitian_flow: ResidualCheck,
    pub liouville_det: ResidualCheck,
    pub reconstruction: ResidualCheck,
    pub det_bound: DetBoundOutcome,
    /// Window the residuals were evaluated on (truncated ahead of a
    /// finite maximal interval).
    pub window: (f64, f64),
}

/// The assembled verification report for one scenario.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub hypothesis: HypothesisReport,
    pub riccati_cone: ConeSummary,
    pub identity_residuals: IdentityResiduals,
    pub oscillation: OscillationVerdict,
    pub delta: Option<DeltaReport>,
    pub overall_pass: bool,
    pub reasons: Vec<String>,
}

/// The solved flows behind a verification report, kept for artifact
/// (CSV) writing.
pub struct PipelineArtifacts {
    pub system: Trajectory,
    pub riccati: RiccatiSolution,
    pub pair: crate::riccati::LinearPairSolution,
}

/// Hypothesis verification strategy. The default samples the
/// quasi-linearity envelopes and the two cone conditions; alternative
/// non-singularity conditions can be substituted without touching the
/// rest of the pipeline.
pub type HypothesisChecker<'a> =
    &'a dyn Fn(&SystemSpec, &SamplePlan, &StateSamples) -> HypothesisReport;

/// Run the whole pipeline: hypothesis sampling, system integration,
/// coefficient freezing, both flows, identity residuals, zero monitoring,
/// and the delta experiment. Hypothesis violations and finite Riccati
/// intervals are findings in the report; only numerical breakdowns
/// (step failure on the system, eigensolver failure) return errors.
pub fn verify_theorem(
    spec: &SystemSpec,
    init: &ConjoinedInit,
    horizon_end: f64,
    plan: &SamplePlan,
    thresholds: &Thresholds,
    deltas: &[f64],
) -> Result<VerificationReport, PipelineError> {
    verify_theorem_full(spec, init, horizon_end, plan, thresholds, deltas).map(|(r, _)| r)
}

/// As [`verify_theorem`], additionally returning the solved flows.
pub fn verify_theorem_full(
    spec: &SystemSpec,
    init: &ConjoinedInit,
    horizon_end: f64,
    plan: &SamplePlan,
    thresholds: &Thresholds,
    deltas: &[f64],
) -> Result<(VerificationReport, PipelineArtifacts), PipelineError> {
    let psd_tol = thresholds.psd_tol;
    let default_checker = move |spec: &SystemSpec, plan: &SamplePlan, extra: &StateSamples| {
        hypothesis_report(spec, plan, extra, psd_tol)
    };
    verify_theorem_with_checker(
        spec,
        init,
        horizon_end,
        plan,
        thresholds,
        deltas,
        &default_checker,
    )
}

/// As [`verify_theorem_full`] with a caller-supplied hypothesis checker.
#[allow(clippy::too_many_arguments)]
pub fn verify_theorem_with_checker(
    spec: &SystemSpec,
    init: &ConjoinedInit,
    horizon_end: f64,
    plan: &SamplePlan,
    thresholds: &Thresholds,
    deltas: &[f64],
    checker: HypothesisChecker<'_>,
) -> Result<(VerificationReport, PipelineArtifacts), PipelineError> {
    let caps = thresholds.caps();
    let system_caps = IntegrationCaps {
        blow_up_cap: SYSTEM_NORM_CAP,
        ..caps.clone()
    };
    let n = spec.dim();

    // 1. The nonlinear system.
    let traj = integrate_system(spec, init, horizon_end, &system_caps);
    if !traj.reached_end() {
        let t = match traj.termination() {
            Termination::StepFailure { t } | Termination::BlowUp { t, .. } => *t,
            _ => traj.t_end(),
        };
        return Err(PipelineError::SystemIntegration { t });
    }

    // 2. Hypotheses, sampled over the plan plus the computed trajectory.
    let mut extra: StateSamples = Vec::with_capacity(traj.nodes().len());
    for (i, &t) in traj.nodes().iter().enumerate() {
        let s = traj.state_at_node(i);
        extra.push((t, s[..n].to_vec(), s[n..].to_vec()));
    }
    let hypothesis = checker(spec, plan, &extra);

    // 3. Frozen coefficients and the two flows.
    let frozen = FrozenCoefficients::new(spec, &traj)?;
    let riccati = integrate_riccati(&frozen, &init.y0, (init.t1, horizon_end), &caps)?;
    let pair = integrate_linear_pair(
        &frozen,
        &CMatrix::identity(n),
        &init.y0,
        (init.t1, horizon_end),
        &caps,
    )?;

    // 4. Identity residuals on a window that stays clear of any blow-up.
    let ident_hi = match riccati.interval_end() {
        IntervalEnd::Horizon => riccati.t_end(),
        IntervalEnd::Finite { .. } => {
            let mut hi = init.t1;
            for m in riccati.monitors() {
                if m.norm_y <= IDENTITY_WINDOW_NORM_CAP {
                    hi = m.t;
                } else {
                    break;
                }
            }
            hi
        }
    };
    let window = (init.t1, ident_hi);

    let flow = hermitian_flow_residual(&riccati, &frozen, Some(window))?;
    let liouville = liouville_phi_residual(&pair, &frozen, &riccati, Some(window))?;
    let equivalence = equivalence_residual(&riccati, &pair, thresholds.cond_cap, Some(window))?;

    // 5. Cone summary.
    let mut min_lambda = f64::INFINITY;
    let mut min_lambda_time = init.t1;
    let mut first_violation_time = None;
    let mut first_nonpositive_time = None;
    for m in riccati.monitors() {
        if m.lambda_min < min_lambda {
            min_lambda = m.lambda_min;
            min_lambda_time = m.t;
        }
        let scale = 1.0f64.max(m.norm_u);
        if first_violation_time.is_none() && m.lambda_min < -thresholds.cone_lambda_tol * scale {
            first_violation_time = Some(m.t);
        }
        if first_nonpositive_time.is_none() && m.lambda_min <= 0.0 {
            first_nonpositive_time = Some(m.t);
        }
    }
    let cone = ConeSummary {
        min_lambda,
        min_lambda_time,
        first_violation_time,
        first_nonpositive_time,
        interval_end: riccati.interval_end().clone(),
    };

    // 6. Determinant lower bound on the maximal cone-interior prefix,
    // meaningful only under the theorem's hypotheses.
    let det_bound = if !(hypothesis.envelopes_ok() && hypothesis.cone_ok()) {
        DetBoundOutcome::NotApplicable {
            reason: "hypotheses violated; bound not implied".into(),
        }
    } else {
        // Largest prefix of nodes with strictly positive lambda_min.
        let mut hi = init.t1;
        for m in riccati.monitors() {
            if m.t > ident_hi {
                break;
            }
            if m.lambda_min > 0.0 {
                hi = m.t;
            } else {
                break;
            }
        }
        if hi <= init.t1 {
            DetBoundOutcome::NotApplicable {
                reason: "Hermitian part starts on the cone boundary".into(),
            }
        } else {
            match det_lower_bound_check(&riccati, &frozen, (init.t1, hi)) {
                Ok(res) => DetBoundOutcome::Checked {
                    c: res.c,
                    bound: res.bound,
                    worst_margin: res.worst_margin,
                    holds: res.holds,
                    window: (init.t1, hi),
                },
                Err(RiccatiError::ConePreconditionFailed { t, .. }) => {
                    DetBoundOutcome::NotApplicable {
                        reason: format!("cone interior lost at t = {t}"),
                    }
                }
                Err(other) => return Err(other.into()),
            }
        }
    };

    let identity_residuals = IdentityResiduals {
        hermitian_flow: ResidualCheck::new(flow.sup, thresholds.residual_hermitian_flow),
        liouville_det: ResidualCheck::new(liouville.sup, thresholds.residual_liouville_det),
        reconstruction: ResidualCheck::new(equivalence.sup, thresholds.residual_reconstruction),
        det_bound,
        window,
    };

    // 7. Zero monitoring over the horizon.
    let oscillation = oscillation_monitor(&traj, n, init.t1, thresholds.zero_threshold);

    // 8. Delta experiment.
    let delta = if deltas.is_empty() {
        None
    } else {
        Some(delta_experiment(
            &frozen,
            &init.y0,
            deltas,
            (init.t1, horizon_end),
            &caps,
        )?)
    };

    // 9. Overall verdict.
    let mut reasons = Vec::new();
    if !hypothesis.envelopes_ok() {
        reasons.push("envelope_violated".to_string());
    }
    if !hypothesis.cone_ok() {
        reasons.push("cone_hypothesis_violated".to_string());
    }
    let hypotheses_ok = hypothesis.envelopes_ok() && hypothesis.cone_ok();
    if hypotheses_ok {
        if let IntervalEnd::Finite { t, .. } = cone.interval_end {
            reasons.push(format!("riccati_interval_finite_at_{t:.6}"));
        }
        if cone.first_violation_time.is_some() {
            reasons.push("cone_invariance_violated".to_string());
        }
        if let DetBoundOutcome::Checked { holds: false, .. } = identity_residuals.det_bound {
            reasons.push("det_bound_failed".to_string());
        }
    }
    if !identity_residuals.hermitian_flow.pass {
        reasons.push("residual_hermitian_flow_exceeded".to_string());
    }
    if !identity_residuals.liouville_det.pass {
        reasons.push("residual_liouville_det_exceeded".to_string());
    }
    if !identity_residuals.reconstruction.pass {
        reasons.push("residual_reconstruction_exceeded".to_string());
    }
    match oscillation.verdict {
        Verdict::ZeroDetected => reasons.push("zero_detected".to_string()),
        Verdict::Inconclusive => reasons.push("inconclusive_window".to_string()),
        Verdict::NonoscillatoryOnHorizon => {}
    }
    let overall_pass = reasons.is_empty();

    let report = VerificationReport {
        hypothesis,
        riccati_cone: cone,
        identity_residuals,
        oscillation,
        delta,
        overall_pass,
        reasons,
    };
    let artifacts = PipelineArtifacts {
        system: traj,
        riccati,
        pair,
    };
    Ok((report, artifacts))
}
