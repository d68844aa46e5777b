//! Scenario files, run reports and CSV artifacts.
//!
//! Scenarios are JSON (schema version 1, shipped in-repo as
//! `scenario.schema.json`): complex numbers serialize as
//! `{"re": x, "im": y}` and matrices as row-major nested arrays. Reports
//! are JSON with a stable field order; wall-clock data goes to a separate
//! metadata file so `report.json` is byte-identical across reruns of the
//! same scenario and seed.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrate::Trajectory;
use crate::linalg::CMatrix;
use crate::oscillation::{
    make_conjoined, verify_theorem_full, ConjoinedError, ConjoinedInit, DetBoundOutcome,
    PipelineArtifacts, PipelineError, Thresholds, Verdict, VerificationReport,
};
use crate::quad::{adaptive_simpson, QUAD_ABS_TOL};
use crate::riccati::{FrozenCoefficients, IntervalEnd};
use crate::system::{
    CoefficientFamily, CoefficientModel, Envelope, Envelopes, FamilyKind, ModelError, SamplePlan,
    SystemSpec, TimeProfile,
};
use crate::{SCHEMA_VERSION, TOOL_VERSION};

/// Time-grid resolution for hypothesis sampling over the horizon.
const SAMPLE_TIME_POINTS: usize = 33;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed scenario: {field}: {message}")]
    Parse { field: String, message: String },
    #[error("invalid scenario:\n{}", issues.join("\n"))]
    Invalid { issues: Vec<String> },
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("pipeline failed: {0}")]
    Pipeline(#[from] PipelineError),
    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },
}

// ---------------------------------------------------------------------
// Scenario JSON model
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ComplexDto {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexDto {
    fn from(z: Complex64) -> Self {
        ComplexDto { re: z.re, im: z.im }
    }
}

impl From<ComplexDto> for Complex64 {
    fn from(z: ComplexDto) -> Self {
        Complex64::new(z.re, z.im)
    }
}

pub type MatrixDto = Vec<Vec<ComplexDto>>;

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileDto {
    #[default]
    One,
    ExpDecay { rate: f64 },
    Sinusoid { omega: f64, phase: f64 },
    InvLinear,
}

impl From<&ProfileDto> for TimeProfile {
    fn from(p: &ProfileDto) -> Self {
        match p {
            ProfileDto::One => TimeProfile::One,
            ProfileDto::ExpDecay { rate } => TimeProfile::ExpDecay { rate: *rate },
            ProfileDto::Sinusoid { omega, phase } => TimeProfile::Sinusoid {
                omega: *omega,
                phase: *phase,
            },
            ProfileDto::InvLinear => TimeProfile::InvLinear,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKindDto {
    Constant,
    TimeScaled,
    StateSaturatedU,
    StateSaturatedV,
    CompositeSum,
}

impl From<FamilyKindDto> for FamilyKind {
    fn from(k: FamilyKindDto) -> Self {
        match k {
            FamilyKindDto::Constant => FamilyKind::Constant,
            FamilyKindDto::TimeScaled => FamilyKind::TimeScaled,
            FamilyKindDto::StateSaturatedU => FamilyKind::StateSaturatedU,
            FamilyKindDto::StateSaturatedV => FamilyKind::StateSaturatedV,
            FamilyKindDto::CompositeSum => FamilyKind::CompositeSum,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FamilyDto {
    pub kind: FamilyKindDto,
    pub base: MatrixDto,
    #[serde(default)]
    pub time_profile: ProfileDto,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsDto {
    #[serde(rename = "A")]
    pub a: FamilyDto,
    #[serde(rename = "B")]
    pub b: FamilyDto,
    #[serde(rename = "C")]
    pub c: FamilyDto,
    pub mu: FamilyDto,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EnvelopeDto {
    pub amplitude: f64,
    #[serde(default)]
    pub profile: ProfileDto,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EnvelopesDto {
    pub a0: EnvelopeDto,
    pub b0: EnvelopeDto,
    pub c0: EnvelopeDto,
    pub mu0: EnvelopeDto,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InitialDto {
    pub phi1: Vec<ComplexDto>,
    #[serde(rename = "Y0")]
    pub y0: MatrixDto,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct TolerancesDto {
    pub rtol: f64,
    pub atol: f64,
    pub residual_hermitian_flow: f64,
    pub residual_liouville_det: f64,
    pub residual_reconstruction: f64,
    /// Absolute zero-detection threshold; when absent the monitor uses
    /// `1e-6 * max observed ‖phi‖`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zero_threshold: Option<f64>,
    pub psd_tol: f64,
    pub cone_lambda_tol: f64,
    pub cond_cap: f64,
    pub blow_up_cap: f64,
}

impl Default for TolerancesDto {
    fn default() -> Self {
        let t = Thresholds::default();
        TolerancesDto {
            rtol: t.rtol,
            atol: t.atol,
            residual_hermitian_flow: t.residual_hermitian_flow,
            residual_liouville_det: t.residual_liouville_det,
            residual_reconstruction: t.residual_reconstruction,
            zero_threshold: t.zero_threshold,
            psd_tol: t.psd_tol,
            cone_lambda_tol: t.cone_lambda_tol,
            cond_cap: t.cond_cap,
            blow_up_cap: t.blow_up_cap,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SamplePlanDto {
    pub radius: f64,
    pub count: usize,
    pub seed: u64,
}

impl Default for SamplePlanDto {
    fn default() -> Self {
        SamplePlanDto {
            radius: 2.0,
            count: 32,
            seed: 1,
        }
    }
}

fn default_deltas() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 1e-4]
}

/// The serializable scenario: everything a run needs, reproducible from
/// the seed.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    pub n: usize,
    pub t0: f64,
    pub t1: f64,
    pub horizon_end: f64,
    pub coefficients: CoefficientsDto,
    pub envelopes: EnvelopesDto,
    pub initial: InitialDto,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub tolerances: TolerancesDto,
    #[serde(default)]
    pub sample_plan: SamplePlanDto,
}

/// Parse a scenario from JSON, naming the offending field on failure.
pub fn parse_scenario_str(s: &str) -> Result<ScenarioFile, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(s);
    let file: ScenarioFile =
        serde_path_to_error::deserialize(de).map_err(|e| ScenarioError::Parse {
            field: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    let issues = validate_scenario(&file);
    if issues.is_empty() {
        Ok(file)
    } else {
        Err(ScenarioError::Invalid { issues })
    }
}

/// Load and parse a scenario file.
pub fn load_scenario(path: &Path) -> Result<ScenarioFile, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_scenario_str(&text)
}

fn check_matrix(field: &str, m: &MatrixDto, n: usize, issues: &mut Vec<String>) {
    if m.len() != n {
        issues.push(format!("{field}: expected {n} rows, found {}", m.len()));
        return;
    }
    for (r, row) in m.iter().enumerate() {
        if row.len() != n {
            issues.push(format!(
                "{field}: row {r} has {} entries, expected {n}",
                row.len()
            ));
            return;
        }
        for (cidx, z) in row.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                issues.push(format!("{field}: entry ({r},{cidx}) is not finite"));
                return;
            }
        }
    }
}

fn check_profile(field: &str, p: &ProfileDto, issues: &mut Vec<String>) {
    match p {
        ProfileDto::ExpDecay { rate } if !(rate.is_finite() && *rate >= 0.0) => {
            issues.push(format!("{field}.rate: must be finite and >= 0, got {rate}"));
        }
        ProfileDto::Sinusoid { omega, phase } if !(omega.is_finite() && phase.is_finite()) => {
            issues.push(format!("{field}: sinusoid parameters must be finite"));
        }
        _ => {}
    }
}

/// Structural validation only — no numerics. Returns a list of issues,
/// each naming the offending field; empty means valid.
pub fn validate_scenario(file: &ScenarioFile) -> Vec<String> {
    let mut issues = Vec::new();
    if file.schema_version != SCHEMA_VERSION {
        issues.push(format!(
            "schema_version: expected {SCHEMA_VERSION}, got {}",
            file.schema_version
        ));
    }
    if file.name.is_empty() {
        issues.push("name: must be nonempty".into());
    }
    if file.n == 0 {
        issues.push("n: must be >= 1".into());
    }
    if !file.t0.is_finite() || !file.t1.is_finite() || !file.horizon_end.is_finite() {
        issues.push("t0/t1/horizon_end: must be finite".into());
    }
    if file.t1 < file.t0 {
        issues.push(format!("t1: must be >= t0 ({} < {})", file.t1, file.t0));
    }
    if file.horizon_end <= file.t1 {
        issues.push(format!(
            "horizon_end: must be > t1 ({} <= {})",
            file.horizon_end, file.t1
        ));
    }
    let n = file.n.max(1);
    check_matrix("coefficients.A.base", &file.coefficients.a.base, n, &mut issues);
    check_matrix("coefficients.B.base", &file.coefficients.b.base, n, &mut issues);
    check_matrix("coefficients.C.base", &file.coefficients.c.base, n, &mut issues);
    check_matrix("coefficients.mu.base", &file.coefficients.mu.base, 1, &mut issues);
    if let Some(z) = file.coefficients.mu.base.first().and_then(|r| r.first()) {
        if z.im.abs() > 1e-14 {
            issues.push(format!(
                "coefficients.mu.base: must be real (|Im| = {:.3e})",
                z.im.abs()
            ));
        }
    }
    for (name, fam) in [
        ("coefficients.A", &file.coefficients.a),
        ("coefficients.B", &file.coefficients.b),
        ("coefficients.C", &file.coefficients.c),
        ("coefficients.mu", &file.coefficients.mu),
    ] {
        check_profile(&format!("{name}.time_profile"), &fam.time_profile, &mut issues);
    }
    for (name, env) in [
        ("envelopes.a0", &file.envelopes.a0),
        ("envelopes.b0", &file.envelopes.b0),
        ("envelopes.c0", &file.envelopes.c0),
        ("envelopes.mu0", &file.envelopes.mu0),
    ] {
        if !(env.amplitude.is_finite() && env.amplitude >= 0.0) {
            issues.push(format!(
                "{name}.amplitude: must be finite and >= 0, got {}",
                env.amplitude
            ));
        }
        check_profile(&format!("{name}.profile"), &env.profile, &mut issues);
    }
    if file.initial.phi1.len() != n {
        issues.push(format!(
            "initial.phi1: expected {n} entries, found {}",
            file.initial.phi1.len()
        ));
    }
    if file
        .initial
        .phi1
        .iter()
        .all(|z| z.re == 0.0 && z.im == 0.0)
    {
        issues.push("initial.phi1: must be nonzero".into());
    }
    check_matrix("initial.Y0", &file.initial.y0, n, &mut issues);
    if file.deltas.is_empty() {
        issues.push("deltas: must contain at least one value".into());
    }
    if !file
        .deltas
        .windows(2)
        .all(|w| w[0] > w[1] && w[1].is_finite())
        || file.deltas.iter().any(|d| !(d.is_finite() && *d > 0.0))
    {
        issues.push("deltas: must be positive, finite and strictly descending".into());
    }
    let tol = &file.tolerances;
    for (name, v) in [
        ("tolerances.rtol", tol.rtol),
        ("tolerances.atol", tol.atol),
        ("tolerances.residual_hermitian_flow", tol.residual_hermitian_flow),
        ("tolerances.residual_liouville_det", tol.residual_liouville_det),
        ("tolerances.residual_reconstruction", tol.residual_reconstruction),
        ("tolerances.psd_tol", tol.psd_tol),
        ("tolerances.cone_lambda_tol", tol.cone_lambda_tol),
        ("tolerances.cond_cap", tol.cond_cap),
        ("tolerances.blow_up_cap", tol.blow_up_cap),
    ] {
        if !(v.is_finite() && v > 0.0) {
            issues.push(format!("{name}: must be finite and > 0, got {v}"));
        }
    }
    if let Some(z) = tol.zero_threshold {
        if !(z.is_finite() && z > 0.0) {
            issues.push(format!(
                "tolerances.zero_threshold: must be finite and > 0, got {z}"
            ));
        }
    }
    if !(file.sample_plan.radius.is_finite() && file.sample_plan.radius > 0.0) {
        issues.push(format!(
            "sample_plan.radius: must be finite and > 0, got {}",
            file.sample_plan.radius
        ));
    }
    if file.sample_plan.count == 0 {
        issues.push("sample_plan.count: must be >= 1".into());
    }
    issues
}

fn matrix_from_dto(m: &MatrixDto) -> CMatrix {
    let rows: Vec<Vec<Complex64>> = m
        .iter()
        .map(|row| row.iter().map(|&z| z.into()).collect())
        .collect();
    CMatrix::from_rows(&rows).expect("validated matrix")
}

fn family_from_dto(dto: &FamilyDto) -> CoefficientFamily {
    CoefficientFamily {
        kind: dto.kind.into(),
        base: matrix_from_dto(&dto.base),
        time_profile: (&dto.time_profile).into(),
        notes: dto.notes.clone(),
    }
}

/// A scenario resolved into runnable pieces.
#[derive(Debug)]
pub struct BuiltScenario {
    pub name: String,
    pub spec: SystemSpec,
    pub init: ConjoinedInit,
    pub horizon_end: f64,
    pub plan: SamplePlan,
    pub thresholds: Thresholds,
    pub deltas: Vec<f64>,
}

/// Resolve a scenario into model objects. Structural validation runs
/// first (so hand-built files cannot slip through); cone admissibility of
/// `Y0` and coefficient-model constraints are checked here too — the one
/// place light numerics are allowed before the run.
pub fn build_scenario(file: &ScenarioFile) -> Result<BuiltScenario, ScenarioError> {
    let issues = validate_scenario(file);
    if !issues.is_empty() {
        return Err(ScenarioError::Invalid { issues });
    }
    let envelope = |e: &EnvelopeDto| Envelope {
        amplitude: e.amplitude,
        profile: (&e.profile).into(),
    };
    let spec = SystemSpec::new(
        file.n,
        file.t0,
        family_from_dto(&file.coefficients.a),
        family_from_dto(&file.coefficients.b),
        family_from_dto(&file.coefficients.c),
        family_from_dto(&file.coefficients.mu),
        Envelopes {
            a0: envelope(&file.envelopes.a0),
            b0: envelope(&file.envelopes.b0),
            c0: envelope(&file.envelopes.c0),
            mu0: envelope(&file.envelopes.mu0),
        },
    )
    .map_err(|e: ModelError| ScenarioError::Invalid {
        issues: vec![format!("coefficients: {e}")],
    })?;

    let phi1: Vec<Complex64> = file.initial.phi1.iter().map(|&z| z.into()).collect();
    let y0 = matrix_from_dto(&file.initial.y0);
    let init = make_conjoined(&spec, file.t1, phi1, y0).map_err(|e: ConjoinedError| {
        let field = match &e {
            ConjoinedError::ZeroPhi => "initial.phi1",
            _ => "initial.Y0",
        };
        ScenarioError::Invalid {
            issues: vec![format!("{field}: {e}")],
        }
    })?;

    let t_points: Vec<f64> = (0..SAMPLE_TIME_POINTS)
        .map(|i| {
            file.t1
                + (file.horizon_end - file.t1) * i as f64 / (SAMPLE_TIME_POINTS - 1) as f64
        })
        .collect();
    let plan = SamplePlan::new(
        t_points,
        file.sample_plan.radius,
        file.sample_plan.count,
        file.sample_plan.seed,
    );

    let tol = &file.tolerances;
    let thresholds = Thresholds {
        rtol: tol.rtol,
        atol: tol.atol,
        residual_hermitian_flow: tol.residual_hermitian_flow,
        residual_liouville_det: tol.residual_liouville_det,
        residual_reconstruction: tol.residual_reconstruction,
        zero_threshold: tol.zero_threshold,
        psd_tol: tol.psd_tol,
        cone_lambda_tol: tol.cone_lambda_tol,
        cond_cap: tol.cond_cap,
        blow_up_cap: tol.blow_up_cap,
    };

    Ok(BuiltScenario {
        name: file.name.clone(),
        spec,
        init,
        horizon_end: file.horizon_end,
        plan,
        thresholds,
        deltas: file.deltas.clone(),
    })
}

// ---------------------------------------------------------------------
// Report JSON model
// ---------------------------------------------------------------------

fn finite_or_none(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EnvelopeFindingDto {
    pub ok: bool,
    pub worst_margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConeFindingDto {
    pub ok: bool,
    pub worst_min_eigenvalue: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct HypothesisDto {
    pub envelopes: EnvelopeSetDto,
    pub b_psd: ConeFindingDto,
    pub c_plus_cstar_psd: ConeFindingDto,
    pub samples_used: usize,
    pub sampled_region: SampledRegionDto,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EnvelopeSetDto {
    #[serde(rename = "A")]
    pub a: EnvelopeFindingDto,
    #[serde(rename = "B")]
    pub b: EnvelopeFindingDto,
    #[serde(rename = "C")]
    pub c: EnvelopeFindingDto,
    pub mu: EnvelopeFindingDto,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SampledRegionDto {
    pub radius: f64,
    pub t_min: f64,
    pub t_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntervalEndDto {
    Horizon,
    Finite {
        t: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        norm: Option<f64>,
    },
}

impl From<&IntervalEnd> for IntervalEndDto {
    fn from(e: &IntervalEnd) -> Self {
        match e {
            IntervalEnd::Horizon => IntervalEndDto::Horizon,
            IntervalEnd::Finite { t, norm } => IntervalEndDto::Finite {
                t: *t,
                norm: finite_or_none(*norm),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConeSummaryDto {
    pub min_lambda: f64,
    pub min_lambda_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_violation_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_nonpositive_time: Option<f64>,
    pub interval: IntervalEndDto,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResidualCheckDto {
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum DetBoundDto {
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

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct IdentityResidualsDto {
    pub hermitian_flow: ResidualCheckDto,
    pub liouville_det: ResidualCheckDto,
    pub reconstruction: ResidualCheckDto,
    pub det_bound: DetBoundDto,
    pub window: (f64, f64),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OscillationDto {
    pub horizon: (f64, f64),
    pub min_phi_norm: f64,
    pub zero_events: Vec<f64>,
    pub verdict: String,
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DeltaRunDto {
    pub delta: f64,
    pub min_lambda: f64,
    pub all_positive: bool,
    pub reached_horizon: bool,
    pub lambda_profile: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DeltaDto {
    pub grid: Vec<f64>,
    pub runs: Vec<DeltaRunDto>,
    pub limit_profile: Vec<f64>,
    pub limit_error_bar: Vec<Option<f64>>,
    pub base_profile: Vec<f64>,
    pub sup_limit_vs_base: f64,
    pub lipschitz_estimate: f64,
    pub continuity_ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OverallDto {
    pub pass: bool,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct VerificationDto {
    pub hypothesis: HypothesisDto,
    pub riccati_cone: ConeSummaryDto,
    pub identity_residuals: IdentityResidualsDto,
    pub oscillation: OscillationDto,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_experiment: Option<DeltaDto>,
    pub overall: OverallDto,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ArtifactsDto {
    pub trajectory_csv: String,
    pub monitors_csv: String,
}

/// The deterministic run report (`report.json`).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportFile {
    pub schema_version: u32,
    pub tool_version: String,
    pub scenario: String,
    pub verification: VerificationDto,
    pub artifacts: ArtifactsDto,
}

/// Wall-clock metadata (`run_meta.json`), separate so the report stays
/// byte-identical across runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub wall_time_ms: u128,
}

pub fn verification_to_dto(r: &VerificationReport) -> VerificationDto {
    let h = &r.hypothesis;
    VerificationDto {
        hypothesis: HypothesisDto {
            envelopes: EnvelopeSetDto {
                a: EnvelopeFindingDto {
                    ok: h.envelope_a.ok,
                    worst_margin: h.envelope_a.worst_margin,
                },
                b: EnvelopeFindingDto {
                    ok: h.envelope_b.ok,
                    worst_margin: h.envelope_b.worst_margin,
                },
                c: EnvelopeFindingDto {
                    ok: h.envelope_c.ok,
                    worst_margin: h.envelope_c.worst_margin,
                },
                mu: EnvelopeFindingDto {
                    ok: h.envelope_mu.ok,
                    worst_margin: h.envelope_mu.worst_margin,
                },
            },
            b_psd: ConeFindingDto {
                ok: h.b_psd.ok,
                worst_min_eigenvalue: h.b_psd.worst_min_eigenvalue,
            },
            c_plus_cstar_psd: ConeFindingDto {
                ok: h.c_plus_cstar_psd.ok,
                worst_min_eigenvalue: h.c_plus_cstar_psd.worst_min_eigenvalue,
            },
            samples_used: h.samples_used,
            sampled_region: SampledRegionDto {
                radius: h.radius,
                t_min: h.t_min,
                t_max: h.t_max,
            },
            seed: h.seed,
        },
        riccati_cone: ConeSummaryDto {
            min_lambda: r.riccati_cone.min_lambda,
            min_lambda_time: r.riccati_cone.min_lambda_time,
            first_violation_time: r.riccati_cone.first_violation_time,
            first_nonpositive_time: r.riccati_cone.first_nonpositive_time,
            interval: (&r.riccati_cone.interval_end).into(),
        },
        identity_residuals: IdentityResidualsDto {
            hermitian_flow: residual_dto(&r.identity_residuals.hermitian_flow),
            liouville_det: residual_dto(&r.identity_residuals.liouville_det),
            reconstruction: residual_dto(&r.identity_residuals.reconstruction),
            det_bound: match &r.identity_residuals.det_bound {
                DetBoundOutcome::Checked {
                    c,
                    bound,
                    worst_margin,
                    holds,
                    window,
                } => DetBoundDto::Checked {
                    c: *c,
                    bound: *bound,
                    worst_margin: *worst_margin,
                    holds: *holds,
                    window: *window,
                },
                DetBoundOutcome::NotApplicable { reason } => DetBoundDto::NotApplicable {
                    reason: reason.clone(),
                },
            },
            window: r.identity_residuals.window,
        },
        oscillation: OscillationDto {
            horizon: r.oscillation.horizon,
            min_phi_norm: r.oscillation.min_phi_norm,
            zero_events: r.oscillation.zero_events.clone(),
            verdict: match r.oscillation.verdict {
                Verdict::NonoscillatoryOnHorizon => "nonoscillatory_on_horizon".into(),
                Verdict::ZeroDetected => "zero_detected".into(),
                Verdict::Inconclusive => "inconclusive".into(),
            },
            threshold: r.oscillation.threshold,
        },
        delta_experiment: r.delta.as_ref().map(|d| DeltaDto {
            grid: d.grid.clone(),
            runs: d
                .runs
                .iter()
                .map(|run| DeltaRunDto {
                    delta: run.delta,
                    min_lambda: run.min_lambda,
                    all_positive: run.all_positive,
                    reached_horizon: run.reached_horizon,
                    lambda_profile: run.lambda_profile.clone(),
                })
                .collect(),
            limit_profile: d.limit_profile.clone(),
            limit_error_bar: d.limit_error_bar.iter().map(|&v| finite_or_none(v)).collect(),
            base_profile: d.base_profile.clone(),
            sup_limit_vs_base: d.sup_limit_vs_base,
            lipschitz_estimate: d.lipschitz_estimate,
            continuity_ok: d.continuity_ok,
        }),
        overall: OverallDto {
            pass: r.overall_pass,
            reasons: r.reasons.clone(),
        },
    }
}

fn residual_dto(r: &crate::oscillation::ResidualCheck) -> ResidualCheckDto {
    ResidualCheckDto {
        value: r.value,
        threshold: r.threshold,
        pass: r.pass,
    }
}

// ---------------------------------------------------------------------
// CSV artifacts
// ---------------------------------------------------------------------

fn push_f64(out: &mut String, v: f64) {
    // Shortest round-trip formatting; deterministic.
    let _ = write!(out, "{v}");
}

/// Trajectory CSV: one row per accepted node of the Hamiltonian system,
/// with cone and determinant diagnostics evaluated at the same times.
/// Diagnostics past the Riccati maximal interval are left empty.
pub fn trajectory_csv(
    built: &BuiltScenario,
    arts: &PipelineArtifacts,
) -> String {
    let n = built.spec.dim();
    let traj: &Trajectory = &arts.system;
    let frozen =
        FrozenCoefficients::new(&built.spec, traj).expect("system trajectory matches spec");

    let mut out = String::new();
    out.push('t');
    for i in 0..n {
        let _ = write!(out, ",re_phi_{i},im_phi_{i}");
    }
    for i in 0..n {
        let _ = write!(out, ",re_psi_{i},im_psi_{i}");
    }
    out.push_str(",lambda_min_u,abs_det_phi_sq,liouville_residual\n");

    let riccati_end = arts.riccati.t_end();
    let pair_end = arts.pair.trajectory().t_end();
    let det0_sq = arts
        .pair
        .eval_phi(traj.t_start())
        .map(|m| m.determinant().norm_sqr())
        .unwrap_or(f64::NAN);

    let integrand = |tau: f64| -> f64 {
        let vals = frozen.values(tau).expect("within span");
        let y = arts.riccati.eval(tau).expect("within span");
        2.0 * vals.a.trace().re + (&vals.b * y.hermitian_part().matrix()).trace().re
    };

    let mut acc = 0.0f64;
    let mut prev_t = traj.t_start();
    for (i, &t) in traj.nodes().iter().enumerate() {
        push_f64(&mut out, t);
        let s = traj.state_at_node(i);
        for z in s.iter().take(2 * n) {
            out.push(',');
            push_f64(&mut out, z.re);
            out.push(',');
            push_f64(&mut out, z.im);
        }
        let in_riccati = t <= riccati_end;
        out.push(',');
        if in_riccati {
            if let Ok(y) = arts.riccati.eval(t) {
                if let Ok(lambda) = y.hermitian_part().min_eigenvalue() {
                    push_f64(&mut out, lambda);
                }
            }
        }
        out.push(',');
        let mut det_sq = f64::NAN;
        if t <= pair_end {
            if let Ok(phi) = arts.pair.eval_phi(t) {
                det_sq = phi.determinant().norm_sqr();
                push_f64(&mut out, det_sq);
            }
        }
        out.push(',');
        if in_riccati && t <= pair_end && det_sq.is_finite() {
            acc += adaptive_simpson(&integrand, prev_t, t, QUAD_ABS_TOL);
            prev_t = t;
            let rhs = det0_sq * acc.exp();
            push_f64(&mut out, (det_sq - rhs).abs() / 1.0f64.max(det_sq));
        }
        out.push('\n');
    }
    out
}

/// Monitors CSV: one row per accepted node of the Riccati flow.
pub fn monitors_csv(arts: &PipelineArtifacts) -> String {
    let mut out = String::from("t,lambda_min_u,det_u,norm_y_fro\n");
    for m in arts.riccati.monitors() {
        push_f64(&mut out, m.t);
        out.push(',');
        push_f64(&mut out, m.lambda_min);
        out.push(',');
        push_f64(&mut out, m.det_u);
        out.push(',');
        push_f64(&mut out, m.norm_y);
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------
// Run orchestration
// ---------------------------------------------------------------------

/// Run a parsed scenario and write `report.json`, `run_meta.json` and the
/// two CSV artifacts into `out_dir`.
pub fn run_scenario_to_dir(file: &ScenarioFile, out_dir: &Path) -> Result<ReportFile, RunError> {
    let started = std::time::Instant::now();
    let built = build_scenario(file)?;
    let (report, arts) = verify_theorem_full(
        &built.spec,
        &built.init,
        built.horizon_end,
        &built.plan,
        &built.thresholds,
        &built.deltas,
    )?;

    let write = |name: &str, contents: &str| -> Result<(), RunError> {
        let path = out_dir.join(name);
        fs::write(&path, contents).map_err(|e| RunError::Output {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    };

    fs::create_dir_all(out_dir).map_err(|e| RunError::Output {
        path: out_dir.display().to_string(),
        message: e.to_string(),
    })?;

    let report_file = ReportFile {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        scenario: built.name.clone(),
        verification: verification_to_dto(&report),
        artifacts: ArtifactsDto {
            trajectory_csv: "trajectory.csv".into(),
            monitors_csv: "monitors.csv".into(),
        },
    };

    write(
        "report.json",
        &serde_json::to_string_pretty(&report_file).expect("report serializes"),
    )?;
    write("trajectory.csv", &trajectory_csv(&built, &arts))?;
    write("monitors.csv", &monitors_csv(&arts))?;
    write(
        "run_meta.json",
        &serde_json::to_string_pretty(&RunMeta {
            wall_time_ms: started.elapsed().as_millis(),
        })
        .expect("meta serializes"),
    )?;

    Ok(report_file)
}

/// Parse and run a scenario from a JSON string; returns the report as a
/// JSON string (no files written). Used by the Python bindings.
pub fn run_scenario_str(s: &str) -> Result<String, RunError> {
    let file = parse_scenario_str(s)?;
    let built = build_scenario(&file)?;
    let (report, _) = verify_theorem_full(
        &built.spec,
        &built.init,
        built.horizon_end,
        &built.plan,
        &built.thresholds,
        &built.deltas,
    )?;
    let report_file = ReportFile {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        scenario: built.name,
        verification: verification_to_dto(&report),
        artifacts: ArtifactsDto {
            trajectory_csv: String::new(),
            monitors_csv: String::new(),
        },
    };
    Ok(serde_json::to_string_pretty(&report_file).expect("report serializes"))
}

// ---------------------------------------------------------------------
// Catalog listing
// ---------------------------------------------------------------------

/// Stable (sorted) description of the coefficient-family catalog.
pub fn catalog_text() -> String {
    let mut families = vec![
        (
            "composite_sum",
            "value = base * p(t - t0) * (1/(1 + \u{2016}u\u{2016}\u{00b2}) + 1/(1 + \u{2016}v\u{2016}\u{00b2})) / 2",
        ),
        ("constant", "value = base"),
        (
            "state_saturated_u",
            "value = base * p(t - t0) / (1 + \u{2016}u\u{2016}\u{00b2})",
        ),
        (
            "state_saturated_v",
            "value = base * p(t - t0) / (1 + \u{2016}v\u{2016}\u{00b2})",
        ),
        ("time_scaled", "value = base * p(t - t0)"),
    ];
    families.sort_by_key(|f| f.0);
    let mut profiles = vec![
        ("exp_decay(rate)", "p(tau) = exp(-rate * tau), rate >= 0"),
        ("inv_linear", "p(tau) = 1 / (1 + tau)"),
        ("one", "p(tau) = 1"),
        ("sinusoid(omega, phase)", "p(tau) = sin(omega * tau + phase)"),
    ];
    profiles.sort_by_key(|p| p.0);

    let mut out = String::from("coefficient families:\n");
    for (name, desc) in families {
        let _ = writeln!(out, "  {name:<20} {desc}");
    }
    out.push_str("time profiles:\n");
    for (name, desc) in profiles {
        let _ = writeln!(out, "  {name:<26} {desc}");
    }
    out.push_str("auto envelope: \u{2016}base\u{2016}_F \u{00b7} sup|profile|\n");
    out
}

/// Canonical JSON for a scenario (field order fixed by the struct).
pub fn scenario_to_json(file: &ScenarioFile) -> String {
    serde_json::to_string_pretty(file).expect("scenario serializes")
}

/// Build the four example scenarios used across the test suite and docs.
pub fn builtin_scenario(name: &str) -> Option<ScenarioFile> {
    let re = |x: f64| ComplexDto { re: x, im: 0.0 };
    let scalar = |x: f64| vec![vec![re(x)]];
    let scalar_family = |kind: FamilyKindDto, x: f64| FamilyDto {
        kind,
        base: scalar(x),
        time_profile: ProfileDto::One,
        notes: String::new(),
    };
    let env = |amplitude: f64| EnvelopeDto {
        amplitude,
        profile: ProfileDto::One,
    };
    let scalar_scenario = |name: &str, c_coef: f64, horizon: f64| ScenarioFile {
        schema_version: SCHEMA_VERSION,
        name: name.to_string(),
        n: 1,
        t0: 0.0,
        t1: 0.0,
        horizon_end: horizon,
        coefficients: CoefficientsDto {
            a: scalar_family(FamilyKindDto::Constant, 0.0),
            b: scalar_family(FamilyKindDto::Constant, 1.0),
            c: scalar_family(FamilyKindDto::Constant, c_coef),
            mu: scalar_family(FamilyKindDto::Constant, 0.0),
        },
        envelopes: EnvelopesDto {
            a0: env(0.0),
            b0: env(1.0),
            c0: env(c_coef.abs()),
            mu0: env(0.0),
        },
        initial: InitialDto {
            phi1: vec![re(1.0)],
            y0: scalar(1.0),
        },
        deltas: default_deltas(),
        tolerances: TolerancesDto {
            zero_threshold: Some(1e-6),
            ..TolerancesDto::default()
        },
        sample_plan: SamplePlanDto::default(),
    };

    match name {
        "e1" => Some(scalar_scenario("e1", 0.0, 10.0)),
        "e2" => Some(scalar_scenario("e2", 1.0, 10.0)),
        "e3" => {
            let mut s = scalar_scenario("e3", -1.0, 2.0 * std::f64::consts::PI);
            s.name = "e3".into();
            Some(s)
        }
        "e4" => {
            let ident2: MatrixDto = vec![
                vec![re(1.0), re(0.0)],
                vec![re(0.0), re(1.0)],
            ];
            let zero2: MatrixDto = vec![
                vec![re(0.0), re(0.0)],
                vec![re(0.0), re(0.0)],
            ];
            Some(ScenarioFile {
                schema_version: SCHEMA_VERSION,
                name: "e4".into(),
                n: 2,
                t0: 0.0,
                t1: 0.0,
                horizon_end: 20.0,
                coefficients: CoefficientsDto {
                    a: FamilyDto {
                        kind: FamilyKindDto::Constant,
                        base: zero2,
                        time_profile: ProfileDto::One,
                        notes: String::new(),
                    },
                    b: FamilyDto {
                        kind: FamilyKindDto::StateSaturatedU,
                        base: ident2.clone(),
                        time_profile: ProfileDto::One,
                        notes: String::new(),
                    },
                    c: FamilyDto {
                        kind: FamilyKindDto::TimeScaled,
                        base: ident2.clone(),
                        time_profile: ProfileDto::ExpDecay { rate: 1.0 },
                        notes: String::new(),
                    },
                    mu: FamilyDto {
                        kind: FamilyKindDto::StateSaturatedV,
                        base: scalar(1.0),
                        time_profile: ProfileDto::Sinusoid {
                            omega: 1.0,
                            phase: 0.0,
                        },
                        notes: String::new(),
                    },
                },
                envelopes: EnvelopesDto {
                    a0: env(0.0),
                    b0: env(2.0f64.sqrt()),
                    c0: env(2.0f64.sqrt()),
                    mu0: env(1.0),
                },
                initial: InitialDto {
                    phi1: vec![re(1.0), re(0.0)],
                    y0: ident2,
                },
                deltas: default_deltas(),
                tolerances: TolerancesDto {
                    zero_threshold: Some(1e-6),
                    ..TolerancesDto::default()
                },
                sample_plan: SamplePlanDto::default(),
            })
        }
        _ => None,
    }
}
