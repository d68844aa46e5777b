//! The quasi-linear Hamiltonian system model: a closed catalog of
//! coefficient families (so scenarios stay serializable and reproducible),
//! norm envelopes, and sampled verification of the envelope and
//! positive-semidefiniteness hypotheses.
//!
//! Catalog semantics, for state vectors `u`, `v` and `tau = t - t0`:
//!
//! | kind                | value(t, u, v)                                        |
//! |---------------------|-------------------------------------------------------|
//! | `constant`          | `base`                                                |
//! | `time_scaled`       | `base * p(tau)`                                       |
//! | `state_saturated_u` | `base * p(tau) / (1 + ‖u‖²)`                          |
//! | `state_saturated_v` | `base * p(tau) / (1 + ‖v‖²)`                          |
//! | `composite_sum`     | `base * p(tau) * (1/(1+‖u‖²) + 1/(1+‖v‖²)) / 2`       |
//!
//! Every profile `p` is bounded by 1 in magnitude on `tau >= 0`, so each
//! family is bounded by `‖base‖_F * sup|p|` — the auto-derived envelope.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::{CMatrix, HermitianMatrix, LinalgError};

/// Slack used when comparing a sampled coefficient norm against its
/// envelope; absorbs round-off in norm evaluation only.
pub const ENVELOPE_SLACK: f64 = 1e-12;

/// Default PSD tolerance for the cone hypothesis checks.
pub const DEFAULT_PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("coefficient {name}: {source}")]
    BadMatrix { name: &'static str, source: LinalgError },
    #[error("mu must be a real scalar family (1x1 base with |Im| <= 1e-14, got {im:.3e})")]
    MuNotReal { im: f64 },
    #[error("mu base must be 1x1, got {n}x{n}")]
    MuNotScalar { n: usize },
    #[error("coefficient {name} has dimension {got}, expected {expected}")]
    DimensionMismatch { name: &'static str, got: usize, expected: usize },
    #[error("envelope amplitude must be nonnegative and finite, got {value}")]
    BadEnvelope { value: f64 },
    #[error("time profile parameter out of range: {what}")]
    BadProfile { what: String },
}

/// Bounded time profiles, all with `sup |p| = 1` on `tau >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeProfile {
    /// `p(tau) = 1`
    One,
    /// `p(tau) = exp(-rate * tau)`, `rate >= 0`
    ExpDecay { rate: f64 },
    /// `p(tau) = sin(omega * tau + phase)`
    Sinusoid { omega: f64, phase: f64 },
    /// `p(tau) = 1 / (1 + tau)`
    InvLinear,
}

impl TimeProfile {
    pub fn value(&self, tau: f64) -> f64 {
        match self {
            TimeProfile::One => 1.0,
            TimeProfile::ExpDecay { rate } => (-rate * tau).exp(),
            TimeProfile::Sinusoid { omega, phase } => (omega * tau + phase).sin(),
            TimeProfile::InvLinear => 1.0 / (1.0 + tau),
        }
    }

    /// Supremum of `|p|` over `tau >= 0`.
    pub fn sup_abs(&self) -> f64 {
        1.0
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            TimeProfile::ExpDecay { rate } if !(rate.is_finite() && *rate >= 0.0) => {
                Err(ModelError::BadProfile {
                    what: format!("exp_decay rate must be finite and >= 0, got {rate}"),
                })
            }
            TimeProfile::Sinusoid { omega, phase }
                if !(omega.is_finite() && phase.is_finite()) =>
            {
                Err(ModelError::BadProfile {
                    what: "sinusoid parameters must be finite".into(),
                })
            }
            _ => Ok(()),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            TimeProfile::One => "one",
            TimeProfile::ExpDecay { .. } => "exp_decay",
            TimeProfile::Sinusoid { .. } => "sinusoid",
            TimeProfile::InvLinear => "inv_linear",
        }
    }
}

/// How a coefficient matrix depends on `(t, u, v)`.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilyKind {
    Constant,
    TimeScaled,
    StateSaturatedU,
    StateSaturatedV,
    CompositeSum,
}

impl FamilyKind {
    pub fn name(&self) -> &'static str {
        match self {
            FamilyKind::Constant => "constant",
            FamilyKind::TimeScaled => "time_scaled",
            FamilyKind::StateSaturatedU => "state_saturated_u",
            FamilyKind::StateSaturatedV => "state_saturated_v",
            FamilyKind::CompositeSum => "composite_sum",
        }
    }

    pub fn all() -> [FamilyKind; 5] {
        [
            FamilyKind::Constant,
            FamilyKind::TimeScaled,
            FamilyKind::StateSaturatedU,
            FamilyKind::StateSaturatedV,
            FamilyKind::CompositeSum,
        ]
    }
}

/// One serializable coefficient: a base matrix modulated by a bounded
/// time profile and, depending on the kind, a state saturation factor.
#[derive(Debug, Clone)]
pub struct CoefficientFamily {
    pub kind: FamilyKind,
    pub base: CMatrix,
    pub time_profile: TimeProfile,
    pub notes: String,
}

fn sat(x: &[Complex64]) -> f64 {
    let norm_sqr: f64 = x.iter().map(|z| z.norm_sqr()).sum();
    1.0 / (1.0 + norm_sqr)
}

impl CoefficientFamily {
    pub fn new(kind: FamilyKind, base: CMatrix, time_profile: TimeProfile) -> Self {
        CoefficientFamily {
            kind,
            base,
            time_profile,
            notes: String::new(),
        }
    }

    pub fn constant(base: CMatrix) -> Self {
        Self::new(FamilyKind::Constant, base, TimeProfile::One)
    }

    /// Scalar modulation factor at `(tau, u, v)`.
    pub fn factor(&self, tau: f64, u: &[Complex64], v: &[Complex64]) -> f64 {
        let p = self.time_profile.value(tau);
        match self.kind {
            FamilyKind::Constant => 1.0,
            FamilyKind::TimeScaled => p,
            FamilyKind::StateSaturatedU => p * sat(u),
            FamilyKind::StateSaturatedV => p * sat(v),
            FamilyKind::CompositeSum => p * 0.5 * (sat(u) + sat(v)),
        }
    }

    /// Evaluate the family; total for all `tau >= 0` and all states.
    pub fn value(&self, tau: f64, u: &[Complex64], v: &[Complex64]) -> CMatrix {
        self.base.scale_re(self.factor(tau, u, v))
    }

    /// `‖base‖_F * sup|profile|` — a constant envelope the family always
    /// satisfies by construction.
    pub fn auto_envelope(&self) -> f64 {
        self.base.norm_fro() * self.time_profile.sup_abs()
    }
}

/// Nonnegative time envelope `t -> amplitude * |p(t - t0)|`.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub amplitude: f64,
    pub profile: TimeProfile,
}

impl Envelope {
    pub fn constant(amplitude: f64) -> Self {
        Envelope {
            amplitude,
            profile: TimeProfile::One,
        }
    }

    pub fn value(&self, tau: f64) -> f64 {
        self.amplitude * self.profile.value(tau).abs()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(ModelError::BadEnvelope {
                value: self.amplitude,
            });
        }
        self.profile.validate()
    }
}

/// Values of all four coefficients at one `(t, u, v)`.
#[derive(Debug, Clone)]
pub struct CoefficientValues {
    pub a: CMatrix,
    pub b: CMatrix,
    pub c: CMatrix,
    pub mu: f64,
}

/// Anything the integration pipeline can treat as the coefficient data of
/// the Hamiltonian system. The catalog type [`SystemSpec`] implements
/// this; library users may plug in arbitrary callback coefficients.
pub trait CoefficientModel {
    fn dim(&self) -> usize;
    fn t0(&self) -> f64;
    fn eval(&self, t: f64, u: &[Complex64], v: &[Complex64]) -> CoefficientValues;
}

/// The serializable system: dimension, start time, the four coefficient
/// families and their envelopes.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    n: usize,
    t0: f64,
    pub a: CoefficientFamily,
    pub b: CoefficientFamily,
    pub c: CoefficientFamily,
    pub mu: CoefficientFamily,
    pub envelopes: Envelopes,
}

#[derive(Debug, Clone)]
pub struct Envelopes {
    pub a0: Envelope,
    pub b0: Envelope,
    pub c0: Envelope,
    pub mu0: Envelope,
}

impl SystemSpec {
    /// Validates dimensions, symmetrizes the base of `B` (its values must
    /// be Hermitian) and requires `mu` to be a real 1x1 family.
    pub fn new(
        n: usize,
        t0: f64,
        a: CoefficientFamily,
        mut b: CoefficientFamily,
        c: CoefficientFamily,
        mu: CoefficientFamily,
        envelopes: Envelopes,
    ) -> Result<Self, ModelError> {
        assert!(n > 0, "dimension must be positive");
        for (name, fam) in [("A", &a), ("B", &b), ("C", &c)] {
            if fam.base.dim() != n {
                return Err(ModelError::DimensionMismatch {
                    name,
                    got: fam.base.dim(),
                    expected: n,
                });
            }
            if !fam.base.is_finite() {
                return Err(ModelError::BadMatrix {
                    name,
                    source: LinalgError::NonFinite { row: 0, col: 0 },
                });
            }
            fam.time_profile.validate()?;
        }
        if mu.base.dim() != 1 {
            return Err(ModelError::MuNotScalar { n: mu.base.dim() });
        }
        let mu_im = mu.base[(0, 0)].im.abs();
        if mu_im > 1e-14 {
            return Err(ModelError::MuNotReal { im: mu_im });
        }
        mu.time_profile.validate()?;
        envelopes.a0.validate()?;
        envelopes.b0.validate()?;
        envelopes.c0.validate()?;
        envelopes.mu0.validate()?;

        // B values must be Hermitian: symmetrize its base once here; the
        // profiles are real, so every evaluation stays Hermitian.
        b.base = HermitianMatrix::symmetrize(&b.base).matrix().clone();

        Ok(SystemSpec {
            n,
            t0,
            a,
            b,
            c,
            mu,
            envelopes,
        })
    }
}

impl CoefficientModel for SystemSpec {
    fn dim(&self) -> usize {
        self.n
    }

    fn t0(&self) -> f64 {
        self.t0
    }

    fn eval(&self, t: f64, u: &[Complex64], v: &[Complex64]) -> CoefficientValues {
        let tau = t - self.t0;
        CoefficientValues {
            a: self.a.value(tau, u, v),
            b: self.b.value(tau, u, v),
            c: self.c.value(tau, u, v),
            mu: (self.mu.base[(0, 0)] * self.mu.factor(tau, u, v)).re,
        }
    }
}

/// Arbitrary in-process coefficients (not serializable, not reachable
/// from scenario files).
pub struct CallbackModel<F>
where
    F: Fn(f64, &[Complex64], &[Complex64]) -> CoefficientValues,
{
    pub n: usize,
    pub t0: f64,
    pub eval_fn: F,
}

impl<F> CoefficientModel for CallbackModel<F>
where
    F: Fn(f64, &[Complex64], &[Complex64]) -> CoefficientValues,
{
    fn dim(&self) -> usize {
        self.n
    }

    fn t0(&self) -> f64 {
        self.t0
    }

    fn eval(&self, t: f64, u: &[Complex64], v: &[Complex64]) -> CoefficientValues {
        (self.eval_fn)(t, u, v)
    }
}

/// Deterministic sampling plan for hypothesis verification: complex state
/// pairs drawn from the ball of radius `radius` at each listed time.
#[derive(Debug, Clone)]
pub struct SamplePlan {
    pub t_points: Vec<f64>,
    pub radius: f64,
    pub count: usize,
    pub seed: u64,
}

impl SamplePlan {
    pub fn new(t_points: Vec<f64>, radius: f64, count: usize, seed: u64) -> Self {
        assert!(radius > 0.0, "sampling radius must be positive");
        assert!(count >= 1, "sample count must be at least 1");
        SamplePlan {
            t_points,
            radius,
            count,
            seed,
        }
    }

    /// Uniform-in-ball complex vectors, reproducible from the seed.
    fn draw_states(&self, n: usize) -> Vec<(Vec<Complex64>, Vec<Complex64>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::with_capacity(self.count);
        for _ in 0..self.count {
            let u = draw_ball(&mut rng, n, self.radius);
            let v = draw_ball(&mut rng, n, self.radius);
            out.push((u, v));
        }
        out
    }
}

fn draw_ball(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Vec<Complex64> {
    // Gaussian direction, radius scaled for uniform volume in R^{2n}.
    let mut x: Vec<Complex64> = (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im)
        })
        .collect();
    let norm: f64 = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return x;
    }
    let r: f64 = rng.random::<f64>().powf(1.0 / (2 * n) as f64) * radius;
    for z in x.iter_mut() {
        *z *= r / norm;
    }
    x
}

/// Result of one coefficient's envelope check.
#[derive(Debug, Clone)]
pub struct EnvelopeFinding {
    pub ok: bool,
    /// `min over samples of envelope(t) - ‖value(t,u,v)‖_F`; negative
    /// margin means the envelope was violated by that much.
    pub worst_margin: f64,
}

/// Result of one PSD cone check.
#[derive(Debug, Clone)]
pub struct ConeFinding {
    pub ok: bool,
    pub worst_min_eigenvalue: f64,
}

/// Sampled verification of the quasi-linearity envelopes and the cone
/// hypotheses. Violations are findings, not errors; the sampled region is
/// recorded so the report never overclaims.
#[derive(Debug, Clone)]
pub struct HypothesisReport {
    pub envelope_a: EnvelopeFinding,
    pub envelope_b: EnvelopeFinding,
    pub envelope_c: EnvelopeFinding,
    pub envelope_mu: EnvelopeFinding,
    pub b_psd: ConeFinding,
    pub c_plus_cstar_psd: ConeFinding,
    pub samples_used: usize,
    pub radius: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub seed: u64,
}

impl HypothesisReport {
    pub fn envelopes_ok(&self) -> bool {
        self.envelope_a.ok && self.envelope_b.ok && self.envelope_c.ok && self.envelope_mu.ok
    }

    pub fn cone_ok(&self) -> bool {
        self.b_psd.ok && self.c_plus_cstar_psd.ok
    }
}

/// Extra sample points taken along a computed trajectory, as
/// `(t, u, v)` triples.
pub type StateSamples = Vec<(f64, Vec<Complex64>, Vec<Complex64>)>;

/// Check the norm envelopes over the sample plan (plus optional trajectory
/// samples). See [`HypothesisReport`].
pub fn check_envelopes(spec: &SystemSpec, plan: &SamplePlan, extra: &StateSamples) -> HypothesisReport {
    hypothesis_report(spec, plan, extra, DEFAULT_PSD_TOL)
}

/// Check the cone hypotheses (B PSD, C + C* PSD) over the sample plan.
pub fn check_cone_hypotheses(
    spec: &SystemSpec,
    plan: &SamplePlan,
    extra: &StateSamples,
    psd_tol: f64,
) -> HypothesisReport {
    hypothesis_report(spec, plan, extra, psd_tol)
}

/// Shared implementation: one pass over all samples fills both the
/// envelope and the cone findings.
pub fn hypothesis_report(
    spec: &SystemSpec,
    plan: &SamplePlan,
    extra: &StateSamples,
    psd_tol: f64,
) -> HypothesisReport {
    let n = spec.dim();
    let states = plan.draw_states(n);

    let mut margins = [f64::INFINITY; 4];
    let mut worst_b = f64::INFINITY;
    let mut worst_c = f64::INFINITY;
    let mut b_ok = true;
    let mut c_ok = true;
    let mut samples_used = 0usize;
    let mut t_min = f64::INFINITY;
    let mut t_max = f64::NEG_INFINITY;

    let mut visit = |t: f64, u: &[Complex64], v: &[Complex64]| {
        let tau = t - spec.t0();
        let vals = spec.eval(t, u, v);
        let env = &spec.envelopes;
        margins[0] = margins[0].min(env.a0.value(tau) - vals.a.norm_fro());
        margins[1] = margins[1].min(env.b0.value(tau) - vals.b.norm_fro());
        margins[2] = margins[2].min(env.c0.value(tau) - vals.c.norm_fro());
        margins[3] = margins[3].min(env.mu0.value(tau) - vals.mu.abs());

        let b_h = HermitianMatrix::symmetrize(&vals.b);
        if let Ok(lambda) = b_h.min_eigenvalue() {
            worst_b = worst_b.min(lambda);
            if lambda < -psd_tol * 1.0f64.max(b_h.norm_fro()) {
                b_ok = false;
            }
        }
        let cc = vals.c.hermitian_part();
        if let Ok(lambda) = cc.min_eigenvalue() {
            worst_c = worst_c.min(lambda);
            if lambda < -psd_tol * 1.0f64.max(cc.norm_fro()) {
                c_ok = false;
            }
        }
        samples_used += 1;
        t_min = t_min.min(t);
        t_max = t_max.max(t);
    };

    for &t in &plan.t_points {
        for (u, v) in &states {
            visit(t, u, v);
        }
    }
    for (t, u, v) in extra {
        visit(*t, u, v);
    }

    let finding = |margin: f64| EnvelopeFinding {
        ok: margin >= -ENVELOPE_SLACK * 1.0f64.max(margin.abs()),
        worst_margin: margin,
    };

    HypothesisReport {
        envelope_a: finding(margins[0]),
        envelope_b: finding(margins[1]),
        envelope_c: finding(margins[2]),
        envelope_mu: finding(margins[3]),
        b_psd: ConeFinding {
            ok: b_ok,
            worst_min_eigenvalue: worst_b,
        },
        c_plus_cstar_psd: ConeFinding {
            ok: c_ok,
            worst_min_eigenvalue: worst_c,
        },
        samples_used,
        radius: plan.radius,
        t_min,
        t_max,
        seed: plan.seed,
    }
}
