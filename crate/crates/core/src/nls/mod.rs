//! Nonlinearity construction, certified local solver, continuation
//! stepper, and blow-up classification for
//!
//! ```text
//!   i ∂_t u + ∂_x² u = λ u^k conj(u)^(p−k),    u(0) = f.
//! ```
//!
//! The Picard solver works on a time grid over the certified
//! contraction window of the Duhamel map and measures its own
//! contraction ratios; the stepper continues past that window with an
//! interaction-picture RK4, halting on a norm threshold, a step limit,
//! or a truncation-accuracy abort.

mod blowup;
mod picard;
mod stepper;

pub use blowup::{classify_blowup, riccati_bound, zero_mode_residual, BlowupClass, SignReport};
pub use picard::{picard_solve, PicardDiagnostics};
pub use stepper::{step_solve, step_solve_backward};

use std::sync::Arc;

use num_complex::Complex64;

use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::series::{APSeries, TruncationPolicy};

/// Selects the nonlinearity `N(u) = λ · u^k · conj(u)^(p−k)`.
///
/// `modulus_mode` marks the gauge-free `λ|u|^p` family, which requires
/// an even `p` with `k = p/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearitySpec {
    p: u32,
    k: u32,
    lambda: Complex64,
    modulus_mode: bool,
}

impl NonlinearitySpec {
    pub fn new(p: u32, k: u32, lambda: Complex64) -> Result<Self> {
        Self::build(p, k, lambda, false)
    }

    /// The `λ|u|^p` nonlinearity: `p` even, `k = p/2`.
    pub fn modulus(p: u32, lambda: Complex64) -> Result<Self> {
        Self::build(p, p / 2, lambda, true)
    }

    fn build(p: u32, k: u32, lambda: Complex64, modulus_mode: bool) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidSpec("degree p must be >= 1".into()));
        }
        if k > p {
            return Err(Error::InvalidSpec(format!(
                "k ({k}) must satisfy 0 <= k <= p ({p})"
            )));
        }
        if modulus_mode && (p % 2 != 0 || k != p / 2) {
            return Err(Error::InvalidSpec(format!(
                "modulus mode requires even p with k = p/2 (got p = {p}, k = {k})"
            )));
        }
        if !lambda.re.is_finite() || !lambda.im.is_finite() {
            return Err(Error::InvalidSpec("non-finite coupling".into()));
        }
        Ok(NonlinearitySpec {
            p,
            k,
            lambda,
            modulus_mode,
        })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    pub fn modulus_mode(&self) -> bool {
        self.modulus_mode
    }

    /// Spec with the coupling conjugated (used by time reversal).
    pub(crate) fn conjugated(&self) -> NonlinearitySpec {
        NonlinearitySpec {
            lambda: self.lambda.conj(),
            ..self.clone()
        }
    }
}

/// Picard-iteration stage of the solver configuration.
#[derive(Debug, Clone)]
pub struct PicardConfig {
    pub max_iters: usize,
    /// Fixed-point tolerance in the sup-over-grid ℓ¹ distance.
    pub tol: f64,
    /// Number of time intervals M; the grid carries M+1 points.
    pub grid_size: usize,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig {
            max_iters: 60,
            tol: 1e-10,
            grid_size: 256,
        }
    }
}

/// Continuation-stepper stage of the solver configuration.
#[derive(Debug, Clone)]
pub struct StepperConfig {
    pub dt: f64,
    pub max_steps: usize,
    pub blowup_norm_threshold: f64,
    /// Store a full series snapshot every this many steps (the first
    /// and last samples always carry one).
    pub snapshot_stride: usize,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            dt: 1e-3,
            max_steps: 1_000_000,
            blowup_norm_threshold: 1e2,
            snapshot_stride: 1,
        }
    }
}

/// Complete solver configuration.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub trunc: TruncationPolicy,
    pub picard: PicardConfig,
    pub stepper: StepperConfig,
    /// Fraction of the certified contraction window used by the Picard
    /// grid, in (0, 1].
    pub theta: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            trunc: TruncationPolicy::threshold(1e-14).with_max_support(16_384),
            picard: PicardConfig::default(),
            stepper: StepperConfig::default(),
            theta: 0.9,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "theta ({}) must lie in (0, 1]",
                self.theta
            )));
        }
        if self.picard.max_iters == 0 {
            return Err(Error::InvalidConfig("picard.max_iters must be >= 1".into()));
        }
        if !(self.picard.tol > 0.0) {
            return Err(Error::InvalidConfig("picard.tol must be > 0".into()));
        }
        if self.picard.grid_size == 0 {
            return Err(Error::InvalidConfig("picard.grid_size must be >= 1".into()));
        }
        if !(self.stepper.dt > 0.0) || !self.stepper.dt.is_finite() {
            return Err(Error::InvalidConfig("stepper.dt must be positive".into()));
        }
        if self.stepper.max_steps == 0 {
            return Err(Error::InvalidConfig("stepper.max_steps must be >= 1".into()));
        }
        if !(self.stepper.blowup_norm_threshold > 0.0) {
            return Err(Error::InvalidConfig(
                "stepper.blowup_norm_threshold must be > 0".into(),
            ));
        }
        if self.stepper.snapshot_stride == 0 {
            return Err(Error::InvalidConfig("stepper.snapshot_stride must be >= 1".into()));
        }
        if self.trunc.threshold < 0.0 || !self.trunc.threshold.is_finite() {
            return Err(Error::InvalidConfig(
                "trunc.threshold must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HaltReason {
    /// The run finished its planned horizon (Picard window reached).
    Completed,
    /// The ℓ¹ norm crossed the blow-up threshold.
    NormThreshold,
    /// The step budget ran out.
    StepLimit,
    /// Cumulative discarded mass exceeded 10% of the current norm; the
    /// trace past this point would not be trustworthy. Non-fatal.
    AccuracyAbort,
}

impl HaltReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            HaltReason::Completed => "completed",
            HaltReason::NormThreshold => "norm_threshold",
            HaltReason::StepLimit => "step_limit",
            HaltReason::AccuracyAbort => "accuracy_abort",
        }
    }
}

/// Whether trace times march forward or backward from `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeDirection {
    Forward,
    Backward,
}

/// Per-time scalar diagnostics of a run.
#[derive(Debug, Clone, Copy)]
pub struct TraceSample {
    pub t: f64,
    pub a_norm: f64,
    pub l2_norm: f64,
    /// Coefficient at the zero frequency vector.
    pub zero_mode: Complex64,
    /// Cumulative ℓ¹ bound on all coefficients dropped so far.
    pub discarded_mass: f64,
}

/// Time-stamped record of a solver run: scalar diagnostics at every
/// grid time plus (optionally thinned) full series snapshots.
#[derive(Debug, Clone)]
pub struct SolutionTrace {
    pub samples: Vec<TraceSample>,
    /// `(sample index, series)` pairs, strictly increasing in index.
    pub snapshots: Vec<(usize, APSeries)>,
    pub halt: HaltReason,
    pub direction: TimeDirection,
    /// Iterations the Picard stage used, when this trace came from it.
    pub picard_iterations: Option<usize>,
}

impl SolutionTrace {
    pub fn final_sample(&self) -> &TraceSample {
        self.samples.last().expect("trace has at least one sample")
    }

    /// Signed time of a sample: negative for backward runs.
    pub fn signed_time(&self, sample: &TraceSample) -> f64 {
        match self.direction {
            TimeDirection::Forward => sample.t,
            TimeDirection::Backward => -sample.t,
        }
    }
}

pub(crate) fn make_sample(t: f64, u: &APSeries, discarded: f64) -> TraceSample {
    TraceSample {
        t,
        a_norm: u.a_norm(),
        l2_norm: u.l2_norm(),
        zero_mode: u.zero_mode(),
        discarded_mass: discarded,
    }
}

/// Evaluate `N(u) = λ u^k conj(u)^(p−k)` by repeated truncated
/// products. The returned mass is an ℓ¹ bound on everything dropped:
/// each product's own discarded mass plus earlier drops propagated
/// through the remaining factors by their norms, all scaled by `|λ|`.
pub fn nonlinearity(
    u: &APSeries,
    spec: &NonlinearitySpec,
    trunc: &TruncationPolicy,
) -> Result<(APSeries, f64)> {
    let conj = u.conjugate();
    let mut factors = Vec::with_capacity(spec.p as usize);
    for _ in 0..spec.k {
        factors.push(&*u as &APSeries);
    }
    for _ in 0..(spec.p - spec.k) {
        factors.push(&conj);
    }

    let mut acc = factors[0].clone();
    let mut dropped = 0.0f64;
    for factor in &factors[1..] {
        let (next, d) = acc.multiply(factor, trunc)?;
        dropped = dropped * factor.a_norm() + d;
        acc = next;
    }
    let lam = spec.lambda();
    Ok((acc.scale(lam), dropped * lam.norm()))
}

/// Certified contraction window for the Duhamel map on the ball of
/// radius `2‖f‖`:
///
/// ```text
///   T = θ · min( 2^(−p) ‖f‖^(1−p) / |λ| ,  1 / (2 L) ),
///   L = p |λ| (2‖f‖)^(p−1),
/// ```
///
/// so that `T |λ| (2‖f‖)^p ≤ ‖f‖` (the map keeps the ball) and
/// `T·L ≤ 1/2` (it contracts with factor ≤ 1/2). Returns `+∞` for zero
/// data or zero coupling, where the flow is linear.
pub fn certified_window(f: &APSeries, spec: &NonlinearitySpec, theta: f64) -> f64 {
    let norm = f.a_norm();
    let lam = spec.lambda().norm();
    if norm == 0.0 || lam == 0.0 {
        return f64::INFINITY;
    }
    let p = spec.p();
    let ball = 0.5f64.powi(p as i32) * norm.powi(1 - p as i32) / lam;
    let lipschitz = f64::from(p) * lam * (2.0 * norm).powi(p as i32 - 1);
    theta * ball.min(1.0 / (2.0 * lipschitz))
}

pub(crate) fn shared_basis(f: &APSeries) -> Arc<Basis> {
    Arc::clone(f.basis())
}
