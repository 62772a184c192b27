//! Mean-value sign criterion for finite-time blow-up of the `λ|u|^p`
//! flow, the zero-mode identity audit, and the Riccati comparison
//! scale.
//!
//! With `m = M(f)` the sign conditions read, with exact comparisons
//! against zero (all quantities are finite sums):
//!
//! ```text
//!   forward:   Re λ · Im m < 0   or   Im λ · Re m > 0
//!   backward:  Re λ · Im m > 0   or   Im λ · Re m < 0
//! ```
//!
//! One datum can satisfy one clause of each simultaneously, in which
//! case both directions are reported.

use num_complex::Complex64;

use crate::error::Result;
use crate::series::{APSeries, TruncationPolicy};

use super::{nonlinearity, NonlinearitySpec, SolutionTrace};

/// Outcome of the sign test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlowupClass {
    ForwardFinite,
    BackwardFinite,
    /// Both a forward and a backward clause hold.
    Both,
    /// Neither condition fires; the criterion is silent.
    Inconclusive,
}

impl BlowupClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            BlowupClass::ForwardFinite => "ForwardFinite",
            BlowupClass::BackwardFinite => "BackwardFinite",
            BlowupClass::Both => "Both",
            BlowupClass::Inconclusive => "Inconclusive",
        }
    }
}

/// The classification together with the evaluated sign products.
#[derive(Debug, Clone, Copy)]
pub struct SignReport {
    pub mean: Complex64,
    /// `Re λ · Im m`
    pub re_lambda_im_mean: f64,
    /// `Im λ · Re m`
    pub im_lambda_re_mean: f64,
    pub forward: bool,
    pub backward: bool,
    pub class: BlowupClass,
}

/// Evaluate the sign conditions for coupling `lambda` and data `f`.
pub fn classify_blowup(lambda: Complex64, f: &APSeries) -> SignReport {
    let mean = f.mean_value();
    let a = lambda.re * mean.im;
    let b = lambda.im * mean.re;
    let forward = a < 0.0 || b > 0.0;
    let backward = a > 0.0 || b < 0.0;
    let class = match (forward, backward) {
        (true, true) => BlowupClass::Both,
        (true, false) => BlowupClass::ForwardFinite,
        (false, true) => BlowupClass::BackwardFinite,
        (false, false) => BlowupClass::Inconclusive,
    };
    SignReport {
        mean,
        re_lambda_im_mean: a,
        im_lambda_re_mean: b,
        forward,
        backward,
        class,
    }
}

/// Residual of the zero-mode identity along a trace:
///
/// ```text
///   max_j | û(t_j, 0) − f̂(0) + iλ · Trap_0^{t_j} M(u^k conj(u)^(p−k)) |
/// ```
///
/// The zero mode acquires no linear phase, so this measures how well
/// the stored solution satisfies the Duhamel balance at frequency
/// zero. Quadrature runs over the snapshot grid; in modulus mode the
/// integrand is `M(|u|^p)`, which must be real and nonnegative.
pub fn zero_mode_residual(trace: &SolutionTrace, spec: &NonlinearitySpec) -> Result<f64> {
    if trace.snapshots.len() < 2 {
        return Ok(0.0);
    }
    let lambda = spec.lambda();
    let no_trunc = TruncationPolicy::none();
    // The coupling factors out of the integrand; evaluating
    // u^k conj(u)^{p-k} with a unit coupling avoids a division.
    let unit = NonlinearitySpec::new(spec.p(), spec.k(), Complex64::new(1.0, 0.0))?;

    let f0 = trace.snapshots[0].1.zero_mode();
    let mut worst = 0.0f64;
    let mut integral = Complex64::new(0.0, 0.0);
    let mut prev: Option<(f64, Complex64)> = None;
    for (idx, u) in &trace.snapshots {
        let t = trace.samples[*idx].t;
        let (power, _) = nonlinearity(u, &unit, &no_trunc)?;
        let mean = power.mean_value();
        if spec.modulus_mode() {
            debug_assert!(
                mean.im.abs() <= 1e-12 * mean.re.abs().max(1.0),
                "M(|u|^p) should be real, got {mean}"
            );
            debug_assert!(mean.re >= -1e-12, "M(|u|^p) should be nonnegative, got {mean}");
        }
        if let Some((tp, mp)) = prev {
            integral += (t - tp) / 2.0 * (mp + mean);
        }
        prev = Some((t, mean));

        let resid = (u.zero_mode() - f0 + Complex64::new(0.0, 1.0) * lambda * integral).norm();
        worst = worst.max(resid);
    }
    Ok(worst)
}

/// Blow-up time of the scalar comparison problem `x' = |λ| x^p`,
/// `x(0) = Re m`, used as a sanity scale for stepper thresholds.
///
/// Only defined when the forward sign test fired through the
/// `Im λ · Re m > 0` clause with purely imaginary `λ`; returns `None`
/// otherwise. The comparison rests on the mean inequality
/// `M(|u|^p) ≥ |M(u)|^p`; it is a diagnostic, not a bound for the PDE
/// itself.
pub fn riccati_bound(f: &APSeries, lambda: Complex64, p: u32) -> Option<f64> {
    if lambda.re != 0.0 || p < 2 {
        return None;
    }
    let mean = f.mean_value();
    if !(lambda.im * mean.re > 0.0) {
        return None;
    }
    let x0 = mean.re.abs();
    Some(x0.powi(1 - p as i32) / (lambda.norm() * f64::from(p - 1)))
}
