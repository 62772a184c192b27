//! Sparse spectral arithmetic for quasi- and almost periodic functions
//! with absolutely summable Fourier coefficients, plus a local-in-time
//! nonlinear Schrödinger solver and finite-time blow-up diagnostics on
//! that representation.
//!
//! A function is stored as a finite map from integer frequency vectors
//! `n ∈ Z^G` to complex coefficients over a fixed list of real
//! generators `ω = (ω_1, …, ω_G)`:
//!
//! ```text
//!   f(x) = Σ_n  c_n · exp(i (ω·n) x)
//! ```
//!
//! The coefficient ℓ¹ norm makes these series a Banach algebra under
//! pointwise multiplication (sparse convolution of coefficients), which
//! is what lets the solver certify a contraction window for
//!
//! ```text
//!   i ∂_t u + ∂_x² u = λ u^k conj(u)^(p−k),    u(0) = f,
//! ```
//!
//! and track truncation error as an explicit discarded-mass budget.
//!
//! Module map:
//! - [`basis`]: frequency generators, integer frequency vectors,
//!   collision scanning for non-independent generator lists.
//! - [`series`]: the sparse series type and its algebra (add, scale,
//!   conjugate, multiply-with-truncation, norms, mean value, pointwise
//!   evaluation).
//! - [`schrodinger`]: the free propagator and the Duhamel quadrature.
//! - [`nls`]: nonlinearity construction, certified Picard solver,
//!   interaction-picture RK4 continuation, blow-up classification.
//! - [`oracle`]: independent brute-force references (long-window grid
//!   quadrature, dense fixed-support ODE integration) used by tests.

pub mod basis;
mod error;
pub mod nls;
pub mod oracle;
pub mod schrodinger;
pub mod series;

pub use basis::{named_constant, Basis, BasisWarning, FreqVector};
pub use error::{Error, Result};
pub use nls::{
    certified_window, classify_blowup, nonlinearity, picard_solve, riccati_bound, step_solve,
    step_solve_backward, zero_mode_residual, BlowupClass, HaltReason, NonlinearitySpec,
    PicardConfig, PicardDiagnostics, SignReport, SolutionTrace, SolverConfig, StepperConfig,
    TimeDirection, TraceSample,
};
pub use schrodinger::{duhamel, propagate, PhaseTable};
pub use series::{APSeries, TruncationPolicy};
