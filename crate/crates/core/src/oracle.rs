//! Independent brute-force references used by tests.
//!
//! Nothing here shares code with the series norms or with the
//! production solvers: the long-window quadrature evaluates the
//! exponential sum directly, and the dense ODE reference integrates
//! the fixed-support coefficient system with its own adaptive
//! embedded Runge-Kutta pair and its own convolution tables. These
//! routines trade speed for independence; they may be orders of
//! magnitude slower than the operations they check.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_complex::Complex64;

use crate::basis::FreqVector;
use crate::error::{Error, Result};
use crate::nls::{
    HaltReason, NonlinearitySpec, SolutionTrace, TimeDirection, TraceSample,
};
use crate::series::APSeries;

/// Which quadrature rule a window uses. Midpoint is the only rule the
/// reference needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    Midpoint,
}

/// A symmetric sampling window `[-L, L]` with a uniform midpoint grid.
#[derive(Debug, Clone, Copy)]
pub struct GridWindow {
    half_width: f64,
    samples: usize,
    rule: QuadratureRule,
}

impl GridWindow {
    pub fn new(half_width: f64, samples: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "window half-width {half_width} must be positive"
            )));
        }
        if samples < 2 {
            return Err(Error::InvalidConfig("window needs at least 2 samples".into()));
        }
        Ok(GridWindow {
            half_width,
            samples,
            rule: QuadratureRule::Midpoint,
        })
    }

    /// Window with the default sampling density of 100 points per unit
    /// length, enough to resolve |ω·n| up to ~20 comfortably.
    pub fn with_default_density(half_width: f64) -> Result<Self> {
        let samples = (100.0 * half_width).ceil() as usize;
        GridWindow::new(half_width, samples.max(2))
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }
}

fn term_list(f: &APSeries) -> Vec<(f64, Complex64)> {
    f.iter()
        .map(|(n, c)| (f.basis().frequency_unchecked(n), *c))
        .collect()
}

/// Midpoint approximation of the mean value
/// `(1/2L) ∫_{-L}^{L} f(x) dx`, evaluating the exponential sum
/// pointwise.
pub fn grid_mean(f: &APSeries, w: &GridWindow) -> Complex64 {
    let terms = term_list(f);
    let n = w.samples;
    let h = 2.0 * w.half_width / n as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let x = -w.half_width + (j as f64 + 0.5) * h;
        let mut v = Complex64::new(0.0, 0.0);
        for &(freq, c) in &terms {
            let (s, cosv) = (freq * x).sin_cos();
            v += c * Complex64::new(cosv, s);
        }
        acc += v;
    }
    acc / n as f64
}

/// Midpoint approximation of `(1/2L) ∫ |f(x)|^p dx`.
pub fn grid_mean_abs_pow(f: &APSeries, p: u32, w: &GridWindow) -> f64 {
    let terms = term_list(f);
    let n = w.samples;
    let h = 2.0 * w.half_width / n as f64;
    let mut acc = 0.0f64;
    for j in 0..n {
        let x = -w.half_width + (j as f64 + 0.5) * h;
        let mut v = Complex64::new(0.0, 0.0);
        for &(freq, c) in &terms {
            let (s, cosv) = (freq * x).sin_cos();
            v += c * Complex64::new(cosv, s);
        }
        acc += v.norm().powi(p as i32);
    }
    acc / n as f64
}

// Orientation of a dense factor: `+1` means slot `i` sits at frequency
// vector `n_i`, `-1` at `-n_i` (a conjugated factor).
#[derive(Clone, Copy, PartialEq, Eq)]
enum Orient {
    Plus,
    Minus,
}

/// Dense integrator for the coefficient ODE
/// `û'_n = -i (ω·n)² û_n - i N̂(u)_n` on an a-priori-fixed support.
///
/// The support plays the role of a Galerkin projection applied at
/// every pairwise product, mirroring a solver run whose truncation
/// policy restricts outputs to the same set; there are no adaptive
/// truncation decisions. Construction fails when a product of support
/// modes lands outside the support while staying inside the declared
/// radius box — the support is then not closed under the nonlinearity
/// up to that radius, and the escaping modes are reported.
pub struct OdeReference {
    support: Vec<FreqVector>,
    index: BTreeMap<FreqVector, usize>,
    freq_sq: Vec<f64>,
    spec: NonlinearitySpec,
    // (i, j) -> output slot for each orientation pairing, flattened
    // row-major; None means the product mode left the support.
    table_pp: Vec<Option<u32>>,
    table_pm: Vec<Option<u32>>,
    table_mm: Vec<Option<u32>>,
    neg_index: Vec<Option<u32>>,
}

impl OdeReference {
    pub fn new(
        basis: &Arc<crate::basis::Basis>,
        spec: &NonlinearitySpec,
        support: &BTreeSet<FreqVector>,
        radius: u32,
    ) -> Result<Self> {
        let support: Vec<FreqVector> = support.iter().cloned().collect();
        for n in &support {
            if n.len() != basis.dimension() {
                return Err(Error::DimensionMismatch {
                    expected: basis.dimension(),
                    got: n.len(),
                });
            }
        }
        let index: BTreeMap<FreqVector, usize> = support
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let freq_sq = support
            .iter()
            .map(|n| {
                let f = basis.frequency_unchecked(n);
                f * f
            })
            .collect();

        // Which orientation pairings the factor chain u^k conj(u)^(p-k)
        // actually visits; closure is only demanded of those.
        let (p, k) = (spec.p(), spec.k());
        let uses_pp = k >= 2;
        let uses_pm = (k >= 1 && p > k) || (k == 0 && p >= 3);
        let uses_mm = k == 0 && p >= 2;
        let uses_neg = k == 0 && p == 1;

        let s = support.len();
        let mut table_pp = vec![None; s * s];
        let mut table_pm = vec![None; s * s];
        let mut table_mm = vec![None; s * s];
        let mut escaping: BTreeSet<FreqVector> = BTreeSet::new();
        {
            let mut fill = |table: &mut Vec<Option<u32>>,
                            out: FreqVector,
                            i: usize,
                            j: usize,
                            used: bool| {
                match index.get(&out) {
                    Some(&o) => table[i * s + j] = Some(o as u32),
                    None => {
                        if used && out.max_norm() <= radius {
                            escaping.insert(out);
                        }
                    }
                }
            };
            for (i, ni) in support.iter().enumerate() {
                for (j, nj) in support.iter().enumerate() {
                    fill(&mut table_pp, ni.sum(nj), i, j, uses_pp);
                    fill(&mut table_pm, ni.diff(nj), i, j, uses_pm);
                    fill(&mut table_mm, ni.sum(nj).negated(), i, j, uses_mm);
                }
            }
        }
        let mut neg_index = vec![None; s];
        for (i, n) in support.iter().enumerate() {
            let neg = n.negated();
            match index.get(&neg) {
                Some(&o) => neg_index[i] = Some(o as u32),
                None => {
                    if uses_neg && neg.max_norm() <= radius {
                        escaping.insert(neg);
                    }
                }
            }
        }
        if !escaping.is_empty() {
            return Err(Error::SupportNotClosed {
                radius,
                escaping: escaping.into_iter().collect(),
            });
        }
        Ok(OdeReference {
            support,
            index,
            freq_sq,
            spec: spec.clone(),
            table_pp,
            table_pm,
            table_mm,
            neg_index,
        })
    }

    pub fn support(&self) -> &[FreqVector] {
        &self.support
    }

    fn dense_state(&self, f: &APSeries) -> Result<Vec<Complex64>> {
        let mut state = vec![Complex64::new(0.0, 0.0); self.support.len()];
        for (n, c) in f.iter() {
            match self.index.get(n) {
                Some(&i) => state[i] = *c,
                None => {
                    return Err(Error::InvalidConfig(format!(
                        "initial-data mode {n} lies outside the fixed support"
                    )))
                }
            }
        }
        Ok(state)
    }

    fn product(
        &self,
        left: &[Complex64],
        left_orient: Orient,
        right: &[Complex64],
        right_orient: Orient,
    ) -> Vec<Complex64> {
        let s = self.support.len();
        let table = match (left_orient, right_orient) {
            (Orient::Plus, Orient::Plus) => &self.table_pp,
            (Orient::Plus, Orient::Minus) => &self.table_pm,
            (Orient::Minus, Orient::Minus) => &self.table_mm,
            (Orient::Minus, Orient::Plus) => unreachable!("factor order is u's then conj's"),
        };
        let mut out = vec![Complex64::new(0.0, 0.0); s];
        for i in 0..s {
            let li = left[i];
            if li.re == 0.0 && li.im == 0.0 {
                continue;
            }
            for j in 0..s {
                if let Some(o) = table[i * s + j] {
                    out[o as usize] += li * right[j];
                }
            }
        }
        out
    }

    /// `N̂(u)` on the support via the staged, projected convolution.
    fn nonlinear_hat(&self, u: &[Complex64]) -> Vec<Complex64> {
        let lam = self.spec.lambda();
        let p = self.spec.p();
        let k = self.spec.k();
        let conj_vals: Vec<Complex64> = u.iter().map(|c| c.conj()).collect();

        if p == 1 {
            let base = if k == 1 {
                u.to_vec()
            } else {
                let mut out = vec![Complex64::new(0.0, 0.0); u.len()];
                for (i, c) in conj_vals.iter().enumerate() {
                    if let Some(o) = self.neg_index[i] {
                        out[o as usize] += c;
                    }
                }
                out
            };
            return base.iter().map(|c| c * lam).collect();
        }

        let (mut acc, mut orient, mut u_left, mut conj_left) = if k >= 1 {
            (u.to_vec(), Orient::Plus, k - 1, p - k)
        } else {
            (conj_vals.clone(), Orient::Minus, 0, p - 1)
        };
        while u_left > 0 {
            acc = self.product(&acc, orient, u, Orient::Plus);
            orient = Orient::Plus;
            u_left -= 1;
        }
        while conj_left > 0 {
            acc = self.product(&acc, orient, &conj_vals, Orient::Minus);
            orient = Orient::Plus;
            conj_left -= 1;
        }
        acc.iter().map(|c| c * lam).collect()
    }

    fn rhs(&self, u: &[Complex64]) -> Vec<Complex64> {
        let nhat = self.nonlinear_hat(u);
        let minus_i = Complex64::new(0.0, -1.0);
        u.iter()
            .zip(self.freq_sq.iter())
            .zip(nhat.iter())
            .map(|((&ui, &sq), &ni)| minus_i * (sq * ui + ni))
            .collect()
    }

    /// Integrate from `f` at `t = 0`, producing a snapshot at each of
    /// the strictly increasing output `times` (which may start at 0).
    /// Adaptive Dormand-Prince 5(4) with per-step ℓ¹ error ≤ `tol`.
    pub fn integrate(&self, f: &APSeries, times: &[f64], tol: f64) -> Result<SolutionTrace> {
        if times.is_empty() {
            return Err(Error::InvalidConfig("no output times requested".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) || times[0] < 0.0 {
            return Err(Error::InvalidConfig(
                "output times must be nonnegative and strictly increasing".into(),
            ));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidConfig("tolerance must be positive".into()));
        }
        let mut state = self.dense_state(f)?;
        let mut t = 0.0f64;
        let span = *times.last().unwrap();
        let mut h = (span / 1000.0).clamp(1e-10, 1e-2);

        let mut samples = Vec::with_capacity(times.len());
        let mut snapshots = Vec::with_capacity(times.len());
        let record = |t: f64, state: &[Complex64], samples: &mut Vec<TraceSample>,
                          snapshots: &mut Vec<(usize, APSeries)>|
         -> Result<()> {
            let series = self.to_series(f, state)?;
            samples.push(TraceSample {
                t,
                a_norm: series.a_norm(),
                l2_norm: series.l2_norm(),
                zero_mode: series.zero_mode(),
                discarded_mass: 0.0,
            });
            snapshots.push((samples.len() - 1, series));
            Ok(())
        };

        let mut steps: u64 = 0;
        for &target in times {
            if target == 0.0 {
                record(0.0, &state, &mut samples, &mut snapshots)?;
                continue;
            }
            while t < target {
                steps += 1;
                if steps > 50_000_000 {
                    return Err(Error::IntegratorFailure(format!(
                        "step budget exhausted at t = {t}"
                    )));
                }
                let h_try = h.min(target - t);
                let (next, err) = self.dp54_step(&state, h_try);
                if err <= tol || h_try <= 1e-14 * span.max(1.0) {
                    if h_try <= 1e-14 * span.max(1.0) && err > tol {
                        return Err(Error::IntegratorFailure(format!(
                            "step size underflow at t = {t} (error {err:.3e})"
                        )));
                    }
                    state = next;
                    t += h_try;
                }
                let fac = if err > 0.0 {
                    (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0)
                } else {
                    5.0
                };
                h = (h_try * fac).max(1e-14 * span.max(1.0));
            }
            record(t, &state, &mut samples, &mut snapshots)?;
        }

        Ok(SolutionTrace {
            samples,
            snapshots,
            halt: HaltReason::Completed,
            direction: TimeDirection::Forward,
            picard_iterations: None,
        })
    }

    fn to_series(&self, template: &APSeries, state: &[Complex64]) -> Result<APSeries> {
        APSeries::from_terms(
            template.basis(),
            self.support
                .iter()
                .zip(state.iter())
                .map(|(n, c)| (n.clone(), *c)),
        )
    }

    /// One Dormand-Prince 5(4) step: the 5th-order update plus the
    /// ℓ¹ norm of the embedded error estimate.
    fn dp54_step(&self, y: &[Complex64], h: f64) -> (Vec<Complex64>, f64) {
        const A: [[f64; 6]; 6] = [
            [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
            [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
            [
                19372.0 / 6561.0,
                -25360.0 / 2187.0,
                64448.0 / 6561.0,
                -212.0 / 729.0,
                0.0,
                0.0,
            ],
            [
                9017.0 / 3168.0,
                -355.0 / 33.0,
                46732.0 / 5247.0,
                49.0 / 176.0,
                -5103.0 / 18656.0,
                0.0,
            ],
            [
                35.0 / 384.0,
                0.0,
                500.0 / 1113.0,
                125.0 / 192.0,
                -2187.0 / 6784.0,
                11.0 / 84.0,
            ],
        ];
        const B5: [f64; 7] = [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
            0.0,
        ];
        const B4: [f64; 7] = [
            5179.0 / 57600.0,
            0.0,
            7571.0 / 16695.0,
            393.0 / 640.0,
            -92097.0 / 339200.0,
            187.0 / 2100.0,
            1.0 / 40.0,
        ];

        let n = y.len();
        let mut k: Vec<Vec<Complex64>> = Vec::with_capacity(7);
        k.push(self.rhs(y));
        for stage in 0..6 {
            let mut ys = y.to_vec();
            for (j, kj) in k.iter().enumerate() {
                let a = A[stage][j];
                if a != 0.0 {
                    for i in 0..n {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k.push(self.rhs(&ys));
        }

        let mut out = y.to_vec();
        let mut err = 0.0f64;
        for i in 0..n {
            let mut acc5 = Complex64::new(0.0, 0.0);
            let mut acc_err = Complex64::new(0.0, 0.0);
            for (j, kj) in k.iter().enumerate() {
                acc5 += B5[j] * kj[i];
                acc_err += (B5[j] - B4[j]) * kj[i];
            }
            out[i] += h * acc5;
            err += (h * acc_err).norm();
        }
        (out, err)
    }
}

/// Convenience wrapper matching the integrate-to-`SolutionTrace`
/// shape used by solver cross-checks.
pub fn ode_reference(
    f: &APSeries,
    spec: &NonlinearitySpec,
    support: &BTreeSet<FreqVector>,
    radius: u32,
    times: &[f64],
    tol: f64,
) -> Result<SolutionTrace> {
    OdeReference::new(f.basis(), spec, support, radius)?.integrate(f, times, tol)
}
