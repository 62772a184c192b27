//! Free Schrödinger flow and the Duhamel integral on series
//! coefficients.
//!
//! The propagator acts diagonally in frequency: the coefficient at `n`
//! picks up the phase `exp(-i (ω·n)² t)`, so the flow preserves both
//! the ℓ¹ and the ℓ² coefficient norms and never changes the support.
//! The Duhamel term is a composite-trapezoid quadrature of
//! `-i ∫ S(t-t') F(t') dt'` over a uniform time grid.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::basis::{Basis, FreqVector};
use crate::error::{Error, Result};
use crate::series::APSeries;

/// Memo of squared frequencies `(ω·n)²` for the modes a solver touches.
///
/// The cache stores exactly `frequency_of(n)²`, so a lookup and a
/// recomputation agree to the last bit. The table is single-owner:
/// solvers keep one per run.
#[derive(Debug, Clone)]
pub struct PhaseTable {
    basis: Arc<Basis>,
    sq: BTreeMap<FreqVector, f64>,
}

impl PhaseTable {
    pub fn new(basis: &Arc<Basis>) -> Self {
        PhaseTable {
            basis: Arc::clone(basis),
            sq: BTreeMap::new(),
        }
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    /// Cached `(ω·n)²`, computed on first use.
    pub fn freq_sq(&mut self, n: &FreqVector) -> f64 {
        if let Some(&v) = self.sq.get(n) {
            return v;
        }
        let f = self.basis.frequency_unchecked(n);
        let v = f * f;
        self.sq.insert(n.clone(), v);
        v
    }

    pub fn len(&self) -> usize {
        self.sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sq.is_empty()
    }
}

/// Apply the linear propagator `S(t)`: each coefficient is multiplied
/// by `exp(-i (ω·n)² t)`. The support is unchanged and the ℓ¹ norm is
/// preserved up to rounding.
pub fn propagate(f: &APSeries, t: f64) -> APSeries {
    let mut table = PhaseTable::new(f.basis());
    propagate_with(&mut table, f, t)
}

/// `S(t)` using a caller-owned phase table.
pub fn propagate_with(table: &mut PhaseTable, f: &APSeries, t: f64) -> APSeries {
    let terms: Vec<(FreqVector, Complex64)> = f
        .iter()
        .map(|(n, c)| {
            let theta = -table.freq_sq(n) * t;
            (n.clone(), c * Complex64::new(theta.cos(), theta.sin()))
        })
        .collect();
    APSeries::from_terms(f.basis(), terms).expect("propagate preserves dimensions")
}

/// Per-mode table of grid phases `exp(-i (ω·n)² (k·dt))` for
/// `k = 0..=max_k`. Shared by the public Duhamel quadrature and the
/// Picard iteration so both walk the identical floating-point path.
pub(crate) struct GridPhases {
    dt: f64,
    max_k: usize,
    table: PhaseTable,
    phases: BTreeMap<FreqVector, Vec<Complex64>>,
}

impl GridPhases {
    pub(crate) fn new(basis: &Arc<Basis>, dt: f64, max_k: usize) -> Self {
        GridPhases {
            dt,
            max_k,
            table: PhaseTable::new(basis),
            phases: BTreeMap::new(),
        }
    }

    pub(crate) fn dt(&self) -> f64 {
        self.dt
    }

    fn phase(&mut self, n: &FreqVector, k: usize) -> Complex64 {
        debug_assert!(k <= self.max_k);
        if !self.phases.contains_key(n) {
            let sq = self.table.freq_sq(n);
            let ph = (0..=self.max_k)
                .map(|j| {
                    let theta = -sq * (j as f64 * self.dt);
                    Complex64::new(theta.cos(), theta.sin())
                })
                .collect();
            self.phases.insert(n.clone(), ph);
        }
        self.phases[n][k]
    }

    /// `S(k·dt) f` through the cached grid phases.
    pub(crate) fn rotate(&mut self, f: &APSeries, k: usize) -> APSeries {
        let terms: Vec<(FreqVector, Complex64)> = f
            .iter()
            .map(|(n, c)| (n.clone(), c * self.phase(n, k)))
            .collect();
        APSeries::from_terms(f.basis(), terms).expect("rotation preserves dimensions")
    }
}

/// Trapezoid Duhamel sum over grid indices `0..=upto`:
/// `-i Σ_l w_l S((upto-l)·dt) F_l` with end weights `dt/2`.
pub(crate) fn duhamel_grid(
    samples: &[APSeries],
    upto: usize,
    phases: &mut GridPhases,
) -> Result<APSeries> {
    let basis = samples[0].basis();
    if upto == 0 {
        return Ok(APSeries::zero(basis));
    }
    let dt = phases.dt();
    let mut acc: BTreeMap<FreqVector, Complex64> = BTreeMap::new();
    for (l, sample) in samples.iter().enumerate().take(upto + 1) {
        let w = if l == 0 || l == upto { dt / 2.0 } else { dt };
        let k = upto - l;
        for (n, c) in sample.iter() {
            let term = w * phases.phase(n, k) * c;
            *acc.entry(n.clone()).or_insert(Complex64::new(0.0, 0.0)) += term;
        }
    }
    // The overall -i factor is an exact component swap, applied last.
    let terms: Vec<(FreqVector, Complex64)> = acc
        .into_iter()
        .map(|(n, c)| (n, Complex64::new(c.im, -c.re)))
        .collect();
    APSeries::from_terms(basis, terms)
}

/// Duhamel term `-i ∫_0^t S(t-t') F(t') dt'` by the composite
/// trapezoidal rule on a uniform grid `t_l = l·dt` carrying the
/// samples `F`. `t` must be a grid point.
pub fn duhamel(samples: &[APSeries], dt: f64, t: f64) -> Result<APSeries> {
    if samples.is_empty() {
        return Err(Error::InvalidConfig("empty sample sequence".into()));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidConfig(format!("grid spacing {dt} must be positive")));
    }
    let basis = samples[0].basis();
    for s in &samples[1..] {
        if **s.basis() != **basis {
            return Err(Error::BasisMismatch);
        }
    }
    let j = (t / dt).round();
    let off_grid = Error::OffGrid {
        t,
        dt,
        len: samples.len(),
    };
    if !(0.0..=(samples.len() as f64 - 1.0)).contains(&j) {
        return Err(off_grid);
    }
    if (t - j * dt).abs() > 1e-9 * t.abs().max(1.0) {
        return Err(off_grid);
    }
    let j = j as usize;
    let mut phases = GridPhases::new(basis, dt, j);
    duhamel_grid(samples, j, &mut phases)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Basis;
    use crate::series::TruncationPolicy;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample_series(basis: &Arc<Basis>) -> APSeries {
        APSeries::from_terms(
            basis,
            [
                (FreqVector::from([1, 0]), c(0.4, -0.3)),
                (FreqVector::from([0, 2]), c(-0.1, 0.9)),
                (FreqVector::from([-2, 1]), c(0.05, 0.05)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn propagate_at_zero_is_identity() {
        let b = Arc::new(Basis::independent(vec![1.0, std::f64::consts::SQRT_2]).unwrap());
        let f = sample_series(&b);
        assert_eq!(propagate(&f, 0.0), f);
    }

    #[test]
    fn propagate_full_period_on_sqrt2() {
        // (sqrt2)^2 * pi = 2*pi, a full phase turn.
        let b = Arc::new(Basis::independent(vec![std::f64::consts::SQRT_2]).unwrap());
        let f = APSeries::from_terms(&b, [(FreqVector::from([1]), c(0.7, -0.2))]).unwrap();
        let g = propagate(&f, std::f64::consts::PI);
        assert!((g.coeff(&[1].into()) - c(0.7, -0.2)).norm() < 1e-12);
    }

    #[test]
    fn propagate_preserves_norms_and_group_law() {
        let b = Arc::new(Basis::independent(vec![1.0, std::f64::consts::SQRT_2]).unwrap());
        let f = sample_series(&b);
        for (s, t) in [(0.3, 1.7), (-2.0, 0.25), (5.0, -5.0)] {
            let fs = propagate(&f, s);
            assert!((fs.a_norm() - f.a_norm()).abs() <= 1e-12 * f.a_norm());
            assert!((fs.l2_norm() - f.l2_norm()).abs() <= 1e-12 * f.l2_norm());
            let two_step = propagate(&fs, t);
            let one_step = propagate(&f, s + t);
            for (n, c) in one_step.iter() {
                assert!((two_step.coeff(n) - c).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn phase_table_matches_recomputation() {
        let b = Arc::new(Basis::independent(vec![1.0, std::f64::consts::SQRT_2]).unwrap());
        let mut table = PhaseTable::new(&b);
        for n in [[3, -1], [0, 0], [-2, 5]] {
            let n = FreqVector::from(n);
            let f = b.frequency_of(&n).unwrap();
            assert_eq!(table.freq_sq(&n), f * f);
            // Second lookup hits the cache and must agree bit for bit.
            assert_eq!(table.freq_sq(&n), f * f);
        }
        assert_eq!(table.len(), 3);
    }

    #[test]
    fn duhamel_of_zero_is_zero() {
        let b = Arc::new(Basis::independent(vec![1.0]).unwrap());
        let samples = vec![APSeries::zero(&b); 9];
        let u = duhamel(&samples, 0.125, 1.0).unwrap();
        assert!(u.is_zero());
    }

    #[test]
    fn duhamel_constant_zero_mode() {
        // F = 1 constantly: the zero mode has no phase and the
        // trapezoid rule is exact, giving -i*T.
        let b = Arc::new(Basis::independent(vec![1.0]).unwrap());
        let one = APSeries::from_terms(&b, [(FreqVector::from([0]), c(1.0, 0.0))]).unwrap();
        let m = 64;
        let t_end = 2.0;
        let dt = t_end / m as f64;
        let samples = vec![one; m + 1];
        let u = duhamel(&samples, dt, t_end).unwrap();
        assert_eq!(u.support_size(), 1);
        assert!((u.coeff(&[0].into()) - c(0.0, -t_end)).norm() < 1e-13);
    }

    #[test]
    fn duhamel_single_mode_closed_form() {
        // F = e^{ix} constantly on basis (1,). The exact Duhamel term
        // at mode 1 is e^{-it} - 1; trapezoid with M = 128 on t = 1
        // must match to 1e-4.
        let b = Arc::new(Basis::independent(vec![1.0]).unwrap());
        let mode = APSeries::from_terms(&b, [(FreqVector::from([1]), c(1.0, 0.0))]).unwrap();
        let m = 128;
        let t_end = 1.0;
        let dt = t_end / m as f64;
        let samples = vec![mode; m + 1];
        let u = duhamel(&samples, dt, t_end).unwrap();
        let exact = c((-t_end).cos(), (-t_end).sin()) - c(1.0, 0.0);
        assert!((u.coeff(&[1].into()) - exact).norm() <= 1e-4);
    }

    #[test]
    fn duhamel_norm_contract() {
        let b = Arc::new(Basis::independent(vec![1.0, std::f64::consts::SQRT_2]).unwrap());
        let f = sample_series(&b);
        let m = 32;
        let dt = 0.05;
        let samples: Vec<APSeries> = (0..=m).map(|l| propagate(&f, l as f64 * dt)).collect();
        let max_norm = samples.iter().map(|s| s.a_norm()).fold(0.0, f64::max);
        for j in [1usize, 7, 32] {
            let t = j as f64 * dt;
            let u = duhamel(&samples, dt, t).unwrap();
            assert!(u.a_norm() <= t * max_norm * (1.0 + 1e-12) + 1e-12);
        }
    }

    #[test]
    fn duhamel_rejects_off_grid_times() {
        let b = Arc::new(Basis::independent(vec![1.0]).unwrap());
        let samples = vec![APSeries::zero(&b); 5];
        assert!(matches!(
            duhamel(&samples, 0.25, 0.3),
            Err(Error::OffGrid { .. })
        ));
        assert!(matches!(
            duhamel(&samples, 0.25, 1.5),
            Err(Error::OffGrid { .. })
        ));
        assert!(matches!(
            duhamel(&samples, 0.25, -0.25),
            Err(Error::OffGrid { .. })
        ));
    }

    #[test]
    fn propagator_commutes_with_products() {
        // S(t) is multiplicative only on the linear flow, not on
        // products; but conjugation symmetry of the flow holds:
        // conj(S(t) f) = S(-t) conj(f).
        let b = Arc::new(Basis::independent(vec![1.0, std::f64::consts::SQRT_2]).unwrap());
        let f = sample_series(&b);
        let t = 0.37;
        let lhs = propagate(&f, t).conjugate();
        let rhs = propagate(&f.conjugate(), -t);
        assert!(lhs.l1_distance(&rhs).unwrap() <= 1e-14);
        let _ = TruncationPolicy::none();
    }
}
