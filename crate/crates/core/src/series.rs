//! Sparse Fourier series with absolutely summable coefficients, and the
//! Banach-algebra operations on them.
//!
//! An [`APSeries`] owns a sparse map `FreqVector -> Complex64` over a
//! shared [`Basis`]. Stored coefficients always have magnitude > 0
//! (exact zeros are purged); the ℓ¹ norm is therefore finite by
//! construction. Two series interoperate only when their bases agree.
//!
//! Every operation is a pure function of its inputs and accumulates
//! floating-point sums in a fixed canonical order, so identical inputs
//! produce bit-identical outputs across runs and thread counts.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_complex::Complex64;

use crate::basis::{Basis, FreqVector};
use crate::error::{Error, Result};

/// Truncation budget applied to products.
///
/// Entries whose magnitude falls below `threshold` are dropped and
/// their absolute values summed into the reported discarded mass,
/// which is an exact ℓ¹ bound on the dropped tail. When `max_support`
/// is exceeded and the threshold is zero the product fails with a
/// capacity error; with a positive threshold the smallest-magnitude
/// entries are dropped (and audited) until the cap holds. `restrict`
/// optionally confines outputs to an explicit mode set, which is what
/// fixed-support solver/oracle comparisons use.
#[derive(Debug, Clone, Default)]
pub struct TruncationPolicy {
    pub threshold: f64,
    pub max_support: Option<usize>,
    pub restrict: Option<Arc<BTreeSet<FreqVector>>>,
}

impl TruncationPolicy {
    /// No truncation: only exact zeros are purged.
    pub fn none() -> Self {
        TruncationPolicy::default()
    }

    pub fn threshold(threshold: f64) -> Self {
        TruncationPolicy {
            threshold,
            ..Default::default()
        }
    }

    pub fn with_max_support(mut self, cap: usize) -> Self {
        self.max_support = Some(cap);
        self
    }

    pub fn with_restriction(mut self, support: Arc<BTreeSet<FreqVector>>) -> Self {
        self.restrict = Some(support);
        self
    }
}

/// A quasi/almost periodic function represented by finitely many
/// Fourier coefficients over a fixed basis.
#[derive(Debug, Clone, PartialEq)]
pub struct APSeries {
    basis: Arc<Basis>,
    coeffs: BTreeMap<FreqVector, Complex64>,
}

impl APSeries {
    pub fn zero(basis: &Arc<Basis>) -> Self {
        APSeries {
            basis: Arc::clone(basis),
            coeffs: BTreeMap::new(),
        }
    }

    /// Build a series from `(n, c)` terms. Terms with equal vectors are
    /// summed in input order; exact-zero results are purged.
    pub fn from_terms(
        basis: &Arc<Basis>,
        terms: impl IntoIterator<Item = (FreqVector, Complex64)>,
    ) -> Result<Self> {
        let mut coeffs: BTreeMap<FreqVector, Complex64> = BTreeMap::new();
        for (n, c) in terms {
            if n.len() != basis.dimension() {
                return Err(Error::DimensionMismatch {
                    expected: basis.dimension(),
                    got: n.len(),
                });
            }
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::InvalidSpec(format!("non-finite coefficient at {n}")));
            }
            *coeffs.entry(n).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        coeffs.retain(|_, c| c.norm() > 0.0);
        Ok(APSeries {
            basis: Arc::clone(basis),
            coeffs,
        })
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    /// Number of stored nonzero coefficients.
    pub fn support_size(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient at `n`, zero when absent.
    pub fn coeff(&self, n: &FreqVector) -> Complex64 {
        self.coeffs
            .get(n)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Coefficient at the zero frequency vector (`û(0)`).
    pub fn zero_mode(&self) -> Complex64 {
        self.coeff(&FreqVector::zero(self.basis.dimension()))
    }

    /// Iterate terms in canonical (lexicographic) order.
    pub fn iter(&self) -> impl Iterator<Item = (&FreqVector, &Complex64)> {
        self.coeffs.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &FreqVector> {
        self.coeffs.keys()
    }

    fn check_same_basis(&self, other: &APSeries) -> Result<()> {
        if Arc::ptr_eq(&self.basis, &other.basis) || *self.basis == *other.basis {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }

    /// Coefficient-wise sum.
    pub fn add(&self, other: &APSeries) -> Result<APSeries> {
        self.check_same_basis(other)?;
        let mut coeffs = self.coeffs.clone();
        for (n, c) in &other.coeffs {
            *coeffs.entry(n.clone()).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        coeffs.retain(|_, c| c.norm() > 0.0);
        Ok(APSeries {
            basis: Arc::clone(&self.basis),
            coeffs,
        })
    }

    /// `self - other`.
    pub fn sub(&self, other: &APSeries) -> Result<APSeries> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Coefficient-wise scaling.
    pub fn scale(&self, c: Complex64) -> APSeries {
        let mut coeffs = BTreeMap::new();
        for (n, v) in &self.coeffs {
            let s = v * c;
            if s.norm() > 0.0 {
                coeffs.insert(n.clone(), s);
            }
        }
        APSeries {
            basis: Arc::clone(&self.basis),
            coeffs,
        }
    }

    /// Complex conjugate of the represented function: `(n, c)` maps to
    /// `(-n, conj c)`.
    pub fn conjugate(&self) -> APSeries {
        let mut coeffs = BTreeMap::new();
        for (n, c) in &self.coeffs {
            coeffs.insert(n.negated(), c.conj());
        }
        APSeries {
            basis: Arc::clone(&self.basis),
            coeffs,
        }
    }

    /// ℓ¹ norm of the coefficients (the algebra norm), summed in
    /// canonical order.
    pub fn a_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    /// Mean L² norm via Parseval.
    ///
    /// On a declared-independent basis this is `sqrt(Σ |c_n|²)`. On a
    /// dependent basis, entries whose real frequencies coincide within
    /// the independence tolerance are grouped and summed first, since
    /// only the group totals are Fourier coefficients of the function.
    pub fn l2_norm(&self) -> f64 {
        if self.basis.declared_independent() {
            return self.coeffs.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        }
        let mut sum = 0.0;
        self.for_each_frequency_group(|group_total| sum += group_total.norm_sqr());
        sum.sqrt()
    }

    /// Mean value `M(f)`: the coefficient at the zero vector on a
    /// declared-independent basis, otherwise the group total of all
    /// entries whose real frequency lies within the independence
    /// tolerance of zero.
    pub fn mean_value(&self) -> Complex64 {
        if self.basis.declared_independent() {
            return self.zero_mode();
        }
        let tol = self.basis.independence_tol();
        let mut total = Complex64::new(0.0, 0.0);
        for (n, c) in &self.coeffs {
            if self.basis.frequency_unchecked(n).abs() < tol {
                total += c;
            }
        }
        total
    }

    /// Group coefficients by coinciding real frequency (sorted by
    /// frequency, chained while consecutive gaps stay below the
    /// tolerance) and hand each group total to `f` in frequency order.
    fn for_each_frequency_group(&self, mut f: impl FnMut(Complex64)) {
        let tol = self.basis.independence_tol();
        let mut entries: Vec<(f64, &FreqVector, Complex64)> = self
            .coeffs
            .iter()
            .map(|(n, c)| (self.basis.frequency_unchecked(n), n, *c))
            .collect();
        entries.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
        let mut i = 0;
        while i < entries.len() {
            let mut total = entries[i].2;
            let mut j = i + 1;
            while j < entries.len() && (entries[j].0 - entries[j - 1].0).abs() < tol {
                total += entries[j].2;
                j += 1;
            }
            f(total);
            i = j;
        }
    }

    /// Pointwise value `Σ c_n exp(i (ω·n) x)`, summed in canonical
    /// order.
    pub fn evaluate(&self, x: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (n, c) in &self.coeffs {
            let phase = self.basis.frequency_unchecked(n) * x;
            acc += c * Complex64::new(phase.cos(), phase.sin());
        }
        acc
    }

    /// Anisotropic Sobolev norm with weight `Π_j (1+n_j²)^(s_j)` on
    /// `|c_n|²`. Diagnostic only.
    pub fn sobolev_norm(&self, s: &[f64]) -> Result<f64> {
        if s.len() != self.basis.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.basis.dimension(),
                got: s.len(),
            });
        }
        let mut sum = 0.0;
        for (n, c) in &self.coeffs {
            let mut w = 1.0;
            for (&nj, &sj) in n.components().iter().zip(s) {
                let nj = f64::from(nj);
                w *= (1.0 + nj * nj).powf(sj);
            }
            sum += w * c.norm_sqr();
        }
        Ok(sum.sqrt())
    }

    /// ℓ¹ distance `Σ |f_n − g_n|` over the union support, in canonical
    /// order.
    pub fn l1_distance(&self, other: &APSeries) -> Result<f64> {
        self.check_same_basis(other)?;
        let mut a = self.coeffs.iter().peekable();
        let mut b = other.coeffs.iter().peekable();
        let mut sum = 0.0;
        loop {
            match (a.peek(), b.peek()) {
                (Some((na, ca)), Some((nb, cb))) => match na.cmp(nb) {
                    std::cmp::Ordering::Less => {
                        sum += ca.norm();
                        a.next();
                    }
                    std::cmp::Ordering::Greater => {
                        sum += cb.norm();
                        b.next();
                    }
                    std::cmp::Ordering::Equal => {
                        sum += (*ca - *cb).norm();
                        a.next();
                        b.next();
                    }
                },
                (Some(_), None) => {
                    sum += a.next().unwrap().1.norm();
                }
                (None, Some(_)) => {
                    sum += b.next().unwrap().1.norm();
                }
                (None, None) => break,
            }
        }
        Ok(sum)
    }

    /// Pointwise product: the sparse convolution of coefficients, with
    /// the given truncation budget. Returns the product and the exact
    /// ℓ¹ mass of all dropped entries.
    ///
    /// Each output coefficient is accumulated in a canonical order that
    /// is equivariant under global negation of the frequency vectors:
    /// contributions are keyed by `d = n_f − n_g`, sorted by
    /// `(|d|, sign-canonical d)`, and the `±d` pair (which negation
    /// swaps) is reduced by a single commutative addition. This keeps
    /// results deterministic while making
    /// `conjugate(f·g) == conjugate(f)·conjugate(g)` hold exactly.
    pub fn multiply(
        &self,
        other: &APSeries,
        trunc: &TruncationPolicy,
    ) -> Result<(APSeries, f64)> {
        self.check_same_basis(other)?;

        struct Term {
            m: FreqVector,
            abs_d: FreqVector,
            canon_d: FreqVector,
            flipped: bool,
            val: Complex64,
        }

        let mut terms: Vec<Term> = Vec::with_capacity(self.coeffs.len() * other.coeffs.len());
        for (nf, cf) in &self.coeffs {
            for (ng, cg) in &other.coeffs {
                let m = nf.sum(ng);
                let d = nf.diff(ng);
                let (canon_d, flipped) = d.sign_canonical();
                terms.push(Term {
                    m,
                    abs_d: d.abs(),
                    canon_d,
                    flipped,
                    val: cf * cg,
                });
            }
        }
        terms.sort_unstable_by(|a, b| {
            a.m.cmp(&b.m)
                .then_with(|| a.abs_d.cmp(&b.abs_d))
                .then_with(|| a.canon_d.cmp(&b.canon_d))
                .then_with(|| a.flipped.cmp(&b.flipped))
        });

        let mut coeffs: BTreeMap<FreqVector, Complex64> = BTreeMap::new();
        let mut discarded = 0.0f64;
        let mut i = 0;
        while i < terms.len() {
            let m = terms[i].m.clone();
            let mut acc = Complex64::new(0.0, 0.0);
            while i < terms.len() && terms[i].m == m {
                // A (d, -d) pair shares (abs_d, canon_d); reduce it with
                // one commutative addition before folding into acc.
                if i + 1 < terms.len()
                    && terms[i + 1].m == m
                    && terms[i + 1].abs_d == terms[i].abs_d
                    && terms[i + 1].canon_d == terms[i].canon_d
                {
                    acc += terms[i].val + terms[i + 1].val;
                    i += 2;
                } else {
                    acc += terms[i].val;
                    i += 1;
                }
            }

            if let Some(restrict) = &trunc.restrict {
                if !restrict.contains(&m) {
                    discarded += acc.norm();
                    continue;
                }
            }
            let mag = acc.norm();
            if mag == 0.0 {
                continue;
            }
            if mag < trunc.threshold {
                discarded += mag;
                continue;
            }
            coeffs.insert(m, acc);
        }

        if let Some(cap) = trunc.max_support {
            if coeffs.len() > cap {
                if trunc.threshold == 0.0 {
                    return Err(Error::CapacityExceeded {
                        support: coeffs.len(),
                        cap,
                    });
                }
                let mut by_mag: Vec<(f64, FreqVector)> = coeffs
                    .iter()
                    .map(|(n, c)| (c.norm(), n.clone()))
                    .collect();
                by_mag.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
                for (mag, n) in by_mag.iter().take(coeffs.len() - cap) {
                    discarded += mag;
                    coeffs.remove(n);
                }
            }
        }

        Ok((
            APSeries {
                basis: Arc::clone(&self.basis),
                coeffs,
            },
            discarded,
        ))
    }
}
