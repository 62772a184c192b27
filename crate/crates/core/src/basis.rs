//! Frequency generators and integer frequency vectors.
//!
//! A [`Basis`] is an ordered finite list of real generators
//! `ω_1, …, ω_G`; every represented frequency is an integer combination
//! `ω·n` for some [`FreqVector`] `n ∈ Z^G`. Linear independence of the
//! generators is *declared* by the caller, not proven: when a basis is
//! not independent, distinct vectors can hit the same real frequency,
//! and the norm/mean operations on series group such collisions
//! explicitly. [`Basis::collision_scan`] is a bounded-box heuristic for
//! spotting those collisions at desk scale.

use std::fmt;

use smallvec::SmallVec;

use crate::error::{Error, Result};

/// An integer frequency vector `n ∈ Z^G` indexing one exponential
/// `exp(i (ω·n) x)`.
///
/// Ordering is lexicographic on the components, which is the canonical
/// iteration order used for deterministic floating-point accumulation
/// throughout the crate.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FreqVector(SmallVec<[i32; 4]>);

impl FreqVector {
    pub fn new(components: impl AsRef<[i32]>) -> Self {
        FreqVector(SmallVec::from_slice(components.as_ref()))
    }

    /// The zero vector of the given dimension (the zero mode).
    pub fn zero(dim: usize) -> Self {
        FreqVector(smallvec::smallvec![0; dim])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn components(&self) -> &[i32] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn negated(&self) -> Self {
        FreqVector(self.0.iter().map(|&c| -c).collect())
    }

    /// Componentwise sum; callers guarantee equal lengths.
    pub(crate) fn sum(&self, other: &Self) -> Self {
        debug_assert_eq!(self.len(), other.len());
        FreqVector(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(&a, &b)| a + b)
                .collect(),
        )
    }

    /// Componentwise difference; callers guarantee equal lengths.
    pub(crate) fn diff(&self, other: &Self) -> Self {
        debug_assert_eq!(self.len(), other.len());
        FreqVector(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(&a, &b)| a - b)
                .collect(),
        )
    }

    /// Componentwise absolute value.
    pub(crate) fn abs(&self) -> Self {
        FreqVector(self.0.iter().map(|&c| c.saturating_abs()).collect())
    }

    /// Sign-canonical representative of `{self, -self}`: the one whose
    /// first nonzero component is positive.
    pub(crate) fn sign_canonical(&self) -> (Self, bool) {
        match self.0.iter().find(|&&c| c != 0) {
            Some(&c) if c < 0 => (self.negated(), true),
            _ => (self.clone(), false),
        }
    }

    pub fn max_norm(&self) -> u32 {
        self.0
            .iter()
            .map(|&c| c.unsigned_abs())
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Debug for FreqVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for FreqVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl From<&[i32]> for FreqVector {
    fn from(v: &[i32]) -> Self {
        FreqVector::new(v)
    }
}

impl<const N: usize> From<[i32; N]> for FreqVector {
    fn from(v: [i32; N]) -> Self {
        FreqVector::new(v)
    }
}

/// Resolve a named high-precision frequency constant.
///
/// Supported tags: `sqrt2`, `sqrt3`, `sqrt5`, `golden`, `pi`, `e`.
pub fn named_constant(tag: &str) -> Option<f64> {
    match tag {
        "sqrt2" => Some(std::f64::consts::SQRT_2),
        "sqrt3" => Some(1.732_050_807_568_877_2),
        "sqrt5" => Some(2.236_067_977_499_79),
        "golden" => Some(1.618_033_988_749_895),
        "pi" => Some(std::f64::consts::PI),
        "e" => Some(std::f64::consts::E),
        _ => None,
    }
}

/// Conditions worth surfacing about a generator list. None of these is
/// an error: a zero or repeated generator is permitted, it just
/// duplicates frequencies that the grouping logic must then merge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BasisWarning {
    ZeroGenerator { index: usize },
    NearDuplicateGenerators { first: usize, second: usize },
}

impl fmt::Display for BasisWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisWarning::ZeroGenerator { index } => {
                write!(f, "generator {index} is zero (duplicates the zero mode)")
            }
            BasisWarning::NearDuplicateGenerators { first, second } => write!(
                f,
                "generators {first} and {second} coincide within the independence tolerance"
            ),
        }
    }
}

/// An ordered finite list of real frequency generators with
/// independence metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    generators: Vec<f64>,
    independence_tol: f64,
    declared_independent: bool,
}

/// Default collision-detection tolerance, in frequency units.
pub const DEFAULT_INDEPENDENCE_TOL: f64 = 1e-9;

impl Basis {
    pub fn new(
        generators: Vec<f64>,
        independence_tol: f64,
        declared_independent: bool,
    ) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidBasis("generator list is empty".into()));
        }
        if let Some(bad) = generators.iter().find(|g| !g.is_finite()) {
            return Err(Error::InvalidBasis(format!("non-finite generator {bad}")));
        }
        if !independence_tol.is_finite() || independence_tol < 0.0 {
            return Err(Error::InvalidBasis(format!(
                "independence tolerance {independence_tol} must be finite and >= 0"
            )));
        }
        Ok(Basis {
            generators,
            independence_tol,
            declared_independent,
        })
    }

    /// A basis with the default tolerance, declared independent.
    pub fn independent(generators: Vec<f64>) -> Result<Self> {
        Basis::new(generators, DEFAULT_INDEPENDENCE_TOL, true)
    }

    pub fn dimension(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[f64] {
        &self.generators
    }

    pub fn independence_tol(&self) -> f64 {
        self.independence_tol
    }

    pub fn declared_independent(&self) -> bool {
        self.declared_independent
    }

    /// Zero or repeated generators are permitted but flagged.
    pub fn warnings(&self) -> Vec<BasisWarning> {
        let mut out = Vec::new();
        for (i, &g) in self.generators.iter().enumerate() {
            if g == 0.0 {
                out.push(BasisWarning::ZeroGenerator { index: i });
            }
        }
        for i in 0..self.generators.len() {
            for j in (i + 1)..self.generators.len() {
                if (self.generators[i] - self.generators[j]).abs() < self.independence_tol {
                    out.push(BasisWarning::NearDuplicateGenerators {
                        first: i,
                        second: j,
                    });
                }
            }
        }
        out
    }

    /// The real frequency `ω·n = Σ_j ω_j n_j`, summed in ascending-j
    /// order.
    pub fn frequency_of(&self, n: &FreqVector) -> Result<f64> {
        if n.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: n.len(),
            });
        }
        Ok(self.frequency_unchecked(n))
    }

    pub(crate) fn frequency_unchecked(&self, n: &FreqVector) -> f64 {
        let mut acc = 0.0;
        for (&w, &c) in self.generators.iter().zip(n.components()) {
            acc += w * f64::from(c);
        }
        acc
    }

    /// All unordered pairs `n ≠ m` with max-norm ≤ `radius` whose real
    /// frequencies coincide within the independence tolerance. Each
    /// pair is reported once, lexicographically smaller vector first,
    /// and the list is sorted. An empty list is evidence (not proof) of
    /// independence within the scanned box.
    ///
    /// Cost grows like `(2·radius+1)^G`; callers should warn above
    /// ~10^6 enumerated vectors.
    pub fn collision_scan(&self, radius: u32) -> Vec<(FreqVector, FreqVector)> {
        let g = self.dimension();
        let r = radius as i64;
        let side = 2 * r + 1;

        let mut entries: Vec<(f64, FreqVector)> = Vec::new();
        let total = (side as u128).pow(g as u32);
        let mut idx: u128 = 0;
        while idx < total {
            let mut rem = idx;
            let mut comps = Vec::with_capacity(g);
            for _ in 0..g {
                let digit = (rem % side as u128) as i64 - r;
                comps.push(digit as i32);
                rem /= side as u128;
            }
            // Digits were produced least-significant first; reverse so
            // enumeration order is lexicographic.
            comps.reverse();
            let n = FreqVector::new(comps);
            let f = self.frequency_unchecked(&n);
            entries.push((f, n));
            idx += 1;
        }

        entries.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));

        let mut pairs = Vec::new();
        for i in 0..entries.len() {
            for j in (i + 1)..entries.len() {
                if (entries[j].0 - entries[i].0).abs() >= self.independence_tol {
                    break;
                }
                let (a, b) = (&entries[i].1, &entries[j].1);
                let pair = if a < b {
                    (a.clone(), b.clone())
                } else {
                    (b.clone(), a.clone())
                };
                pairs.push(pair);
            }
        }
        pairs.sort();
        pairs.dedup();
        pairs
    }

    /// Number of vectors a scan of the given radius enumerates.
    pub fn scan_cost(&self, radius: u32) -> u128 {
        (2 * radius as u128 + 1).pow(self.dimension() as u32)
    }
}
