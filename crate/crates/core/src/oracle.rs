//! Brute-force reference on the full m^N product space.
//!
//! Everything else in this crate works on count classes; this module builds
//! the full tensor-product state vector instead, so that diagonal-operator
//! results can be cross-checked against an implementation with no class
//! reduction in it. Deliberately dumb and memory-bound: the dimension is
//! capped by `caps.oracle_cap`.
//!
//! Basis convention: index digits are base-m, site 1 in the most significant
//! position, so index = sum_k digit_k * m^(N-k).

use num::{BigRational, Zero};

use crate::error::{Error, Result};
use crate::hilbert::{Complex64, ReplicaSpec};
use crate::numeric::SqrtRat;
use crate::Caps;

/// Full state vector over the m^N product basis, generic over the amplitude
/// representation (f64 complex or exact signed square roots).
#[derive(Debug, Clone)]
pub struct FullStateVector<A> {
    m: usize,
    sites: u32,
    amps: Vec<A>,
}

impl<A> FullStateVector<A> {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn sites(&self) -> u32 {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[A] {
        &self.amps
    }

    /// Base-m digits of a basis index, site 1 first.
    pub fn index_digits(&self, index: usize) -> Vec<usize> {
        index_digits(index, self.m, self.sites)
    }

    /// Outcome counts of a basis index.
    pub fn index_counts(&self, index: usize) -> Vec<u64> {
        let mut counts = vec![0u64; self.m];
        for d in self.index_digits(index) {
            counts[d] += 1;
        }
        counts
    }

    /// Basis indices sorted by (digit sum ascending, index ascending): the
    /// layout that groups states of equal excitation together, lowest first.
    pub fn ordering_permutation(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by_key(|&i| (self.index_digits(i).iter().sum::<usize>(), i));
        order
    }
}

fn index_digits(index: usize, m: usize, sites: u32) -> Vec<usize> {
    let mut digits = vec![0usize; sites as usize];
    let mut rest = index;
    for d in digits.iter_mut().rev() {
        *d = rest % m;
        rest /= m;
    }
    digits
}

fn checked_dim(spec: &ReplicaSpec, caps: &Caps) -> Result<usize> {
    let m = spec.m() as u64;
    let mut dim: u64 = 1;
    for _ in 0..spec.n() {
        dim = dim
            .checked_mul(m)
            .filter(|&d| d <= caps.oracle_cap)
            .ok_or_else(|| {
                Error::capacity(format!(
                    "full product space {}^{} exceeds the reference cap {}",
                    m,
                    spec.n(),
                    caps.oracle_cap
                ))
            })?;
    }
    Ok(dim as usize)
}

/// Tensor product of N copies of the single-shot amplitudes.
pub fn build_full_state(spec: &ReplicaSpec, caps: &Caps) -> Result<FullStateVector<Complex64>> {
    let dim = checked_dim(spec, caps)?;
    let site = spec.outcome().amplitudes();
    let mut amps = Vec::with_capacity(dim);
    amps.push(Complex64::new(1.0, 0.0));
    for _ in 0..spec.n() {
        let mut next = Vec::with_capacity(amps.len() * site.len());
        for a in &amps {
            for s in site {
                next.push(a * s);
            }
        }
        amps = next;
    }
    Ok(FullStateVector { m: spec.m(), sites: spec.n() as u32, amps })
}

/// Exact counterpart for rational-backed specs: site amplitudes are the
/// positive square roots of the outcome probabilities, and products stay in
/// closed form as signed square roots of rationals.
pub fn build_full_state_exact(
    spec: &ReplicaSpec,
    caps: &Caps,
) -> Result<FullStateVector<SqrtRat>> {
    let probs = spec.outcome().exact_probabilities().ok_or_else(|| {
        Error::domain("exact reference state needs rational outcome probabilities")
    })?;
    let dim = checked_dim(spec, caps)?;
    let site: Vec<SqrtRat> =
        probs.iter().map(|p| SqrtRat::sqrt_of(p.clone()).expect("probs are >= 0")).collect();
    let mut amps = Vec::with_capacity(dim);
    amps.push(SqrtRat::one());
    for _ in 0..spec.n() {
        let mut next = Vec::with_capacity(amps.len() * site.len());
        for a in &amps {
            for s in &site {
                next.push(a.mul(s));
            }
        }
        amps = next;
    }
    Ok(FullStateVector { m: spec.m(), sites: spec.n() as u32, amps })
}

impl FullStateVector<Complex64> {
    /// Scales every amplitude by a real diagonal factor of its digit string.
    pub fn apply_diagonal(&mut self, mut f: impl FnMut(&[usize]) -> f64) {
        for i in 0..self.amps.len() {
            let factor = f(&index_digits(i, self.m, self.sites));
            self.amps[i] *= factor;
        }
    }

    pub fn norm_squared(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Expectation of a diagonal observable: sum |amp|^2 f(digits).
    pub fn diag_expectation(&self, mut f: impl FnMut(&[usize]) -> f64) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * f(&index_digits(i, self.m, self.sites)))
            .sum()
    }
}

impl FullStateVector<SqrtRat> {
    /// Scales every amplitude by an exact rational diagonal factor.
    pub fn apply_diagonal_rational(&mut self, mut f: impl FnMut(&[usize]) -> BigRational) {
        for i in 0..self.amps.len() {
            let factor = f(&index_digits(i, self.m, self.sites));
            self.amps[i] = self.amps[i].scale(&factor);
        }
    }

    pub fn norm_squared_exact(&self) -> BigRational {
        let mut total = BigRational::zero();
        for a in &self.amps {
            total += a.abs_sq();
        }
        total
    }

    /// Exact expectation of a rational diagonal observable.
    pub fn diag_expectation_exact(
        &self,
        mut f: impl FnMut(&[usize]) -> BigRational,
    ) -> BigRational {
        let mut total = BigRational::zero();
        for (i, a) in self.amps.iter().enumerate() {
            total += a.abs_sq() * f(&index_digits(i, self.m, self.sites));
        }
        total
    }
}
