//! Outcome distributions and the occupation-count classes of the replicated
//! product basis.
//!
//! A single system has m outcomes with amplitudes alpha_i; N replicas span an
//! m^N product basis. Every operator this crate cares about is diagonal in
//! that basis and depends on a basis state only through its occupation counts
//! (n_1, ..., n_m), so states are reduced to count classes carrying a
//! multiplicity N!/prod(n_i!) and a probability weight
//! multiplicity * prod(p_i^n_i).

use num::bigint::{BigInt, BigUint};
use num::{BigRational, Complex, One, Signed, Zero};

use crate::error::{Error, Result};
use crate::numeric::{
    binomial_biguint, ln_binomial, log10_biguint, multinomial_biguint, rational_to_f64,
    ExactProbs, Mass,
};
use crate::Caps;

pub type Complex64 = Complex<f64>;

/// Tolerance for float normalization checks.
pub const NORM_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// OutcomeSpec
// ---------------------------------------------------------------------------

/// Distribution of a single measurement: m >= 2 outcome amplitudes and the
/// probabilities they induce.
///
/// Rational probability inputs keep an exact representation alongside the
/// float one; float inputs are promoted to exact dyadic rationals when those
/// happen to sum to exactly 1 (e.g. 0.5 or 0.25), and stay float-only
/// otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeSpec {
    amplitudes: Vec<Complex64>,
    probs: Vec<f64>,
    exact: Option<Vec<BigRational>>,
}

impl OutcomeSpec {
    /// Builds from complex amplitudes; they must be unit-normalized within
    /// [`NORM_TOL`].
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<OutcomeSpec> {
        if amplitudes.len() < 2 {
            return Err(Error::domain("need at least 2 outcomes"));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::domain("amplitudes must be finite"));
        }
        let probs: Vec<f64> = amplitudes.iter().map(|a| a.norm_sqr()).collect();
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::domain(format!(
                "amplitudes are not normalized: sum of |alpha|^2 = {total}"
            )));
        }
        Ok(OutcomeSpec { amplitudes, probs, exact: None })
    }

    /// Builds from outcome probabilities, using the canonical real
    /// amplitudes sqrt(p_i).
    pub fn from_probs(probs: &[f64]) -> Result<OutcomeSpec> {
        if probs.len() < 2 {
            return Err(Error::domain("need at least 2 outcomes"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::domain("probabilities must be finite and non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::domain(format!("probabilities sum to {total}, not 1")));
        }
        // Promote to exact rationals when the dyadic values genuinely sum to 1.
        let dyadic: Vec<BigRational> = probs
            .iter()
            .map(|&p| crate::numeric::rational_from_f64(p).expect("finite"))
            .collect();
        let exact_sum: BigRational = dyadic.iter().sum();
        let exact = exact_sum.is_one().then_some(dyadic);
        let amplitudes = probs.iter().map(|&p| Complex64::new(p.sqrt(), 0.0)).collect();
        Ok(OutcomeSpec { amplitudes, probs: probs.to_vec(), exact })
    }

    /// Builds from exact rational probabilities summing to exactly 1.
    pub fn from_rational_probs(probs: Vec<BigRational>) -> Result<OutcomeSpec> {
        if probs.len() < 2 {
            return Err(Error::domain("need at least 2 outcomes"));
        }
        if probs.iter().any(|p| p.is_negative()) {
            return Err(Error::domain("probabilities must be non-negative"));
        }
        let total: BigRational = probs.iter().sum();
        if !total.is_one() {
            return Err(Error::domain("rational probabilities must sum to exactly 1"));
        }
        let float: Vec<f64> = probs.iter().map(rational_to_f64).collect();
        let amplitudes = float.iter().map(|&p| Complex64::new(p.sqrt(), 0.0)).collect();
        Ok(OutcomeSpec { amplitudes, probs: float, exact: Some(probs) })
    }

    /// Two-outcome spec with the given probability for outcome 1 ("up");
    /// outcome 0 carries 1-p.
    pub fn binary(p: f64) -> Result<OutcomeSpec> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("p = {p} outside [0, 1]")));
        }
        OutcomeSpec::from_probs(&[1.0 - p, p])
    }

    /// Exact-rational counterpart of [`OutcomeSpec::binary`].
    pub fn binary_rational(p: BigRational) -> Result<OutcomeSpec> {
        if p.is_negative() || p > BigRational::one() {
            return Err(Error::domain("p outside [0, 1]"));
        }
        OutcomeSpec::from_rational_probs(vec![BigRational::one() - &p, p])
    }

    pub fn outcome_count(&self) -> usize {
        self.probs.len()
    }

    /// Probability vector p_i = |alpha_i|^2.
    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn exact_probabilities(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub(crate) fn exact_kernel(&self) -> Option<ExactProbs> {
        self.exact.as_ref().map(|ps| {
            ExactProbs::from_rationals(ps).expect("validated at construction")
        })
    }
}

// ---------------------------------------------------------------------------
// ReplicaSpec
// ---------------------------------------------------------------------------

/// N >= 1 identically prepared copies of an outcome distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaSpec {
    outcome: OutcomeSpec,
    n: u64,
}

impl ReplicaSpec {
    pub fn new(outcome: OutcomeSpec, n: u64) -> Result<ReplicaSpec> {
        if n == 0 {
            return Err(Error::domain("replica count must be at least 1"));
        }
        Ok(ReplicaSpec { outcome, n })
    }

    pub fn outcome(&self) -> &OutcomeSpec {
        &self.outcome
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn m(&self) -> usize {
        self.outcome.outcome_count()
    }
}

// ---------------------------------------------------------------------------
// CountVector
// ---------------------------------------------------------------------------

/// Occupation counts (n_1, ..., n_m) of one product-basis class.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CountVector {
    counts: Vec<u64>,
}

impl CountVector {
    pub fn new(counts: Vec<u64>) -> Result<CountVector> {
        if counts.is_empty() {
            return Err(Error::domain("count vector must be non-empty"));
        }
        let mut total: u64 = 0;
        for &c in &counts {
            total = total
                .checked_add(c)
                .ok_or_else(|| Error::domain("count vector sum overflows u64"))?;
        }
        if total == 0 {
            return Err(Error::domain("count vector must sum to at least 1"));
        }
        Ok(CountVector { counts })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn m(&self) -> usize {
        self.counts.len()
    }

    /// Total number of sites N = sum of counts.
    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Exact per-outcome frequencies n_i / N — the eigenvalue vector of the
    /// frequency operator on this class.
    pub fn frequency_eigenvalue(&self) -> Vec<BigRational> {
        let n = BigInt::from(self.n());
        self.counts
            .iter()
            .map(|&c| BigRational::new(BigInt::from(c), n.clone()))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// ClassWeight
// ---------------------------------------------------------------------------

/// One count class together with its combinatorial multiplicity and its
/// total probability weight.
#[derive(Debug, Clone)]
pub struct ClassWeight {
    pub count_vector: CountVector,
    pub multiplicity: BigUint,
    pub weight: Mass,
}

/// Multiplicity and probability weight of a single count class.
///
/// The weight is exact when the spec carries rational probabilities, and a
/// float (log10 under deep underflow) otherwise.
pub fn class_weight(spec: &ReplicaSpec, cv: &CountVector) -> Result<ClassWeight> {
    if cv.m() != spec.m() {
        return Err(Error::domain(format!(
            "count vector has {} outcomes, spec has {}",
            cv.m(),
            spec.m()
        )));
    }
    if cv.n() != spec.n() {
        return Err(Error::domain(format!(
            "count vector sums to {}, spec has N = {}",
            cv.n(),
            spec.n()
        )));
    }
    let multiplicity = multinomial_biguint(cv.counts());
    let weight = match spec.outcome().exact_kernel() {
        Some(kernel) => {
            let mut numer = multiplicity.clone();
            for (a, &c) in kernel.numers.iter().zip(cv.counts()) {
                if c > 0 {
                    if a.is_zero() {
                        numer = BigUint::zero();
                        break;
                    }
                    numer *= a.pow(cast_exp(c)?);
                }
            }
            let denom = kernel.denom.pow(cast_exp(spec.n())?);
            Mass::Exact(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
        }
        None => {
            let probs = spec.outcome().probabilities();
            let mut ln_w = log10_biguint(&multiplicity) * std::f64::consts::LN_10;
            for (&p, &c) in probs.iter().zip(cv.counts()) {
                if c > 0 {
                    if p == 0.0 {
                        ln_w = f64::NEG_INFINITY;
                        break;
                    }
                    ln_w += c as f64 * p.ln();
                }
            }
            Mass::from_ln(ln_w)
        }
    };
    Ok(ClassWeight { count_vector: cv.clone(), multiplicity, weight })
}

/// Number of count classes: (N + m - 1) choose (m - 1).
pub fn class_count(m: usize, n: u64) -> BigUint {
    binomial_biguint(n + m as u64 - 1, m as u64 - 1)
}

/// Weights of every count class in one kernel sweep. Equivalent to calling
/// [`class_weight`] per class but O(N) multiplications total for m = 2
/// instead of O(N^2), since consecutive terms share their prefix product.
///
/// Zero-weight classes are omitted on the float path; on the exact path
/// they appear with weight exactly 0.
pub fn class_mass_table(spec: &ReplicaSpec, caps: &Caps) -> Result<Vec<(CountVector, Mass)>> {
    check_enumeration_cap(spec, caps)?;
    let mut out = Vec::new();
    match spec.outcome().exact_kernel() {
        Some(kernel) => {
            let denom = kernel.denom.pow(cast_exp(spec.n())?);
            for_each_class_term(&kernel, spec.n(), |counts, term| {
                let cv = CountVector::new(counts.to_vec()).expect("kernel emits valid counts");
                let mass =
                    Mass::Exact(BigRational::new(term.clone().into(), denom.clone().into()));
                out.push((cv, mass));
            })?;
        }
        None => {
            for_each_class_ln_weight(spec.outcome().probabilities(), spec.n(), |counts, ln_w| {
                let cv = CountVector::new(counts.to_vec()).expect("kernel emits valid counts");
                out.push((cv, Mass::from_ln(ln_w)));
            });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Class enumeration
// ---------------------------------------------------------------------------

/// Lexicographic iterator over all count vectors with m outcomes summing
/// to N. Restartable from any position via [`ClassEnumeration::resume_from`],
/// so sweeps can be partitioned across workers.
#[derive(Debug, Clone)]
pub struct ClassEnumeration {
    m: usize,
    next: Option<Vec<u64>>,
}

impl ClassEnumeration {
    fn first(m: usize, n: u64) -> Vec<u64> {
        let mut v = vec![0u64; m];
        v[m - 1] = n;
        v
    }

    /// Continues the enumeration starting at `cv` (inclusive).
    pub fn resume_from(spec: &ReplicaSpec, cv: &CountVector) -> Result<ClassEnumeration> {
        if cv.m() != spec.m() || cv.n() != spec.n() {
            return Err(Error::domain("resume point does not match the spec"));
        }
        Ok(ClassEnumeration { m: spec.m(), next: Some(cv.counts().to_vec()) })
    }
}

impl Iterator for ClassEnumeration {
    type Item = CountVector;

    fn next(&mut self) -> Option<CountVector> {
        let current = self.next.take()?;
        let item = CountVector { counts: current.clone() };
        // successor: bump the rightmost position (below the last) that still
        // has mass to its right, zero the middle, park the rest at the end
        let mut counts = current;
        let m = self.m;
        let mut carry = None;
        let mut suffix: u64 = 0;
        for j in (0..m - 1).rev() {
            suffix += counts[j + 1];
            if suffix > 0 {
                carry = Some(j);
                break;
            }
        }
        if let Some(j) = carry {
            counts[j] += 1;
            for c in counts.iter_mut().take(m - 1).skip(j + 1) {
                *c = 0;
            }
            counts[m - 1] = suffix - 1;
            self.next = Some(counts);
        }
        Some(item)
    }
}

/// Enumerates all count classes of the spec in lexicographic order.
///
/// Errors with [`Error::Capacity`] when the class count exceeds
/// `caps.enumeration_cap`.
pub fn enumerate_classes(spec: &ReplicaSpec, caps: &Caps) -> Result<ClassEnumeration> {
    check_enumeration_cap(spec, caps)?;
    Ok(ClassEnumeration {
        m: spec.m(),
        next: Some(ClassEnumeration::first(spec.m(), spec.n())),
    })
}

pub(crate) fn check_enumeration_cap(spec: &ReplicaSpec, caps: &Caps) -> Result<()> {
    let count = class_count(spec.m(), spec.n());
    if count > BigUint::from(caps.enumeration_cap) {
        return Err(Error::capacity(format!(
            "{count} count classes exceed the enumeration cap {}",
            caps.enumeration_cap
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Exact and float class kernels
// ---------------------------------------------------------------------------

fn cast_exp(n: u64) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::capacity("exponent exceeds u32 in exact kernel"))
}

/// Visits every count class with nonzero weight, passing the counts and the
/// integer kernel term T = multiplicity * prod(numer_i^n_i); the class
/// weight is T / denom^N. Terms are built incrementally: stepping outcome i
/// from t to t+1 multiplies by numer_i * (remaining - t) and divides exactly
/// by (t + 1).
pub(crate) fn for_each_class_term(
    probs: &ExactProbs,
    n: u64,
    mut visit: impl FnMut(&[u64], &BigUint),
) -> Result<()> {
    let m = probs.numers.len();
    let n_exp = cast_exp(n)?;
    if m == 2 {
        let (a0, a1) = (&probs.numers[0], &probs.numers[1]);
        if a1.is_zero() {
            visit(&[n, 0], &a0.pow(n_exp));
            return Ok(());
        }
        if a0.is_zero() {
            visit(&[0, n], &a1.pow(n_exp));
            return Ok(());
        }
        let mut term = a0.pow(n_exp);
        for k in 0..=n {
            visit(&[n - k, k], &term);
            if k < n {
                term = term * a1 * (n - k) / (a0 * (k + 1));
            }
        }
        return Ok(());
    }

    fn rec(
        numers: &[BigUint],
        counts: &mut [u64],
        level: usize,
        remaining: u64,
        coeff: BigUint,
        visit: &mut impl FnMut(&[u64], &BigUint),
    ) -> Result<()> {
        let m = numers.len();
        let a = &numers[level];
        if level == m - 1 {
            if remaining > 0 && a.is_zero() {
                return Ok(());
            }
            counts[level] = remaining;
            let term = if remaining == 0 { coeff } else { coeff * a.pow(cast_exp(remaining)?) };
            visit(counts, &term);
            return Ok(());
        }
        let mut c = coeff;
        let mut t = 0u64;
        loop {
            counts[level] = t;
            rec(numers, counts, level + 1, remaining - t, c.clone(), visit)?;
            if t == remaining || a.is_zero() {
                break;
            }
            c = c * a * (remaining - t) / (t + 1u64);
            t += 1;
        }
        Ok(())
    }

    let mut counts = vec![0u64; m];
    rec(&probs.numers, &mut counts, 0, n, BigUint::one(), &mut visit)
}

/// Float counterpart of [`for_each_class_term`]: visits counts with the
/// natural log of the class weight. Classes whose weight is exactly zero
/// (a zero-probability outcome used at least once) are skipped.
pub(crate) fn for_each_class_ln_weight(
    probs: &[f64],
    n: u64,
    mut visit: impl FnMut(&[u64], f64),
) {
    let m = probs.len();
    if m == 2 {
        let (p0, p1) = (probs[0], probs[1]);
        if p1 == 0.0 {
            visit(&[n, 0], 0.0);
            return;
        }
        if p0 == 0.0 {
            visit(&[0, n], 0.0);
            return;
        }
        for k in 0..=n {
            let ln_w = ln_binomial(n, k) + k as f64 * p1.ln() + (n - k) as f64 * p0.ln();
            visit(&[n - k, k], ln_w);
        }
        return;
    }

    fn rec(
        probs: &[f64],
        counts: &mut [u64],
        level: usize,
        remaining: u64,
        ln_coeff: f64,
        visit: &mut impl FnMut(&[u64], f64),
    ) {
        let m = probs.len();
        let p = probs[level];
        if level == m - 1 {
            if remaining > 0 && p == 0.0 {
                return;
            }
            counts[level] = remaining;
            let ln_w = if remaining == 0 { ln_coeff } else { ln_coeff + remaining as f64 * p.ln() };
            visit(counts, ln_w);
            return;
        }
        let mut lc = ln_coeff;
        let mut t = 0u64;
        loop {
            counts[level] = t;
            rec(probs, counts, level + 1, remaining - t, lc, visit);
            if t == remaining || p == 0.0 {
                break;
            }
            lc += p.ln() + ((remaining - t) as f64).ln() - ((t + 1) as f64).ln();
            t += 1;
        }
    }

    let mut counts = vec![0u64; m];
    rec(probs, &mut counts, 0, n, 0.0, &mut visit);
}

// ---------------------------------------------------------------------------
// Combined outcome probability
// ---------------------------------------------------------------------------

/// Probability that a single designated site shows outcome i, combined over
/// all count classes: sum over classes of weight * n_i / N. Reproduces the
/// single-shot probability p_i exactly on the rational backend.
pub fn combined_outcome_probability(
    spec: &ReplicaSpec,
    outcome_index: usize,
    caps: &Caps,
) -> Result<Mass> {
    if outcome_index >= spec.m() {
        return Err(Error::domain(format!(
            "outcome index {outcome_index} out of range for m = {}",
            spec.m()
        )));
    }
    check_enumeration_cap(spec, caps)?;
    let n = spec.n();
    match spec.outcome().exact_kernel() {
        Some(kernel) => {
            let mut acc = BigUint::zero();
            for_each_class_term(&kernel, n, |counts, term| {
                let c = counts[outcome_index];
                if c > 0 {
                    acc += term * c;
                }
            })?;
            let denom = kernel.denom.pow(cast_exp(n)?) * n;
            Ok(Mass::Exact(BigRational::new(BigInt::from(acc), BigInt::from(denom))))
        }
        None => {
            let mut acc = crate::numeric::LogSumExp::new();
            for_each_class_ln_weight(spec.outcome().probabilities(), n, |counts, ln_w| {
                let c = counts[outcome_index];
                if c > 0 {
                    acc.push(ln_w + (c as f64 / n as f64).ln());
                }
            });
            Ok(Mass::from_ln(acc.ln_total()))
        }
    }
}
