//! Confusion tails and their analytic bounds.
//!
//! A count class is "confused" at tolerance epsilon when any of its outcome
//! frequencies strays from the target probability by strictly more than
//! epsilon: exists i with |n_i/N - p_i| > epsilon. The squared norm of the
//! projector onto confused classes is the tail mass of the count
//! distribution outside the epsilon-cube. This module computes that tail
//! exactly (rational backend), in floats, or in log10, and pairs it with the
//! exponential concentration bound 2*exp(-2 eps^2 N) (times m outcomes via a
//! union bound when m > 2) and the central-limit erfc approximation.
//!
//! Boundary classification is always exact: float probabilities and epsilon
//! are promoted to their dyadic rational values, so whether a class lies
//! inside or outside never depends on the numeric regime.

use num::bigint::{BigInt, BigUint};
use num::{BigRational, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::hilbert::{
    check_enumeration_cap, for_each_class_ln_weight, for_each_class_term, CountVector,
    ReplicaSpec,
};
use crate::numeric::{
    log10_erfc, one_minus_pow, rational_from_f64, rational_to_f64, LogSumExp, Mass, SciReal,
    LINEAR_FLOOR,
};
use crate::Caps;

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// How classes exactly on the epsilon boundary are treated. A frequency at
/// distance exactly epsilon counts as *inside* (only strict excess is
/// confused).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryRule {
    #[default]
    StrictOutside,
}

/// Frequency tolerance for the confusion projector.
///
/// The meaningful range is 0 < epsilon < 1; epsilon = 0 (everything off the
/// exact Born frequency is confused) and epsilon >= 1 (nothing is) are
/// accepted so limiting cases stay callable.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionParams {
    epsilon: f64,
    epsilon_exact: BigRational,
    boundary: BoundaryRule,
}

impl ConfusionParams {
    /// Builds from a float tolerance, promoted to its exact dyadic value for
    /// boundary comparisons.
    pub fn new(epsilon: f64) -> Result<ConfusionParams> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::domain(format!("epsilon = {epsilon} must be finite and >= 0")));
        }
        Ok(ConfusionParams {
            epsilon,
            epsilon_exact: rational_from_f64(epsilon).expect("finite"),
            boundary: BoundaryRule::StrictOutside,
        })
    }

    /// Builds from an exact rational tolerance.
    pub fn from_rational(epsilon: BigRational) -> Result<ConfusionParams> {
        if epsilon.is_negative() {
            return Err(Error::domain("epsilon must be >= 0"));
        }
        Ok(ConfusionParams {
            epsilon: rational_to_f64(&epsilon),
            epsilon_exact: epsilon,
            boundary: BoundaryRule::StrictOutside,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn epsilon_exact(&self) -> &BigRational {
        &self.epsilon_exact
    }

    pub fn boundary_rule(&self) -> BoundaryRule {
        self.boundary
    }
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

/// Numeric regime that produced the exact tail value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Rational,
    Float,
    LogDomain,
}

/// Exact tail mass (when computable) together with its analytic bounds.
#[derive(Debug, Clone)]
pub struct TailResult {
    /// Tail mass outside the epsilon-cube; `None` when only bounds were
    /// requested or feasible.
    pub exact: Option<Mass>,
    /// log10 of the exact tail; `None` alongside `exact`.
    pub log10_exact: Option<f64>,
    /// Exponential concentration bound: 2 exp(-2 eps^2 N), times m when
    /// m > 2 (per-coordinate union bound). May exceed 1 (vacuous).
    pub hoeffding: Mass,
    /// Central-limit approximation. For m = 2 this is
    /// erfc(eps sqrt(N / (2 p (1-p)))); for m > 2 it is the per-site form
    /// 1 - (1 - erfc(eps sqrt(N)))^N.
    pub gaussian: Mass,
    /// The loose large-N simplification N * erfc(eps sqrt(N)); only
    /// populated for m > 2 where it differs from `gaussian`.
    pub gaussian_limit: Option<Mass>,
    pub regime: Regime,
}

/// Complementary pair: mass within epsilon of the Born frequencies and the
/// confused remainder. On the rational backend the two sum to exactly 1.
#[derive(Debug, Clone)]
pub struct HappyDecomposition {
    pub happy: Mass,
    pub confused: Mass,
}

/// Covariance of the frequency vector: C_ij = (delta_ij p_i - p_i p_j) / N.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    m: usize,
    n: u64,
    entries: Vec<Mass>,
}

impl CovarianceMatrix {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &Mass {
        &self.entries[i * self.m + j]
    }

    pub fn row_major(&self) -> &[Mass] {
        &self.entries
    }
}

// ---------------------------------------------------------------------------
// Epsilon window
// ---------------------------------------------------------------------------

/// Per-outcome inclusive count interval [lo_i, hi_i] such that a class lies
/// inside the epsilon-cube iff every count does: lo_i <= n_i <= hi_i.
/// Derived once, exactly, from N*(p_i -+ epsilon).
#[derive(Debug, Clone)]
pub(crate) struct EpsilonWindow {
    lo: Vec<u64>,
    hi: Vec<u64>,
}

impl EpsilonWindow {
    pub(crate) fn compute(probs: &[BigRational], epsilon: &BigRational, n: u64) -> EpsilonWindow {
        let nn = BigRational::from_integer(BigInt::from(n));
        let mut lo = Vec::with_capacity(probs.len());
        let mut hi = Vec::with_capacity(probs.len());
        for p in probs {
            let lower = &nn * (p - epsilon);
            let upper = &nn * (p + epsilon);
            let l = lower.ceil().to_integer();
            // upper = N*(p + eps) >= 0 always, so only the lower bound clamps
            let h = upper.floor().to_integer();
            lo.push(if l.is_negative() { 0 } else { l.to_u64().unwrap_or(u64::MAX) });
            hi.push(h.to_u64().unwrap_or(u64::MAX).min(n));
        }
        EpsilonWindow { lo, hi }
    }

    /// True when the class lies inside the epsilon-cube (not confused).
    pub(crate) fn contains(&self, counts: &[u64]) -> bool {
        counts
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&c, (&l, &h))| l <= c && c <= h)
    }
}

/// Exact probabilities for boundary classification: the spec's own rationals
/// when present, else the dyadic promotion of its float probabilities.
pub(crate) fn classification_probs(outcome: &crate::hilbert::OutcomeSpec) -> Vec<BigRational> {
    match outcome.exact_probabilities() {
        Some(ps) => ps.to_vec(),
        None => outcome
            .probabilities()
            .iter()
            .map(|&p| rational_from_f64(p).expect("finite"))
            .collect(),
    }
}

/// Whether a single count class is confused (strictly outside the
/// epsilon-cube). Classification is exact for float-backed specs too.
pub fn confusion_indicator(
    spec: &ReplicaSpec,
    params: &ConfusionParams,
    cv: &CountVector,
) -> Result<bool> {
    if cv.m() != spec.m() || cv.n() != spec.n() {
        return Err(Error::domain("count vector does not match the spec"));
    }
    let probs = classification_probs(spec.outcome());
    let window = EpsilonWindow::compute(&probs, params.epsilon_exact(), spec.n());
    Ok(!window.contains(cv.counts()))
}

// ---------------------------------------------------------------------------
// Moments
// ---------------------------------------------------------------------------

/// Variance of the up-outcome frequency for a two-outcome spec:
/// p (1 - p) / N. For m > 2 use [`covariance_matrix`].
pub fn freq_variance(spec: &ReplicaSpec) -> Result<Mass> {
    if spec.m() != 2 {
        return Err(Error::domain(
            "freq_variance is the two-outcome form; use covariance_matrix for m > 2",
        ));
    }
    match spec.outcome().exact_probabilities() {
        Some(ps) => {
            let p = &ps[1];
            let v = p * (BigRational::one() - p)
                / BigRational::from_integer(BigInt::from(spec.n()));
            Ok(Mass::Exact(v))
        }
        None => {
            let p = spec.outcome().probabilities()[1];
            Ok(Mass::Float(p * (1.0 - p) / spec.n() as f64))
        }
    }
}

/// Covariance matrix of the frequency vector,
/// C_ij = (delta_ij p_i - p_i p_j) / N.
pub fn covariance_matrix(spec: &ReplicaSpec) -> CovarianceMatrix {
    let m = spec.m();
    let n = spec.n();
    let entries = match spec.outcome().exact_probabilities() {
        Some(ps) => {
            let nn = BigRational::from_integer(BigInt::from(n));
            let mut out = Vec::with_capacity(m * m);
            for i in 0..m {
                for j in 0..m {
                    let v = if i == j {
                        &ps[i] * (BigRational::one() - &ps[i])
                    } else {
                        -(&ps[i] * &ps[j])
                    };
                    out.push(Mass::Exact(v / &nn));
                }
            }
            out
        }
        None => {
            let ps = spec.outcome().probabilities();
            let nf = n as f64;
            let mut out = Vec::with_capacity(m * m);
            for i in 0..m {
                for j in 0..m {
                    let v = if i == j { ps[i] * (1.0 - ps[i]) } else { -ps[i] * ps[j] };
                    out.push(Mass::Float(v / nf));
                }
            }
            out
        }
    };
    CovarianceMatrix { m, n, entries }
}

// ---------------------------------------------------------------------------
// Exact tail
// ---------------------------------------------------------------------------

/// Exact tail mass outside the epsilon-cube, with bounds attached.
///
/// Rational-backed specs get an exact rational tail; float-backed specs get
/// a float tail (log10 under deep underflow) with the same exact boundary
/// classification. Errors with [`Error::Capacity`] when the class count
/// exceeds `caps.enumeration_cap`; callers can fall back to
/// [`hoeffding_bound`] / [`gaussian_approx`].
pub fn confusion_norm_exact(
    spec: &ReplicaSpec,
    params: &ConfusionParams,
    caps: &Caps,
) -> Result<TailResult> {
    check_enumeration_cap(spec, caps)?;
    let n = spec.n();
    let class_probs = classification_probs(spec.outcome());
    let window = EpsilonWindow::compute(&class_probs, params.epsilon_exact(), n);

    let (exact, regime) = match spec.outcome().exact_kernel() {
        Some(kernel) => {
            let mut numer = BigUint::zero();
            if spec.m() == 2 {
                sum_binary_tail(&kernel, n, &window, &mut numer)?;
            } else {
                for_each_class_term(&kernel, n, |counts, term| {
                    if !window.contains(counts) {
                        numer += term;
                    }
                })?;
            }
            let denom = kernel.denom.pow(u32::try_from(n).map_err(|_| {
                Error::capacity("N exceeds the exact-kernel exponent range")
            })?);
            let mass = Mass::Exact(BigRational::new(BigInt::from(numer), BigInt::from(denom)));
            (mass, Regime::Rational)
        }
        None => {
            let mut acc = LogSumExp::new();
            for_each_class_ln_weight(spec.outcome().probabilities(), n, |counts, ln_w| {
                if !window.contains(counts) {
                    acc.push(ln_w);
                }
            });
            let mass = Mass::from_ln(acc.ln_total());
            let regime = match mass {
                Mass::Log10(_) => Regime::LogDomain,
                _ => Regime::Float,
            };
            (mass, regime)
        }
    };

    let log10_exact = exact.log10();
    let (gaussian, gaussian_limit) = gaussian_approx(spec, params);
    Ok(TailResult {
        log10_exact: Some(log10_exact),
        exact: Some(exact),
        hoeffding: hoeffding_bound(spec, params),
        gaussian,
        gaussian_limit,
        regime,
    })
}

/// Bounds-only result for workloads past the enumeration cap.
pub fn confusion_bounds(spec: &ReplicaSpec, params: &ConfusionParams) -> TailResult {
    let (gaussian, gaussian_limit) = gaussian_approx(spec, params);
    TailResult {
        exact: None,
        log10_exact: None,
        hoeffding: hoeffding_bound(spec, params),
        gaussian,
        gaussian_limit,
        regime: Regime::Float,
    }
}

/// m = 2 fast path: the confused region is n_up < lo or n_up > hi, so only
/// the two tail ranges are visited, each with an incremental term update.
fn sum_binary_tail(
    kernel: &crate::numeric::ExactProbs,
    n: u64,
    window: &EpsilonWindow,
    numer: &mut BigUint,
) -> Result<()> {
    let (a0, a1) = (&kernel.numers[0], &kernel.numers[1]);
    let n_exp = u32::try_from(n).map_err(|_| Error::capacity("N exceeds exponent range"))?;
    // Degenerate distributions put all mass on one class.
    if a0.is_zero() || a1.is_zero() {
        let counts = if a0.is_zero() { [0, n] } else { [n, 0] };
        if !window.contains(&counts) {
            *numer += kernel.denom.pow(n_exp);
        }
        return Ok(());
    }
    // Intersect the up-count window with the mirrored down-count window.
    let lo = window.lo[1].max(n.saturating_sub(window.hi[0]));
    let hi = window.hi[1].min(n - window.lo[0].min(n));
    if lo > hi {
        // Window empty: everything is confused.
        *numer += kernel.denom.pow(n_exp);
        return Ok(());
    }
    // Low tail, ascending from k = 0.
    if lo > 0 {
        let mut term = a0.pow(n_exp);
        for k in 0..lo {
            *numer += &term;
            term = term * a1 * (n - k) / (a0 * (k + 1));
        }
    }
    // High tail, descending from k = N.
    if hi < n {
        let mut term = a1.pow(n_exp);
        for k in ((hi + 1)..=n).rev() {
            *numer += &term;
            if k > hi + 1 {
                term = term * a0 * k / (a1 * (n - k + 1));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Bounds
// ---------------------------------------------------------------------------

/// Exponential concentration bound on the confusion tail:
/// 2 exp(-2 eps^2 N) for m = 2, and the per-coordinate union bound
/// 2 m exp(-2 eps^2 N) for m > 2. Vacuous (>= 1, up to 2m) as eps -> 0.
pub fn hoeffding_bound(spec: &ReplicaSpec, params: &ConfusionParams) -> Mass {
    let coeff = if spec.m() == 2 { 2.0 } else { 2.0 * spec.m() as f64 };
    let ln = coeff.ln() - 2.0 * params.epsilon() * params.epsilon() * spec.n() as f64;
    Mass::from_ln(ln)
}

fn erfc_mass(z: f64) -> Mass {
    let v = crate::numeric::erfc(z);
    if v >= LINEAR_FLOOR {
        Mass::Float(v)
    } else {
        Mass::Log10(log10_erfc(z))
    }
}

/// Central-limit approximation to the confusion tail.
///
/// For m = 2 returns (erfc(eps sqrt(N / (2 p(1-p)))), None). For m > 2
/// returns the per-site combination 1 - (1 - erfc(eps sqrt(N)))^N plus the
/// large-N simplification N erfc(eps sqrt(N)) as the second element; the
/// simplification always dominates the first form.
pub fn gaussian_approx(spec: &ReplicaSpec, params: &ConfusionParams) -> (Mass, Option<Mass>) {
    let eps = params.epsilon();
    let nf = spec.n() as f64;
    if spec.m() == 2 {
        if eps == 0.0 {
            return (Mass::Float(1.0), None);
        }
        let p = spec.outcome().probabilities()[1];
        let pq = p * (1.0 - p);
        if pq == 0.0 {
            // Deterministic outcome: the frequency never deviates.
            return (Mass::Float(0.0), None);
        }
        (erfc_mass(eps * (nf / (2.0 * pq)).sqrt()), None)
    } else {
        let arg = eps * nf.sqrt();
        let u = crate::numeric::erfc(arg);
        let limit_log10 = nf.log10() + log10_erfc(arg);
        let limit = if limit_log10 >= LINEAR_FLOOR.log10() {
            Mass::Float(10f64.powf(limit_log10))
        } else {
            Mass::Log10(limit_log10)
        };
        let primary = if u >= 1e-290 {
            Mass::Float(one_minus_pow(u, nf))
        } else {
            // Below this point 1 - (1-u)^N and N u agree to ~1e-280.
            limit.clone()
        };
        (primary, Some(limit))
    }
}

/// Splits unit mass into (within epsilon, confused) parts. Exact complement
/// on the rational backend, so the two sum to exactly 1.
pub fn happy_decomposition(
    spec: &ReplicaSpec,
    params: &ConfusionParams,
    caps: &Caps,
) -> Result<HappyDecomposition> {
    let tail = confusion_norm_exact(spec, params, caps)?;
    let confused = tail.exact.expect("confusion_norm_exact always fills exact");
    let happy = match &confused {
        Mass::Exact(t) => Mass::Exact(BigRational::one() - t),
        Mass::Float(t) => Mass::Float(1.0 - t),
        // Tail below the linear floor: the complement is 1 to f64 precision.
        Mass::Log10(_) => Mass::Float(1.0),
    };
    Ok(HappyDecomposition { happy, confused })
}

// ---------------------------------------------------------------------------
// Huge-N bound
// ---------------------------------------------------------------------------

/// log10 of the two-outcome concentration bound 2 exp(-2 eps^2 N) for
/// N = 10^log10_n, eps = 10^log10_epsilon, without materializing N.
///
/// The result,
/// log10(2) - 2 log10(e) * 10^(log10_n + 2 log10_epsilon),
/// is returned in decimal scientific form because its own exponent can
/// exceed the f64 range (N = 10^1000, eps = 10^-100 gives ~ -8.7e799).
pub fn log10_bound_huge_n(log10_n: f64, log10_epsilon: f64) -> Result<SciReal> {
    if log10_n.is_nan() || log10_epsilon.is_nan() {
        return Err(Error::domain("log10 parameters must not be NaN"));
    }
    if log10_n == f64::INFINITY || log10_epsilon == f64::INFINITY {
        return Err(Error::domain("log10 parameters must be finite or -inf"));
    }
    let exponent = log10_n + 2.0 * log10_epsilon;
    let term = SciReal::from_coeff_and_exp10(2.0 * std::f64::consts::LOG10_E, exponent);
    Ok(SciReal::from_f64(std::f64::consts::LOG10_2).sub(term))
}
