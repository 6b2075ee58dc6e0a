//! Monte-Carlo surrogate for the infinite replica collection: samples
//! sphere-sized outcome patterns inside a branch and tests whether branches
//! are statistically distinguishable.
//!
//! A "sphere" is an ordered read of M sites; sampling K spheres i.i.d. with
//! the Born probabilities models one branch's regional statistics. The
//! generator is ChaCha12, seeded once per run; spheres are drawn in fixed
//! 4096-sphere chunks, one independent counter stream per chunk, so the
//! histogram is bit-identical no matter how many threads participate and
//! the whole run is reproducible from (algorithm, seed) alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, Continuous, ContinuousCDF};

use crate::error::{Error, Result};
use crate::hilbert::OutcomeSpec;
use crate::numeric::erfc;
use crate::Caps;

/// Spheres per PRNG stream. Fixed: changing it would renumber the streams
/// and silently change every sampled histogram.
pub const STREAM_CHUNK: u64 = 4096;

/// Identifier of the generator, pinned in run manifests.
pub const PRNG_ALGORITHM: &str = "chacha12";

// ---------------------------------------------------------------------------
// Configuration and histogram
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    outcome: OutcomeSpec,
    sphere_size: u32,
    sphere_count: u64,
    seed: u64,
}

impl SamplerConfig {
    pub fn new(
        outcome: OutcomeSpec,
        sphere_size: u32,
        sphere_count: u64,
        seed: u64,
        caps: &Caps,
    ) -> Result<SamplerConfig> {
        if sphere_size == 0 {
            return Err(Error::domain("sphere size M must be >= 1"));
        }
        if sphere_count == 0 {
            return Err(Error::domain("sphere count K must be >= 1"));
        }
        let m = outcome.outcome_count() as u64;
        let mut table: u64 = 1;
        for _ in 0..sphere_size {
            table = table
                .checked_mul(m)
                .filter(|&t| t <= caps.pattern_cap)
                .ok_or_else(|| {
                    Error::capacity(format!(
                        "{m}^{sphere_size} patterns exceed the pattern-table cap {}",
                        caps.pattern_cap
                    ))
                })?;
        }
        Ok(SamplerConfig { outcome, sphere_size, sphere_count, seed })
    }

    pub fn outcome(&self) -> &OutcomeSpec {
        &self.outcome
    }

    pub fn sphere_size(&self) -> u32 {
        self.sphere_size
    }

    pub fn sphere_count(&self) -> u64 {
        self.sphere_count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn pattern_count(&self) -> usize {
        (self.outcome.outcome_count() as u64).pow(self.sphere_size) as usize
    }
}

/// Dense table of pattern counts; index digits are base-m, first sphere site
/// most significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternHistogram {
    m: usize,
    sphere_size: u32,
    counts: Vec<u64>,
}

impl PatternHistogram {
    /// Rebuilds a histogram from stored counts, e.g. one read back from a
    /// sample file. The table must hold exactly m^sphere_size entries.
    pub fn from_parts(m: usize, sphere_size: u32, counts: Vec<u64>) -> Result<PatternHistogram> {
        if m < 2 {
            return Err(Error::domain("histogram needs at least two outcomes"));
        }
        if sphere_size == 0 {
            return Err(Error::domain("sphere size M must be >= 1"));
        }
        let expected: Option<usize> = (0..sphere_size).try_fold(1usize, |t, _| t.checked_mul(m));
        if expected != Some(counts.len()) {
            return Err(Error::domain(format!(
                "histogram holds {} counts, expected {}^{}",
                counts.len(),
                m,
                sphere_size
            )));
        }
        Ok(PatternHistogram { m, sphere_size, counts })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn sphere_size(&self) -> u32 {
        self.sphere_size
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Outcome digits of a pattern index, first site first.
    pub fn pattern_digits(&self, index: usize) -> Vec<usize> {
        let mut digits = vec![0usize; self.sphere_size as usize];
        let mut rest = index;
        for d in digits.iter_mut().rev() {
            *d = rest % self.m;
            rest /= self.m;
        }
        digits
    }

    /// Adds another histogram of identical shape.
    pub fn merge_from(&mut self, other: &PatternHistogram) -> Result<()> {
        if self.m != other.m || self.sphere_size != other.sphere_size {
            return Err(Error::domain("histogram shapes differ"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Draws K spheres of M sites each and tabulates the pattern counts.
/// Deterministic in  the seed; chunk c uses ChaCha12 counter stream c.
pub fn sample_branch_spheres(config: &SamplerConfig) -> PatternHistogram {
    let m = config.outcome.outcome_count();
    let patterns = config.pattern_count();
    let k = config.sphere_count;
    // cumulative outcome probabilities for inverse-transform draws
    let mut cum = Vec::with_capacity(m);
    let mut running = 0.0f64;
    for &p in config.outcome.probabilities() {
        running += p;
        cum.push(running);
    }
    let chunks = k.div_ceil(STREAM_CHUNK);

    let counts = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
            rng.set_stream(chunk);
            let todo = STREAM_CHUNK.min(k - chunk * STREAM_CHUNK);
            let mut local = vec![0u64; patterns];
            for _ in 0..todo {
                let mut idx = 0usize;
                for _ in 0..config.sphere_size {
                    let u: f64 = rng.gen();
                    let outcome =
                        cum.iter().position(|&c| u < c).unwrap_or(m - 1);
                    idx = idx * m + outcome;
                }
                local[idx] += 1;
            }
            local
        })
        .reduce(
            || vec![0u64; patterns],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
                a
            },
        );

    PatternHistogram { m, sphere_size: config.sphere_size, counts }
}

// ---------------------------------------------------------------------------
// Per-pattern frequency test
// ---------------------------------------------------------------------------

/// One pattern whose empirical frequency sits more than `z_threshold`
/// sampling standard deviations from its Born product probability.
#[derive(Debug, Clone)]
pub struct PatternFlag {
    pub index: usize,
    pub count: u64,
    pub expected: f64,
    pub z: f64,
}

#[derive(Debug, Clone)]
pub struct PatternTestReport {
    pub z_threshold: f64,
    pub pattern_count: usize,
    pub flagged: Vec<PatternFlag>,
    /// Two-sided normal tail mass at the threshold.
    pub tail_mass: f64,
    /// Largest flag count still consistent with that tail mass:
    /// P*t + 3*sqrt(P*t*(1-t)).
    pub allowed_flags: f64,
    pub pass: bool,
}

/// Compares every pattern's empirical frequency against its Born product
/// probability. Individual flags at |z| > z_threshold are expected by
/// chance; the overall verdict only fails when the flag count exceeds its
/// own sampling allowance.
pub fn pattern_frequency_test(
    hist: &PatternHistogram,
    spec: &OutcomeSpec,
    z_threshold: f64,
) -> Result<PatternTestReport> {
    if spec.outcome_count() != hist.m {
        return Err(Error::domain("histogram and spec disagree on the outcome count"));
    }
    if !z_threshold.is_finite() || z_threshold <= 0.0 {
        return Err(Error::domain("z threshold must be finite and > 0"));
    }
    let k = hist.total();
    if k == 0 {
        return Err(Error::domain("histogram is empty"));
    }
    let kf = k as f64;
    let probs = spec.probabilities();

    let mut flagged = Vec::new();
    let mut informative = 0usize; // patterns with 0 < q < 1
    for (index, &count) in hist.counts.iter().enumerate() {
        let q: f64 = hist.pattern_digits(index).iter().map(|&d| probs[d]).product();
        let freq = count as f64 / kf;
        if q == 0.0 {
            if count > 0 {
                flagged.push(PatternFlag { index, count, expected: 0.0, z: f64::INFINITY });
            }
            continue;
        }
        if q == 1.0 {
            if count < k {
                flagged.push(PatternFlag {
                    index,
                    count,
                    expected: kf,
                    z: f64::NEG_INFINITY,
                });
            }
            continue;
        }
        informative += 1;
        let sigma = (q * (1.0 - q) / kf).sqrt();
        let z = (freq - q) / sigma;
        if z.abs() > z_threshold {
            flagged.push(PatternFlag { index, count, expected: q * kf, z });
        }
    }

    let tail_mass = erfc(z_threshold / std::f64::consts::SQRT_2);
    let mean_flags = informative as f64 * tail_mass;
    let allowed_flags = mean_flags + 3.0 * (mean_flags * (1.0 - tail_mass)).sqrt();
    let pass = (flagged.len() as f64) <= allowed_flags;
    Ok(PatternTestReport {
        z_threshold,
        pattern_count: hist.counts.len(),
        flagged,
        tail_mass,
        allowed_flags,
        pass,
    })
}

// ---------------------------------------------------------------------------
// Two-sample homogeneity
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchDecision {
    Indistinguishable,
    Distinguishable,
}

#[derive(Debug, Clone)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub dof: u64,
    pub critical: f64,
    pub significance: f64,
    /// Cells that survived pooling (including a merged rare-pattern cell).
    pub cells: usize,
    pub decision: BranchDecision,
}

/// Two-sample chi-square homogeneity test between branch histograms.
///
/// Patterns too rare for the chi-square approximation (expected cell count
/// below 5 in either branch) are pooled into one rest cell; a still-short
/// rest cell is absorbed into the smallest surviving cell. Fails with
/// `InsufficientData` when fewer than two cells remain.
pub fn branch_indistinguishability_test(
    a: &PatternHistogram,
    b: &PatternHistogram,
    significance: f64,
) -> Result<ChiSquareReport> {
    if a.m != b.m || a.sphere_size != b.sphere_size {
        return Err(Error::domain("histogram shapes differ"));
    }
    if !(significance > 0.0 && significance < 1.0) {
        return Err(Error::domain("significance must lie strictly between 0 and 1"));
    }
    let ka = a.total() as f64;
    let kb = b.total() as f64;
    if ka == 0.0 || kb == 0.0 {
        return Err(Error::domain("histograms must be non-empty"));
    }
    let t = ka + kb;
    // expected count in the smaller branch is t_c * min(K)/T >= 5
    let tau = 5.0 * t / ka.min(kb);

    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut rest = (0.0f64, 0.0f64);
    for (&ca, &cb) in a.counts.iter().zip(&b.counts) {
        let combined = (ca + cb) as f64;
        if combined >= tau {
            cells.push((ca as f64, cb as f64));
        } else {
            rest.0 += ca as f64;
            rest.1 += cb as f64;
        }
    }
    if rest.0 + rest.1 > 0.0 {
        if rest.0 + rest.1 >= tau {
            cells.push(rest);
        } else if let Some(smallest) = cells
            .iter_mut()
            .min_by(|x, y| (x.0 + x.1).total_cmp(&(y.0 + y.1)))
        {
            smallest.0 += rest.0;
            smallest.1 += rest.1;
        }
    }
    if cells.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} cell(s) left after pooling at expected-count threshold {tau:.1}",
            cells.len()
        )));
    }

    let mut statistic = 0.0f64;
    for &(ca, cb) in &cells {
        let col = ca + cb;
        let ea = col * ka / t;
        let eb = col * kb / t;
        statistic += (ca - ea) * (ca - ea) / ea + (cb - eb) * (cb - eb) / eb;
    }
    let dof = (cells.len() - 1) as u64;
    let critical = chi_square_quantile(dof, 1.0 - significance);
    let decision = if statistic < critical {
        BranchDecision::Indistinguishable
    } else {
        BranchDecision::Distinguishable
    };
    Ok(ChiSquareReport { statistic, dof, critical, significance, cells: cells.len(), decision })
}

/// Chi-square quantile: the library's generic inverse is only ~1e-5
/// accurate, so polish it with Newton steps against the precise cdf/pdf.
fn chi_square_quantile(dof: u64, prob: f64) -> f64 {
    let dist = ChiSquared::new(dof as f64).expect("dof >= 1");
    let mut x = dist.inverse_cdf(prob);
    for _ in 0..8 {
        // pdf() itself overflows at large dof; the log form stays finite
        let density = dist.ln_pdf(x).exp();
        if density <= 0.0 || !density.is_finite() {
            break;
        }
        let step = (dist.cdf(x) - prob) / density;
        x -= step;
        if step.abs() <= 1e-13 * x.abs() {
            break;
        }
    }
    x
}
