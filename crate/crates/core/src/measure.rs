//! Measurement chain: system-apparatus entanglement, replicated evolution,
//! reduced density matrices, pointer-basis dephasing, and the class
//! frequencies read off the decohered diagonal.
//!
//! The apparatus starts in a classical mixture of "ready" microstates with
//! probabilities q_j. One measurement interaction maps
//! (a|0> + b|1>) |ready_j>  ->  a |0>|rec_0j> + b |1>|rec_1j>,
//! and the record states rec_oj for different (o, j) are orthogonal by
//! construction, so a per-site basis state is just the pair (outcome,
//! microstate). The N-replica density matrix is the N-fold tensor power of
//! the single-site matrix
//!     rho[(o,j),(o',j')] = delta_jj' q_j alpha_o conj(alpha_o'),
//! which keeps outcome coherences until [`decohere`] zeroes them.
//!
//! Two representations exist: a dense matrix for small (2*microstates)^N,
//! and a diagonal-by-count-class form for everything else. Outcome-class
//! statistics never depend on the microstates (the q_j sum out site by
//! site); the dense path demonstrates that numerically, the class path
//! embodies it.

use std::collections::BTreeMap;

use num::{BigRational, One, Signed, Zero};

use crate::error::{Error, Result};
use crate::hilbert::{Complex64, CountVector, OutcomeSpec, ReplicaSpec};
use crate::numeric::{rational_from_f64, Mass, SqrtRat};
use crate::tail::{classification_probs, ConfusionParams, EpsilonWindow};
use crate::Caps;

const SUM_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Apparatus
// ---------------------------------------------------------------------------

/// Classical mixture over apparatus ready microstates.
#[derive(Debug, Clone)]
pub struct ApparatusModel {
    probs: Vec<f64>,
    exact: Option<Vec<BigRational>>,
}

impl ApparatusModel {
    /// Single ready microstate with probability 1.
    pub fn trivial() -> ApparatusModel {
        ApparatusModel { probs: vec![1.0], exact: Some(vec![BigRational::one()]) }
    }

    pub fn from_probs(probs: &[f64]) -> Result<ApparatusModel> {
        if probs.is_empty() {
            return Err(Error::domain("apparatus needs at least one microstate"));
        }
        if probs.iter().any(|q| !q.is_finite() || *q < 0.0) {
            return Err(Error::domain("microstate probabilities must be finite and >= 0"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::domain(format!(
                "microstate probabilities sum to {sum}, not 1"
            )));
        }
        // keep the exact representation only when the dyadic values really
        // sum to 1, so exact paths never absorb a hidden rounding error
        let dyadic: Vec<BigRational> =
            probs.iter().map(|&q| rational_from_f64(q).expect("finite")).collect();
        let exact_sum: BigRational = dyadic.iter().sum();
        let exact = if exact_sum.is_one() { Some(dyadic) } else { None };
        Ok(ApparatusModel { probs: probs.to_vec(), exact })
    }

    pub fn from_rational_probs(probs: Vec<BigRational>) -> Result<ApparatusModel> {
        if probs.is_empty() {
            return Err(Error::domain("apparatus needs at least one microstate"));
        }
        if probs.iter().any(|q| q.is_negative()) {
            return Err(Error::domain("microstate probabilities must be >= 0"));
        }
        let sum: BigRational = probs.iter().sum();
        if !sum.is_one() {
            return Err(Error::domain("microstate probabilities must sum to exactly 1"));
        }
        let floats = probs.iter().map(crate::numeric::rational_to_f64).collect();
        Ok(ApparatusModel { probs: floats, exact: Some(probs) })
    }

    pub fn microstate_count(&self) -> usize {
        self.probs.len()
    }

    pub fn ready_probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn exact_ready_probs(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }
}

// ---------------------------------------------------------------------------
// Single measurement step
// ---------------------------------------------------------------------------

/// One term of the post-interaction entangled state: the system outcome, the
/// apparatus microstate the record descended from, and the amplitude. The
/// record basis state is identified by the (outcome, microstate) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EntangledTerm {
    pub outcome: usize,
    pub microstate: usize,
    pub amplitude: Complex64,
}

/// Applies the measurement interaction to a two-outcome system against one
/// apparatus ready microstate. Zero-amplitude branches are dropped.
pub fn von_neumann_step(
    system: &OutcomeSpec,
    ready_microstate: usize,
) -> Result<Vec<EntangledTerm>> {
    if system.outcome_count() != 2 {
        return Err(Error::domain("the measurement interaction is defined for two outcomes"));
    }
    Ok(system
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm_sqr() > 0.0)
        .map(|(outcome, &amplitude)| EntangledTerm {
            outcome,
            microstate: ready_microstate,
            amplitude,
        })
        .collect())
}

/// Inner product of two entangled states; terms overlap only when both the
/// outcome and the record microstate agree.
pub fn entangled_inner_product(a: &[EntangledTerm], b: &[EntangledTerm]) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for ta in a {
        for tb in b {
            if ta.outcome == tb.outcome && ta.microstate == tb.microstate {
                total += ta.amplitude.conj() * tb.amplitude;
            }
        }
    }
    total
}

// ---------------------------------------------------------------------------
// Replicated evolution
// ---------------------------------------------------------------------------

/// Which representation [`evolve_replicated_measurement`] should build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DensityBackend {
    /// Dense when (2*microstates)^N fits the caps, class-diagonal otherwise.
    #[default]
    Auto,
    /// Dense or error.
    Dense,
    /// Diagonal count-class representation (microstates summed out).
    ClassDiag,
}

#[derive(Debug, Clone)]
enum DensityData {
    DenseFloat(Vec<Complex64>),
    DenseExact(Vec<SqrtRat>),
    ClassDiag(Vec<(CountVector, Mass)>),
}

/// Density matrix of the N replicas after measurement, reduced over nothing
/// but the apparatus' initial classical mixture. Dense layout is row-major
/// over per-site basis indices s = outcome * microstates + j, site 1 most
/// significant.
#[derive(Debug, Clone)]
pub struct ReducedDensityMatrix {
    outcome: OutcomeSpec,
    microstates: usize,
    n: u64,
    diagonal: bool,
    data: DensityData,
}

fn dense_dim(microstates: usize, n: u64, caps: &Caps) -> Option<usize> {
    let site = 2u64.checked_mul(microstates as u64)?;
    let mut dim: u64 = 1;
    for _ in 0..n {
        dim = dim.checked_mul(site)?;
        if dim > caps.dense_dim_cap {
            return None;
        }
    }
    dim.checked_mul(dim).filter(|&e| e <= caps.dense_entry_cap)?;
    Some(dim as usize)
}

/// Evolves N replicated measurements of a two-outcome system against an
/// apparatus mixture. The result is pre-decoherence: outcome coherences are
/// still present on the dense backends.
pub fn evolve_replicated_measurement(
    spec: &ReplicaSpec,
    apparatus: &ApparatusModel,
    backend: DensityBackend,
    caps: &Caps,
) -> Result<ReducedDensityMatrix> {
    if spec.m() != 2 {
        return Err(Error::domain("replicated measurement is defined for two outcomes"));
    }
    let dim = dense_dim(apparatus.microstate_count(), spec.n(), caps);
    let use_dense = match backend {
        DensityBackend::Dense => {
            if dim.is_none() {
                return Err(Error::capacity(format!(
                    "dense (2*{})^{} exceeds the density-matrix caps",
                    apparatus.microstate_count(),
                    spec.n()
                )));
            }
            true
        }
        DensityBackend::Auto => dim.is_some(),
        DensityBackend::ClassDiag => false,
    };

    let data = if use_dense {
        match (spec.outcome().exact_probabilities(), apparatus.exact_ready_probs()) {
            (Some(ps), Some(qs)) => DensityData::DenseExact(dense_exact(ps, qs, spec.n())),
            _ => DensityData::DenseFloat(dense_float(
                spec.outcome().amplitudes(),
                apparatus.ready_probs(),
                spec.n(),
            )),
        }
    } else {
        DensityData::ClassDiag(class_masses(spec, caps)?)
    };

    Ok(ReducedDensityMatrix {
        outcome: spec.outcome().clone(),
        microstates: apparatus.microstate_count(),
        n: spec.n(),
        diagonal: matches!(data, DensityData::ClassDiag(_)),
        data,
    })
}

/// Single-site dense matrix, then N-fold Kronecker power.
fn dense_float(amps: &[Complex64], qs: &[f64], n: u64) -> Vec<Complex64> {
    let mu = qs.len();
    let side = 2 * mu;
    let mut site = vec![Complex64::new(0.0, 0.0); side * side];
    for o in 0..2 {
        for op in 0..2 {
            let coh = amps[o] * amps[op].conj();
            for (j, &q) in qs.iter().enumerate() {
                site[(o * mu + j) * side + (op * mu + j)] = coh * q;
            }
        }
    }
    let mut rho = vec![Complex64::new(1.0, 0.0)];
    let mut dim = 1usize;
    for _ in 0..n {
        rho = kron_float(&rho, dim, &site, side);
        dim *= side;
    }
    rho
}

fn kron_float(a: &[Complex64], adim: usize, b: &[Complex64], bdim: usize) -> Vec<Complex64> {
    let dim = adim * bdim;
    let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
    for r1 in 0..adim {
        for c1 in 0..adim {
            let v = a[r1 * adim + c1];
            if v.norm_sqr() == 0.0 {
                continue;
            }
            for r2 in 0..bdim {
                for c2 in 0..bdim {
                    let w = b[r2 * bdim + c2];
                    if w.norm_sqr() != 0.0 {
                        out[(r1 * bdim + r2) * dim + (c1 * bdim + c2)] = v * w;
                    }
                }
            }
        }
    }
    out
}

/// Exact dense path: coherences are sqrt(p_o p_o') scaled by the rational
/// microstate weight, closed under products as signed square roots.
fn dense_exact(ps: &[BigRational], qs: &[BigRational], n: u64) -> Vec<SqrtRat> {
    let mu = qs.len();
    let side = 2 * mu;
    let mut site = vec![SqrtRat::zero(); side * side];
    for o in 0..2 {
        for op in 0..2 {
            let coh = SqrtRat::sqrt_of(&ps[o] * &ps[op]).expect("probabilities are >= 0");
            for (j, q) in qs.iter().enumerate() {
                site[(o * mu + j) * side + (op * mu + j)] = coh.scale(q);
            }
        }
    }
    let mut rho = vec![SqrtRat::one()];
    let mut dim = 1usize;
    for _ in 0..n {
        rho = kron_exact(&rho, dim, &site, side);
        dim *= side;
    }
    rho
}

fn kron_exact(a: &[SqrtRat], adim: usize, b: &[SqrtRat], bdim: usize) -> Vec<SqrtRat> {
    let dim = adim * bdim;
    let mut out = vec![SqrtRat::zero(); dim * dim];
    for r1 in 0..adim {
        for c1 in 0..adim {
            let v = &a[r1 * adim + c1];
            if v.is_zero() {
                continue;
            }
            for r2 in 0..bdim {
                for c2 in 0..bdim {
                    let w = &b[r2 * bdim + c2];
                    if !w.is_zero() {
                        out[(r1 * bdim + r2) * dim + (c1 * bdim + c2)] = v.mul(w);
                    }
                }
            }
        }
    }
    out
}

/// Diagonal-by-class representation: the microstates sum out site by site
/// (sum_j q_j = 1), leaving exactly the count-class weights.
fn class_masses(spec: &ReplicaSpec, caps: &Caps) -> Result<Vec<(CountVector, Mass)>> {
    crate::hilbert::class_mass_table(spec, caps)
}

impl ReducedDensityMatrix {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn microstates(&self) -> usize {
        self.microstates
    }

    pub fn outcome(&self) -> &OutcomeSpec {
        &self.outcome
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    pub fn is_dense(&self) -> bool {
        !matches!(self.data, DensityData::ClassDiag(_))
    }

    /// Dense dimension, `None` on the class-diagonal backend.
    pub fn dim(&self) -> Option<usize> {
        match &self.data {
            DensityData::DenseFloat(e) => Some((e.len() as f64).sqrt() as usize),
            DensityData::DenseExact(e) => Some((e.len() as f64).sqrt() as usize),
            DensityData::ClassDiag(_) => None,
        }
    }

    /// Dense entry as a float complex, `None` off the dense backends.
    pub fn dense_entry(&self, row: usize, col: usize) -> Option<Complex64> {
        match &self.data {
            DensityData::DenseFloat(e) => {
                let dim = self.dim().unwrap();
                Some(e[row * dim + col])
            }
            DensityData::DenseExact(e) => {
                let dim = self.dim().unwrap();
                let v = &e[row * dim + col];
                Some(Complex64::new(v.to_f64(), 0.0))
            }
            DensityData::ClassDiag(_) => None,
        }
    }

    /// The class-diagonal masses, `None` on the dense backends.
    pub fn class_masses(&self) -> Option<&[(CountVector, Mass)]> {
        match &self.data {
            DensityData::ClassDiag(cs) => Some(cs),
            _ => None,
        }
    }

    pub fn trace(&self) -> Mass {
        match &self.data {
            DensityData::DenseFloat(e) => {
                let dim = self.dim().unwrap();
                Mass::Float((0..dim).map(|i| e[i * dim + i].re).sum())
            }
            DensityData::DenseExact(e) => {
                let dim = self.dim().unwrap();
                let mut total = BigRational::zero();
                for i in 0..dim {
                    total += e[i * dim + i]
                        .to_rational()
                        .expect("diagonal entries are perfect squares");
                }
                Mass::Exact(total)
            }
            DensityData::ClassDiag(cs) => sum_masses(cs.iter().map(|(_, m)| m)),
        }
    }

    /// Max |rho[r,c] - conj(rho[c,r])| on the float backend; exact equality
    /// check on the others (0.0 or infinity).
    pub fn hermiticity_defect(&self) -> f64 {
        match &self.data {
            DensityData::DenseFloat(e) => {
                let dim = self.dim().unwrap();
                let mut worst = 0.0f64;
                for r in 0..dim {
                    for c in 0..dim {
                        let d = (e[r * dim + c] - e[c * dim + r].conj()).norm();
                        worst = worst.max(d);
                    }
                }
                worst
            }
            DensityData::DenseExact(e) => {
                let dim = self.dim().unwrap();
                for r in 0..dim {
                    for c in 0..dim {
                        if e[r * dim + c] != e[c * dim + r] {
                            return f64::INFINITY;
                        }
                    }
                }
                0.0
            }
            DensityData::ClassDiag(_) => 0.0,
        }
    }
}

fn sum_masses<'a>(masses: impl Iterator<Item = &'a Mass>) -> Mass {
    let mut exact = Some(BigRational::zero());
    let mut float = 0.0f64;
    for m in masses {
        float += m.to_f64();
        exact = match (exact, m.as_exact()) {
            (Some(acc), Some(v)) => Some(acc + v),
            _ => None,
        };
    }
    match exact {
        Some(r) => Mass::Exact(r),
        None => Mass::Float(float),
    }
}

// ---------------------------------------------------------------------------
// Decoherence and readout
// ---------------------------------------------------------------------------

/// Pointer-basis dephasing: zeroes every off-diagonal entry, leaving the
/// diagonal untouched (trace exactly preserved). Idempotent; the
/// class-diagonal backend is returned unchanged.
pub fn decohere(rho: &ReducedDensityMatrix) -> ReducedDensityMatrix {
    let data = match &rho.data {
        DensityData::DenseFloat(e) => {
            let dim = (e.len() as f64).sqrt() as usize;
            let mut out = vec![Complex64::new(0.0, 0.0); e.len()];
            for i in 0..dim {
                out[i * dim + i] = e[i * dim + i];
            }
            DensityData::DenseFloat(out)
        }
        DensityData::DenseExact(e) => {
            let dim = (e.len() as f64).sqrt() as usize;
            let mut out = vec![SqrtRat::zero(); e.len()];
            for i in 0..dim {
                out[i * dim + i] = e[i * dim + i].clone();
            }
            DensityData::DenseExact(out)
        }
        DensityData::ClassDiag(cs) => DensityData::ClassDiag(cs.clone()),
    };
    ReducedDensityMatrix {
        outcome: rho.outcome.clone(),
        microstates: rho.microstates,
        n: rho.n,
        diagonal: true,
        data,
    }
}

/// Per-class share of the decohered diagonal.
#[derive(Debug, Clone)]
pub struct PointerClassEntry {
    pub counts: CountVector,
    pub mass: Mass,
    pub within: bool,
}

/// Diagonal mass split at the epsilon window.
#[derive(Debug, Clone)]
pub struct PointerClassReport {
    pub within_mass: Mass,
    pub confused_mass: Mass,
    pub classes: Vec<PointerClassEntry>,
}

/// Reads outcome-class frequencies off a decohered density matrix: the mass
/// within epsilon of the Born frequencies, the confused remainder, and the
/// per-class breakdown. Requires a diagonal matrix.
pub fn pointer_class_frequencies(
    rho: &ReducedDensityMatrix,
    params: &ConfusionParams,
) -> Result<PointerClassReport> {
    if !rho.diagonal {
        return Err(Error::Contract(
            "pointer-class readout needs a decohered (diagonal) density matrix".into(),
        ));
    }
    let probs = classification_probs(&rho.outcome);
    let window = EpsilonWindow::compute(&probs, params.epsilon_exact(), rho.n);

    let per_class: Vec<(CountVector, Mass)> = match &rho.data {
        DensityData::ClassDiag(cs) => cs.clone(),
        DensityData::DenseFloat(e) => {
            let dim = (e.len() as f64).sqrt() as usize;
            let mut acc: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
            for i in 0..dim {
                let counts = dense_index_counts(i, rho.microstates, rho.n);
                *acc.entry(counts).or_insert(0.0) += e[i * dim + i].re;
            }
            acc.into_iter()
                .map(|(c, v)| (CountVector::new(c).expect("valid counts"), Mass::Float(v)))
                .collect()
        }
        DensityData::DenseExact(e) => {
            let dim = (e.len() as f64).sqrt() as usize;
            let mut acc: BTreeMap<Vec<u64>, BigRational> = BTreeMap::new();
            for i in 0..dim {
                let counts = dense_index_counts(i, rho.microstates, rho.n);
                let v = e[i * dim + i]
                    .to_rational()
                    .expect("diagonal entries are perfect squares");
                *acc.entry(counts).or_insert_with(BigRational::zero) += v;
            }
            acc.into_iter()
                .map(|(c, v)| (CountVector::new(c).expect("valid counts"), Mass::Exact(v)))
                .collect()
        }
    };

    let mut classes = Vec::with_capacity(per_class.len());
    for (counts, mass) in per_class {
        let within = window.contains(counts.counts());
        classes.push(PointerClassEntry { counts, mass, within });
    }
    let within_mass = sum_masses(classes.iter().filter(|c| c.within).map(|c| &c.mass));
    let confused_mass = sum_masses(classes.iter().filter(|c| !c.within).map(|c| &c.mass));
    Ok(PointerClassReport { within_mass, confused_mass, classes })
}

/// Outcome counts of a dense basis index: each base-(2*microstates) digit's
/// outcome is digit / microstates.
fn dense_index_counts(index: usize, microstates: usize, n: u64) -> Vec<u64> {
    let side = 2 * microstates;
    let mut counts = vec![0u64; 2];
    let mut rest = index;
    for _ in 0..n {
        counts[(rest % side) / microstates] += 1;
        rest /= side;
    }
    counts
}
