//! Statistics of repeated quantum measurements, computed exactly where the
//! inputs allow and in float or log10 arithmetic where they do not.
//!
//! The crate is organized around the product basis of N identically prepared
//! systems. Everything observable here is diagonal in that basis, so states
//! reduce to occupation-count classes ([`hilbert`]), tail masses and
//! concentration bounds over those classes ([`tail`]), a brute-force full
//! tensor oracle for small N ([`oracle`]), measurement + decoherence models
//! ([`measure`]), and a reproducible branch sampler with statistical tests
//! ([`sampler`]).

pub mod error;
pub mod hilbert;
pub mod measure;
pub mod numeric;
pub mod oracle;
pub mod sampler;
pub mod tail;

pub use error::{Error, Result};

/// Work and memory limits for the enumeration-heavy operations.
///
/// Every cap guards a different axis: `enumeration_cap` bounds the number of
/// occupation-count classes visited, `oracle_cap` the number of full-tensor
/// coefficients, `dense_dim_cap` the dense density-matrix dimension,
/// `dense_entry_cap` the dense allocation (dimension squared), and
/// `pattern_cap` the sampler's histogram table size.
#[derive(Debug, Clone)]
pub struct Caps {
    pub enumeration_cap: u64,
    pub oracle_cap: u64,
    pub dense_dim_cap: u64,
    pub dense_entry_cap: u64,
    pub pattern_cap: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            enumeration_cap: 100_000_000,
            oracle_cap: 1_000_000,
            dense_dim_cap: 1 << 20,
            dense_entry_cap: 1 << 24,
            pattern_cap: 1 << 20,
        }
    }
}
