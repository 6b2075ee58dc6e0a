//! Run manifests: every command embeds one in its output, and `replay`
//! re-executes a command from one. The `params` object holds the original
//! flag values verbatim (probabilities as the strings the user typed, so
//! exact inputs stay exact through a replay); output destinations are
//! deliberately not part of a manifest.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub params: serde_json::Value,
    /// Numeric path that produced the values: "rational", "float", "log10",
    /// or "sampling".
    pub backend: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prng: Option<PrngStamp>,
    pub version: String,
}

/// Generator provenance for sampling commands.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrngStamp {
    pub algorithm: String,
    pub seeds: Vec<u64>,
    pub stream_chunk: u64,
}

impl RunManifest {
    pub fn new(command: &str, params: serde_json::Value, backend: &str) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            params,
            backend: backend.to_string(),
            prng: None,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn with_seeds(mut self, seeds: Vec<u64>) -> RunManifest {
        self.prng = Some(PrngStamp {
            algorithm: bornsim_core::sampler::PRNG_ALGORITHM.to_string(),
            seeds,
            stream_chunk: bornsim_core::sampler::STREAM_CHUNK,
        });
        self
    }
}
