//! Flag parsing and output rendering shared by the commands.
//!
//! Probability and epsilon flags accept either `num/den` (kept exact) or a
//! decimal literal (float backend). JSON mass values always carry linear and
//! log10 forms; `--exact` adds a `rational` field where one exists, and
//! `--log10` strips the output down to the log form.

use std::io::Write;
use std::path::Path;

use num::BigRational;
use serde_json::{Map, Value};

use bornsim_core::hilbert::OutcomeSpec;
use bornsim_core::measure::ApparatusModel;
use bornsim_core::numeric::{rational_to_f64, Mass};
use bornsim_core::tail::{ConfusionParams, Regime};

use crate::error::{CliError, CliResult};

enum ProbToken {
    Rational(BigRational),
    Float(f64),
}

fn parse_prob_token(s: &str) -> CliResult<ProbToken> {
    let t = s.trim();
    if t.is_empty() {
        return Err(CliError::usage("empty probability value"));
    }
    if t.contains('/') {
        let r: BigRational = t
            .parse()
            .map_err(|e| CliError::usage(format!("bad rational '{t}': {e}")))?;
        return Ok(ProbToken::Rational(r));
    }
    // Bare integers count as rationals too, so `--p 0` and `--p 1` stay exact.
    if let Ok(r) = t.parse::<BigRational>() {
        return Ok(ProbToken::Rational(r));
    }
    let v: f64 = t
        .parse()
        .map_err(|e| CliError::usage(format!("bad probability '{t}': {e}")))?;
    Ok(ProbToken::Float(v))
}

/// Builds the outcome distribution from `--p` / `--probs` (exactly one).
/// An all-rational list keeps the exact backend; any decimal member drops
/// the whole spec to floats.
pub fn outcome_from_flags(p: &Option<String>, probs: &Option<String>) -> CliResult<OutcomeSpec> {
    match (p, probs) {
        (Some(_), Some(_)) => Err(CliError::usage("--p and --probs are mutually exclusive")),
        (None, None) => Err(CliError::usage("one of --p or --probs is required")),
        (Some(s), None) => match parse_prob_token(s)? {
            ProbToken::Rational(r) => Ok(OutcomeSpec::binary_rational(r)?),
            ProbToken::Float(v) => Ok(OutcomeSpec::binary(v)?),
        },
        (None, Some(list)) => {
            let tokens: Vec<ProbToken> =
                list.split(',').map(parse_prob_token).collect::<CliResult<_>>()?;
            if tokens.iter().all(|t| matches!(t, ProbToken::Rational(_))) {
                let rs = tokens
                    .into_iter()
                    .map(|t| match t {
                        ProbToken::Rational(r) => r,
                        ProbToken::Float(_) => unreachable!(),
                    })
                    .collect();
                Ok(OutcomeSpec::from_rational_probs(rs)?)
            } else {
                let fs: Vec<f64> = tokens
                    .iter()
                    .map(|t| match t {
                        ProbToken::Rational(r) => rational_to_f64(r),
                        ProbToken::Float(v) => *v,
                    })
                    .collect();
                Ok(OutcomeSpec::from_probs(&fs)?)
            }
        }
    }
}

pub fn epsilon_from_flag(s: &str) -> CliResult<ConfusionParams> {
    match parse_prob_token(s)? {
        ProbToken::Rational(r) => Ok(ConfusionParams::from_rational(r)?),
        ProbToken::Float(v) => Ok(ConfusionParams::new(v)?),
    }
}

/// Apparatus mixture from `--microstates` and optional `--ready-probs`.
/// Without an explicit list the mixture is uniform (exactly 1/count each).
pub fn apparatus_from_flags(
    microstates: usize,
    ready_probs: &Option<String>,
) -> CliResult<ApparatusModel> {
    if microstates == 0 {
        return Err(CliError::usage("--microstates must be >= 1"));
    }
    match ready_probs {
        None => {
            let share = BigRational::new(1.into(), (microstates as i64).into());
            Ok(ApparatusModel::from_rational_probs(vec![share; microstates])?)
        }
        Some(list) => {
            let tokens: Vec<ProbToken> =
                list.split(',').map(parse_prob_token).collect::<CliResult<_>>()?;
            if tokens.len() != microstates {
                return Err(CliError::usage(format!(
                    "--ready-probs lists {} values but --microstates is {}",
                    tokens.len(),
                    microstates
                )));
            }
            if tokens.iter().all(|t| matches!(t, ProbToken::Rational(_))) {
                let rs = tokens
                    .into_iter()
                    .map(|t| match t {
                        ProbToken::Rational(r) => r,
                        ProbToken::Float(_) => unreachable!(),
                    })
                    .collect();
                Ok(ApparatusModel::from_rational_probs(rs)?)
            } else {
                let fs: Vec<f64> = tokens
                    .iter()
                    .map(|t| match t {
                        ProbToken::Rational(r) => rational_to_f64(r),
                        ProbToken::Float(v) => *v,
                    })
                    .collect();
                Ok(ApparatusModel::from_probs(&fs)?)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// JSON values
// ---------------------------------------------------------------------------

/// JSON number, or null when the value has no finite representation
/// (JSON cannot carry inf/nan).
pub fn num_or_null(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

pub fn rational_str(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// A probability mass as a JSON object: `linear` and `log10` forms, plus
/// `rational` under `--exact` when the mass is exactly known. `log10_only`
/// (the `--log10` flag) drops everything but the log form.
pub fn mass_json(m: &Mass, want_rational: bool, log10_only: bool) -> Value {
    let mut obj = Map::new();
    if !log10_only {
        if want_rational {
            if let Some(r) = m.as_exact() {
                obj.insert("rational".into(), Value::String(rational_str(r)));
            }
        }
        obj.insert("linear".into(), num_or_null(m.to_f64()));
    }
    obj.insert("log10".into(), num_or_null(m.log10()));
    Value::Object(obj)
}

pub fn epsilon_json(params: &ConfusionParams, want_rational: bool) -> Value {
    let mut obj = Map::new();
    if want_rational {
        obj.insert("rational".into(), Value::String(rational_str(params.epsilon_exact())));
    }
    obj.insert("linear".into(), num_or_null(params.epsilon()));
    Value::Object(obj)
}

pub fn regime_str(regime: Regime) -> &'static str {
    match regime {
        Regime::Rational => "rational",
        Regime::Float => "float",
        Regime::LogDomain => "log10",
    }
}

// ---------------------------------------------------------------------------
// Output transport
// ---------------------------------------------------------------------------

/// CSV float format: 17 significant digits, enough to round-trip any f64.
pub fn csv_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn pretty_bytes(value: &Value) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("value serializes");
    bytes.push(b'\n');
    bytes
}

/// Writes via a temp file in the target directory plus an atomic rename, so
/// a crash never leaves a half-written output behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

pub fn emit_json(value: &Value, out: Option<&Path>) -> CliResult<()> {
    let bytes = pretty_bytes(value);
    match out {
        Some(path) => write_atomic(path, &bytes),
        None => {
            std::io::stdout().write_all(&bytes)?;
            Ok(())
        }
    }
}
