//! One function per subcommand. Each returns a [`RunOutput`]: the JSON body
//! (manifest embedded), whether a requested statistical test passed, and
//! where the artifact goes by default. Flag structs double as the manifest
//! `params` payload, which is what makes `replay` a straight re-dispatch.

use std::fs;
use std::path::{Path, PathBuf};

use num::{BigRational, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use bornsim_core::hilbert::{self, CountVector, ReplicaSpec};
use bornsim_core::measure::{self, DensityBackend};
use bornsim_core::numeric::Mass;
use bornsim_core::sampler::{self, BranchDecision, PatternHistogram, SamplerConfig};
use bornsim_core::tail;
use bornsim_core::Caps;

use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::render::{
    apparatus_from_flags, csv_float, emit_json, epsilon_from_flag, epsilon_json, mass_json,
    num_or_null, outcome_from_flags, pretty_bytes, rational_str, regime_str, write_atomic,
};

/// Dense density matrices are only worth building at demonstration sizes;
/// past this entry count the evolve step falls back to the class-diagonal
/// path, which stays exact for outcome statistics at any N.
const DECOHERE_DENSE_ENTRY_CAP: u64 = 1 << 20;

pub struct RunOutput {
    pub json: Value,
    pub stat_pass: bool,
    pub artifact: Artifact,
}

pub enum Artifact {
    /// JSON to stdout, or to `--out` when given.
    Json,
    /// JSON written to a file so later commands can read it back.
    JsonFile(&'static str),
    /// CSV body written to a file; the JSON summary goes to stdout.
    Csv { default: &'static str, body: String },
}

/// Writes the artifact and maps the statistical verdict to the exit code.
pub fn finish(out: RunOutput, dest: Option<&Path>) -> CliResult<i32> {
    match out.artifact {
        Artifact::Json => emit_json(&out.json, dest)?,
        Artifact::JsonFile(default) => {
            let path = dest.map(PathBuf::from).unwrap_or_else(|| PathBuf::from(default));
            write_atomic(&path, &pretty_bytes(&out.json))?;
        }
        Artifact::Csv { default, body } => {
            let path = dest.map(PathBuf::from).unwrap_or_else(|| PathBuf::from(default));
            write_atomic(&path, body.as_bytes())?;
            let mut json = out.json;
            if let Value::Object(o) = &mut json {
                o.insert("out".into(), Value::String(path.display().to_string()));
            }
            emit_json(&json, None)?;
        }
    }
    Ok(if out.stat_pass { 0 } else { 4 })
}

fn params_value<T: Serialize>(args: &T) -> CliResult<Value> {
    Ok(serde_json::to_value(args)?)
}

fn spec_backend(spec: &ReplicaSpec) -> &'static str {
    if spec.outcome().is_exact() {
        "rational"
    } else {
        "float"
    }
}

// ---------------------------------------------------------------------------
// freq
// ---------------------------------------------------------------------------

#[derive(clap::Args, Serialize, Deserialize)]
pub struct FreqArgs {
    /// Up-outcome probability for two outcomes; decimal or num/den
    #[arg(long)]
    pub p: Option<String>,
    /// Comma-separated outcome probabilities; decimal or num/den
    #[arg(long, value_name = "LIST")]
    pub probs: Option<String>,
    /// Number of replicas N
    #[arg(long)]
    pub n: u64,
    /// Add num/den fields for exactly known values
    #[arg(long)]
    pub exact: bool,
    /// Write the JSON here instead of stdout
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

pub fn run_freq(args: &FreqArgs) -> CliResult<RunOutput> {
    let spec = ReplicaSpec::new(outcome_from_flags(&args.p, &args.probs)?, args.n)?;
    let mut body = Map::new();
    body.insert("m".into(), spec.m().into());
    body.insert("n".into(), args.n.into());
    if spec.m() == 2 {
        let v = tail::freq_variance(&spec)?;
        body.insert("variance".into(), mass_json(&v, args.exact, false));
    } else {
        let cov = tail::covariance_matrix(&spec);
        let m = cov.m();
        let rows: Vec<Value> = (0..m)
            .map(|i| (0..m).map(|j| num_or_null(cov.entry(i, j).to_f64())).collect())
            .collect();
        body.insert("covariance".into(), Value::Array(rows));
        if args.exact && cov.row_major().iter().all(Mass::is_exact) {
            let rows: Vec<Value> = (0..m)
                .map(|i| {
                    (0..m)
                        .map(|j| {
                            Value::String(rational_str(cov.entry(i, j).as_exact().unwrap()))
                        })
                        .collect()
                })
                .collect();
            body.insert("covariance_rational".into(), Value::Array(rows));
        }
    }
    let manifest = RunManifest::new("freq", params_value(args)?, spec_backend(&spec));
    body.insert("manifest".into(), serde_json::to_value(&manifest)?);
    Ok(RunOutput { json: Value::Object(body), stat_pass: true, artifact: Artifact::Json })
}

// ---------------------------------------------------------------------------
// confusion
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Hoeffding,
    Gauss,
    All,
}

#[derive(clap::Args, Serialize, Deserialize)]
pub struct ConfusionArgs {
    /// Up-outcome probability for two outcomes; decimal or num/den
    #[arg(long)]
    pub p: Option<String>,
    /// Comma-separated outcome probabilities; decimal or num/den
    #[arg(long, value_name = "LIST")]
    pub probs: Option<String>,
    /// Frequency tolerance; decimal or num/den
    #[arg(long)]
    pub epsilon: String,
    /// Number of replicas N
    #[arg(long)]
    pub n: u64,
    /// exact tail, a single bound, or everything
    #[arg(long, value_enum, default_value_t = Mode::All)]
    pub mode: Mode,
    /// Emit only the log10 form of each mass
    #[arg(long)]
    pub log10: bool,
    /// Add num/den fields for exactly known values
    #[arg(long)]
    pub exact: bool,
    /// Write the JSON here instead of stdout
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

pub fn run_confusion(args: &ConfusionArgs) -> CliResult<RunOutput> {
    let spec = ReplicaSpec::new(outcome_from_flags(&args.p, &args.probs)?, args.n)?;
    let params = epsilon_from_flag(&args.epsilon)?;
    let want_exact = matches!(args.mode, Mode::Exact | Mode::All);
    let want_hoeffding = matches!(args.mode, Mode::Hoeffding | Mode::All);
    let want_gauss = matches!(args.mode, Mode::Gauss | Mode::All);

    let result = if want_exact {
        tail::confusion_norm_exact(&spec, &params, &Caps::default())?
    } else {
        tail::confusion_bounds(&spec, &params)
    };
    let backend = if want_exact { regime_str(result.regime) } else { "float" };

    let mut body = Map::new();
    body.insert("m".into(), spec.m().into());
    body.insert("n".into(), args.n.into());
    body.insert("epsilon".into(), epsilon_json(&params, args.exact));
    body.insert("mode".into(), serde_json::to_value(args.mode)?);
    if want_exact {
        let exact = result.exact.as_ref().expect("exact path fills the tail");
        body.insert("exact".into(), mass_json(exact, args.exact, args.log10));
        body.insert(
            "log10_exact".into(),
            num_or_null(result.log10_exact.unwrap_or(f64::NAN)),
        );
        body.insert("regime".into(), regime_str(result.regime).into());
    }
    if want_hoeffding {
        body.insert("hoeffding".into(), mass_json(&result.hoeffding, args.exact, args.log10));
    }
    if want_gauss {
        body.insert("gaussian".into(), mass_json(&result.gaussian, args.exact, args.log10));
        let limit = match &result.gaussian_limit {
            Some(m) => mass_json(m, args.exact, args.log10),
            None => Value::Null,
        };
        body.insert("gaussian_limit".into(), limit);
    }
    let manifest = RunManifest::new("confusion", params_value(args)?, backend);
    body.insert("manifest".into(), serde_json::to_value(&manifest)?);
    Ok(RunOutput { json: Value::Object(body), stat_pass: true, artifact: Artifact::Json })
}

// ---------------------------------------------------------------------------
// fig1
// ---------------------------------------------------------------------------

#[derive(clap::Args, Serialize, Deserialize)]
pub struct Fig1Args {
    /// Up-outcome probability; decimal or num/den
    #[arg(long, default_value = "1/3")]
    pub p: String,
    /// Number of replicas N
    #[arg(long, default_value_t = 500)]
    pub n: u64,
    /// Frequency tolerance; decimal or num/den
    #[arg(long, default_value = "1/10")]
    pub epsilon: String,
    /// Print f and mass columns as rationals (needs a rational --p)
    #[arg(long)]
    pub exact: bool,
    /// CSV destination (default fig1.csv)
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

pub fn run_fig1(args: &Fig1Args) -> CliResult<RunOutput> {
    let p = Some(args.p.clone());
    let spec = ReplicaSpec::new(outcome_from_flags(&p, &None)?, args.n)?;
    let params = epsilon_from_flag(&args.epsilon)?;
    if args.exact && !spec.outcome().is_exact() {
        return Err(CliError::usage("--exact output needs a rational --p"));
    }

    let n = args.n;
    let zero = if spec.outcome().is_exact() {
        Mass::Exact(BigRational::zero())
    } else {
        Mass::Float(0.0)
    };
    let mut masses = vec![zero; n as usize + 1];
    for (cv, mass) in hilbert::class_mass_table(&spec, &Caps::default())? {
        masses[cv.counts()[1] as usize] = mass;
    }

    let mut body = String::from("f,binomial_mass,frequency_eigenvalue,confusion_indicator\n");
    let mut mass_sum = 0.0f64;
    for (k, mass) in masses.iter().enumerate() {
        let cv = CountVector::new(vec![n - k as u64, k as u64])?;
        let confused = tail::confusion_indicator(&spec, &params, &cv)?;
        let f = if args.exact {
            format!("{k}/{n}")
        } else {
            csv_float(k as f64 / n as f64)
        };
        let mass_col = if args.exact {
            rational_str(mass.as_exact().expect("rational backend"))
        } else {
            csv_float(mass.to_f64())
        };
        mass_sum += mass.to_f64();
        body.push_str(&format!("{f},{mass_col},{f},{}\n", u8::from(confused)));
    }

    let manifest = RunManifest::new("fig1", params_value(args)?, spec_backend(&spec));
    let mut json = Map::new();
    json.insert("rows".into(), (n + 1).into());
    json.insert("mass_sum".into(), num_or_null(mass_sum));
    json.insert("manifest".into(), serde_json::to_value(&manifest)?);
    Ok(RunOutput {
        json: Value::Object(json),
        stat_pass: true,
        artifact: Artifact::Csv { default: "fig1.csv", body },
    })
}

// ---------------------------------------------------------------------------
// huge
// ---------------------------------------------------------------------------

#[derive(clap::Args, Serialize, Deserialize)]
pub struct HugeArgs {
    /// log10 of the replica count (N = 10^this); any f64 literal
    #[arg(long)]
    pub log10_n: String,
    /// log10 of the tolerance (epsilon = 10^this); -inf means epsilon = 0
    #[arg(long, allow_hyphen_values = true)]
    pub log10_epsilon: String,
    /// Write the JSON here instead of stdout
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

fn parse_f64_flag(name: &str, s: &str) -> CliResult<f64> {
    s.trim()
        .parse()
        .map_err(|e| CliError::usage(format!("{name} must be a float, got '{s}': {e}")))
}

pub fn run_huge(args: &HugeArgs) -> CliResult<RunOutput> {
    let log10_n = parse_f64_flag("--log10-n", &args.log10_n)?;
    let log10_epsilon = parse_f64_flag("--log10-epsilon", &args.log10_epsilon)?;
    let bound = tail::log10_bound_huge_n(log10_n, log10_epsilon)?;

    let mut b = Map::new();
    b.insert("coefficient".into(), num_or_null(bound.mantissa()));
    b.insert("exp10".into(), bound.exp10().into());
    b.insert("sci".into(), format!("{}e{}", bound.mantissa(), bound.exp10()).into());
    // null once the bound's own exponent leaves the f64 range
    let linear = match bound.to_f64_checked() {
        Some(v) => num_or_null(v),
        None => Value::Null,
    };
    b.insert("linear".into(), linear);

    let manifest = RunManifest::new("huge", params_value(args)?, "log10");
    let mut body = Map::new();
    body.insert("log10_n".into(), num_or_null(log10_n));
    body.insert("log10_epsilon".into(), num_or_null(log10_epsilon));
    body.insert("log10_bound".into(), Value::Object(b));
    body.insert("manifest".into(), serde_json::to_value(&manifest)?);
    Ok(RunOutput { json: Value::Object(body), stat_pass: true, artifact: Artifact::Json })
}

// ---------------------------------------------------------------------------
// decohere
// ---------------------------------------------------------------------------

#[derive(clap::Args, Serialize, Deserialize)]
pub struct DecohereArgs {
    /// Up-outcome probability; decimal or num/den
    #[arg(long)]
    pub p: String,
    /// Number of replicas N
    #[arg(long)]
    pub n: u64,
    /// Apparatus ready microstates
    #[arg(long, default_value_t = 1)]
    pub microstates: usize,
    /// Microstate probabilities (default: uniform); decimal or num/den
    #[arg(long, value_name = "LIST")]
    pub ready_probs: Option<String>,
    /// Frequency tolerance; decimal or num/den
    #[arg(long)]
    pub epsilon: String,
    /// Add num/den fields for exactly known values
    #[arg(long)]
    pub exact: bool,
    /// Write the JSON here instead of stdout
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

pub fn run_decohere(args: &DecohereArgs) -> CliResult<RunOutput> {
    let p = Some(args.p.clone());
    let spec = ReplicaSpec::new(outcome_from_flags(&p, &None)?, args.n)?;
    let params = epsilon_from_flag(&args.epsilon)?;
    let apparatus = apparatus_from_flags(args.microstates, &args.ready_probs)?;
    let caps = Caps { dense_entry_cap: DECOHERE_DENSE_ENTRY_CAP, ..Caps::default() };

    let rho = measure::evolve_replicated_measurement(&spec, &apparatus, DensityBackend::Auto, &caps)?;
    let rho = measure::decohere(&rho);
    let report = measure::pointer_class_frequencies(&rho, &params)?;
    let backend = if report.within_mass.is_exact() { "rational" } else { "float" };

    let classes: Vec<Value> = report
        .classes
        .iter()
        .map(|entry| {
            let mut c = Map::new();
            c.insert("counts".into(), serde_json::to_value(entry.counts.counts()).unwrap());
            c.insert("mass".into(), mass_json(&entry.mass, args.exact, false));
            c.insert("within".into(), entry.within.into());
            Value::Object(c)
        })
        .collect();

    let mut body = Map::new();
    body.insert("n".into(), args.n.into());
    body.insert("microstates".into(), apparatus.microstate_count().into());
    body.insert("epsilon".into(), epsilon_json(&params, args.exact));
    body.insert(
        "representation".into(),
        if rho.is_dense() { "dense" } else { "class" }.into(),
    );
    body.insert("trace".into(), mass_json(&rho.trace(), args.exact, false));
    body.insert(
        "within_epsilon_mass".into(),
        mass_json(&report.within_mass, args.exact, false),
    );
    body.insert("confused_mass".into(), mass_json(&report.confused_mass, args.exact, false));
    body.insert("classes".into(), Value::Array(classes));
    let manifest = RunManifest::new("decohere", params_value(args)?, backend);
    body.insert("manifest".into(), serde_json::to_value(&manifest)?);
    Ok(RunOutput { json: Value::Object(body), stat_pass: true, artifact: Artifact::Json })
}

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

#[derive(clap::Args, Serialize, Deserialize)]
pub struct SampleArgs {
    /// Up-outcome probability; decimal or num/den
    #[arg(long)]
    pub p: Option<String>,
    /// Comma-separated outcome probabilities; decimal or num/den
    #[arg(long, value_name = "LIST")]
    pub probs: Option<String>,
    /// Sites per sphere M
    #[arg(long)]
    pub m_sphere: u32,
    /// Number of spheres K
    #[arg(long)]
    pub k: u64,
    /// PRNG seed
    #[arg(long)]
    pub seed: u64,
    /// Histogram destination (default sample.json)
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

pub fn run_sample(args: &SampleArgs) -> CliResult<RunOutput> {
    let outcome = outcome_from_flags(&args.p, &args.probs)?;
    let config =
        SamplerConfig::new(outcome.clone(), args.m_sphere, args.k, args.seed, &Caps::default())?;
    let hist = sampler::sample_branch_spheres(&config);

    let manifest =
        RunManifest::new("sample", params_value(args)?, "sampling").with_seeds(vec![args.seed]);
    let mut body = Map::new();
    body.insert("m".into(), hist.m().into());
    body.insert("m_sphere".into(), args.m_sphere.into());
    body.insert("k".into(), args.k.into());
    body.insert("seed".into(), args.seed.into());
    body.insert("probabilities".into(), serde_json::to_value(outcome.probabilities())?);
    body.insert("histogram".into(), serde_json::to_value(hist.counts())?);
    body.insert("manifest".into(), serde_json::to_value(&manifest)?);
    Ok(RunOutput {
        json: Value::Object(body),
        stat_pass: true,
        artifact: Artifact::JsonFile("sample.json"),
    })
}

// ---------------------------------------------------------------------------
// pattern-test
// ---------------------------------------------------------------------------

#[derive(clap::Args, Serialize, Deserialize)]
pub struct PatternTestArgs {
    /// Histogram file written by `sample`
    #[arg(long, default_value = "sample.json")]
    pub input: String,
    /// Per-pattern z-score threshold
    #[arg(long)]
    pub z: f64,
    /// Write the JSON here instead of stdout
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Deserialize)]
struct SampleFile {
    manifest: RunManifest,
    m: usize,
    m_sphere: u32,
    histogram: Vec<u64>,
}

fn load_sample_file(path: &str) -> CliResult<(SampleFile, PatternHistogram)> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read sample file '{path}': {e}")))?;
    let file: SampleFile = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("'{path}' is not a sample file: {e}")))?;
    if file.manifest.command != "sample" {
        return Err(CliError::usage(format!(
            "'{path}' was written by '{}', expected 'sample'",
            file.manifest.command
        )));
    }
    let hist = PatternHistogram::from_parts(file.m, file.m_sphere, file.histogram.clone())?;
    Ok((file, hist))
}

fn pattern_string(digits: &[usize], m: usize) -> String {
    if m <= 10 {
        digits.iter().map(|d| char::from(b'0' + *d as u8)).collect()
    } else {
        digits.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("-")
    }
}

pub fn run_pattern_test(args: &PatternTestArgs) -> CliResult<RunOutput> {
    let (file, hist) = load_sample_file(&args.input)?;
    let sample_args: SampleArgs = serde_json::from_value(file.manifest.params.clone())
        .map_err(|e| CliError::usage(format!("sample manifest params unreadable: {e}")))?;
    let outcome = outcome_from_flags(&sample_args.p, &sample_args.probs)?;
    let report = sampler::pattern_frequency_test(&hist, &outcome, args.z)?;

    let flags: Vec<Value> = report
        .flagged
        .iter()
        .map(|flag| {
            let mut f = Map::new();
            f.insert("index".into(), flag.index.into());
            f.insert(
                "pattern".into(),
                pattern_string(&hist.pattern_digits(flag.index), hist.m()).into(),
            );
            f.insert("count".into(), flag.count.into());
            f.insert("expected".into(), num_or_null(flag.expected));
            f.insert("z".into(), num_or_null(flag.z));
            Value::Object(f)
        })
        .collect();

    // carry the sample's generator stamp through so provenance survives
    let manifest = {
        let mut m = RunManifest::new("pattern-test", params_value(args)?, "sampling");
        m.prng = file.manifest.prng.clone();
        m
    };
    let mut body = Map::new();
    body.insert("z_threshold".into(), num_or_null(report.z_threshold));
    body.insert("pattern_count".into(), report.pattern_count.into());
    body.insert("flag_count".into(), report.flagged.len().into());
    body.insert("allowed_flags".into(), num_or_null(report.allowed_flags));
    body.insert("tail_mass".into(), num_or_null(report.tail_mass));
    body.insert("pass".into(), report.pass.into());
    body.insert("flags".into(), Value::Array(flags));
    body.insert("manifest".into(), serde_json::to_value(&manifest)?);
    Ok(RunOutput { json: Value::Object(body), stat_pass: report.pass, artifact: Artifact::Json })
}

// ---------------------------------------------------------------------------
// compare-branches
// ---------------------------------------------------------------------------

#[derive(clap::Args, Serialize, Deserialize)]
pub struct CompareArgs {
    /// Branch A up-outcome probability; decimal or num/den
    #[arg(long, default_value = "1/3")]
    pub p: Option<String>,
    /// Branch A outcome probabilities; decimal or num/den
    #[arg(long, value_name = "LIST")]
    pub probs: Option<String>,
    /// Branch B up-outcome probability (default: same as branch A)
    #[arg(long)]
    pub p_b: Option<String>,
    /// Branch B outcome probabilities (default: same as branch A)
    #[arg(long, value_name = "LIST")]
    pub probs_b: Option<String>,
    /// Sites per sphere M
    #[arg(long, default_value_t = 8)]
    pub m_sphere: u32,
    /// Spheres per branch K
    #[arg(long, default_value_t = 100_000)]
    pub k: u64,
    /// Branch A seed
    #[arg(long)]
    pub seed_a: u64,
    /// Branch B seed
    #[arg(long)]
    pub seed_b: u64,
    /// Chi-square significance level
    #[arg(long, default_value_t = 0.01)]
    pub significance: f64,
    /// Write the JSON here instead of stdout
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

pub fn run_compare_branches(args: &CompareArgs) -> CliResult<RunOutput> {
    let caps = Caps::default();
    let outcome_a = outcome_from_flags(&args.p, &args.probs)?;
    let outcome_b = if args.p_b.is_none() && args.probs_b.is_none() {
        outcome_a.clone()
    } else {
        outcome_from_flags(&args.p_b, &args.probs_b)?
    };
    let hist_a = sampler::sample_branch_spheres(&SamplerConfig::new(
        outcome_a,
        args.m_sphere,
        args.k,
        args.seed_a,
        &caps,
    )?);
    let hist_b = sampler::sample_branch_spheres(&SamplerConfig::new(
        outcome_b,
        args.m_sphere,
        args.k,
        args.seed_b,
        &caps,
    )?);
    let report = sampler::branch_indistinguishability_test(&hist_a, &hist_b, args.significance)?;
    let indistinguishable = report.decision == BranchDecision::Indistinguishable;

    let manifest = RunManifest::new("compare-branches", params_value(args)?, "sampling")
        .with_seeds(vec![args.seed_a, args.seed_b]);
    let mut body = Map::new();
    body.insert("m_sphere".into(), args.m_sphere.into());
    body.insert("k".into(), args.k.into());
    body.insert("seed_a".into(), args.seed_a.into());
    body.insert("seed_b".into(), args.seed_b.into());
    body.insert("significance".into(), num_or_null(report.significance));
    body.insert("statistic".into(), num_or_null(report.statistic));
    body.insert("dof".into(), report.dof.into());
    body.insert("critical".into(), num_or_null(report.critical));
    body.insert("cells".into(), report.cells.into());
    body.insert(
        "decision".into(),
        if indistinguishable { "indistinguishable" } else { "distinguishable" }.into(),
    );
    body.insert("manifest".into(), serde_json::to_value(&manifest)?);
    Ok(RunOutput {
        json: Value::Object(body),
        stat_pass: indistinguishable,
        artifact: Artifact::Json,
    })
}

// ---------------------------------------------------------------------------
// replay
// ---------------------------------------------------------------------------

#[derive(clap::Args)]
pub struct ReplayArgs {
    /// Output file of a previous run, or a bare manifest object
    #[arg(long)]
    pub manifest: PathBuf,
    /// Destination override for the replayed artifact
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn load_manifest(path: &Path) -> CliResult<RunManifest> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read '{}': {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("'{}' is not JSON: {e}", path.display())))?;
    let manifest = value.get("manifest").cloned().unwrap_or(value);
    serde_json::from_value(manifest)
        .map_err(|e| CliError::usage(format!("'{}' holds no run manifest: {e}", path.display())))
}

pub fn run_from_manifest(man: &RunManifest) -> CliResult<RunOutput> {
    fn params<T: for<'de> Deserialize<'de>>(man: &RunManifest) -> CliResult<T> {
        serde_json::from_value(man.params.clone()).map_err(|e| {
            CliError::usage(format!("manifest params do not fit '{}': {e}", man.command))
        })
    }
    match man.command.as_str() {
        "freq" => run_freq(&params::<FreqArgs>(man)?),
        "confusion" => run_confusion(&params::<ConfusionArgs>(man)?),
        "fig1" => run_fig1(&params::<Fig1Args>(man)?),
        "huge" => run_huge(&params::<HugeArgs>(man)?),
        "decohere" => run_decohere(&params::<DecohereArgs>(man)?),
        "sample" => run_sample(&params::<SampleArgs>(man)?),
        "pattern-test" => run_pattern_test(&params::<PatternTestArgs>(man)?),
        "compare-branches" => run_compare_branches(&params::<CompareArgs>(man)?),
        other => Err(CliError::usage(format!("manifest names unknown command '{other}'"))),
    }
}
