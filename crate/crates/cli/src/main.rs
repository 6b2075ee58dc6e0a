//! `bornsim`: command-line front end over the replicated-measurement
//! statistics library. Frequency moments, confusion tails with analytic
//! bounds, figure data, decoherence readout, and reproducible branch
//! sampling with statistical tests.
//!
//! Every command embeds a run manifest in its output; `replay` re-executes
//! one and reproduces the artifact (exactly on the rational backend,
//! bit-identically on the float backend). `BORNSIM_THREADS` caps internal
//! parallelism; exit codes: 0 success, 2 usage/domain, 3 capacity,
//! 4 failed statistical test.

use clap::Parser;

mod commands;
mod error;
mod manifest;
mod render;

use error::CliResult;

#[derive(Parser)]
#[command(
    name = "bornsim",
    version,
    about = "Replicated-measurement statistics: exact tails, bounds, decoherence, branch sampling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Frequency moments: variance for two outcomes, covariance matrix beyond
    Freq(commands::FreqArgs),
    /// Confusion tail mass and its analytic bounds
    Confusion(commands::ConfusionArgs),
    /// CSV of count-class masses, frequency eigenvalues, confusion indicators
    Fig1(commands::Fig1Args),
    /// Concentration bound for N and epsilon given as powers of ten
    Huge(commands::HugeArgs),
    /// Replicated measurement, dephasing, and pointer-class readout
    Decohere(commands::DecohereArgs),
    /// Draw sphere patterns from a branch into a histogram file
    Sample(commands::SampleArgs),
    /// Check a sampled histogram against the per-pattern Born products
    PatternTest(commands::PatternTestArgs),
    /// Two-sample chi-square homogeneity test between branches
    CompareBranches(commands::CompareArgs),
    /// Re-execute a command from a previously emitted manifest
    Replay(commands::ReplayArgs),
}

fn dispatch(cli: Cli) -> CliResult<i32> {
    let (output, dest) = match cli.command {
        Command::Freq(a) => (commands::run_freq(&a)?, a.out),
        Command::Confusion(a) => (commands::run_confusion(&a)?, a.out),
        Command::Fig1(a) => (commands::run_fig1(&a)?, a.out),
        Command::Huge(a) => (commands::run_huge(&a)?, a.out),
        Command::Decohere(a) => (commands::run_decohere(&a)?, a.out),
        Command::Sample(a) => (commands::run_sample(&a)?, a.out),
        Command::PatternTest(a) => (commands::run_pattern_test(&a)?, a.out),
        Command::CompareBranches(a) => (commands::run_compare_branches(&a)?, a.out),
        Command::Replay(a) => (commands::run_from_manifest(&commands::load_manifest(&a.manifest)?)?, a.out),
    };
    commands::finish(output, dest.as_deref())
}

/// Applies BORNSIM_THREADS before any rayon pool exists. Unset means
/// machine parallelism.
fn configure_threads() -> Result<(), String> {
    let raw = match std::env::var("BORNSIM_THREADS") {
        Ok(v) => v,
        Err(std::env::VarError::NotPresent) => return Ok(()),
        Err(e) => return Err(format!("BORNSIM_THREADS: {e}")),
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t >= 1)
        .ok_or(format!("BORNSIM_THREADS must be a positive integer, got '{raw}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() {
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        std::process::exit(2);
    }
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
