//! `epr` command line: `run`, `verify` and `sweep`.
//!
//! Exit codes: 0 when every check passes, 1 when a statistical or algebraic
//! check fails, 2 on usage or configuration errors. Flags override config
//! file fields, which override defaults.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::run_and_verify;
use crate::config::{parse_config_path, parse_config_str, ConfigError};
use crate::invariants::algebraic_suite;
use crate::protocol::ChainConfig;
use crate::report::{write_trajectories_csv, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Caps shot-level parallelism.
pub const THREADS_ENV: &str = "EPR_SIM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "epr", version, about = "Two-stage measurement chain simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one configuration and write its manifest.
    Run(RunArgs),
    /// Check the algebraic invariants without sampling.
    Verify(VerifyArgs),
    /// Run several configurations.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct Overrides {
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    depth: Option<usize>,
    /// Override thresholds.sigma (0 forces statistical checks to fail).
    #[arg(long, hide = true)]
    sigma: Option<f64>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Manifest destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-shot CSV destination.
    #[arg(long)]
    trajectories: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 2)]
    dimension: usize,
    #[arg(long, default_value_t = 1)]
    depth: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the check list as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Config file; repeat for each configuration.
    #[arg(long, required = true)]
    config: Vec<PathBuf>,
    /// JSON array of manifests; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<crate::error::Error> for Failure {
    fn from(e: crate::error::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_command<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let pool = match thread_pool() {
        Ok(p) => p,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    let result = pool.install(|| match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Sweep(args) => cmd_sweep(args),
    });
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_CHECK_FAILED,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, Failure> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure::Usage(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Failure::Usage(format!("cannot start thread pool: {e}")))
}

fn load_config(path: &Path, o: &Overrides) -> Result<ChainConfig, Failure> {
    let base = parse_config_path(path)?;
    let mut b = base.to_builder();
    if let Some(s) = o.shots {
        b = b.shots(s);
    }
    if let Some(s) = o.seed {
        b = b.seed(s);
    }
    if let Some(d) = o.depth {
        b = b.chain_depth(d);
    }
    if let Some(sigma) = o.sigma {
        let mut t = base.thresholds();
        t.sigma = sigma;
        b = b.thresholds(t);
    }
    Ok(b.build()?)
}

fn run_one(config: &ChainConfig, trajectories_csv: Option<&Path>) -> Result<RunManifest, Failure> {
    let (trajectories, report) = run_and_verify(config)?;
    if let Some(path) = trajectories_csv {
        let file = File::create(path)
            .map_err(|e| Failure::Usage(format!("cannot write `{}`: {e}", path.display())))?;
        write_trajectories_csv(BufWriter::new(file), &trajectories)
            .map_err(|e| Failure::Usage(format!("cannot write `{}`: {e}", path.display())))?;
    }
    Ok(RunManifest::new(config, &trajectories, report)?)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, format!("{text}\n"))
            .map_err(|e| Failure::Usage(format!("cannot write `{}`: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}").map_err(|e| Failure::Usage(e.to_string()))
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<bool, Failure> {
    let config = load_config(&args.config, &args.overrides)?;
    let manifest = run_one(&config, args.trajectories.as_deref())?;
    emit(args.out.as_deref(), &manifest.to_json())?;
    eprint!("{}", manifest.summary());
    Ok(manifest.passed())
}

fn cmd_verify(args: VerifyArgs) -> Result<bool, Failure> {
    // validates dimension, depth and the size cap
    let probe = format!(
        r#"{{"dimension":{d},"amplitudes":[{amps}],"chain_depth":{m}}}"#,
        d = args.dimension,
        m = args.depth,
        amps = std::iter::once(r#"{"re":1,"im":0}"#)
            .chain(std::iter::repeat_n(r#"{"re":0,"im":0}"#, args.dimension.saturating_sub(1)))
            .collect::<Vec<_>>()
            .join(",")
    );
    parse_config_str(&probe)?;
    let checks = algebraic_suite(args.dimension, args.depth, args.seed)?;
    for c in &checks {
        eprintln!(
            "[{}] {:<28} {:.3e} (tol {:.0e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance
        );
    }
    if let Some(path) = args.out.as_deref() {
        emit(Some(path), &serde_json::to_string_pretty(&checks).expect("checks serialize"))?;
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn cmd_sweep(args: SweepArgs) -> Result<bool, Failure> {
    let mut manifests = Vec::with_capacity(args.config.len());
    for path in &args.config {
        let config = load_config(path, &args.overrides)?;
        let m = run_one(&config, None)?;
        eprintln!("{}:", path.display());
        eprint!("{}", m.summary());
        manifests.push(m);
    }
    let json = serde_json::to_string_pretty(&manifests).expect("manifests serialize");
    emit(args.out.as_deref(), &json)?;
    Ok(manifests.iter().all(RunManifest::passed))
}
