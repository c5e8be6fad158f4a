//! Command-line driver and file formats for `fns-core`.
//!
//! [`run_command`] is the whole CLI: it parses arguments, resolves the
//! command's parameters from defaults, an optional JSON file and flags, runs
//! the pipeline, writes CSV reports plus a `manifest.json` into the output
//! directory and returns the process exit code.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod snapshot;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

pub use error::{LabError, SnapshotError};
pub use output::RunManifest;
pub use snapshot::{read_field_snapshot, write_field_snapshot, Snapshot};

use config::*;
use output::{config_digest, now_rfc3339, write_atomic, OutputSet};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fns", version, about = "Fractional Navier-Stokes analyticity laboratory")]
pub struct Cli {
    /// JSON file with the command's parameters; flags override it
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Seed for every random stream of the command
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; the pipelines run on one
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the fractional Navier-Stokes equations on the 2-D torus
    Simulate(SimulateArgs),
    /// Tabulate a heat or Oseen kernel
    KernelTable(KernelTableArgs),
    /// Weighted decay bounds of kernel derivatives
    VerifyKernels(VerifyKernelsArgs),
    /// L^p norms of heat-kernel derivatives and their time scaling
    VerifyLemma(VerifyLemmaArgs),
    /// Radius of analyticity of snapshots
    Radius(RadiusArgs),
    /// Normalized derivative bounds of a snapshot
    DerivativeReport(DerivativeReportArgs),
    /// Elementary inequality checks
    BenchInequalities(BenchArgs),
    /// The G and F recurrences
    Recurrences(RecurrencesArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::KernelTable(_) => "kernel-table",
            Command::VerifyKernels(_) => "verify-kernels",
            Command::VerifyLemma(_) => "verify-lemma",
            Command::Radius(_) => "radius",
            Command::DerivativeReport(_) => "derivative-report",
            Command::BenchInequalities(_) => "bench-inequalities",
            Command::Recurrences(_) => "recurrences",
        }
    }
}

fn run<P, A>(
    name: &str,
    cli: &Cli,
    args: &A,
    seed: impl FnOnce(&mut P, u64),
    body: impl FnOnce(&P, &mut OutputSet) -> Result<bool, LabError>,
) -> Result<bool, LabError>
where
    P: Serialize + for<'de> Deserialize<'de> + Default,
    A: Serialize,
{
    let started = now_rfc3339();
    let mut params: P = resolve(cli.config.as_deref(), args)?;
    if let Some(s) = cli.seed {
        seed(&mut params, s);
    }
    let resolved = serde_json::to_value(&params).map_err(|e| LabError::Config(e.to_string()))?;
    let mut out = OutputSet::new(cli.out.clone());
    let pass = body(&params, &mut out)?;
    let manifest = RunManifest {
        command: name.into(),
        config_digest: config_digest(name, &resolved),
        config: resolved,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        started,
        finished: now_rfc3339(),
        threads: cli.threads,
        outputs: out.files.iter().map(|p| p.display().to_string()).collect(),
        pass,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| LabError::Config(e.to_string()))?;
    write_atomic(&manifest_path(&cli.out), text.as_bytes())?;
    Ok(pass)
}

pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join("manifest.json")
}

fn dispatch(cli: &Cli) -> Result<bool, LabError> {
    if cli.threads == 0 {
        return Err(LabError::Usage("--threads must be at least 1".into()));
    }
    let name = cli.command.name();
    match &cli.command {
        Command::Simulate(a) => run(name, cli, a, |p: &mut SimulateParams, s| p.seed = s, commands::simulate_cmd),
        Command::KernelTable(a) => run(name, cli, a, |_: &mut KernelTableParams, _| {}, commands::kernel_table_cmd),
        Command::VerifyKernels(a) => run(name, cli, a, |_: &mut VerifyKernelsParams, _| {}, commands::verify_kernels_cmd),
        Command::VerifyLemma(a) => run(name, cli, a, |_: &mut VerifyLemmaParams, _| {}, commands::verify_lemma_cmd),
        Command::Radius(a) => run(name, cli, a, |_: &mut RadiusParams, _| {}, commands::radius_cmd),
        Command::DerivativeReport(a) => {
            run(name, cli, a, |_: &mut DerivativeReportParams, _| {}, commands::derivative_report_cmd)
        }
        Command::BenchInequalities(a) => run(name, cli, a, |p: &mut BenchParams, s| p.seed = s, commands::bench_cmd),
        Command::Recurrences(a) => run(name, cli, a, |_: &mut RecurrencesParams, _| {}, commands::recurrences_cmd),
    }
}

/// Runs the CLI on `argv` (including the program name) and returns the exit
/// code: 0 when every check passes, 2 when a verification fails, 1 on usage,
/// configuration or runtime errors.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            eprintln!("fns {}: verification failed; see the reports in {}", cli.command.name(), cli.out.display());
            EXIT_FAILED
        }
        Err(e) => {
            eprintln!("fns {}: {e}", cli.command.name());
            EXIT_ERROR
        }
    }
}
