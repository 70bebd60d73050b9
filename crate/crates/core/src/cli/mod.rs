//! Command-line driver: `young`, `norm`, `mart` and `certify` subcommands.
//!
//! Exit codes: 0 success (certified), 1 usage, schema, integrity or
//! invariant failure, 2 hypotheses not met.

mod certify;
mod config;
mod mart;
mod tables;

pub use config::{Experiment, ExperimentConfig, GridSpec};

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::martingale::Budget;

/// Version tag carried by every JSON report.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("schema: {0}")]
    Schema(String),
    #[error("io: {0}")]
    Io(String),
    #[error("integrity: {0}")]
    Integrity(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("hypotheses not met: {0}")]
    Hypotheses(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Hypotheses(_) => 2,
            _ => 1,
        }
    }
}

macro_rules! internal_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Internal(e.to_string())
            }
        }
    )*};
}
internal_from!(
    crate::young::YoungError,
    crate::modular::ModularError,
    crate::martingale::MartingaleError,
    crate::bounds::BoundsError,
    serde_json::Error
);

#[derive(Debug, Parser)]
#[command(
    name = "orlicz-umd",
    version,
    about = "Musielak-Orlicz norms and UMD constant experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Conjugate tables, Δ₂ certificates, Young and complement-bound margins.
    Young(CommonArgs),
    /// Luxemburg and Amemiya norms of the functions in the `function` CSV.
    Norm(CommonArgs),
    /// Doob and main-estimate campaigns plus a UMD ratio search.
    Mart(CommonArgs),
    /// Full pipeline: certificates, constants, search, certification.
    Certify(CertifyArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Experiment config (flat TOML).
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// Experiment config (flat TOML).
    #[arg(long, required_unless_present = "verify")]
    pub config: Option<PathBuf>,
    /// Check the checksum and arithmetic of an existing certify.json.
    #[arg(long, conflicts_with = "config")]
    pub verify: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args, Default)]
pub struct Overrides {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Search budget as RESTARTSxSTEPS, e.g. 8x200.
    #[arg(long)]
    pub budget: Option<Budget>,
}

impl Overrides {
    fn apply(&self, mut cfg: ExperimentConfig) -> Result<ExperimentConfig, CliError> {
        if let Some(s) = self.seed {
            cfg.seed = Some(s);
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(d) = self.depth {
            cfg.depth = d;
        }
        if let Some(p) = self.p {
            cfg.p = p;
        }
        if let Some(b) = self.budget {
            cfg.budget = b;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn load(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig, CliError> {
    overrides.apply(ExperimentConfig::load(path)?)
}

/// Runs one parsed command and returns its exit code, printing diagnostics
/// to stderr.
pub fn run(cli: Cli) -> u8 {
    let result = match cli.command {
        Command::Young(a) => load(&a.config, &a.overrides).and_then(|c| tables::cmd_young(&c)),
        Command::Norm(a) => load(&a.config, &a.overrides).and_then(|c| tables::cmd_norm(&c)),
        Command::Mart(a) => load(&a.config, &a.overrides).and_then(|c| mart::cmd_mart(&c)),
        Command::Certify(a) => match (&a.verify, &a.config) {
            (Some(file), _) => certify::cmd_verify(file),
            (None, Some(config)) => {
                load(config, &a.overrides).and_then(|c| certify::cmd_certify(&c))
            }
            (None, None) => Err(CliError::Usage("certify needs --config or --verify".into())),
        },
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Parses `args` and runs; clap usage errors exit with 1.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            code
        }
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(row).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    write_file(path, &bytes)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

/// Shortest round-trip rendering; empty for `None`.
fn num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
