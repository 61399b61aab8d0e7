//! Experiment runner: config ingestion, seeded execution, report emission.
//!
//! Every subcommand reads a JSON config (unknown fields rejected), runs the
//! requested experiment deterministically, and writes a JSON report plus
//! CSV tables into the output directory. Reports are byte-stable: sorted
//! keys, floats rounded to 12 significant digits, atomic writes, and no
//! wall-clock content (timing goes to stderr).

pub mod commands;
pub mod config;
pub mod report;

use std::path::PathBuf;
use std::process::ExitCode;

/// Exit-code contract: 0 success, 2 config error, 3 data error,
/// 4 numeric/assertion failure.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Numeric(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Data(_) => ExitCode::from(3),
            CliError::Numeric(_) => ExitCode::from(4),
        }
    }
}

impl From<chaincert_core::CoreError> for CliError {
    fn from(e: chaincert_core::CoreError) -> Self {
        use chaincert_core::CoreError::*;
        match e {
            Domain(m) | Argument(m) | Size(m) => CliError::Config(m),
            Data(m) => CliError::Data(m),
            Numeric(m) => CliError::Numeric(m),
            Io(e) => CliError::Data(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Options shared by all subcommands.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub threads: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { config_path: None, seed: None, out_dir: PathBuf::from("."), threads: 1 }
    }
}
