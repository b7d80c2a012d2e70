use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod output;

/// Exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 1;
    pub const PARSE: u8 = 2;
    pub const BOUNDS: u8 = 3;
    pub const BUDGET: u8 = 4;
    pub const VERIFY_FAILED: u8 = 5;
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: exit::USAGE, message: message.into() }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::usage(format!("{}: {e}", path.display()))
    }
}

impl From<discounted_dp::Error> for CliError {
    fn from(e: discounted_dp::Error) -> Self {
        use discounted_dp::Error as E;
        let code = match &e {
            E::Parse { .. } | E::DuplicateReading { .. } => exit::PARSE,
            E::BoundsViolation { .. } | E::ReadingOutOfBounds { .. } => exit::BOUNDS,
            E::BudgetExceeded { .. } => exit::BUDGET,
            _ => exit::USAGE,
        };
        Self { code, message: e.to_string() }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ddp", version, about = "Discounted differential privacy for evolving datasets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Emit a synthetic daily consumption table.
    Gen(GenArgs),
    /// Convert half-hourly meter readings into a daily table.
    Ingest(IngestArgs),
    /// Release the daily mean under the three privacy setups and record errors.
    Run(RunArgs),
    /// Average relative error across a grid of discount parameters.
    Sweep(SweepArgs),
    /// Check a noise schedule against its discounted budget condition.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub days: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// First day, YYYY-MM-DD.
    #[arg(long)]
    pub start_date: Option<String>,
    #[arg(long)]
    pub base_load: Option<f64>,
    #[arg(long)]
    pub seasonal_amplitude: Option<f64>,
    #[arg(long)]
    pub offset_sd: Option<f64>,
    #[arg(long)]
    pub noise_sd: Option<f64>,
    /// Value bounds LO,HI.
    #[arg(long)]
    pub bounds: Option<String>,
    /// Flat JSON file of default settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// long | wide
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub bounds: Option<String>,
    /// sum | mean
    #[arg(long)]
    pub agg: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Daily table CSV (customer_id,date,kwh).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub bounds: Option<String>,
    /// exclude | zero
    #[arg(long)]
    pub missing: Option<String>,
    /// Accept missing entries under the exclude policy despite the weaker sensitivity bound.
    #[arg(long)]
    pub allow_unsound_missing: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo samples per day (0 = analytic only).
    #[arg(long)]
    pub mc: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    /// exp | hyp
    #[arg(long)]
    pub family: Option<String>,
    /// Comma-separated parameter values.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fail on days with zero mean instead of excluding them.
    #[arg(long)]
    pub strict_zero: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// dp | exp | hyp
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    #[arg(long = "delta-f", allow_negative_numbers = true)]
    pub delta_f: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub horizon: Option<u64>,
    /// One noise scale per line, replacing the schedule's own scales.
    #[arg(long)]
    pub scale_file: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Ingest(a) => commands::ingest(a),
        Command::Run(a) => commands::run(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Verify(a) => commands::verify(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
