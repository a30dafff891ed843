//! Command-line front end for the super-cavity scattering simulator.
//!
//! Subcommands evaluate transmission spectra (`spectrum`), list segment
//! modes (`modes`), measure Rabi splittings (`rabi`), report peak/valley
//! structure (`valley`), compare the exact solution with the two-level
//! reduction (`tla-compare`), and regenerate the reference data sets
//! (`reproduce`). Results are written as CSV or JSON; re-running a command
//! with the same configuration produces byte-identical files.
//!
//! Exit codes: 0 on success, 1 for configuration problems, 2 for numeric
//! failures (the message names the offending wave vector).

mod commands;
mod config;
mod figures;
mod output;

use clap::error::ErrorKind;
use clap::Parser;
use std::path::PathBuf;

/// Configuration or usage problem (exit 1) vs. numeric failure (exit 2).
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
}

impl From<supercavity::Error> for CliError {
    fn from(e: supercavity::Error) -> Self {
        if e.is_numeric() {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "supercavity",
    version,
    about = "Single-photon transport through a super cavity in a coupled-cavity array"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Flat key=value configuration file; keys are the long flag names
    /// without the leading dashes. Flags override file values, which
    /// override built-in defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Number of cavities in the super-cavity segment.
    #[arg(long, global = true, value_name = "N")]
    pub n_cavities: Option<usize>,

    /// Segment site (1-based) hosting the two-level atom.
    #[arg(long, global = true, value_name = "SITE")]
    pub atom_site: Option<usize>,

    /// Atomic transition frequency, measured from the cavity frequency.
    #[arg(long, global = true, value_name = "E", allow_negative_numbers = true)]
    pub omega_a: Option<f64>,

    /// Weak hop connecting the segment to the leads.
    #[arg(long, global = true, value_name = "RATE")]
    pub eta: Option<f64>,

    /// Hop amplitude inside the segment and leads (the energy unit).
    #[arg(long, global = true, value_name = "RATE")]
    pub xi: Option<f64>,

    /// Atom-cavity coupling strength.
    #[arg(long, global = true, value_name = "RATE")]
    pub g: Option<f64>,

    /// Lower edge of the wave-vector scan window.
    #[arg(long, global = true, value_name = "K")]
    pub k_min: Option<f64>,

    /// Upper edge of the wave-vector scan window.
    #[arg(long, global = true, value_name = "K")]
    pub k_max: Option<f64>,

    /// Number of scan grid points.
    #[arg(long, global = true, value_name = "COUNT")]
    pub samples: Option<usize>,

    /// Scattering backend: closed-form or direct.
    #[arg(long, global = true, value_name = "NAME")]
    pub method: Option<String>,

    /// Output file (directory for `reproduce`).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Output format: csv or json.
    #[arg(long, global = true, value_name = "NAME")]
    pub format: Option<String>,

    /// Figure preset for `reproduce` (2-7).
    #[arg(long, global = true, value_name = "NUM")]
    pub figure: Option<u32>,

    /// Segment mode index used by rabi and tla-compare.
    #[arg(long, global = true, value_name = "M")]
    pub mode: Option<usize>,

    /// Half-width (in k) of the window around the selected mode.
    #[arg(long, global = true, value_name = "K")]
    pub window: Option<f64>,

    /// Transmission threshold for peak detection.
    #[arg(long, global = true, value_name = "T")]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Evaluate T(k), R(k) over the scan window.
    Spectrum,
    /// List the bare segment modes and their atom couplings.
    Modes,
    /// Measure the two-peak splitting around the selected mode.
    Rabi,
    /// Report peak and valley structure of the scan window.
    Valley,
    /// Compare the exact spectrum with the two-level reduction.
    TlaCompare,
    /// Regenerate a reference data set (requires --figure).
    Reproduce,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Modes => "modes",
            Command::Rabi => "rabi",
            Command::Valley => "valley",
            Command::TlaCompare => "tla-compare",
            Command::Reproduce => "reproduce",
        }
    }
}

fn main() {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("numeric error: {msg}");
            std::process::exit(2);
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let resolved = config::resolve(cli)?;
    commands::execute(&resolved)
}
