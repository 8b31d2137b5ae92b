//! `specseg` command line.

mod commands;
pub mod config;
pub mod svg;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;

pub use commands::{run_command, CommandOutput};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Lib(Error::Envelope(_) | Error::NonFinite(_)) => EXIT_NUMERICAL,
            CliError::Lib(_) => EXIT_VALIDATION,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Lib(Error::Io(e))
    }
}

#[derive(Debug, Parser)]
#[command(name = "specseg", version, about = "Spectral analysis of segmentation losses, metrics and gradients")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Radial spectra of b, ŷ and L_ce with the truncation discrepancy R.
    Spectrum(SpectrumArgs),
    /// Block-wise annotations at each band limit with mIoU and R.
    BlockAnnot(BlockAnnotArgs),
    /// Band-limited boundary overlap of the 1-D Gaussian boundary model.
    Biou(BiouArgs),
    /// Finite-difference spectral Jacobians of the toy layer.
    Gradcheck(GradcheckArgs),
    /// FLOPs, relative drop and FPI across decoder feature sizes.
    Flops(FlopsArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// `key = value` file; flags take precedence over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub classes: Option<usize>,
    /// Comma-separated band limits.
    #[arg(long)]
    pub nu: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write SVG plots.
    #[arg(long)]
    pub plot: bool,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Label map(s) in PGM format; a seeded synthetic map when absent.
    #[arg(long, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Logits tensor (SPSG); `alpha·one_hot(labels)` when absent.
    #[arg(long)]
    pub logits: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Side of the synthetic map.
    #[arg(long)]
    pub size: Option<usize>,
    /// `chebyshev` or `euclidean`.
    #[arg(long)]
    pub metric: Option<String>,
    /// Process every input on its own worker thread.
    #[arg(long)]
    pub batch: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BlockAnnotArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub size: Option<usize>,
    /// `majority` or `lowpass`.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub batch: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BiouArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub t0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub t1: Option<f64>,
    /// Second segment; defaults to the first.
    #[arg(long, allow_negative_numbers = true)]
    pub b0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b1: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Boundary-region width; sets `sigma = d / 2`.
    #[arg(long)]
    pub d: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct GradcheckArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub n: Option<usize>,
    /// Kernel scale `‖k‖∞`.
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long)]
    pub taps: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct FlopsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Network cost spec, one layer per line.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Decoder feature sides.
    #[arg(long)]
    pub sizes: Option<String>,
    /// Reference side; defaults to the largest of `sizes`.
    #[arg(long)]
    pub base: Option<f64>,
    /// mIoU per size, in the same order.
    #[arg(long)]
    pub miou: Option<String>,
    /// Encoder channel pruning rate.
    #[arg(long)]
    pub prune: Option<f64>,
    /// Absolute FLOPs per size instead of a spec.
    #[arg(long)]
    pub flops: Option<String>,
}

/// Run the command line and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run_command(&cli.command) {
        Ok(out) => {
            for path in &out.files {
                println!("{}", path.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("specseg: {e}");
            e.exit_code()
        }
    }
}
