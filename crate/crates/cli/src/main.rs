//! `phaseswap` command-line tool.
//!
//! Exit codes: 0 on success, 2 for I/O failures, 3 for invalid arguments,
//! dimensions or parameters.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub const EXIT_IO: u8 = 2;
pub const EXIT_VALIDATION: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Validation(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => EXIT_IO,
            CliError::Validation(_) => EXIT_VALIDATION,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(m) | CliError::Validation(m) => f.write_str(m),
        }
    }
}

impl From<phaseswap::Error> for CliError {
    fn from(e: phaseswap::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

/// Ultrasound image simulation by low-frequency phase substitution.
#[derive(Debug, Parser)]
#[command(name = "phaseswap", version)]
pub struct Cli {
    /// Optional `key = value` file (alpha, size, seed, invert_mask_polarity,
    /// output_dir, epsilon). Flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one image from a real image and a lesion mask.
    Simulate(SimulateArgs),
    /// Generate a simulated dataset from directories of masks and images.
    Dataset(DatasetArgs),
    /// Write the low-frequency phase mask as an image.
    Mask(MaskArgs),
    /// Render a convolutional speckle B-mode image, optionally with an
    /// anechoic region.
    Speckle(SpeckleArgs),
    /// Print the Dice similarity coefficient of two mask files.
    Dsc(DscArgs),
    /// Time the simulator against the speckle baseline.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Real ultrasound image (PNG or PGM).
    pub real: PathBuf,
    /// Lesion mask, lesion = white; binarized at 0.5.
    pub mask: PathBuf,
    /// Output image; `.pgm` writes binary PGM, anything else PNG.
    pub out: PathBuf,
    /// Ellipse scale in [0, sqrt(2)] [default: 0.11].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Resample both inputs to --size before simulating.
    #[arg(long)]
    pub resize: bool,
    /// Target size for --resize, N or WxH [default: 256].
    #[arg(long)]
    pub size: Option<String>,
    /// Use the mask as the phase source as-is (lesion bright) instead of
    /// its complement.
    #[arg(long)]
    pub invert_mask: bool,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// Directory of mask images.
    pub masks_dir: PathBuf,
    /// Directory of real images.
    pub images_dir: PathBuf,
    /// Output directory [default: output_dir from --config].
    pub out_dir: Option<PathBuf>,
    /// Train and validation counts; must sum to the number of masks
    /// [default: all train].
    #[arg(long, num_args = 2, value_names = ["TRAIN", "VAL"])]
    pub split: Option<Vec<usize>>,
    /// Global seed [default: PHASESWAP_SEED, else 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Ellipse scale in [0, sqrt(2)] [default: 0.11].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Output size, N or WxH [default: 256].
    #[arg(long)]
    pub size: Option<String>,
    /// Use masks as the phase source as-is instead of their complement.
    #[arg(long)]
    pub invert_mask: bool,
    /// Worker threads; outputs do not depend on this.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Suppress progress lines.
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    /// Output image.
    pub out: PathBuf,
    /// Mask size, N or WxH [default: 256].
    #[arg(long)]
    pub size: Option<String>,
    /// Ellipse scale in [0, sqrt(2)] [default: 0.11].
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SpeckleArgs {
    /// Output image.
    pub out: PathBuf,
    /// Anechoic region mask (white = no scatterers).
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Number of scatterers.
    #[arg(long, default_value_t = 100_000, allow_negative_numbers = true)]
    pub scatterers: i64,
    /// Seed [default: PHASESWAP_SEED, else 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output grid, N or WxH [default: 256].
    #[arg(long)]
    pub size: Option<String>,
    /// Lateral phantom extent.
    #[arg(long, default_value_t = 50.0)]
    pub width_mm: f64,
    /// Axial phantom extent.
    #[arg(long, default_value_t = 50.0)]
    pub depth_mm: f64,
    /// Axial carrier in cycles per pixel.
    #[arg(long, default_value_t = 0.25)]
    pub center_freq: f64,
    /// Axial Gaussian width in pixels.
    #[arg(long, default_value_t = 3.0)]
    pub sigma_axial: f64,
    /// Lateral Gaussian width in pixels.
    #[arg(long, default_value_t = 6.0)]
    pub sigma_lateral: f64,
    /// Log-compression dynamic range.
    #[arg(long, default_value_t = 60.0)]
    pub dynamic_range_db: f64,
}

#[derive(Debug, Args)]
pub struct DscArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    /// Smoothing term [default: 1e-6].
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Square image size; repeat for several sizes [default: 256].
    #[arg(long)]
    pub size: Vec<usize>,
    /// Timed iterations of the phase simulator.
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    /// Timed iterations of the speckle baseline.
    #[arg(long, default_value_t = 10)]
    pub baseline_iters: usize,
    /// Untimed iterations before measuring.
    #[arg(long, default_value_t = phaseswap::bench::DEFAULT_WARMUP)]
    pub warmup: usize,
    /// Scatterers in the baseline phantom.
    #[arg(long, default_value_t = 100_000, allow_negative_numbers = true)]
    pub scatterers: i64,
    /// Seed for the generated inputs [default: PHASESWAP_SEED, else 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Ellipse scale [default: 0.11].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Time batches of N images on N threads and report per-image
    /// throughput instead of single-threaded latency.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Write the report as JSON.
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
