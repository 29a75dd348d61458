//! Command-line front end: `track`, `evaluate`, `sweep`, `synth` and
//! `snapshot save|load`.
//!
//! Every command echoes its fully resolved configuration to stderr before
//! reading any frame. Exit codes: 0 success, 2 usage, 3 validation, 4 I/O,
//! 5 non-finite numerics.

mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{NumberList, NumberRange, SequenceArgs, TrackerArgs};
pub use error::{CliError, CliResult, EXIT_IO, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION};

#[derive(Parser, Debug)]
#[command(
    name = "prost",
    version,
    about = "Robust online subspace tracking for background subtraction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Segment a sequence and write one mask per frame.
    Track(TrackCmd),
    /// Score a sequence or a category of sequences against ground truth.
    Evaluate(EvaluateCmd),
    /// ROC points over a list of thresholds.
    Sweep(SweepCmd),
    /// Paired subspace-recovery runs on synthetic streams across exponents.
    Synth(SynthCmd),
    /// Save or inspect tracker snapshots.
    #[command(subcommand)]
    Snapshot(SnapshotCmd),
}

#[derive(Args, Debug)]
pub struct TrackCmd {
    #[command(flatten)]
    pub sequence: SequenceArgs,
    #[command(flatten)]
    pub tracker: TrackerArgs,
    /// Directory for masks (bin%06d.pgm) and optional backgrounds.
    #[arg(long, value_name = "DIR")]
    pub output: Option<PathBuf>,
    /// Also write the reconstructed background of every frame.
    #[arg(long = "emit-backgrounds")]
    pub emit_backgrounds: bool,
    /// Continue from a saved tracker state.
    #[arg(long, value_name = "FILE")]
    pub resume: Option<PathBuf>,
    /// Save the final tracker state.
    #[arg(long = "save-snapshot", value_name = "FILE")]
    pub save_snapshot: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvaluateCmd {
    #[command(flatten)]
    pub sequence: SequenceArgs,
    /// Directory whose subdirectories are sequences; evaluated together.
    #[arg(long, value_name = "DIR", conflicts_with = "input")]
    pub category: Option<PathBuf>,
    #[command(flatten)]
    pub tracker: TrackerArgs,
    /// Write the CSV report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepCmd {
    #[command(flatten)]
    pub sequence: SequenceArgs,
    #[command(flatten)]
    pub tracker: TrackerArgs,
    /// Comma-separated thresholds.
    #[arg(long, value_name = "LIST")]
    pub deltas: Option<NumberList>,
    /// Evenly spaced thresholds, e.g. 0.05:0.6:10.
    #[arg(
        long = "delta-range",
        value_name = "LO:HI:N",
        conflicts_with = "deltas"
    )]
    pub delta_range: Option<NumberRange>,
    /// Track once and re-threshold the stored residuals.
    #[arg(long)]
    pub replay: bool,
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthCmd {
    #[command(flatten)]
    pub tracker: TrackerArgs,
    /// Ambient dimension.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long = "outlier-fraction")]
    pub outlier_fraction: Option<f64>,
    #[arg(long = "outlier-magnitude")]
    pub outlier_magnitude: Option<f64>,
    #[arg(long = "noise-sigma")]
    pub noise_sigma: Option<f64>,
    /// Number of paired streams; stream seeds run from --seed upwards.
    #[arg(long)]
    pub seeds: Option<u64>,
    /// Exponents to compare.
    #[arg(long = "p-values", value_name = "LIST")]
    pub p_values: Option<NumberList>,
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum SnapshotCmd {
    /// Track a sequence and save the final state.
    Save(SnapshotSaveCmd),
    /// Print a snapshot's header and check it against the configuration.
    Load(SnapshotLoadCmd),
}

#[derive(Args, Debug)]
pub struct SnapshotSaveCmd {
    /// Snapshot file to write.
    pub file: PathBuf,
    #[command(flatten)]
    pub sequence: SequenceArgs,
    #[command(flatten)]
    pub tracker: TrackerArgs,
}

#[derive(Args, Debug)]
pub struct SnapshotLoadCmd {
    /// Snapshot file to read.
    pub file: PathBuf,
    #[command(flatten)]
    pub tracker: TrackerArgs,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
