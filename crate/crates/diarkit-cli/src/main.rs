//! `diarkit` — speaker diarization from pre-extracted segment embeddings.
//!
//! Three subcommands: `diarize` runs the clustering pipeline over a corpus
//! and writes RTTM files plus a self-describing run report, `score`
//! compares hypothesis RTTM against a reference, and `synth` generates a
//! labeled synthetic corpus for end-to-end checks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod synth;

#[derive(Parser)]
#[command(
    name = "diarkit",
    version,
    about = "Speaker diarization over segment embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Diarize a corpus of embedding files and write RTTM output.
    Diarize(DiarizeArgs),
    /// Score hypothesis RTTM against reference RTTM.
    Score(ScoreArgs),
    /// Generate a synthetic labeled corpus with matching models.
    Synth(SynthArgs),
}

#[derive(Args)]
struct DiarizeArgs {
    /// Operating point to start from: system1, mcclane, system2, system2b,
    /// system3 or system4.
    #[arg(long)]
    preset: String,

    /// Embedding CSV glob. Repeat the flag once per channel; files of the
    /// same recording must share their file stem across channels.
    #[arg(long = "embeddings", required = true)]
    embeddings: Vec<String>,

    /// Directory holding one `<recording>.lab` VAD file per recording.
    #[arg(long)]
    vad: PathBuf,

    /// Frame-feature CSV glob (same layout as embeddings), required when
    /// the frame-level refinement stage is enabled.
    #[arg(long)]
    frames: Option<String>,

    /// Scoring model file.
    #[arg(long)]
    plda: PathBuf,

    /// Second scoring model; scores use the equal interpolation of both.
    #[arg(long)]
    plda2: Option<PathBuf>,

    /// Eigenvoice model for the frame-level refinement stage.
    #[arg(long)]
    eigenvoice: Option<PathBuf>,

    /// Overlap detector model for the overlap post-processing stage.
    #[arg(long = "overlap-model")]
    overlap_model: Option<PathBuf>,

    /// Flat `key = value` configuration file applied on top of the preset.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Single `key=value` override, applied after the configuration file.
    /// May be repeated.
    #[arg(long = "set")]
    overrides: Vec<String>,

    /// Output directory: one `<recording>.rttm` per recording, a combined
    /// `all.rttm`, and `report.csv`.
    #[arg(long)]
    out: PathBuf,

    /// Worker threads for recording-level parallelism (default: all
    /// cores). Output order is deterministic regardless.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Reference RTTM file (any number of recordings).
    #[arg(long = "ref")]
    reference: PathBuf,

    /// Hypothesis RTTM file.
    #[arg(long)]
    hyp: PathBuf,

    /// Forgiveness collar around reference segment boundaries, seconds.
    #[arg(long, default_value_t = 0.0)]
    collar: f64,

    /// Exclude reference overlap regions from scoring instead of scoring
    /// them.
    #[arg(long = "ignore-overlaps")]
    ignore_overlaps: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory; receives embeddings/, vad/, ref.rttm and model
    /// files.
    #[arg(long)]
    out: PathBuf,

    #[arg(long, default_value_t = 5)]
    recordings: usize,

    /// True speakers per recording.
    #[arg(long, default_value_t = 3)]
    speakers: usize,

    /// Embedded sub-segments per recording.
    #[arg(long, default_value_t = 120)]
    segments: usize,

    /// Embedding dimensionality.
    #[arg(long, default_value_t = 32)]
    dim: usize,

    /// Self-transition probability of the speaker-turn chain.
    #[arg(long = "p-loop", default_value_t = 0.85)]
    p_loop: f64,

    /// Ratio of across-speaker to within-speaker variance.
    #[arg(long, default_value_t = 16.0)]
    separation: f64,

    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help/--version land here too; those are not errors.
            let is_usage_error = err.use_stderr();
            let _ = err.print();
            return if is_usage_error {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Diarize(args) => commands::run_diarize(&args),
        Command::Score(args) => commands::run_score(&args),
        Command::Synth(args) => synth::run_synth(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
