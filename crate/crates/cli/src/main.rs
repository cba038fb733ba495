//! `mclift` command-line driver.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 verification failure.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mclift::fixtures::FixtureKind;
use mclift::{FseParams, LiftConfig, UpdateMode};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] mclift::Error),
    #[error("{0}")]
    DataMsg(String),
    #[error("verification failed: {0}")]
    Verify(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::DataMsg(_) => 2,
            CliError::Verify(_) => 3,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "mclift", version, about = "Motion-compensated Haar lifting with extrapolated update")]
struct Cli {
    /// Worker threads; outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decompose a dataset into lowpass and highpass bands.
    Analyze(AnalyzeArgs),
    /// Reconstruct the original frames from a container.
    Synthesize(SynthesizeArgs),
    /// Round-trip a dataset (or an existing container) and check it is lossless.
    Verify(VerifyArgs),
    /// Tabulate rate and quality of several update modes.
    Compare(CompareArgs),
    /// Write a synthetic dataset.
    GenFixture(GenFixtureArgs),
}

/// Extrapolation overrides shared by every command that runs the update.
#[derive(Debug, Clone, Default, Args)]
pub struct FseArgs {
    /// Extrapolation iterations per tile.
    #[arg(long)]
    pub fse_iters: Option<usize>,
    /// Edge of the tiles that own unconnected pixels.
    #[arg(long)]
    pub fse_tile: Option<usize>,
    /// Border around each tile used as support.
    #[arg(long)]
    pub fse_border: Option<usize>,
}

impl FseArgs {
    pub fn apply(&self, base: FseParams) -> FseParams {
        let mut p = base;
        if let Some(v) = self.fse_iters {
            p.max_iterations = v;
        }
        if let Some(v) = self.fse_tile {
            p.tile_size = v;
        }
        if let Some(v) = self.fse_border {
            p.border = v;
        }
        // Grow the transform to fit a larger support.
        while p.fft_size < p.tile_size + 2 * p.border {
            p.fft_size *= 2;
        }
        p
    }

    pub fn is_set(&self) -> bool {
        self.fse_iters.is_some() || self.fse_tile.is_some() || self.fse_border.is_some()
    }
}

#[derive(Debug, Clone, Args)]
pub struct LiftArgs {
    #[arg(long, default_value_t = 16)]
    pub block_size: usize,
    #[arg(long, default_value_t = 15)]
    pub search_range: usize,
    #[command(flatten)]
    pub fse: FseArgs,
}

impl LiftArgs {
    pub fn config(&self, mode: UpdateMode) -> LiftConfig {
        LiftConfig {
            block_size: self.block_size,
            search_range: self.search_range,
            update_mode: mode,
            fse: self.fse.apply(FseParams::default()),
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Dataset sidecar (JSON).
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value = "block+fse")]
    pub mode: UpdateMode,
    #[command(flatten)]
    pub lift: LiftArgs,
    /// Also write band images, heat maps and extrapolation traces.
    #[arg(long)]
    pub dump_diagnostics: bool,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    /// `.mclf` container.
    #[arg(long)]
    pub input: PathBuf,
    /// Reconstructed raw file; a sidecar and a `.sha256` file go next to it.
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub fse: FseArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Dataset sidecar (JSON).
    #[arg(long)]
    pub input: PathBuf,
    /// Check this container against the dataset instead of analyzing it.
    #[arg(long)]
    pub container: Option<PathBuf>,
    #[arg(long, default_value = "block+fse")]
    pub mode: UpdateMode,
    #[command(flatten)]
    pub lift: LiftArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Dataset sidecar (JSON).
    #[arg(long)]
    pub input: PathBuf,
    /// CSV file to write; printed to stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Comma separated update modes, at least two.
    #[arg(long, value_delimiter = ',', default_value = "none,block,block+fse")]
    pub modes: Vec<UpdateMode>,
    #[command(flatten)]
    pub lift: LiftArgs,
}

#[derive(Debug, Args)]
pub struct GenFixtureArgs {
    /// translate, flash_disocclusion, noise or constant.
    #[arg(long)]
    pub kind: FixtureKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub output: PathBuf,
    /// File stem; defaults to the kind.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, default_value_t = 128)]
    pub width: usize,
    #[arg(long, default_value_t = 128)]
    pub height: usize,
    #[arg(long, default_value_t = 4)]
    pub frames: usize,
    #[arg(long, default_value_t = 8)]
    pub bit_depth: u8,
}

fn run(cli: Cli) -> CliResult<()> {
    let command = cli.command;
    let go = move || match command {
        Command::Analyze(a) => commands::analyze(&a),
        Command::Synthesize(a) => commands::synthesize(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::GenFixture(a) => commands::gen_fixture(&a),
    };
    match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::DataMsg(format!("thread pool: {e}")))?
            .install(go),
        None => go(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mclift: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
