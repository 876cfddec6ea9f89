//! `hydronoise`: AIS reports in, underwater noise maps out.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Config, CONFIG_HELP};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments, bad configuration or missing inputs.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] hydronoise_core::Error),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hydronoise", version, about = "Underwater noise maps from AIS trajectories", after_help = CONFIG_HELP)]
struct Cli {
    /// Configuration file.
    #[arg(long, global = true, default_value = "hydronoise.toml")]
    config: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Byte-identical outputs for identical inputs: omits wall-clock
    /// timestamps from metadata.
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse AIS, split and enrich trips, write the trips archive.
    Ingest,
    /// Interpolate hydrophone L90 levels onto the grid for one month.
    Ambient {
        /// Month as YYYY-MM.
        #[arg(long)]
        month: String,
    },
    /// Propagate trip noise over a time window at one frequency.
    Compute(ComputeArgs),
    /// Per-cell statistics and bivariate classes of a field.
    Analyze(AnalyzeArgs),
    /// Time-stamped GeoJSON snapshots of a field.
    Frames(FramesArgs),
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    /// Window start, e.g. 2020-06-15T10:00:00Z.
    #[arg(long)]
    start: String,
    /// Window end (inclusive).
    #[arg(long)]
    end: String,
    /// Frequency in Hz.
    #[arg(long)]
    frequency: u32,
    /// Also run the exhaustive reference computation and compare.
    #[arg(long)]
    oracle: bool,
    /// Field file (default: <output_dir>/field_<frequency>.hnf).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    filter: FilterArgs,
}

#[derive(Debug, Args, Default)]
pub struct FilterArgs {
    #[arg(long)]
    hp_min: Option<f64>,
    #[arg(long)]
    hp_max: Option<f64>,
    /// Comma-separated MMSIs.
    #[arg(long, value_delimiter = ',')]
    mmsi: Vec<u32>,
    #[arg(long)]
    loa_min: Option<f64>,
    #[arg(long)]
    loa_max: Option<f64>,
    /// Comma-separated gear codes.
    #[arg(long, value_delimiter = ',')]
    gear: Vec<String>,
    /// Keep trips with at least one instant in this activity
    /// (in_port, entering, exiting, fishing, navigation or 0-4).
    #[arg(long)]
    activity: Option<String>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Field file written by `compute`.
    #[arg(long)]
    field: PathBuf,
    /// First day, YYYY-MM-DD.
    #[arg(long)]
    from: String,
    /// Last day (inclusive), YYYY-MM-DD.
    #[arg(long)]
    to: String,
    /// Weekdays to count, e.g. mon,tue,wed,thu.
    #[arg(long)]
    days: Option<String>,
    /// average or peak.
    #[arg(long, default_value = "average")]
    scheme: String,
}

#[derive(Debug, Args)]
pub struct FramesArgs {
    #[arg(long)]
    field: PathBuf,
    #[arg(long)]
    start: String,
    #[arg(long)]
    end: String,
    /// Seconds between frames.
    #[arg(long, default_value_t = 60)]
    step: i64,
    /// Directory for the frames (default: <output_dir>/frames_<frequency>).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let config = Config::load(&cli.config)?;
    let ctx = commands::Context {
        config,
        deterministic: cli.deterministic,
    };
    match cli.command {
        Command::Ingest => commands::ingest(&ctx),
        Command::Ambient { month } => commands::ambient(&ctx, &month),
        Command::Compute(a) => commands::compute(&ctx, &a),
        Command::Analyze(a) => commands::analyze(&ctx, &a),
        Command::Frames(a) => commands::frames(&ctx, &a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
