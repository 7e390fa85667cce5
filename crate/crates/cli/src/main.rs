//! `modalgauge`: embedding-geometry measures and transfer prediction from the command line.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::LevelFilter;

use commands::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "modalgauge",
    version,
    about = "Measure dual-encoder embedding geometry and predict fine-tuning gains"
)]
pub struct Cli {
    /// Seed for every random choice (silhouette and entropy subsampling)
    #[arg(long, global = true, default_value_t = 0, display_order = 100)]
    pub seed: u64,

    /// Worker threads [default: logical cores]
    #[arg(long, global = true, env = "MODALGAUGE_THREADS", display_order = 101)]
    pub threads: Option<usize>,

    /// Log verbosity on standard error
    #[arg(long, global = true, value_enum, default_value_t = LogLevel::Warn, display_order = 102)]
    pub log_level: LogLevel,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LogLevel {
    Off,
    Error,
    Warn,
    Info,
    Debug,
    Trace,
}

impl From<LogLevel> for LevelFilter {
    fn from(l: LogLevel) -> Self {
        match l {
            LogLevel::Off => LevelFilter::Off,
            LogLevel::Error => LevelFilter::Error,
            LogLevel::Warn => LevelFilter::Warn,
            LogLevel::Info => LevelFilter::Info,
            LogLevel::Debug => LevelFilter::Debug,
            LogLevel::Trace => LevelFilter::Trace,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute measures for one or more embedding manifests
    Measure(MeasureArgs),
    /// Spearman correlation of every measure with an outcome target
    Correlate(CorrelateArgs),
    /// Fit a linear predictor of a target from one measure
    Fit(FitArgs),
    /// Apply a fitted predictor to new tasks
    Predict(PredictArgs),
    /// Emit scatter points and the fitted band as CSV for plotting
    PlotData(PlotDataArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// Manifest file(s) written by the extractor
    #[arg(long = "manifest", required = true, num_args = 1..)]
    pub manifests: Vec<PathBuf>,

    /// Comma-separated measure names, or `all`
    #[arg(long, default_value = "iimm", value_delimiter = ',')]
    pub measures: Vec<String>,

    /// Output file [default: standard output]
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Also report the conventional between-over-within Calinski-Harabasz index
    #[arg(long)]
    pub ch_standard: bool,

    /// Subsample this many image rows for the Euclidean silhouette
    #[arg(long, value_name = "N")]
    pub silhouette_sample: Option<usize>,

    /// KDE bandwidth for clustering entropy: scott, silverman or a positive number
    #[arg(long, default_value = "scott", value_name = "RULE")]
    pub entropy_bandwidth: String,

    /// Maximum rows per cluster used by clustering entropy
    #[arg(long, default_value_t = 2000, value_name = "N")]
    pub entropy_cap: usize,

    /// Allowed deviation of row norms from 1
    #[arg(long, default_value_t = 1e-3, value_name = "TOL")]
    pub norm_tolerance: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum TargetArg {
    GainOverZse,
    Accuracy,
    AvgOodDelta,
}

impl From<TargetArg> for modalgauge_core::transfer::Target {
    fn from(t: TargetArg) -> Self {
        use modalgauge_core::transfer::Target;
        match t {
            TargetArg::GainOverZse => Target::GainOverZse,
            TargetArg::Accuracy => Target::Accuracy,
            TargetArg::AvgOodDelta => Target::AvgOodDelta,
        }
    }
}

#[derive(Debug, Args)]
pub struct TableInputs {
    /// Measures table (CSV, or JSON as written by `measure`)
    #[arg(long, value_name = "PATH")]
    pub measures: PathBuf,

    /// Outcomes CSV: model_id,train_task,eval_task,zero_shot_acc,finetuned_acc
    #[arg(long, value_name = "PATH")]
    pub outcomes: PathBuf,

    /// Only use rows for this model
    #[arg(long)]
    pub model: Option<String>,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[command(flatten)]
    pub inputs: TableInputs,

    /// Quantity correlated against each measure
    #[arg(long, value_enum, default_value_t = TargetArg::GainOverZse)]
    pub target: TargetArg,

    /// Output CSV [default: standard output]
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Use the exact permutation test up to this many tasks (at most 12)
    #[arg(long, default_value_t = modalgauge_core::stats::DEFAULT_EXACT_THRESHOLD, value_name = "N")]
    pub exact_threshold: usize,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub inputs: TableInputs,

    /// Measure used as the predictor
    #[arg(long = "measure", default_value = "iimm", value_name = "NAME")]
    pub measure_name: String,

    /// Quantity to predict
    #[arg(long, value_enum, default_value_t = TargetArg::GainOverZse)]
    pub target: TargetArg,

    /// Confidence level of the mean-response band
    #[arg(long, default_value_t = modalgauge_core::stats::DEFAULT_CONFIDENCE, value_name = "LEVEL")]
    pub confidence: f64,

    /// Exclude tasks whose measure exceeds this value
    #[arg(long, value_name = "X")]
    pub max_x: Option<f64>,

    /// Output fit JSON [default: standard output]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Fit JSON written by `fit`
    #[arg(long, value_name = "PATH")]
    pub fit: PathBuf,

    /// Manifest file(s) of the tasks to predict
    #[arg(long = "manifest", required = true, num_args = 1..)]
    pub manifests: Vec<PathBuf>,

    /// Output JSON [default: standard output]
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Allowed deviation of row norms from 1
    #[arg(long, default_value_t = 1e-3, value_name = "TOL")]
    pub norm_tolerance: f64,
}

#[derive(Debug, Args)]
pub struct PlotDataArgs {
    /// Fit JSON written by `fit`
    #[arg(long, value_name = "PATH")]
    pub fit: PathBuf,

    #[command(flatten)]
    pub inputs: TableInputs,

    /// Output CSV [default: standard output]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn init_logging(level: LogLevel) {
    use std::io::Write;
    env_logger::Builder::new()
        .filter_level(level.into())
        .format(|buf, record| writeln!(buf, "{}: {}", record.level().as_str().to_lowercase(), record.args()))
        .init();
}

/// Help and version go to stdout with status 0; any other parse error becomes
/// a one-line diagnostic with the input-error status.
fn parse_args() -> Result<Cli, ExitCode> {
    use clap::error::ErrorKind;
    Cli::try_parse().map_err(|e| match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
            let _ = e.print();
            ExitCode::SUCCESS
        }
        ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            eprintln!("error: a subcommand is required; see `modalgauge --help`");
            ExitCode::from(1)
        }
        _ => {
            let rendered = e.render().to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: {}", first.trim_start_matches("error: "));
            ExitCode::from(1)
        }
    })
}

fn main() -> ExitCode {
    let cli = match parse_args() {
        Ok(cli) => cli,
        Err(code) => return code,
    };
    init_logging(cli.log_level);

    let outcome = match cli.threads {
        Some(0) => Err(Failure::input(anyhow::anyhow!("--threads must be at least 1"))),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::input(e.into()))
            .and_then(|pool| pool.install(|| commands::run(&cli))),
        None => commands::run(&cli),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Partial(summary)) => {
            eprintln!("error: partial failure: {summary}");
            ExitCode::from(2)
        }
        Err(Failure::Input(e)) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
