//! `ocam`: mine ownership/contribution alignment and technical debt density
//! from exported development records, and analyse their relationship.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use env_logger::Env;

use ocam::pipeline::Format;

#[derive(Debug, Parser)]
#[command(
    name = "ocam",
    version,
    about = "Contribution degree and technical debt density analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate raw exports and write the normalised event store.
    Ingest(IngestArgs),
    /// Compute weekly metrics, run the analysis and write reports.
    Analyze(AnalyzeArgs),
    /// Re-render a saved analysis in another format.
    Report(ReportArgs),
    /// Generate a synthetic input fileset from a scenario file.
    Synth(SynthArgs),
    /// Check the statistics and metrics against brute-force oracles.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Run configuration (JSON).
    #[arg(short, long)]
    config: PathBuf,
    /// Epoch Monday of week 1 (YYYY-MM-DD).
    #[arg(long)]
    epoch: Option<chrono::NaiveDate>,
    /// Normalised event store directory.
    #[arg(long)]
    store: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Exit with status 2 if any record is rejected.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Report and plot-data directory.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// json, csv or markdown.
    #[arg(short, long)]
    format: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Smallest segment that is tested.
    #[arg(long)]
    min_n: Option<usize>,
    /// Weeks of events feeding each contribution observation.
    #[arg(long)]
    window_weeks: Option<u32>,
    /// Count merge commits.
    #[arg(long)]
    include_merges: bool,
    /// Drop weeks where any activity channel is empty.
    #[arg(long)]
    strict_measures: bool,
    /// Correlate per segment whatever the split test says.
    #[arg(long, conflicts_with = "no_segmentation")]
    force_segmentation: bool,
    /// Correlate over the full series whatever the split test says.
    #[arg(long)]
    no_segmentation: bool,
    /// Parallel analysis workers (default: number of processors).
    #[arg(short, long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// `report.json` written by `analyze`.
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long, default_value = "markdown")]
    format: String,
    /// Output directory (default: next to the input).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Scenario file (JSON).
    #[arg(short, long)]
    scenario: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 20_240_301)]
    seed: u64,
    /// Random instances per check.
    #[arg(long, default_value_t = 1000)]
    instances: usize,
}

/// Usage and I/O errors.
const EXIT_ERROR: u8 = 1;

fn main() -> ExitCode {
    env_logger::Builder::from_env(Env::new().filter_or("OCAM_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(EXIT_ERROR)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {}", describe(&err));
            ExitCode::from(EXIT_ERROR)
        }
    }
}

/// Joins the error chain, skipping causes already quoted by their parent.
fn describe(err: &anyhow::Error) -> String {
    let mut text = err.to_string();
    for cause in err.chain().skip(1) {
        let cause = cause.to_string();
        if !text.contains(&cause) {
            text.push_str(": ");
            text.push_str(&cause);
        }
    }
    text
}

fn parse_format(raw: Option<&str>) -> anyhow::Result<Option<Format>> {
    raw.map(str::parse).transpose().map_err(Into::into)
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Ingest(args) => {
            let mut config =
                commands::load_config(&args.config.config, args.config.epoch, args.config.store)?;
            config.strict |= args.strict;
            commands::ingest(&config)
        }
        Command::Analyze(args) => {
            let mut config =
                commands::load_config(&args.config.config, args.config.epoch, args.config.store)?;
            if let Some(out) = args.out {
                config.output_dir = Some(out);
            }
            if let Some(format) = parse_format(args.format.as_deref())? {
                config.format = Some(format);
            }
            config.alpha = args.alpha.unwrap_or(config.alpha);
            config.min_n = args.min_n.unwrap_or(config.min_n);
            config.window_weeks = args.window_weeks.unwrap_or(config.window_weeks);
            config.merge_commits |= args.include_merges;
            config.strict_measures |= args.strict_measures;
            if args.force_segmentation {
                config.force_segmentation = true;
                config.no_segmentation = false;
            }
            if args.no_segmentation {
                config.no_segmentation = true;
                config.force_segmentation = false;
            }
            config.validate()?;
            commands::analyze(&config, args.jobs)
        }
        Command::Report(args) => {
            let format: Format = args.format.parse()?;
            commands::report(&args.input, format, args.out.as_deref())
        }
        Command::Synth(args) => commands::synth(&args.scenario, &args.out),
        Command::Selftest(args) => Ok(commands::selftest(args.seed, args.instances)),
    }
}
