//! Command-line driver for the exhaustive sensor-network evaluation engine.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sentinet::cli::{
    self, emit_config, parse_cluster_sizes, write_output, AnomalySpec, CliError, ConfigSource,
    OutputFormat, ReadingsSource, RunManifest, RunStatus, SyntheticParams, DEFAULT_NOISE,
    DEFAULT_NOMINAL,
};
use sentinet::model::{EngineConfig, TraceMode};

#[derive(Parser)]
#[command(
    name = "sentinet",
    version,
    about = "Exhaustive-search early-warning engine for clustered sensor networks",
    after_help = "Exit codes: 0 no alarm, 2 alarm raised, 1 error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a recorded readings file against a sensor configuration
    Run(RunArgs),
    /// Generate a seeded synthetic reading stream and evaluate it
    Synth(SynthArgs),
    /// Print a starter configuration
    Init(InitArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Override the engine threshold from the config
    #[arg(long)]
    threshold: Option<f64>,
    /// Report detail: none, survivors, or full
    #[arg(long, value_name = "MODE")]
    trace_mode: Option<TraceMode>,
    /// Override the cluster-size guard (n! chains per cluster of n sensors)
    #[arg(long, value_name = "N")]
    guard: Option<u32>,
    /// Evaluation threads per cluster
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Report format: json or table
    #[arg(long, default_value = "json")]
    format: OutputFormat,
    /// Write the report here instead of stdout
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Write each cluster's coupling matrix as CSV into this directory
    #[arg(long, value_name = "DIR")]
    dump_couplings: Option<PathBuf>,
    /// Abort on the first failing cycle instead of recording it
    #[arg(long)]
    fail_fast: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Sensor configuration file (TOML)
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Readings file (CSV: timestamp,sensor_id,raw_value)
    #[arg(long, value_name = "PATH")]
    readings: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SynthArgs {
    /// Sensor configuration file; or use --clusters to synthesize one
    #[arg(long, value_name = "PATH", conflicts_with = "clusters")]
    config: Option<PathBuf>,
    /// Synthesize a model instead: comma-separated cluster sizes, e.g. 4,3
    #[arg(long, value_name = "SIZES")]
    clusters: Option<String>,
    /// Number of acquisition cycles to generate
    #[arg(long)]
    cycles: u64,
    /// RNG seed; the seed fully determines the stream
    #[arg(long)]
    seed: u64,
    /// Inject one anomaly: sensor:cycle:magnitude, e.g. 2:3:1.0
    #[arg(long, value_name = "SPEC")]
    anomaly: Option<AnomalySpec>,
    /// Idle level as a fraction of each sensor's range
    #[arg(long, default_value_t = DEFAULT_NOMINAL)]
    nominal: f64,
    /// Noise amplitude around the idle level, as a fraction of range
    #[arg(long, default_value_t = DEFAULT_NOISE)]
    noise: f64,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct InitArgs {
    /// Comma-separated cluster sizes for the starter model
    #[arg(long, default_value = "4,3")]
    clusters: String,
    /// Starter threshold
    #[arg(long, default_value_t = 0.135)]
    threshold: f64,
    /// Write the config here instead of stdout
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

fn build_manifest(
    config: ConfigSource,
    readings: ReadingsSource,
    common: CommonArgs,
) -> RunManifest {
    RunManifest {
        config,
        readings,
        threshold_override: common.threshold,
        trace_mode_override: common.trace_mode,
        guard_override: common.guard,
        workers: common.workers,
        fail_fast: common.fail_fast,
        format: common.format,
        output: common.output,
        dump_couplings: common.dump_couplings,
    }
}

fn run(command: Command) -> Result<RunStatus, CliError> {
    match command {
        Command::Run(args) => {
            let manifest = build_manifest(
                ConfigSource::File(args.config),
                ReadingsSource::File(args.readings),
                args.common,
            );
            cli::execute(&manifest)
        }
        Command::Synth(args) => {
            let config = match (&args.config, &args.clusters) {
                (Some(path), None) => ConfigSource::File(path.clone()),
                (None, Some(layout)) => {
                    let threshold = args.common.threshold.ok_or_else(|| {
                        CliError::InvalidFlag {
                            message: "--clusters needs --threshold".into(),
                        }
                    })?;
                    ConfigSource::Synthesized {
                        cluster_sizes: parse_cluster_sizes(layout)?,
                        threshold,
                    }
                }
                _ => {
                    return Err(CliError::InvalidFlag {
                        message: "give exactly one of --config or --clusters".into(),
                    })
                }
            };
            let params = SyntheticParams {
                cycles: args.cycles,
                seed: args.seed,
                nominal: args.nominal,
                noise: args.noise,
                anomaly: args.anomaly,
            };
            let manifest =
                build_manifest(config, ReadingsSource::Synthetic(params), args.common);
            cli::execute(&manifest)
        }
        Command::Init(args) => {
            let specs = cli::synthesize_specs(&parse_cluster_sizes(&args.clusters)?);
            let text = emit_config(&specs, &EngineConfig::new(args.threshold));
            write_output(&text, args.output.as_deref())?;
            Ok(RunStatus::Quiet)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(RunStatus::Quiet) => ExitCode::from(0),
        Ok(RunStatus::Alarm) => ExitCode::from(2),
        Ok(RunStatus::CycleErrors) => ExitCode::from(1),
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(1)
        }
    }
}
