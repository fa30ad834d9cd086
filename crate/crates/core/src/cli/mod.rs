//! Run manifests, file ingestion, and report emission for the command-line
//! driver.
//!
//! All behavior is flag-driven; nothing reads the environment. A manifest
//! with a synthetic readings source is reproducible from its seed alone.

mod config;
mod readings;
mod report;
mod synthetic;

pub use config::{emit_config, load_config, parse_config};
pub use readings::{load_readings, parse_readings};
pub use report::{dump_couplings, emit_json, emit_table, write_output};
pub use synthetic::{
    generate_synthetic, AnomalySpec, SyntheticParams, DEFAULT_NOISE, DEFAULT_NOMINAL,
};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::{
    validate_config, EngineConfig, ModelError, SensorSpec, TraceMode,
};
use crate::orchestrator::{run_stream, CycleRecord, EngineError, RunOptions};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config: {message}")]
    ConfigParse { message: String },
    #[error("readings line {line}: {message}")]
    Readings { line: usize, message: String },
    #[error("synthetic stream: {message}")]
    SyntheticParams { message: String },
    #[error("{message}")]
    InvalidFlag { message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

impl CliError {
    fn at_path(self, path: &Path) -> Self {
        match self {
            CliError::ConfigParse { message } => CliError::ConfigParse {
                message: format!("{}: {}", path.display(), message),
            },
            CliError::Readings { line, message } => CliError::Readings {
                line,
                message: format!("{}: {}", path.display(), message),
            },
            other => other,
        }
    }
}

/// Where the sensor model comes from.
#[derive(Debug, Clone)]
pub enum ConfigSource {
    File(PathBuf),
    /// Synthesize a model: one cluster per entry, with that many sensors.
    Synthesized {
        cluster_sizes: Vec<usize>,
        threshold: f64,
    },
}

/// Where the reading frames come from.
#[derive(Debug, Clone)]
pub enum ReadingsSource {
    File(PathBuf),
    Synthetic(SyntheticParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Table,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "table" => Ok(OutputFormat::Table),
            other => Err(format!("unknown format {other:?} (expected json or table)")),
        }
    }
}

/// Everything one run needs; the CLI flags map onto this.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub config: ConfigSource,
    pub readings: ReadingsSource,
    pub threshold_override: Option<f64>,
    pub trace_mode_override: Option<TraceMode>,
    pub guard_override: Option<u32>,
    pub workers: usize,
    pub fail_fast: bool,
    pub format: OutputFormat,
    pub output: Option<PathBuf>,
    pub dump_couplings: Option<PathBuf>,
}

impl RunManifest {
    pub fn new(config: ConfigSource, readings: ReadingsSource) -> Self {
        RunManifest {
            config,
            readings,
            threshold_override: None,
            trace_mode_override: None,
            guard_override: None,
            workers: 1,
            fail_fast: false,
            format: OutputFormat::Json,
            output: None,
            dump_couplings: None,
        }
    }
}

/// How a completed run ended; the process exit code follows from it
/// (0 quiet, 2 alarm, 1 any cycle error).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Quiet,
    Alarm,
    /// The stream finished but at least one cycle failed; errors take
    /// precedence over alarms in the exit code.
    CycleErrors,
}

/// Build synthetic sensor specs: global ids count up from 1, each cluster
/// `cluster-<k>` gets `cluster_sizes[k-1]` sensors ranging over [0, 100].
pub fn synthesize_specs(cluster_sizes: &[usize]) -> Vec<SensorSpec> {
    let mut specs = Vec::new();
    let mut id = 1u32;
    for (k, &size) in cluster_sizes.iter().enumerate() {
        for _ in 0..size {
            specs.push(SensorSpec::new(
                id,
                format!("sensor-{id}"),
                "unit",
                0.0,
                100.0,
                format!("cluster-{}", k + 1),
            ));
            id += 1;
        }
    }
    specs
}

/// Execute one manifest end to end: load and validate the model, obtain
/// frames, run every cycle, emit the report. Failed cycles are reported on
/// stderr and reflected in the returned status.
pub fn execute(manifest: &RunManifest) -> Result<RunStatus, CliError> {
    let (specs, mut cfg) = match &manifest.config {
        ConfigSource::File(path) => load_config(path)?,
        ConfigSource::Synthesized {
            cluster_sizes,
            threshold,
        } => {
            if cluster_sizes.is_empty() {
                return Err(CliError::InvalidFlag {
                    message: "cluster sizes must not be empty".into(),
                });
            }
            (synthesize_specs(cluster_sizes), EngineConfig::new(*threshold))
        }
    };

    if let Some(threshold) = manifest.threshold_override {
        cfg.threshold = threshold;
    }
    if let Some(trace_mode) = manifest.trace_mode_override {
        cfg.trace_mode = trace_mode;
    }
    if let Some(guard) = manifest.guard_override {
        cfg.max_sensors_guard = guard;
    }

    let model = validate_config(&specs, &cfg)?;

    if let Some(dir) = &manifest.dump_couplings {
        dump_couplings(&model, dir)?;
    }

    let frames = match &manifest.readings {
        ReadingsSource::File(path) => load_readings(path)?,
        ReadingsSource::Synthetic(params) => generate_synthetic(&model, params)?,
    };

    let opts = RunOptions {
        workers: manifest.workers.max(1),
        fail_fast: manifest.fail_fast,
    };
    let records = run_stream(&frames, &model, &cfg, &opts)?;

    let mut had_errors = false;
    let mut had_alarm = false;
    for record in &records {
        match record {
            CycleRecord::Failed { timestamp, error } => {
                had_errors = true;
                eprintln!("cycle {timestamp}: {error}");
            }
            CycleRecord::Report(report) => had_alarm |= report.global_alarm,
        }
    }

    let text = match manifest.format {
        OutputFormat::Json => emit_json(&records, &model, &cfg),
        OutputFormat::Table => emit_table(&records),
    };
    write_output(&text, manifest.output.as_deref())?;

    Ok(if had_errors {
        RunStatus::CycleErrors
    } else if had_alarm {
        RunStatus::Alarm
    } else {
        RunStatus::Quiet
    })
}

/// Parse a cluster layout such as `4,3` into sizes.
pub fn parse_cluster_sizes(text: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|part| {
            part.trim().parse::<usize>().map_err(|_| CliError::InvalidFlag {
                message: format!("bad cluster size {part:?} in {text:?}"),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthesized_specs_layout() {
        let specs = synthesize_specs(&[4, 3]);
        assert_eq!(specs.len(), 7);
        assert_eq!(specs[0].cluster.0, "cluster-1");
        assert_eq!(specs[4].cluster.0, "cluster-2");
        assert_eq!(specs[6].id.0, 7);
        let cfg = EngineConfig::new(0.2);
        let model = validate_config(&specs, &cfg).unwrap();
        assert_eq!(model.clusters().len(), 2);
        assert_eq!(model.clusters()[0].n(), 4);
        assert_eq!(model.clusters()[1].n(), 3);
    }

    #[test]
    fn cluster_size_parsing() {
        assert_eq!(parse_cluster_sizes("4,3").unwrap(), vec![4, 3]);
        assert_eq!(parse_cluster_sizes(" 2 , 2 ").unwrap(), vec![2, 2]);
        assert!(parse_cluster_sizes("4,x").is_err());
    }

    #[test]
    fn synthetic_run_end_to_end() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("report.json");
        let mut manifest = RunManifest::new(
            ConfigSource::Synthesized {
                cluster_sizes: vec![2, 2],
                threshold: 0.9,
            },
            ReadingsSource::Synthetic(SyntheticParams::new(3, 11)),
        );
        manifest.output = Some(out.clone());
        let status = execute(&manifest).unwrap();
        assert_eq!(status, RunStatus::Quiet);
        let text = std::fs::read_to_string(&out).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["cycles"].as_array().unwrap().len(), 3);
    }
}
