//! Configuration file format: a TOML document with an `[engine]` section
//! and one `[[sensors]]` table per sensor.
//!
//! ```toml
//! [engine]
//! threshold = 0.135            # required, open interval (0, 1)
//! trace_mode = "survivors"     # none | survivors | full (default survivors)
//! max_sensors_guard = 10       # default 10
//!
//! [[sensors]]
//! id = 1
//! name = "coolant-temp"
//! unit = "degC"
//! min = 0.0
//! max = 350.0
//! cluster = "containment"
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{
    validate_config, ClusterId, EngineConfig, SensorId, SensorSpec, TraceMode,
    DEFAULT_MAX_SENSORS_GUARD,
};

use super::CliError;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    engine: EngineSection,
    sensors: Vec<SensorEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EngineSection {
    threshold: f64,
    #[serde(default = "default_guard")]
    max_sensors_guard: u32,
    #[serde(default)]
    trace_mode: TraceMode,
}

fn default_guard() -> u32 {
    DEFAULT_MAX_SENSORS_GUARD
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SensorEntry {
    id: u32,
    name: String,
    #[serde(default)]
    unit: String,
    min: f64,
    max: f64,
    cluster: String,
}

/// Parse a configuration document and validate it.
pub fn parse_config(text: &str) -> Result<(Vec<SensorSpec>, EngineConfig), CliError> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| CliError::ConfigParse {
        message: e.to_string(),
    })?;
    let specs: Vec<SensorSpec> = file
        .sensors
        .into_iter()
        .map(|s| SensorSpec {
            id: SensorId(s.id),
            name: s.name,
            unit: s.unit,
            x_min: s.min,
            x_max: s.max,
            cluster: ClusterId(s.cluster),
        })
        .collect();
    let cfg = EngineConfig {
        threshold: file.engine.threshold,
        max_sensors_guard: file.engine.max_sensors_guard,
        trace_mode: file.engine.trace_mode,
    };
    validate_config(&specs, &cfg)?;
    Ok((specs, cfg))
}

/// Load and validate a configuration file.
pub fn load_config(path: &Path) -> Result<(Vec<SensorSpec>, EngineConfig), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_config(&text).map_err(|e| e.at_path(path))
}

/// Render specs and engine settings back into the configuration format.
/// Loading the emitted text reproduces the validated model exactly.
pub fn emit_config(specs: &[SensorSpec], cfg: &EngineConfig) -> String {
    let file = ConfigFile {
        engine: EngineSection {
            threshold: cfg.threshold,
            max_sensors_guard: cfg.max_sensors_guard,
            trace_mode: cfg.trace_mode,
        },
        sensors: specs
            .iter()
            .map(|s| SensorEntry {
                id: s.id.0,
                name: s.name.clone(),
                unit: s.unit.clone(),
                min: s.x_min,
                max: s.x_max,
                cluster: s.cluster.0.clone(),
            })
            .collect(),
    };
    toml::to_string(&file).expect("config serialization cannot fail")
}
