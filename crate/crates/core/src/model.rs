//! Domain types, configuration validation, and per-sensor normalization.
//!
//! Raw readings arrive in physical units on heterogeneous scales. Every
//! sensor is mapped onto the same dimensionless unit scale before any
//! interaction is evaluated: `x = (x' - x_min) / (x_max - x_min)`, so a
//! reading at `x_min` becomes 0 and a reading at `x_max` becomes 1.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Stable identifier a sensor carries in configuration and reading files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SensorId(pub u32);

impl std::fmt::Display for SensorId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A sensor's position label on its cluster's circle, 1-based and contiguous.
///
/// Couplings are always computed from canonical ids, never from a sensor's
/// position inside a permuted sequence. Neighboring canonical ids encode
/// stronger relationships, so configuration order is semantically meaningful
/// and is never re-sorted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CanonicalId(pub u32);

impl std::fmt::Display for CanonicalId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Name of a cluster; every cluster is treated as an independent circular
/// sensor network with its own coupling table.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClusterId(pub String);

impl std::fmt::Display for ClusterId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<&str> for ClusterId {
    fn from(s: &str) -> Self {
        ClusterId(s.to_string())
    }
}

/// Identity, physical range and cluster membership of one sensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    pub id: SensorId,
    pub name: String,
    /// Physical unit, informational only; normalization makes scales uniform.
    pub unit: String,
    pub x_min: f64,
    pub x_max: f64,
    pub cluster: ClusterId,
}

impl SensorSpec {
    pub fn new(
        id: u32,
        name: impl Into<String>,
        unit: impl Into<String>,
        x_min: f64,
        x_max: f64,
        cluster: impl Into<String>,
    ) -> Self {
        SensorSpec {
            id: SensorId(id),
            name: name.into(),
            unit: unit.into(),
            x_min,
            x_max,
            cluster: ClusterId(cluster.into()),
        }
    }
}

/// One acquisition cycle's raw readings, keyed by sensor id, in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadingFrame {
    pub timestamp: u64,
    pub values: BTreeMap<SensorId, f64>,
}

impl ReadingFrame {
    pub fn new(timestamp: u64, values: impl IntoIterator<Item = (SensorId, f64)>) -> Self {
        ReadingFrame {
            timestamp,
            values: values.into_iter().collect(),
        }
    }
}

/// One acquisition cycle's readings on the unit scale; every value is in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedFrame {
    pub timestamp: u64,
    values: BTreeMap<SensorId, f64>,
}

impl NormalizedFrame {
    pub fn value(&self, id: SensorId) -> Option<f64> {
        self.values.get(&id).copied()
    }

    pub fn values(&self) -> impl Iterator<Item = (SensorId, f64)> + '_ {
        self.values.iter().map(|(id, v)| (*id, *v))
    }
}

/// How much per-sequence detail evaluation reports retain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TraceMode {
    /// Counts and alarm flags only.
    None,
    /// Surviving sequences with their final values.
    #[default]
    Survivors,
    /// Every sequence with its full chain of level values.
    Full,
}

impl std::fmt::Display for TraceMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TraceMode::None => write!(f, "none"),
            TraceMode::Survivors => write!(f, "survivors"),
            TraceMode::Full => write!(f, "full"),
        }
    }
}

impl std::str::FromStr for TraceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(TraceMode::None),
            "survivors" => Ok(TraceMode::Survivors),
            "full" => Ok(TraceMode::Full),
            other => Err(format!(
                "unknown trace mode {other:?} (expected none, survivors, or full)"
            )),
        }
    }
}

pub const DEFAULT_MAX_SENSORS_GUARD: u32 = 10;

/// Engine-wide evaluation settings.
///
/// The threshold is a single universal cutoff, fixed for all levels and all
/// sensors; per-level thresholds are deliberately not configurable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Safety threshold; a level value must strictly exceed it for the
    /// evaluation to continue. Must lie in the open interval (0, 1).
    pub threshold: f64,
    /// Refuse to evaluate a cluster with more sensors than this (n! growth).
    #[serde(default = "default_guard")]
    pub max_sensors_guard: u32,
    #[serde(default)]
    pub trace_mode: TraceMode,
}

fn default_guard() -> u32 {
    DEFAULT_MAX_SENSORS_GUARD
}

impl EngineConfig {
    pub fn new(threshold: f64) -> Self {
        EngineConfig {
            threshold,
            max_sensors_guard: DEFAULT_MAX_SENSORS_GUARD,
            trace_mode: TraceMode::default(),
        }
    }

    pub fn with_trace_mode(mut self, trace_mode: TraceMode) -> Self {
        self.trace_mode = trace_mode;
        self
    }

    pub fn with_guard(mut self, guard: u32) -> Self {
        self.max_sensors_guard = guard;
        self
    }
}

/// One cluster's members in canonical order: member `k` (0-based) holds
/// canonical id `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub id: ClusterId,
    members: Vec<SensorSpec>,
}

impl Cluster {
    /// Number of sensors in this cluster.
    pub fn n(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[SensorSpec] {
        &self.members
    }

    pub fn member(&self, canonical: CanonicalId) -> Option<&SensorSpec> {
        self.members.get(canonical.0.checked_sub(1)? as usize)
    }

    /// Global sensor ids in canonical order.
    pub fn member_ids(&self) -> Vec<SensorId> {
        self.members.iter().map(|s| s.id).collect()
    }
}

/// Canonicalized sensor model: clusters in configuration order, members in
/// configuration order with canonical ids 1..n assigned per cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedModel {
    clusters: Vec<Cluster>,
}

impl ValidatedModel {
    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn cluster(&self, id: &ClusterId) -> Option<&Cluster> {
        self.clusters.iter().find(|c| &c.id == id)
    }

    pub fn total_sensors(&self) -> usize {
        self.clusters.iter().map(|c| c.n()).sum()
    }

    /// All specs in cluster order; feeding these back through
    /// [`validate_config`] reproduces the model exactly.
    pub fn all_specs(&self) -> Vec<SensorSpec> {
        self.clusters
            .iter()
            .flat_map(|c| c.members.iter().cloned())
            .collect()
    }

    pub fn spec(&self, id: SensorId) -> Option<&SensorSpec> {
        self.clusters
            .iter()
            .flat_map(|c| c.members.iter())
            .find(|s| s.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("no sensors configured")]
    NoSensors,
    #[error("duplicate sensor id {id}")]
    DuplicateSensorId { id: SensorId },
    #[error("sensor {id} ({name}): degenerate range [{x_min}, {x_max}]; x_min must be strictly below x_max")]
    DegenerateRange {
        id: SensorId,
        name: String,
        x_min: f64,
        x_max: f64,
    },
    #[error("threshold {threshold} out of open interval (0, 1)")]
    ThresholdOutOfRange { threshold: f64 },
    #[error("max_sensors_guard must be at least 1")]
    ZeroGuard,
    #[error("cluster {cluster} is empty")]
    EmptyCluster { cluster: ClusterId },
    #[error("frame at cycle {timestamp} is missing a reading for sensor {id}")]
    MissingReading { timestamp: u64, id: SensorId },
    #[error("frame at cycle {timestamp} contains a reading for unconfigured sensor {id}")]
    UnknownSensor { timestamp: u64, id: SensorId },
    #[error("sensor {id} ({name}) reads {value} outside its range [{x_min}, {x_max}] at cycle {timestamp}")]
    ReadingOutOfRange {
        timestamp: u64,
        id: SensorId,
        name: String,
        value: f64,
        x_min: f64,
        x_max: f64,
    },
    #[error("sensor {id} reading at cycle {timestamp} is not a finite number")]
    NonFiniteReading { timestamp: u64, id: SensorId },
}

/// Validate sensor specs and engine settings into a canonical model.
///
/// Clusters appear in configuration order (order of first mention) and their
/// members keep configuration order; canonical ids 1..n are assigned from
/// that order per cluster.
pub fn validate_config(
    specs: &[SensorSpec],
    cfg: &EngineConfig,
) -> Result<ValidatedModel, ModelError> {
    if !(cfg.threshold > 0.0 && cfg.threshold < 1.0) {
        return Err(ModelError::ThresholdOutOfRange {
            threshold: cfg.threshold,
        });
    }
    if cfg.max_sensors_guard == 0 {
        return Err(ModelError::ZeroGuard);
    }
    if specs.is_empty() {
        return Err(ModelError::NoSensors);
    }

    let mut seen = BTreeSet::new();
    for spec in specs {
        if !seen.insert(spec.id) {
            return Err(ModelError::DuplicateSensorId { id: spec.id });
        }
        if !(spec.x_min < spec.x_max) {
            return Err(ModelError::DegenerateRange {
                id: spec.id,
                name: spec.name.clone(),
                x_min: spec.x_min,
                x_max: spec.x_max,
            });
        }
    }

    let mut clusters: Vec<Cluster> = Vec::new();
    for spec in specs {
        match clusters.iter_mut().find(|c| c.id == spec.cluster) {
            Some(cluster) => cluster.members.push(spec.clone()),
            None => clusters.push(Cluster {
                id: spec.cluster.clone(),
                members: vec![spec.clone()],
            }),
        }
    }
    for cluster in &clusters {
        if cluster.members.is_empty() {
            return Err(ModelError::EmptyCluster {
                cluster: cluster.id.clone(),
            });
        }
    }

    Ok(ValidatedModel { clusters })
}

/// Normalization factor `f = 1 / |x_max - x_min|`.
pub fn normalization_factor(spec: &SensorSpec) -> f64 {
    1.0 / (spec.x_max - spec.x_min).abs()
}

/// Map one raw frame onto the unit scale.
///
/// Every configured sensor must be present, no unconfigured sensor may
/// appear, and every reading must lie inside its sensor's physical range.
/// Out-of-range readings are an error, never clamped: clamping would mask a
/// faulty sensor. Computed as `(x' - x_min) / (x_max - x_min)`, which pins
/// the endpoints to exactly 0 and 1 and cannot leave [0, 1].
pub fn normalize_frame(
    frame: &ReadingFrame,
    model: &ValidatedModel,
) -> Result<NormalizedFrame, ModelError> {
    for id in frame.values.keys() {
        if model.spec(*id).is_none() {
            return Err(ModelError::UnknownSensor {
                timestamp: frame.timestamp,
                id: *id,
            });
        }
    }

    let mut values = BTreeMap::new();
    for cluster in model.clusters() {
        for spec in cluster.members() {
            let raw = *frame
                .values
                .get(&spec.id)
                .ok_or(ModelError::MissingReading {
                    timestamp: frame.timestamp,
                    id: spec.id,
                })?;
            if !raw.is_finite() {
                return Err(ModelError::NonFiniteReading {
                    timestamp: frame.timestamp,
                    id: spec.id,
                });
            }
            if raw < spec.x_min || raw > spec.x_max {
                return Err(ModelError::ReadingOutOfRange {
                    timestamp: frame.timestamp,
                    id: spec.id,
                    name: spec.name.clone(),
                    value: raw,
                    x_min: spec.x_min,
                    x_max: spec.x_max,
                });
            }
            values.insert(spec.id, (raw - spec.x_min) / (spec.x_max - spec.x_min));
        }
    }

    Ok(NormalizedFrame {
        timestamp: frame.timestamp,
        values,
    })
}
