//! Seeded synthetic reading streams for exercising the engine without
//! hardware.
//!
//! Every sensor idles at a nominal fraction of its physical range with a
//! small noise band; an optional anomaly pushes one sensor toward its
//! maximum at one cycle. The seed fully determines the stream: draws happen
//! in cluster order then member order, cycle by cycle, and the anomaly
//! replaces a value after the draw so the rest of the stream is unaffected
//! by its presence.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{ReadingFrame, SensorId, ValidatedModel};

use super::CliError;

pub const DEFAULT_NOMINAL: f64 = 0.3;
pub const DEFAULT_NOISE: f64 = 0.01;

/// One injected anomaly: `sensor:cycle:magnitude`, magnitude in (0, 1].
/// Magnitude 1.0 drives the sensor to exactly its maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnomalySpec {
    pub sensor: SensorId,
    pub cycle: u64,
    pub magnitude: f64,
}

impl FromStr for AnomalySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected sensor:cycle:magnitude, got {s:?}"));
        }
        let sensor: u32 = parts[0]
            .parse()
            .map_err(|_| format!("bad sensor id {:?}", parts[0]))?;
        let cycle: u64 = parts[1]
            .parse()
            .map_err(|_| format!("bad cycle {:?}", parts[1]))?;
        let magnitude: f64 = parts[2]
            .parse()
            .map_err(|_| format!("bad magnitude {:?}", parts[2]))?;
        Ok(AnomalySpec {
            sensor: SensorId(sensor),
            cycle,
            magnitude,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParams {
    pub cycles: u64,
    pub seed: u64,
    /// Idle level as a fraction of each sensor's range.
    pub nominal: f64,
    /// Noise amplitude around the nominal level, as a fraction of range.
    pub noise: f64,
    pub anomaly: Option<AnomalySpec>,
}

impl SyntheticParams {
    pub fn new(cycles: u64, seed: u64) -> Self {
        SyntheticParams {
            cycles,
            seed,
            nominal: DEFAULT_NOMINAL,
            noise: DEFAULT_NOISE,
            anomaly: None,
        }
    }
}

/// Generate a reproducible stream of frames for the model.
pub fn generate_synthetic(
    model: &ValidatedModel,
    params: &SyntheticParams,
) -> Result<Vec<ReadingFrame>, CliError> {
    if !(params.noise >= 0.0
        && params.nominal - params.noise >= 0.0
        && params.nominal + params.noise <= 1.0)
    {
        return Err(CliError::SyntheticParams {
            message: format!(
                "nominal {} with noise {} leaves the unit range",
                params.nominal, params.noise
            ),
        });
    }
    if let Some(anomaly) = &params.anomaly {
        if model.spec(anomaly.sensor).is_none() {
            return Err(CliError::SyntheticParams {
                message: format!("anomaly references unknown sensor {}", anomaly.sensor),
            });
        }
        if anomaly.cycle >= params.cycles {
            return Err(CliError::SyntheticParams {
                message: format!(
                    "anomaly cycle {} outside the run of {} cycles",
                    anomaly.cycle, params.cycles
                ),
            });
        }
        if !(anomaly.magnitude > 0.0 && anomaly.magnitude <= 1.0) {
            return Err(CliError::SyntheticParams {
                message: format!("anomaly magnitude {} outside (0, 1]", anomaly.magnitude),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut frames = Vec::with_capacity(params.cycles as usize);
    for cycle in 0..params.cycles {
        let mut frame = ReadingFrame::new(cycle, []);
        for cluster in model.clusters() {
            for spec in cluster.members() {
                let u: f64 = rng.random();
                let fraction = params.nominal + params.noise * (2.0 * u - 1.0);
                let width = spec.x_max - spec.x_min;
                let mut reading = (spec.x_min + fraction * width).clamp(spec.x_min, spec.x_max);
                if let Some(anomaly) = &params.anomaly {
                    if anomaly.sensor == spec.id && anomaly.cycle == cycle {
                        reading = (1.0 - anomaly.magnitude) * reading
                            + anomaly.magnitude * spec.x_max;
                    }
                }
                frame.values.insert(spec.id, reading);
            }
        }
        frames.push(frame);
    }
    Ok(frames)
}
