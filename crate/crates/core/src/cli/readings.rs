//! Readings file format: CSV with one row per sensor per cycle.
//!
//! ```text
//! timestamp,sensor_id,raw_value
//! 0,1,23.5
//! 0,2,1.013
//! 1,1,23.7
//! ...
//! ```
//!
//! Rows are grouped into frames by timestamp; timestamps must be strictly
//! increasing and a frame's rows must be contiguous. Completeness against
//! the configured sensor set is checked per cycle at evaluation time, not
//! here, so one bad cycle cannot take down the rest of a run.

use std::path::Path;

use serde::Deserialize;

use crate::model::{ReadingFrame, SensorId};

use super::CliError;

#[derive(Debug, Deserialize)]
struct Row {
    timestamp: u64,
    sensor_id: u32,
    raw_value: f64,
}

/// Parse readings CSV from any reader.
pub fn parse_readings<R: std::io::Read>(reader: R) -> Result<Vec<ReadingFrame>, CliError> {
    let mut csv_reader = csv::Reader::from_reader(reader);
    let mut frames: Vec<ReadingFrame> = Vec::new();
    for (i, row) in csv_reader.deserialize::<Row>().enumerate() {
        let line = i + 2; // header is line 1
        let row = row.map_err(|e| CliError::Readings {
            line,
            message: e.to_string(),
        })?;
        match frames.last_mut() {
            Some(frame) if frame.timestamp == row.timestamp => {
                if frame
                    .values
                    .insert(SensorId(row.sensor_id), row.raw_value)
                    .is_some()
                {
                    return Err(CliError::Readings {
                        line,
                        message: format!(
                            "duplicate reading for sensor {} at cycle {}",
                            row.sensor_id, row.timestamp
                        ),
                    });
                }
            }
            Some(frame) if frame.timestamp > row.timestamp => {
                return Err(CliError::Readings {
                    line,
                    message: format!(
                        "timestamps must be strictly increasing: cycle {} after cycle {}",
                        row.timestamp, frame.timestamp
                    ),
                });
            }
            _ => {
                frames.push(ReadingFrame::new(
                    row.timestamp,
                    [(SensorId(row.sensor_id), row.raw_value)],
                ));
            }
        }
    }
    Ok(frames)
}

/// Load a readings file.
pub fn load_readings(path: &Path) -> Result<Vec<ReadingFrame>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_readings(file).map_err(|e| e.at_path(path))
}
