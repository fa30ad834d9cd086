//! Report emission: a structured JSON document per run, or a flat CSV table
//! with one row per cycle and cluster.
//!
//! Field order is fixed and survivors are sorted canonically upstream, so a
//! given config and seed always produce byte-identical output, whatever the
//! worker count.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::model::{EngineConfig, SensorId, TraceMode, ValidatedModel};
use crate::orchestrator::{AlarmReport, CycleRecord};

use super::CliError;

#[derive(Debug, Serialize)]
struct ReportDocument<'a> {
    model: ModelSummary,
    cycles: Vec<CycleEntry<'a>>,
}

#[derive(Debug, Serialize)]
struct ModelSummary {
    threshold: f64,
    trace_mode: TraceMode,
    clusters: Vec<ClusterSummary>,
}

#[derive(Debug, Serialize)]
struct ClusterSummary {
    id: String,
    sensors: usize,
    /// Global sensor ids in canonical order; sequence entries in the cycle
    /// reports index into this list (canonical id k is members[k-1]).
    members: Vec<SensorId>,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
enum CycleEntry<'a> {
    Report(&'a AlarmReport),
    Failed { timestamp: u64, error: String },
}

/// Render the run as a JSON document.
pub fn emit_json(
    records: &[CycleRecord],
    model: &ValidatedModel,
    cfg: &EngineConfig,
) -> String {
    let document = ReportDocument {
        model: ModelSummary {
            threshold: cfg.threshold,
            trace_mode: cfg.trace_mode,
            clusters: model
                .clusters()
                .iter()
                .map(|c| ClusterSummary {
                    id: c.id.0.clone(),
                    sensors: c.n(),
                    members: c.member_ids(),
                })
                .collect(),
        },
        cycles: records
            .iter()
            .map(|record| match record {
                CycleRecord::Report(report) => CycleEntry::Report(report),
                CycleRecord::Failed { timestamp, error } => CycleEntry::Failed {
                    timestamp: *timestamp,
                    error: error.to_string(),
                },
            })
            .collect(),
    };
    let mut text =
        serde_json::to_string_pretty(&document).expect("report serialization cannot fail");
    text.push('\n');
    text
}

/// Render the run as a CSV table, one row per cycle and cluster. Failed
/// cycles carry no cluster rows and are reported on stderr by the driver.
pub fn emit_table(records: &[CycleRecord]) -> String {
    let mut out = String::from("timestamp,cluster,evaluated,pruned,survivors,alarm\n");
    for record in records {
        if let CycleRecord::Report(report) = record {
            for cluster in &report.clusters {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    report.timestamp,
                    cluster.cluster,
                    cluster.evaluated,
                    cluster.pruned,
                    cluster.survivors,
                    cluster.alarm
                ));
            }
        }
    }
    out
}

/// Write report text to a file, or stdout when no path is given.
pub fn write_output(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::Io {
                path: "<stdout>".into(),
                source: e,
            })
        }
    }
}

/// Write each cluster's coupling matrix as `<dir>/<cluster>.csv`: a header
/// row of canonical ids, then n rows of n entries.
pub fn dump_couplings(model: &ValidatedModel, dir: &Path) -> Result<Vec<std::path::PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut written = Vec::new();
    for cluster in model.clusters() {
        let table = crate::coupling::build_table(cluster.n());
        let mut text = String::new();
        let header: Vec<String> = (1..=cluster.n()).map(|i| i.to_string()).collect();
        text.push_str(&header.join(","));
        text.push('\n');
        for row in table.rows() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        let file = dir.join(format!("{}.csv", sanitize(&cluster.id.0)));
        std::fs::write(&file, text).map_err(|e| CliError::Io {
            path: file.clone(),
            source: e,
        })?;
        written.push(file);
    }
    Ok(written)
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_config, ReadingFrame, SensorSpec};
    use crate::orchestrator::{run_stream, RunOptions};

    fn setup() -> (ValidatedModel, EngineConfig, Vec<CycleRecord>) {
        let specs = vec![
            SensorSpec::new(1, "a", "", 0.0, 1.0, "c1"),
            SensorSpec::new(2, "b", "", 0.0, 1.0, "c1"),
        ];
        let cfg = EngineConfig::new(0.4);
        let model = validate_config(&specs, &cfg).unwrap();
        let frames = vec![
            ReadingFrame::new(0, [(SensorId(1), 0.1), (SensorId(2), 0.1)]),
            ReadingFrame::new(1, [(SensorId(1), 1.0), (SensorId(2), 1.0)]),
        ];
        let records = run_stream(&frames, &model, &cfg, &RunOptions::default()).unwrap();
        (model, cfg, records)
    }

    #[test]
    fn empty_run_is_still_a_valid_document() {
        let (model, cfg, _) = setup();
        let json = emit_json(&[], &model, &cfg);
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["cycles"].as_array().unwrap().len(), 0);
        assert_eq!(value["model"]["clusters"][0]["sensors"], 2);

        let table = emit_table(&[]);
        assert_eq!(table, "timestamp,cluster,evaluated,pruned,survivors,alarm\n");
    }

    #[test]
    fn json_document_carries_survivors() {
        let (model, cfg, records) = setup();
        let json = emit_json(&records, &model, &cfg);
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        let cycles = value["cycles"].as_array().unwrap();
        assert_eq!(cycles.len(), 2);
        assert_eq!(cycles[0]["global_alarm"], false);
        assert_eq!(cycles[1]["global_alarm"], true);
        assert_eq!(cycles[1]["clusters"][0]["surviving"][0]["sequence"][0], 1);
    }

    #[test]
    fn table_has_one_row_per_cycle_and_cluster() {
        let (_, _, records) = setup();
        let table = emit_table(&records);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "0,c1,2,2,0,false");
        assert_eq!(lines[2], "1,c1,2,0,2,true");
    }

    #[test]
    fn failed_cycles_appear_only_in_json() {
        let (model, cfg, _) = setup();
        let records = vec![CycleRecord::Failed {
            timestamp: 4,
            error: crate::orchestrator::EngineError::FramesOutOfOrder { prev: 4, next: 4 },
        }];
        let json = emit_json(&records, &model, &cfg);
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(value["cycles"][0]["error"].is_string());
        let table = emit_table(&records);
        assert_eq!(table.lines().count(), 1);
    }

    #[test]
    fn coupling_dump_layout() {
        let (model, _, _) = setup();
        let dir = tempfile::tempdir().unwrap();
        let files = dump_couplings(&model, dir.path()).unwrap();
        assert_eq!(files.len(), 1);
        let text = std::fs::read_to_string(&files[0]).unwrap();
        assert_eq!(text, "1,2\n1,0.5\n0.5,1\n");
    }
}
