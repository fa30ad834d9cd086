//! Drives one full evaluation per acquisition cycle.
//!
//! Each cycle: normalize the incoming frame, then for every cluster
//! independently enumerate all sensor orderings, evaluate each chain with
//! threshold pruning, and aggregate the survivors. Any surviving sequence in
//! any cluster raises the alarm. Cycles carry no state between each other.
//!
//! Clusters never interact: each is an independent circular sensor network
//! with its own coupling table. The per-cluster survivor summaries in
//! [`AlarmReport`] are the seam where a cross-cluster aggregation stage
//! could attach later.
//!
//! [`oracle_run_cycle`] re-implements the whole contract from scratch —
//! reference permutation generation, no pruning, the interaction and
//! weight formulas transcribed directly — and exists solely to check
//! [`run_cycle`] against.

use itertools::Itertools;
use serde::Serialize;
use thiserror::Error;

use crate::coupling::{build_table, CouplingTable};
use crate::enumerator::{
    enumerate_sequences, partition_by_prefix, EnumeratorError, SequenceStream,
};
use crate::evaluator::{evaluate_chain, EvaluatorError, TraceStatus};
use crate::model::{
    normalize_frame, CanonicalId, Cluster, ClusterId, EngineConfig, ModelError, NormalizedFrame,
    ReadingFrame, TraceMode, ValidatedModel,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Evaluator(#[from] EvaluatorError),
    #[error(transparent)]
    Enumerator(#[from] EnumeratorError),
    #[error("cluster {cluster} has {n} sensors, above the guard of {guard}; {factorial} chains per cycle — raise the guard explicitly to proceed")]
    GuardExceeded {
        cluster: ClusterId,
        n: usize,
        guard: u32,
        factorial: u64,
    },
    #[error("cluster {cluster} has {n} sensors; the reference oracle is limited to 8")]
    OracleClusterTooLarge { cluster: ClusterId, n: usize },
    #[error("frames out of order: cycle {next} follows cycle {prev}")]
    FramesOutOfOrder { prev: u64, next: u64 },
}

/// One cluster with its coupling table, ready for evaluation.
#[derive(Debug, Clone)]
pub struct ClusterModel {
    pub cluster: Cluster,
    pub table: CouplingTable,
}

impl ClusterModel {
    pub fn new(cluster: &Cluster) -> Self {
        ClusterModel {
            cluster: cluster.clone(),
            table: build_table(cluster.n()),
        }
    }

    /// The cluster's normalized readings in canonical order.
    fn values_from(&self, frame: &NormalizedFrame) -> Vec<f64> {
        self.cluster
            .members()
            .iter()
            .map(|spec| {
                frame
                    .value(spec.id)
                    .expect("normalized frame covers all configured sensors")
            })
            .collect()
    }
}

/// A sequence that ran all levels above threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivorRecord {
    pub sequence: Vec<CanonicalId>,
    #[serde(rename = "final")]
    pub final_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
}

/// Full evaluation detail of one sequence, kept in `full` trace mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub sequence: Vec<CanonicalId>,
    pub levels: Vec<f64>,
    pub survived: bool,
}

/// Per-cluster outcome of one cycle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterReport {
    pub cluster: ClusterId,
    pub sensors: usize,
    pub evaluated: u64,
    pub pruned: u64,
    pub survivors: u64,
    pub alarm: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub surviving: Option<Vec<SurvivorRecord>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub traces: Option<Vec<TraceRecord>>,
}

/// Outcome of one acquisition cycle across all clusters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlarmReport {
    pub timestamp: u64,
    pub global_alarm: bool,
    pub clusters: Vec<ClusterReport>,
}

#[derive(Debug, Default)]
struct Tally {
    evaluated: u64,
    pruned: u64,
    survivors: Vec<SurvivorRecord>,
    traces: Vec<TraceRecord>,
}

fn tally_stream(
    stream: SequenceStream,
    values: &[f64],
    table: &CouplingTable,
    cfg: &EngineConfig,
) -> Result<Tally, EvaluatorError> {
    let mut tally = Tally::default();
    let keep_survivors = cfg.trace_mode != TraceMode::None;
    let keep_traces = cfg.trace_mode == TraceMode::Full;
    for sequence in stream {
        let trace = evaluate_chain(&sequence, values, table, cfg.threshold)?;
        tally.evaluated += 1;
        match trace.status {
            TraceStatus::Survived => {
                if keep_survivors {
                    tally.survivors.push(SurvivorRecord {
                        sequence: trace.sequence.clone(),
                        final_value: *trace.levels.last().expect("survivor has levels"),
                        levels: keep_traces.then(|| trace.levels.clone()),
                    });
                }
            }
            TraceStatus::PrunedAtLevel(_) => tally.pruned += 1,
        }
        if keep_traces {
            tally.traces.push(TraceRecord {
                sequence: trace.sequence,
                levels: trace.levels,
                survived: trace.status == TraceStatus::Survived,
            });
        }
    }
    Ok(tally)
}

fn empty_cluster_report(cluster: &Cluster, cfg: &EngineConfig) -> ClusterReport {
    ClusterReport {
        cluster: cluster.id.clone(),
        sensors: cluster.n(),
        evaluated: 0,
        pruned: 0,
        survivors: 0,
        alarm: false,
        surviving: (cfg.trace_mode != TraceMode::None).then(Vec::new),
        traces: (cfg.trace_mode == TraceMode::Full).then(Vec::new),
    }
}

fn assemble_cluster_report(
    cluster: &Cluster,
    cfg: &EngineConfig,
    tallies: Vec<Tally>,
) -> ClusterReport {
    let mut evaluated = 0;
    let mut pruned = 0;
    let mut survivors = Vec::new();
    let mut traces = Vec::new();
    for tally in tallies {
        evaluated += tally.evaluated;
        pruned += tally.pruned;
        survivors.extend(tally.survivors);
        traces.extend(tally.traces);
    }
    // canonical order before reporting keeps parallel and serial runs
    // bit-identical
    survivors.sort_by(|a, b| a.sequence.cmp(&b.sequence));
    traces.sort_by(|a, b| a.sequence.cmp(&b.sequence));
    let survivor_count = survivors.len() as u64;
    ClusterReport {
        cluster: cluster.id.clone(),
        sensors: cluster.n(),
        evaluated,
        pruned,
        survivors: survivor_count,
        alarm: survivor_count > 0,
        surviving: (cfg.trace_mode != TraceMode::None).then_some(survivors),
        traces: (cfg.trace_mode == TraceMode::Full).then_some(traces),
    }
}

fn evaluate_cluster(
    cm: &ClusterModel,
    frame: &NormalizedFrame,
    cfg: &EngineConfig,
    workers: usize,
) -> Result<ClusterReport, EngineError> {
    let n = cm.cluster.n();
    if n < 2 {
        // a single sensor forms no pair: nothing to evaluate, no alarm
        return Ok(empty_cluster_report(&cm.cluster, cfg));
    }
    let values = cm.values_from(frame);

    let tallies = if workers <= 1 {
        vec![tally_stream(enumerate_sequences(n), &values, &cm.table, cfg)?]
    } else {
        let streams = partition_by_prefix(n, 1)?;
        let bucket_count = workers.min(streams.len());
        let mut buckets: Vec<Vec<(usize, SequenceStream)>> =
            (0..bucket_count).map(|_| Vec::new()).collect();
        for (i, stream) in streams.into_iter().enumerate() {
            buckets[i % bucket_count].push((i, stream));
        }
        let values = &values;
        let table = &cm.table;
        let mut indexed: Vec<(usize, Tally)> = std::thread::scope(|scope| {
            let handles: Vec<_> = buckets
                .into_iter()
                .map(|bucket| {
                    scope.spawn(move || -> Result<Vec<(usize, Tally)>, EvaluatorError> {
                        bucket
                            .into_iter()
                            .map(|(i, stream)| {
                                Ok((i, tally_stream(stream, values, table, cfg)?))
                            })
                            .collect()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("evaluation worker panicked"))
                .collect::<Result<Vec<_>, _>>()
        })?
        .into_iter()
        .flatten()
        .collect();
        indexed.sort_by_key(|(i, _)| *i);
        indexed.into_iter().map(|(_, t)| t).collect()
    };

    Ok(assemble_cluster_report(&cm.cluster, cfg, tallies))
}

fn check_guard(model: &ValidatedModel, cfg: &EngineConfig) -> Result<(), EngineError> {
    for cluster in model.clusters() {
        let n = cluster.n();
        if n as u64 > cfg.max_sensors_guard as u64 {
            return Err(EngineError::GuardExceeded {
                cluster: cluster.id.clone(),
                n,
                guard: cfg.max_sensors_guard,
                factorial: crate::enumerator::factorial(n),
            });
        }
    }
    Ok(())
}

/// Evaluate one acquisition cycle serially.
pub fn run_cycle(
    frame: &ReadingFrame,
    model: &ValidatedModel,
    cfg: &EngineConfig,
) -> Result<AlarmReport, EngineError> {
    run_cycle_with_workers(frame, model, cfg, 1)
}

/// Evaluate one acquisition cycle, spreading each cluster's sequence
/// streams over up to `workers` threads.
///
/// The report is bit-identical for every worker count: sub-streams are
/// merged in lexicographic prefix order and survivors sorted canonically.
pub fn run_cycle_with_workers(
    frame: &ReadingFrame,
    model: &ValidatedModel,
    cfg: &EngineConfig,
    workers: usize,
) -> Result<AlarmReport, EngineError> {
    check_guard(model, cfg)?;
    let normalized = normalize_frame(frame, model)?;
    let clusters = model
        .clusters()
        .iter()
        .map(|cluster| {
            evaluate_cluster(&ClusterModel::new(cluster), &normalized, cfg, workers)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let global_alarm = clusters.iter().any(|c| c.alarm);
    Ok(AlarmReport {
        timestamp: frame.timestamp,
        global_alarm,
        clusters,
    })
}

/// Reference implementation of [`run_cycle`] for verification.
///
/// Permutations come from the itertools reference generator, every chain is
/// computed to its final level with no pruning, and the interaction weight
/// and value formulas are transcribed directly here rather than shared with
/// the engine. Limited to 8 sensors per cluster.
pub fn oracle_run_cycle(
    frame: &ReadingFrame,
    model: &ValidatedModel,
    cfg: &EngineConfig,
) -> Result<AlarmReport, EngineError> {
    for cluster in model.clusters() {
        if cluster.n() > 8 {
            return Err(EngineError::OracleClusterTooLarge {
                cluster: cluster.id.clone(),
                n: cluster.n(),
            });
        }
    }
    check_guard(model, cfg)?;
    let normalized = normalize_frame(frame, model)?;

    let mut clusters = Vec::new();
    for cluster in model.clusters() {
        let n = cluster.n();
        if n < 2 {
            clusters.push(empty_cluster_report(cluster, cfg));
            continue;
        }
        let values: Vec<f64> = cluster
            .members()
            .iter()
            .map(|spec| normalized.value(spec.id).expect("complete frame"))
            .collect();

        let mut tally = Tally::default();
        for perm in (1..=n as u32).permutations(n) {
            let levels = oracle_levels(&perm, &values, n);
            let failed_at = levels.iter().position(|&e| e <= cfg.threshold);
            tally.evaluated += 1;
            let sequence: Vec<CanonicalId> = perm.iter().copied().map(CanonicalId).collect();
            match failed_at {
                None => {
                    if cfg.trace_mode != TraceMode::None {
                        tally.survivors.push(SurvivorRecord {
                            sequence: sequence.clone(),
                            final_value: *levels.last().expect("n >= 2"),
                            levels: (cfg.trace_mode == TraceMode::Full)
                                .then(|| levels.clone()),
                        });
                    }
                    if cfg.trace_mode == TraceMode::Full {
                        tally.traces.push(TraceRecord {
                            sequence,
                            levels,
                            survived: true,
                        });
                    }
                }
                Some(i) => {
                    tally.pruned += 1;
                    if cfg.trace_mode == TraceMode::Full {
                        let mut levels = levels;
                        levels.truncate(i + 1);
                        tally.traces.push(TraceRecord {
                            sequence,
                            levels,
                            survived: false,
                        });
                    }
                }
            }
        }
        clusters.push(assemble_cluster_report(cluster, cfg, vec![tally]));
    }

    let global_alarm = clusters.iter().any(|c| c.alarm);
    Ok(AlarmReport {
        timestamp: frame.timestamp,
        global_alarm,
        clusters,
    })
}

/// All `n - 1` level values of one permutation, straight from the formulas:
/// pairwise weight `1 - |i - j| / n`, set weight the mean over all pairs,
/// interaction `a * (x1/(l1+1) + x2/(l2+1))`.
fn oracle_levels(perm: &[u32], values: &[f64], n: usize) -> Vec<f64> {
    let x = |id: u32| values[(id - 1) as usize];
    let pair_weight = |i: u32, j: u32| 1.0 - i.abs_diff(j) as f64 / n as f64;
    let set_weight = |ids: &[u32]| {
        let mut w = 0.0;
        let mut b = 0u64;
        for p in 0..ids.len() {
            for q in p + 1..ids.len() {
                w += pair_weight(ids[p], ids[q]);
                b += 1;
            }
        }
        w / b as f64
    };

    let mut levels = Vec::with_capacity(n - 1);
    let mut acc =
        pair_weight(perm[0], perm[1]) * (x(perm[0]) / 2.0 + x(perm[1]) / 2.0);
    levels.push(acc);
    for k in 2..n {
        let a = set_weight(&perm[..=k]);
        acc = a * (acc / (k as f64 + 1.0) + x(perm[k]) / 2.0);
        levels.push(acc);
    }
    levels
}

/// Options for processing a stream of frames.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub workers: usize,
    /// Abort on the first failing cycle instead of recording it and moving on.
    pub fail_fast: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            workers: 1,
            fail_fast: false,
        }
    }
}

/// Outcome of one cycle within a stream: a report, or the error that cycle
/// produced.
#[derive(Debug, Clone, PartialEq)]
pub enum CycleRecord {
    Report(AlarmReport),
    Failed { timestamp: u64, error: EngineError },
}

impl CycleRecord {
    pub fn timestamp(&self) -> u64 {
        match self {
            CycleRecord::Report(r) => r.timestamp,
            CycleRecord::Failed { timestamp, .. } => *timestamp,
        }
    }

    pub fn report(&self) -> Option<&AlarmReport> {
        match self {
            CycleRecord::Report(r) => Some(r),
            CycleRecord::Failed { .. } => None,
        }
    }
}

/// Process frames in order, one report per frame. Cycles are independent;
/// a failing cycle is recorded in place and the stream continues unless
/// `fail_fast` is set.
pub fn run_stream(
    frames: &[ReadingFrame],
    model: &ValidatedModel,
    cfg: &EngineConfig,
    opts: &RunOptions,
) -> Result<Vec<CycleRecord>, EngineError> {
    for pair in frames.windows(2) {
        if pair[1].timestamp <= pair[0].timestamp {
            return Err(EngineError::FramesOutOfOrder {
                prev: pair[0].timestamp,
                next: pair[1].timestamp,
            });
        }
    }
    let mut records = Vec::with_capacity(frames.len());
    for frame in frames {
        match run_cycle_with_workers(frame, model, cfg, opts.workers) {
            Ok(report) => records.push(CycleRecord::Report(report)),
            Err(error) if !opts.fail_fast => records.push(CycleRecord::Failed {
                timestamp: frame.timestamp,
                error,
            }),
            Err(error) => return Err(error),
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_config, SensorId, SensorSpec};

    fn single_cluster_model(n: usize, threshold: f64) -> (ValidatedModel, EngineConfig) {
        let specs: Vec<SensorSpec> = (1..=n as u32)
            .map(|i| SensorSpec::new(i, format!("s{i}"), "", 0.0, 1.0, "main"))
            .collect();
        let cfg = EngineConfig::new(threshold);
        let model = validate_config(&specs, &cfg).unwrap();
        (model, cfg)
    }

    fn uniform_frame(n: usize, value: f64, timestamp: u64) -> ReadingFrame {
        ReadingFrame::new(
            timestamp,
            (1..=n as u32).map(|i| (SensorId(i), value)),
        )
    }

    #[test]
    fn zero_frame_never_alarms() {
        let (model, cfg) = single_cluster_model(4, 0.2);
        let report = run_cycle(&uniform_frame(4, 0.0, 0), &model, &cfg).unwrap();
        assert!(!report.global_alarm);
        assert_eq!(report.clusters[0].evaluated, 24);
        assert_eq!(report.clusters[0].pruned, 24);
        assert_eq!(report.clusters[0].survivors, 0);
        // everything prunes at level 1 since E1 = 0
    }

    #[test]
    fn two_sensor_pair_alarms_symmetrically() {
        let (model, cfg) = single_cluster_model(2, 0.4);
        let report = run_cycle(&uniform_frame(2, 1.0, 0), &model, &cfg).unwrap();
        assert!(report.global_alarm);
        let cluster = &report.clusters[0];
        assert_eq!(cluster.evaluated, 2);
        assert_eq!(cluster.survivors, 2);
        let surviving = cluster.surviving.as_ref().unwrap();
        for s in surviving {
            assert!((s.final_value - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn counts_always_add_up() {
        let (model, cfg) = single_cluster_model(5, 0.15);
        let frame = ReadingFrame::new(
            0,
            (1..=5u32).map(|i| (SensorId(i), 0.1 + 0.18 * i as f64)),
        );
        let report = run_cycle(&frame, &model, &cfg).unwrap();
        let cluster = &report.clusters[0];
        assert_eq!(cluster.evaluated, 120); // 5! exactly
        assert_eq!(cluster.pruned + cluster.survivors, cluster.evaluated);
        assert_eq!(cluster.alarm, cluster.survivors > 0);
    }

    #[test]
    fn single_sensor_cluster_is_quiet() {
        let specs = vec![SensorSpec::new(1, "only", "", 0.0, 1.0, "solo")];
        let cfg = EngineConfig::new(0.1);
        let model = validate_config(&specs, &cfg).unwrap();
        let frame = ReadingFrame::new(0, [(SensorId(1), 1.0)]);
        for report in [
            run_cycle(&frame, &model, &cfg).unwrap(),
            oracle_run_cycle(&frame, &model, &cfg).unwrap(),
        ] {
            assert!(!report.global_alarm);
            assert_eq!(report.clusters[0].evaluated, 0);
            assert_eq!(report.clusters[0].survivors, 0);
        }
    }

    #[test]
    fn guard_refuses_oversized_clusters() {
        let (model, mut cfg) = single_cluster_model(4, 0.2);
        cfg.max_sensors_guard = 3;
        let err = run_cycle(&uniform_frame(4, 0.5, 0), &model, &cfg).unwrap_err();
        assert!(matches!(err, EngineError::GuardExceeded { n: 4, guard: 3, .. }));

        cfg.max_sensors_guard = 4;
        assert!(run_cycle(&uniform_frame(4, 0.5, 0), &model, &cfg).is_ok());
    }

    #[test]
    fn two_clusters_evaluate_independently() {
        let mut specs: Vec<SensorSpec> = (1..=3u32)
            .map(|i| SensorSpec::new(i, format!("a{i}"), "", 0.0, 1.0, "alpha"))
            .collect();
        specs.extend(
            (4..=5u32).map(|i| SensorSpec::new(i, format!("b{i}"), "", 0.0, 1.0, "beta")),
        );
        let cfg = EngineConfig::new(0.3);
        let model = validate_config(&specs, &cfg).unwrap();
        let frame = ReadingFrame::new(
            0,
            [
                (SensorId(1), 0.2),
                (SensorId(2), 0.4),
                (SensorId(3), 0.6),
                (SensorId(4), 1.0),
                (SensorId(5), 1.0),
            ],
        );
        let combined = run_cycle(&frame, &model, &cfg).unwrap();

        // each cluster alone produces the same per-cluster report
        let alpha_model = validate_config(&specs[..3], &cfg).unwrap();
        let alpha_frame = ReadingFrame::new(
            0,
            [(SensorId(1), 0.2), (SensorId(2), 0.4), (SensorId(3), 0.6)],
        );
        let alpha = run_cycle(&alpha_frame, &alpha_model, &cfg).unwrap();
        assert_eq!(combined.clusters[0], alpha.clusters[0]);

        let beta_model = validate_config(&specs[3..], &cfg).unwrap();
        let beta_frame = ReadingFrame::new(0, [(SensorId(4), 1.0), (SensorId(5), 1.0)]);
        let beta = run_cycle(&beta_frame, &beta_model, &cfg).unwrap();
        assert_eq!(combined.clusters[1], beta.clusters[0]);

        assert_eq!(
            combined.global_alarm,
            combined.clusters.iter().any(|c| c.alarm)
        );
    }

    #[test]
    fn cluster_declaration_order_does_not_change_contents() {
        let alpha: Vec<SensorSpec> = (1..=3u32)
            .map(|i| SensorSpec::new(i, format!("a{i}"), "", 0.0, 1.0, "alpha"))
            .collect();
        let beta: Vec<SensorSpec> = (4..=6u32)
            .map(|i| SensorSpec::new(i, format!("b{i}"), "", 0.0, 1.0, "beta"))
            .collect();
        let cfg = EngineConfig::new(0.25);

        let mut ab = alpha.clone();
        ab.extend(beta.clone());
        let mut ba = beta;
        ba.extend(alpha);

        let frame = ReadingFrame::new(
            0,
            (1..=6u32).map(|i| (SensorId(i), 0.1 * i as f64 + 0.3)),
        );
        let model_ab = validate_config(&ab, &cfg).unwrap();
        let model_ba = validate_config(&ba, &cfg).unwrap();
        let report_ab = run_cycle(&frame, &model_ab, &cfg).unwrap();
        let report_ba = run_cycle(&frame, &model_ba, &cfg).unwrap();

        for cluster in &report_ab.clusters {
            let other = report_ba
                .clusters
                .iter()
                .find(|c| c.cluster == cluster.cluster)
                .unwrap();
            assert_eq!(cluster, other);
        }
        assert_eq!(report_ab.global_alarm, report_ba.global_alarm);
    }

    #[test]
    fn oracle_agrees_on_a_small_cluster() {
        let (model, cfg) = single_cluster_model(4, 0.12);
        let frame = ReadingFrame::new(
            3,
            [
                (SensorId(1), 0.9),
                (SensorId(2), 0.35),
                (SensorId(3), 0.62),
                (SensorId(4), 0.48),
            ],
        );
        let engine = run_cycle(&frame, &model, &cfg).unwrap();
        let oracle = oracle_run_cycle(&frame, &model, &cfg).unwrap();
        assert_eq!(engine.global_alarm, oracle.global_alarm);
        let (e, o) = (&engine.clusters[0], &oracle.clusters[0]);
        assert_eq!(e.evaluated, o.evaluated);
        assert_eq!(e.survivors, o.survivors);
        let (es, os) = (e.surviving.as_ref().unwrap(), o.surviving.as_ref().unwrap());
        assert_eq!(es.len(), os.len());
        for (a, b) in es.iter().zip(os) {
            assert_eq!(a.sequence, b.sequence);
            assert!((a.final_value - b.final_value).abs() <= 1e-12);
        }
    }

    #[test]
    fn oracle_rejects_large_clusters() {
        let (model, mut cfg) = single_cluster_model(9, 0.2);
        cfg.max_sensors_guard = 12;
        let err = oracle_run_cycle(&uniform_frame(9, 0.5, 0), &model, &cfg).unwrap_err();
        assert!(matches!(err, EngineError::OracleClusterTooLarge { n: 9, .. }));
    }

    #[test]
    fn worker_counts_do_not_change_the_report() {
        let (model, cfg) = single_cluster_model(5, 0.14);
        let frame = ReadingFrame::new(
            0,
            (1..=5u32).map(|i| (SensorId(i), 0.15 * i as f64)),
        );
        let serial = run_cycle_with_workers(&frame, &model, &cfg, 1).unwrap();
        for workers in [2, 3, 4, 8] {
            let parallel = run_cycle_with_workers(&frame, &model, &cfg, workers).unwrap();
            assert_eq!(serial, parallel, "workers = {workers}");
        }
    }

    #[test]
    fn raising_the_threshold_never_adds_survivors() {
        let (model, _) = single_cluster_model(4, 0.5);
        let frame = ReadingFrame::new(
            0,
            (1..=4u32).map(|i| (SensorId(i), 0.2 + 0.2 * i as f64)),
        );
        let survivors_at = |threshold: f64| -> Vec<Vec<CanonicalId>> {
            let cfg = EngineConfig::new(threshold);
            run_cycle(&frame, &model, &cfg).unwrap().clusters[0]
                .surviving
                .clone()
                .unwrap()
                .into_iter()
                .map(|s| s.sequence)
                .collect()
        };
        let low = survivors_at(0.05);
        let high = survivors_at(0.2);
        for seq in &high {
            assert!(low.contains(seq), "{seq:?} survived only the higher threshold");
        }
    }

    #[test]
    fn stream_of_identical_frames_is_stateless() {
        let (model, cfg) = single_cluster_model(3, 0.2);
        let frames: Vec<ReadingFrame> = (0..4)
            .map(|t| uniform_frame(3, 0.8, t))
            .collect();
        let records = run_stream(&frames, &model, &cfg, &RunOptions::default()).unwrap();
        assert_eq!(records.len(), 4);
        let first = records[0].report().unwrap();
        for record in &records {
            let report = record.report().unwrap();
            assert_eq!(report.clusters, first.clusters);
        }
    }

    #[test]
    fn empty_stream_is_empty() {
        let (model, cfg) = single_cluster_model(3, 0.2);
        let records = run_stream(&[], &model, &cfg, &RunOptions::default()).unwrap();
        assert!(records.is_empty());
    }

    #[test]
    fn failing_cycle_is_isolated_unless_fail_fast() {
        let (model, cfg) = single_cluster_model(2, 0.2);
        let frames = vec![
            uniform_frame(2, 0.5, 0),
            uniform_frame(2, 1.5, 1), // out of range
            uniform_frame(2, 0.5, 2),
        ];
        let records = run_stream(&frames, &model, &cfg, &RunOptions::default()).unwrap();
        assert_eq!(records.len(), 3);
        assert!(records[0].report().is_some());
        assert!(matches!(records[1], CycleRecord::Failed { timestamp: 1, .. }));
        assert!(records[2].report().is_some());

        let opts = RunOptions {
            fail_fast: true,
            ..RunOptions::default()
        };
        assert!(run_stream(&frames, &model, &cfg, &opts).is_err());
    }

    #[test]
    fn out_of_order_frames_rejected() {
        let (model, cfg) = single_cluster_model(2, 0.2);
        let frames = vec![uniform_frame(2, 0.5, 5), uniform_frame(2, 0.5, 5)];
        let err = run_stream(&frames, &model, &cfg, &RunOptions::default()).unwrap_err();
        assert!(matches!(err, EngineError::FramesOutOfOrder { prev: 5, next: 5 }));
    }
}
