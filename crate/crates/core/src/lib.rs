//! Exhaustive-search early-warning engine for clustered hybrid sensor
//! networks.
//!
//! Heterogeneous sensors are normalized onto a single unit scale, arranged
//! on a virtual circle per cluster, and every ordering of a cluster's
//! sensors is evaluated as a nearest-neighbor interaction chain with
//! level-damped coupling. Chains that keep every level value strictly above
//! a universal safety threshold survive; any survivor raises the warning
//! alarm for that acquisition cycle. The search is deliberately exhaustive —
//! all `n!` orderings per cluster, no sampling and no heuristics — so the
//! cluster size guard matters.
//!
//! Module map:
//! - [`model`]: domain types, config validation, normalization
//! - [`coupling`]: pairwise and set coupling constants
//! - [`evaluator`]: chain evaluation with threshold pruning
//! - [`enumerator`]: lazy exhaustive sequence streams
//! - [`orchestrator`]: per-cycle driving, alarms, and the reference oracle
//! - [`cli`]: file formats, synthetic frame generation, report emission

pub mod cli;
pub mod coupling;
pub mod enumerator;
pub mod evaluator;
pub mod model;
pub mod orchestrator;

pub use coupling::{build_table, coupling_pair, coupling_set, CouplingTable};
pub use enumerator::{enumerate_sequences, partition_by_prefix, SequenceStream};
pub use evaluator::{
    evaluate_chain, evaluate_chain_full, evaluate_pair, survives, ChainEvaluation,
    EvaluationTrace, LeveledValue, TraceStatus,
};
pub use model::{
    normalization_factor, normalize_frame, validate_config, CanonicalId, Cluster, ClusterId,
    EngineConfig, ModelError, NormalizedFrame, ReadingFrame, SensorId, SensorSpec, TraceMode,
    ValidatedModel,
};
pub use orchestrator::{
    oracle_run_cycle, run_cycle, run_cycle_with_workers, run_stream, AlarmReport, ClusterReport,
    CycleRecord, EngineError, RunOptions, SurvivorRecord,
};
