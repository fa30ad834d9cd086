//! Chain evaluation of one sensor sequence with level damping and pruning.
//!
//! A sequence is folded left to right: the first two sensors interact, then
//! the accumulated result interacts with the next raw sensor, and so on
//! until all `n` sensors are merged after `n - 1` steps. Every interaction is
//!
//! `E = a * (x1 / (l1 + 1) + x2 / (l2 + 1))`
//!
//! where `l` is a value's evaluation level: raw sensor readings enter at
//! level 1 wherever they join the chain, and the accumulated value carries
//! the count of sensors merged into it. The coupling `a` for step `k` is the
//! set coupling over all `k + 1` canonical ids involved so far.
//!
//! After each step the value is compared against the safety threshold. Only
//! a value strictly above the threshold proceeds; a tie or drop ends the
//! sequence at that level. A sequence whose every level value exceeds the
//! threshold survives, and any survivor raises the warning alarm.
//!
//! The interaction formula is deliberately isolated in [`evaluate_pair`];
//! the chain never computes it any other way.

use thiserror::Error;

use crate::coupling::{CouplingError, CouplingTable};
use crate::model::CanonicalId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvaluatorError {
    #[error("value {value} outside the unit interval [0, 1]")]
    ValueOutOfRange { value: f64 },
    #[error("a leveled value needs at least one member")]
    NoMembers,
    #[error("sequence has {len} sensors; chain evaluation needs at least 2")]
    SequenceTooShort { len: usize },
    #[error("sequence length {len} does not match cluster size {n}")]
    LengthMismatch { len: usize, n: usize },
    #[error("sequence is not a permutation of canonical ids 1..={n}")]
    NotAPermutation { n: usize },
    #[error("coupling table is sized for {table_n} sensors, cluster has {n}")]
    TableMismatch { table_n: usize, n: usize },
    #[error(transparent)]
    Coupling(#[from] CouplingError),
}

/// A value together with its evaluation level and contributing sensors.
///
/// `level` is 1 exactly when the value is a raw sensor reading; an
/// accumulated value's level is the number of sensors merged into it.
#[derive(Debug, Clone, PartialEq)]
pub struct LeveledValue {
    value: f64,
    level: u32,
    members: Vec<CanonicalId>,
}

impl LeveledValue {
    /// A raw sensor reading, entering the chain at level 1.
    pub fn raw(id: CanonicalId, value: f64) -> Result<Self, EvaluatorError> {
        check_unit(value)?;
        Ok(LeveledValue {
            value,
            level: 1,
            members: vec![id],
        })
    }

    /// An accumulated evaluation result covering `members` sensors.
    pub fn combined(
        value: f64,
        members: impl IntoIterator<Item = CanonicalId>,
    ) -> Result<Self, EvaluatorError> {
        check_unit(value)?;
        let mut members: Vec<CanonicalId> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(EvaluatorError::NoMembers);
        }
        let level = members.len() as u32;
        Ok(LeveledValue {
            value,
            level: if members.len() == 1 { 1 } else { level },
            members,
        })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn members(&self) -> &[CanonicalId] {
        &self.members
    }
}

fn check_unit(value: f64) -> Result<(), EvaluatorError> {
    if !value.is_finite() || !(0.0..=1.0).contains(&value) {
        return Err(EvaluatorError::ValueOutOfRange { value });
    }
    Ok(())
}

#[inline]
fn pair_value(x1: f64, l1: u32, x2: f64, l2: u32, a: f64) -> f64 {
    a * (x1 / (l1 as f64 + 1.0) + x2 / (l2 as f64 + 1.0))
}

/// Interaction of two leveled values under coupling `a`.
pub fn evaluate_pair(x1: &LeveledValue, x2: &LeveledValue, a: f64) -> f64 {
    pair_value(x1.value, x1.level, x2.value, x2.level, a)
}

/// Why a trace ended: it ran all `n - 1` levels above threshold, or it was
/// cut at level `k` because that level's value failed to exceed it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceStatus {
    Survived,
    PrunedAtLevel(u32),
}

/// The evaluation record of one sequence.
///
/// `levels` holds one value per completed step; a trace pruned at level `k`
/// has exactly `k` entries, the last of which failed the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationTrace {
    pub sequence: Vec<CanonicalId>,
    pub levels: Vec<f64>,
    pub status: TraceStatus,
}

impl EvaluationTrace {
    /// Value at the final (n-1)-th level, present only for survivors.
    pub fn final_value(&self) -> Option<f64> {
        match self.status {
            TraceStatus::Survived => self.levels.last().copied(),
            TraceStatus::PrunedAtLevel(_) => None,
        }
    }
}

/// True exactly when every level value strictly exceeded the threshold
/// through the final level.
pub fn survives(trace: &EvaluationTrace) -> bool {
    trace.status == TraceStatus::Survived
}

/// All `n - 1` level values of a sequence, computed without pruning.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainEvaluation {
    pub sequence: Vec<CanonicalId>,
    pub levels: Vec<f64>,
}

impl ChainEvaluation {
    /// Apply threshold pruning after the fact: truncate at the first level
    /// that fails to exceed `threshold`.
    pub fn into_trace(self, threshold: f64) -> EvaluationTrace {
        let mut levels = self.levels;
        for (i, &e) in levels.iter().enumerate() {
            if e <= threshold {
                let keep = i + 1;
                levels.truncate(keep);
                return EvaluationTrace {
                    sequence: self.sequence,
                    levels,
                    status: TraceStatus::PrunedAtLevel(keep as u32),
                };
            }
        }
        EvaluationTrace {
            sequence: self.sequence,
            levels,
            status: TraceStatus::Survived,
        }
    }
}

fn check_sequence(
    sequence: &[CanonicalId],
    values: &[f64],
    table: &CouplingTable,
) -> Result<(), EvaluatorError> {
    let n = values.len();
    if sequence.len() < 2 {
        return Err(EvaluatorError::SequenceTooShort {
            len: sequence.len(),
        });
    }
    if sequence.len() != n {
        return Err(EvaluatorError::LengthMismatch {
            len: sequence.len(),
            n,
        });
    }
    if table.n() != n {
        return Err(EvaluatorError::TableMismatch { table_n: table.n(), n });
    }
    let mut seen = vec![false; n];
    for id in sequence {
        let idx = id.0 as usize;
        if idx < 1 || idx > n || seen[idx - 1] {
            return Err(EvaluatorError::NotAPermutation { n });
        }
        seen[idx - 1] = true;
    }
    for &v in values {
        check_unit(v)?;
    }
    Ok(())
}

#[inline]
fn value_of(values: &[f64], id: CanonicalId) -> f64 {
    values[(id.0 - 1) as usize]
}

/// Evaluate one sequence with threshold pruning.
///
/// `values` are the cluster's normalized readings indexed by canonical id
/// (entry `i - 1` belongs to canonical id `i`); `sequence` must be a
/// permutation of the cluster's canonical ids. Evaluation stops at the first
/// level value that fails to strictly exceed `threshold`.
pub fn evaluate_chain(
    sequence: &[CanonicalId],
    values: &[f64],
    table: &CouplingTable,
    threshold: f64,
) -> Result<EvaluationTrace, EvaluatorError> {
    check_sequence(sequence, values, table)?;
    let n = values.len();
    let mut levels = Vec::with_capacity(n - 1);

    let a = table.set_coupling(&sequence[..2])?;
    let mut acc = pair_value(
        value_of(values, sequence[0]),
        1,
        value_of(values, sequence[1]),
        1,
        a,
    );
    levels.push(acc);

    if acc <= threshold {
        return Ok(EvaluationTrace {
            sequence: sequence.to_vec(),
            levels,
            status: TraceStatus::PrunedAtLevel(1),
        });
    }

    for idx in 2..n {
        let a = table.set_coupling(&sequence[..=idx])?;
        // the accumulated value covers idx sensors, so it sits at level idx
        acc = pair_value(acc, idx as u32, value_of(values, sequence[idx]), 1, a);
        levels.push(acc);
        if acc <= threshold {
            let level = idx as u32;
            return Ok(EvaluationTrace {
                sequence: sequence.to_vec(),
                levels,
                status: TraceStatus::PrunedAtLevel(level),
            });
        }
    }

    Ok(EvaluationTrace {
        sequence: sequence.to_vec(),
        levels,
        status: TraceStatus::Survived,
    })
}

/// Evaluate one sequence to the final level with no pruning.
///
/// Pruning only truncates work: [`ChainEvaluation::into_trace`] applied to
/// this result agrees exactly with [`evaluate_chain`] at the same threshold.
pub fn evaluate_chain_full(
    sequence: &[CanonicalId],
    values: &[f64],
    table: &CouplingTable,
) -> Result<ChainEvaluation, EvaluatorError> {
    check_sequence(sequence, values, table)?;
    let n = values.len();
    let mut levels = Vec::with_capacity(n - 1);

    let a = table.set_coupling(&sequence[..2])?;
    let mut acc = pair_value(
        value_of(values, sequence[0]),
        1,
        value_of(values, sequence[1]),
        1,
        a,
    );
    levels.push(acc);

    for idx in 2..n {
        let a = table.set_coupling(&sequence[..=idx])?;
        acc = pair_value(acc, idx as u32, value_of(values, sequence[idx]), 1, a);
        levels.push(acc);
    }

    Ok(ChainEvaluation {
        sequence: sequence.to_vec(),
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{build_table, table_from_entries};
    use proptest::prelude::*;

    fn cid(v: u32) -> CanonicalId {
        CanonicalId(v)
    }

    fn seq(ids: &[u32]) -> Vec<CanonicalId> {
        ids.iter().map(|&v| cid(v)).collect()
    }

    #[test]
    fn pair_of_zeros_is_zero() {
        let x1 = LeveledValue::raw(cid(1), 0.0).unwrap();
        let x2 = LeveledValue::raw(cid(2), 0.0).unwrap();
        assert_eq!(evaluate_pair(&x1, &x2, 0.7), 0.0);
    }

    #[test]
    fn maximal_pair_is_one() {
        let x1 = LeveledValue::raw(cid(1), 1.0).unwrap();
        let x2 = LeveledValue::raw(cid(2), 1.0).unwrap();
        assert_eq!(evaluate_pair(&x1, &x2, 1.0), 1.0);
    }

    #[test]
    fn pair_hand_value() {
        // 3/4 * (0.8/2 + 0.6/2) = 0.525
        let x1 = LeveledValue::raw(cid(1), 0.8).unwrap();
        let x2 = LeveledValue::raw(cid(2), 0.6).unwrap();
        let e = evaluate_pair(&x1, &x2, 0.75);
        assert!((e - 0.525).abs() < 1e-15, "e = {e}");
    }

    #[test]
    fn leveled_value_levels() {
        let raw = LeveledValue::raw(cid(3), 0.5).unwrap();
        assert_eq!(raw.level(), 1);
        let combined = LeveledValue::combined(0.5, seq(&[1, 2, 3])).unwrap();
        assert_eq!(combined.level(), 3);
        assert!(LeveledValue::raw(cid(1), 1.5).is_err());
        assert!(LeveledValue::raw(cid(1), -0.1).is_err());
    }

    #[test]
    fn three_sensor_chain_hand_values() {
        // all readings 1, sequence (1,2,3):
        //   E1 = a_12 * (1/2 + 1/2) = 2/3
        //   E2 = mean(a_12, a_13, a_23) * (E1/3 + 1/2) = 5/9 * 13/18 = 65/162
        let table = build_table(3);
        let trace = evaluate_chain(&seq(&[1, 2, 3]), &[1.0, 1.0, 1.0], &table, 0.01).unwrap();
        assert_eq!(trace.status, TraceStatus::Survived);
        assert_eq!(trace.levels.len(), 2);
        assert!((trace.levels[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((trace.levels[1] - 65.0 / 162.0).abs() < 1e-15);
        assert!(survives(&trace));
        assert!((trace.final_value().unwrap() - 65.0 / 162.0).abs() < 1e-15);
    }

    #[test]
    fn zero_frame_prunes_at_level_one() {
        let table = build_table(4);
        let trace = evaluate_chain(&seq(&[2, 4, 1, 3]), &[0.0; 4], &table, 0.3).unwrap();
        assert_eq!(trace.status, TraceStatus::PrunedAtLevel(1));
        assert_eq!(trace.levels, vec![0.0]);
        assert!(!survives(&trace));
        assert_eq!(trace.final_value(), None);
    }

    #[test]
    fn two_sensor_chain_survives() {
        // E1 = (1/2) * (1/2 + 1/2) = 0.5 > 0.4
        let table = build_table(2);
        let trace = evaluate_chain(&seq(&[1, 2]), &[1.0, 1.0], &table, 0.4).unwrap();
        assert_eq!(trace.status, TraceStatus::Survived);
        assert_eq!(trace.levels, vec![0.5]);
    }

    #[test]
    fn threshold_tie_prunes() {
        // E1 is exactly 0.5; survival requires strictly exceeding it
        let table = build_table(2);
        let trace = evaluate_chain(&seq(&[1, 2]), &[1.0, 1.0], &table, 0.5).unwrap();
        assert_eq!(trace.status, TraceStatus::PrunedAtLevel(1));
    }

    #[test]
    fn sequence_validation() {
        let table = build_table(3);
        let values = [0.5, 0.5, 0.5];
        assert!(matches!(
            evaluate_chain(&seq(&[1]), &values[..1], &table, 0.1),
            Err(EvaluatorError::SequenceTooShort { len: 1 })
        ));
        assert!(matches!(
            evaluate_chain(&seq(&[1, 2]), &values, &table, 0.1),
            Err(EvaluatorError::LengthMismatch { len: 2, n: 3 })
        ));
        assert!(matches!(
            evaluate_chain(&seq(&[1, 2, 2]), &values, &table, 0.1),
            Err(EvaluatorError::NotAPermutation { n: 3 })
        ));
        assert!(matches!(
            evaluate_chain(&seq(&[1, 2, 4]), &values, &table, 0.1),
            Err(EvaluatorError::NotAPermutation { n: 3 })
        ));
        assert!(matches!(
            evaluate_chain(&seq(&[1, 2, 3]), &[0.5, 1.5, 0.5], &table, 0.1),
            Err(EvaluatorError::ValueOutOfRange { .. })
        ));
        assert!(matches!(
            evaluate_chain(&seq(&[1, 2]), &[0.5, 0.5], &table, 0.1),
            Err(EvaluatorError::TableMismatch { table_n: 3, n: 2 })
        ));
    }

    #[test]
    fn raw_contribution_decreases_with_level() {
        let x = 0.9;
        let mut prev = f64::INFINITY;
        for l in 1..=8u32 {
            let contribution = x / (l as f64 + 1.0);
            assert!(contribution < prev);
            prev = contribution;
        }
    }

    #[test]
    fn accumulated_contributions_decrease_with_unit_couplings() {
        // couplings pinned at 1 and all readings equal: each step's
        // accumulated contribution acc/(level+1) strictly shrinks
        let n = 8;
        let table = table_from_entries(n, vec![1.0; n * n]);
        let sequence: Vec<CanonicalId> = (1..=n as u32).map(cid).collect();
        let chain = evaluate_chain_full(&sequence, &vec![0.7; n], &table).unwrap();
        let mut prev = f64::INFINITY;
        for (i, &e) in chain.levels.iter().enumerate() {
            let level = (i + 2) as f64; // the accumulated value now covers i+2 sensors
            let contribution = e / (level + 1.0);
            assert!(contribution < prev, "level {level}: {contribution} vs {prev}");
            prev = contribution;
        }
    }

    #[test]
    fn deterministic_traces() {
        let table = build_table(5);
        let values = [0.3, 0.8, 0.1, 0.9, 0.4];
        let s = seq(&[3, 1, 5, 2, 4]);
        let a = evaluate_chain(&s, &values, &table, 0.2).unwrap();
        let b = evaluate_chain(&s, &values, &table, 0.2).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a.levels.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.levels.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    fn permutation_from(indices: &[usize], n: usize) -> Vec<CanonicalId> {
        let mut ids: Vec<CanonicalId> = (1..=n as u32).map(cid).collect();
        for (k, &r) in indices.iter().enumerate() {
            ids.swap(k % n, r % n);
        }
        ids
    }

    proptest! {
        #[test]
        fn every_level_value_is_bounded(
            (n, values, swaps) in (2usize..=8).prop_flat_map(|n| {
                (
                    Just(n),
                    proptest::collection::vec(0.0f64..=1.0, n),
                    proptest::collection::vec(proptest::num::usize::ANY, n),
                )
            }),
        ) {
            let table = build_table(n);
            let sequence = permutation_from(&swaps, n);
            let chain = evaluate_chain_full(&sequence, &values, &table).unwrap();
            prop_assert_eq!(chain.levels.len(), n - 1);
            for &e in &chain.levels {
                prop_assert!((0.0..=1.0).contains(&e), "E = {} out of bounds", e);
            }
        }

        #[test]
        fn pruning_only_truncates_work(
            (n, values, swaps) in (2usize..=6).prop_flat_map(|n| {
                (
                    Just(n),
                    proptest::collection::vec(0.0f64..=1.0, n),
                    proptest::collection::vec(proptest::num::usize::ANY, n),
                )
            }),
            threshold in 0.001f64..0.999,
        ) {
            let table = build_table(n);
            let sequence = permutation_from(&swaps, n);
            let pruned = evaluate_chain(&sequence, &values, &table, threshold).unwrap();
            let full = evaluate_chain_full(&sequence, &values, &table)
                .unwrap()
                .into_trace(threshold);
            prop_assert_eq!(pruned, full);
        }
    }
}
