//! Exhaustive, lazy enumeration of sensor orderings.
//!
//! Every sensor must get its chance to open a chain and to close one, so a
//! cluster of `n` sensors is evaluated over all `n!` orderings. Sequences
//! are produced lexicographically by canonical id, one at a time, with O(n)
//! generator state; the full factorial space is never materialized.
//!
//! [`partition_by_prefix`] splits the space into disjoint sub-streams (one
//! per ordered prefix) whose concatenation in prefix order reproduces the
//! full lexicographic stream exactly, which is what makes parallel and
//! serial runs bit-identical.

use thiserror::Error;

use crate::model::CanonicalId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumeratorError {
    #[error("prefix length {prefix_len} invalid for {n} sensors (need 1 <= prefix_len < n)")]
    InvalidPrefixLen { n: usize, prefix_len: usize },
}

/// A lazy stream of sensor orderings: a fixed prefix followed by every
/// permutation of the remaining ids in lexicographic order.
#[derive(Debug, Clone)]
pub struct SequenceStream {
    n: usize,
    prefix: Vec<CanonicalId>,
    suffix: Vec<CanonicalId>,
    started: bool,
    done: bool,
    emitted: u64,
}

impl SequenceStream {
    fn new(n: usize, prefix: Vec<CanonicalId>, suffix: Vec<CanonicalId>) -> Self {
        let done = n == 0;
        SequenceStream {
            n,
            prefix,
            suffix,
            started: false,
            done,
            emitted: 0,
        }
    }

    /// Cluster size this stream enumerates over.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Fixed prefix shared by every sequence of this stream.
    pub fn prefix(&self) -> &[CanonicalId] {
        &self.prefix
    }

    /// Sequences produced so far.
    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    fn current(&self) -> Vec<CanonicalId> {
        let mut seq = Vec::with_capacity(self.n);
        seq.extend_from_slice(&self.prefix);
        seq.extend_from_slice(&self.suffix);
        seq
    }
}

impl Iterator for SequenceStream {
    type Item = Vec<CanonicalId>;

    fn next(&mut self) -> Option<Vec<CanonicalId>> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            self.emitted += 1;
            return Some(self.current());
        }
        if next_permutation(&mut self.suffix) {
            self.emitted += 1;
            Some(self.current())
        } else {
            self.done = true;
            None
        }
    }
}

/// Advance `items` to its lexicographic successor in place; false once the
/// descending (last) permutation is reached.
fn next_permutation(items: &mut [CanonicalId]) -> bool {
    if items.len() < 2 {
        return false;
    }
    let mut pivot = items.len() - 1;
    while pivot > 0 && items[pivot - 1] >= items[pivot] {
        pivot -= 1;
    }
    if pivot == 0 {
        return false;
    }
    let mut swap = items.len() - 1;
    while items[swap] <= items[pivot - 1] {
        swap -= 1;
    }
    items.swap(pivot - 1, swap);
    items[pivot..].reverse();
    true
}

/// Stream every permutation of canonical ids `1..=n` exactly once, in
/// lexicographic order. There are `n!` of them.
pub fn enumerate_sequences(n: usize) -> SequenceStream {
    let suffix: Vec<CanonicalId> = (1..=n as u32).map(CanonicalId).collect();
    SequenceStream::new(n, Vec::new(), suffix)
}

/// Split the permutation space of `1..=n` into `n! / (n - prefix_len)!`
/// disjoint sub-streams, one per ordered prefix of length `prefix_len`, in
/// lexicographic prefix order.
pub fn partition_by_prefix(
    n: usize,
    prefix_len: usize,
) -> Result<Vec<SequenceStream>, EnumeratorError> {
    if prefix_len < 1 || prefix_len >= n {
        return Err(EnumeratorError::InvalidPrefixLen { n, prefix_len });
    }
    let ids: Vec<CanonicalId> = (1..=n as u32).map(CanonicalId).collect();
    let mut streams = Vec::new();
    let mut prefix = Vec::with_capacity(prefix_len);
    fill_prefixes(&ids, prefix_len, &mut prefix, &mut streams, n);
    Ok(streams)
}

fn fill_prefixes(
    ids: &[CanonicalId],
    remaining: usize,
    prefix: &mut Vec<CanonicalId>,
    streams: &mut Vec<SequenceStream>,
    n: usize,
) {
    if remaining == 0 {
        let suffix: Vec<CanonicalId> = ids
            .iter()
            .copied()
            .filter(|id| !prefix.contains(id))
            .collect();
        streams.push(SequenceStream::new(n, prefix.clone(), suffix));
        return;
    }
    for &id in ids {
        if prefix.contains(&id) {
            continue;
        }
        prefix.push(id);
        fill_prefixes(ids, remaining - 1, prefix, streams, n);
        prefix.pop();
    }
}

pub fn factorial(n: usize) -> u64 {
    (2..=n as u64).product()
}
