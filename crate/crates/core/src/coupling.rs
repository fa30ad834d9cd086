//! Coupling constants: the interaction strength between sensors.
//!
//! The pairwise coupling between canonical positions `i` and `j` on a circle
//! of `n` sensors is `a_ij = 1 - |i - j| / n`, so neighbors interact most
//! strongly and the two ends of the index range most weakly. The full table
//! is symmetric with unit diagonal, and every entry is an exact rational
//! `k / n` with `k` in `1..=n`.
//!
//! Couplings always use canonical sensor ids. A permuted evaluation sequence
//! changes which sensors meet at which step, never the strength assigned to
//! a given pair.

use serde::Serialize;
use thiserror::Error;

use crate::model::CanonicalId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CouplingError {
    #[error("canonical id {id} out of range 1..={n}")]
    IndexOutOfRange { id: u32, n: usize },
    #[error("set coupling needs at least 2 sensors, got {got}")]
    TooFewIds { got: usize },
    #[error("duplicate canonical id {id} in coupling set")]
    DuplicateId { id: u32 },
}

/// Pairwise coupling as an exact rational: `(n - |i - j|, n)`.
pub fn coupling_pair_rational(
    i: CanonicalId,
    j: CanonicalId,
    n: usize,
) -> Result<(u64, u64), CouplingError> {
    for id in [i, j] {
        if id.0 < 1 || id.0 as usize > n {
            return Err(CouplingError::IndexOutOfRange { id: id.0, n });
        }
    }
    let dist = i.0.abs_diff(j.0) as u64;
    Ok((n as u64 - dist, n as u64))
}

/// Pairwise coupling `a_ij = 1 - |i - j| / n`.
pub fn coupling_pair(i: CanonicalId, j: CanonicalId, n: usize) -> Result<f64, CouplingError> {
    let (num, den) = coupling_pair_rational(i, j, n)?;
    Ok(num as f64 / den as f64)
}

/// Coupling of a set of `k >= 2` sensors: the arithmetic mean of the
/// pairwise couplings over all C(k, 2) unordered pairs.
///
/// For three sensors this is `(a_ij + a_ik + a_jk) / 3`; larger sets extend
/// the same mean over every pair.
pub fn coupling_set(ids: &[CanonicalId], n: usize) -> Result<f64, CouplingError> {
    if ids.len() < 2 {
        return Err(CouplingError::TooFewIds { got: ids.len() });
    }
    let mut seen: Vec<u32> = Vec::with_capacity(ids.len());
    for id in ids {
        if id.0 < 1 || id.0 as usize > n {
            return Err(CouplingError::IndexOutOfRange { id: id.0, n });
        }
        if seen.contains(&id.0) {
            return Err(CouplingError::DuplicateId { id: id.0 });
        }
        seen.push(id.0);
    }

    let mut weight = 0.0;
    let mut pairs = 0u64;
    for (a, &i) in ids.iter().enumerate() {
        for &j in &ids[a + 1..] {
            weight += 1.0 - i.0.abs_diff(j.0) as f64 / n as f64;
            pairs += 1;
        }
    }
    Ok(weight / pairs as f64)
}

/// The symmetric `n x n` matrix of pairwise couplings with unit diagonal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingTable {
    n: usize,
    entries: Vec<f64>,
}

impl CouplingTable {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry for canonical ids `i`, `j` (both 1-based).
    pub fn get(&self, i: CanonicalId, j: CanonicalId) -> Option<f64> {
        let (i, j) = (i.0.checked_sub(1)? as usize, j.0.checked_sub(1)? as usize);
        if i >= self.n || j >= self.n {
            return None;
        }
        Some(self.entries[i * self.n + j])
    }

    /// Row for canonical id `i`, in canonical order.
    pub fn row(&self, i: CanonicalId) -> Option<&[f64]> {
        let i = i.0.checked_sub(1)? as usize;
        if i >= self.n {
            return None;
        }
        Some(&self.entries[i * self.n..(i + 1) * self.n])
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks(self.n)
    }

    /// Mean of this table's entries over all unordered pairs from `ids`.
    ///
    /// Same contract as [`coupling_set`], but reads the stored matrix
    /// instead of re-deriving each pair from the distance formula.
    pub fn set_coupling(&self, ids: &[CanonicalId]) -> Result<f64, CouplingError> {
        if ids.len() < 2 {
            return Err(CouplingError::TooFewIds { got: ids.len() });
        }
        let mut seen: Vec<u32> = Vec::with_capacity(ids.len());
        for id in ids {
            if id.0 < 1 || id.0 as usize > self.n {
                return Err(CouplingError::IndexOutOfRange { id: id.0, n: self.n });
            }
            if seen.contains(&id.0) {
                return Err(CouplingError::DuplicateId { id: id.0 });
            }
            seen.push(id.0);
        }
        let mut weight = 0.0;
        let mut pairs = 0u64;
        for (a, &i) in ids.iter().enumerate() {
            for &j in &ids[a + 1..] {
                weight += self.entries[(i.0 as usize - 1) * self.n + (j.0 as usize - 1)];
                pairs += 1;
            }
        }
        Ok(weight / pairs as f64)
    }
}

/// Build the full coupling table for `n` sensors.
pub fn build_table(n: usize) -> CouplingTable {
    let mut entries = Vec::with_capacity(n * n);
    for i in 1..=n {
        for j in 1..=n {
            entries.push(1.0 - (i).abs_diff(j) as f64 / n as f64);
        }
    }
    CouplingTable { n, entries }
}

#[cfg(test)]
pub(crate) fn table_from_entries(n: usize, entries: Vec<f64>) -> CouplingTable {
    assert_eq!(entries.len(), n * n);
    CouplingTable { n, entries }
}
