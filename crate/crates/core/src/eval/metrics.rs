//! Pair-counting agreement between two partitions.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Pair counts from the contingency table of two labelings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    /// Pairs together in both partitions.
    pub together_both: u64,
    /// Pairs together in the first partition.
    pub together_left: u64,
    /// Pairs together in the second partition.
    pub together_right: u64,
    pub total: u64,
}

impl PairCounts {
    /// Pairs separated in both partitions.
    pub fn apart_both(&self) -> u64 {
        self.total + self.together_both - self.together_left - self.together_right
    }
}

fn choose2(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

pub fn pair_counts(left: &[usize], right: &[usize]) -> Result<PairCounts> {
    if left.len() != right.len() {
        return Err(Error::LengthMismatch {
            left: left.len(),
            right: right.len(),
        });
    }
    if left.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: left.len(),
        });
    }
    let mut cells: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&a, &b) in left.iter().zip(right) {
        *cells.entry((a, b)).or_default() += 1;
        *rows.entry(a).or_default() += 1;
        *cols.entry(b).or_default() += 1;
    }
    Ok(PairCounts {
        together_both: cells.values().map(|&n| choose2(n)).sum(),
        together_left: rows.values().map(|&n| choose2(n)).sum(),
        together_right: cols.values().map(|&n| choose2(n)).sum(),
        total: choose2(left.len() as u64),
    })
}

/// Fraction of point pairs on which the two partitions agree.
pub fn rand_index(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let c = pair_counts(pred, truth)?;
    Ok((c.together_both + c.apart_both()) as f64 / c.total as f64)
}

/// Rand index corrected for chance. Two partitions that are both trivial in
/// the same way score 1.
pub fn adjusted_rand_index(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let c = pair_counts(pred, truth)?;
    let (l, r, t) = (
        c.together_left as f64,
        c.together_right as f64,
        c.total as f64,
    );
    let expected = l * r / t;
    let max = 0.5 * (l + r);
    if max == expected {
        return Ok(1.0);
    }
    Ok((c.together_both as f64 - expected) / (max - expected))
}
