//! Segment pooling: frame rows of one phone → a single vector.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::FrameRows;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("cannot pool an empty segment")]
pub struct EmptySegment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolingKind {
    Mean,
    Center,
    Random,
}

impl PoolingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PoolingKind::Mean => "mean",
            PoolingKind::Center => "center",
            PoolingKind::Random => "random",
        }
    }

    /// Mean and center pooling consume no randomness.
    pub fn is_deterministic(self) -> bool {
        self != PoolingKind::Random
    }
}

impl fmt::Display for PoolingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PoolingKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(PoolingKind::Mean),
            "center" => Ok(PoolingKind::Center),
            "random" => Ok(PoolingKind::Random),
            other => Err(format!("unknown pooling {other:?} (expected mean, center or random)")),
        }
    }
}

/// A frame drawn by random pooling.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomDraw {
    pub vector: Vec<f64>,
    /// 0-based row index.
    pub index: usize,
    /// `i / n` with 1-based `i`, in `(0, 1]`.
    pub position: f64,
}

fn widen(row: &[f32]) -> Vec<f64> {
    row.iter().map(|&v| v as f64).collect()
}

pub fn mean_pool(rows: FrameRows<'_>) -> Result<Vec<f64>, EmptySegment> {
    if rows.is_empty() {
        return Err(EmptySegment);
    }
    let mut acc = vec![0.0f64; rows.cols()];
    for row in rows.iter() {
        for (a, &v) in acc.iter_mut().zip(row) {
            *a += v as f64;
        }
    }
    let n = rows.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

/// Row index used by center pooling: `floor((n - 1) / 2)`.
pub fn center_index(n: usize) -> usize {
    (n - 1) / 2
}

pub fn center_pool(rows: FrameRows<'_>) -> Result<Vec<f64>, EmptySegment> {
    if rows.is_empty() {
        return Err(EmptySegment);
    }
    Ok(widen(rows.row(center_index(rows.len()))))
}

/// Uniform 0-based row index for a segment of `n` frames.
pub fn random_index<R: Rng + ?Sized>(n: usize, rng: &mut R) -> usize {
    rng.random_range(0..n)
}

pub fn random_pool<R: Rng + ?Sized>(rows: FrameRows<'_>, rng: &mut R) -> Result<RandomDraw, EmptySegment> {
    if rows.is_empty() {
        return Err(EmptySegment);
    }
    let n = rows.len();
    let index = random_index(n, rng);
    Ok(RandomDraw { vector: widen(rows.row(index)), index, position: (index + 1) as f64 / n as f64 })
}

/// Pools with `kind`; `rng` is only touched by random pooling.
pub fn pool<R: Rng + ?Sized>(rows: FrameRows<'_>, kind: PoolingKind, rng: &mut R) -> Result<Vec<f64>, EmptySegment> {
    match kind {
        PoolingKind::Mean => mean_pool(rows),
        PoolingKind::Center => center_pool(rows),
        PoolingKind::Random => random_pool(rows, rng).map(|d| d.vector),
    }
}

/// Bin of a normalized position in `(0, 1]`; `k / bins` falls in bin `k - 1`.
pub fn position_bin(position: f64, bins: usize) -> usize {
    assert!(bins >= 1, "bins must be at least 1");
    let x = position * bins as f64;
    // snap products like 0.3·10 = 3.0000000000000004 onto the bin edge
    let x = if (x - x.round()).abs() < 1e-9 { x.round() } else { x };
    let b = x.ceil() as isize - 1;
    b.clamp(0, bins as isize - 1) as usize
}

/// Exact bin of 0-based row `index` in a segment of `n` frames.
pub fn index_bin(index: usize, n: usize, bins: usize) -> usize {
    assert!(bins >= 1 && index < n, "index {index} outside segment of {n} frames");
    ((index + 1) * bins).div_ceil(n) - 1
}

/// Whether a segment of `n` frames has any row in `bin`.
pub fn segment_reaches_bin(n: usize, bins: usize, bin: usize) -> bool {
    // rows in bin b satisfy b·n < (i+1)·bins ≤ (b+1)·n
    let lo = (bin * n) / bins; // smallest i+1 with (i+1)·bins > b·n is lo+1
    let first = lo + 1;
    first <= n && first * bins <= (bin + 1) * n
}
