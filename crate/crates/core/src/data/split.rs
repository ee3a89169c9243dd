use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::ScadaRecord;
use crate::{Error, Result};

/// Half-open time interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeInterval {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl TimeInterval {
    pub fn new(start: DateTime<Utc>, end: DateTime<Utc>) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, t: &DateTime<Utc>) -> bool {
        *t >= self.start && *t < self.end
    }

    pub fn overlaps(&self, other: &TimeInterval) -> bool {
        self.start < other.end && other.start < self.end
    }

    /// Splits the records' time span at its midpoint into two adjacent
    /// intervals covering every record.
    pub fn halves(records: &[ScadaRecord]) -> Option<(TimeInterval, TimeInterval)> {
        let first = records.iter().map(|r| r.timestamp).min()?;
        let last = records.iter().map(|r| r.timestamp).max()?;
        let mid = first + (last - first) / 2;
        let end = last + chrono::Duration::seconds(1);
        Some((TimeInterval::new(first, mid), TimeInterval::new(mid, end)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSplit {
    pub train: Vec<ScadaRecord>,
    pub val: Vec<ScadaRecord>,
    pub test: Vec<ScadaRecord>,
    pub seed: u64,
}

impl DataSplit {
    /// Training and validation rows together (the full training period).
    pub fn train_period(&self) -> Vec<ScadaRecord> {
        self.train.iter().chain(&self.val).cloned().collect()
    }

    pub fn map(&self, mut f: impl FnMut(&[ScadaRecord]) -> Vec<ScadaRecord>) -> DataSplit {
        DataSplit {
            train: f(&self.train),
            val: f(&self.val),
            test: f(&self.test),
            seed: self.seed,
        }
    }
}

/// Temporal train/test split with a seeded random validation subset drawn
/// from the training period. Records outside both intervals are ignored.
pub fn split_temporal(
    records: &[ScadaRecord],
    train_interval: TimeInterval,
    test_interval: TimeInterval,
    val_fraction: f64,
    seed: u64,
) -> Result<DataSplit> {
    if train_interval.overlaps(&test_interval) {
        return Err(Error::InvalidInput("train and test intervals overlap".into()));
    }
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "validation fraction must be in (0, 1), got {val_fraction}"
        )));
    }
    let period: Vec<&ScadaRecord> = records
        .iter()
        .filter(|r| train_interval.contains(&r.timestamp))
        .collect();
    let test: Vec<ScadaRecord> = records
        .iter()
        .filter(|r| test_interval.contains(&r.timestamp))
        .cloned()
        .collect();
    if period.is_empty() {
        return Err(Error::EmptyData("no records in the training interval".into()));
    }
    if test.is_empty() {
        return Err(Error::EmptyData("no records in the test interval".into()));
    }

    let n_val = (val_fraction * period.len() as f64).round() as usize;
    if n_val == 0 || n_val == period.len() {
        return Err(Error::EmptyData(format!(
            "validation fraction {val_fraction} leaves an empty split of {} training records",
            period.len()
        )));
    }
    let mut order: Vec<usize> = (0..period.len()).collect();
    order.shuffle(&mut crate::rng::stream(seed, 0));
    let mut is_val = vec![false; period.len()];
    for &i in &order[..n_val] {
        is_val[i] = true;
    }
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (rec, v) in period.into_iter().zip(is_val) {
        if v {
            val.push(rec.clone());
        } else {
            train.push(rec.clone());
        }
    }
    Ok(DataSplit { train, val, test, seed })
}

/// [`split_temporal`] with the boundary at the time midpoint of `records`.
pub fn split_at_midpoint(records: &[ScadaRecord], val_fraction: f64, seed: u64) -> Result<DataSplit> {
    let (train, test) = TimeInterval::halves(records).ok_or_else(|| Error::EmptyData("no records to split".into()))?;
    split_temporal(records, train, test, val_fraction, seed)
}
