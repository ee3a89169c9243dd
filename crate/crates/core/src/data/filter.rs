use serde::{Deserialize, Serialize};

use super::ScadaRecord;
use crate::iec::BinnedPowerCurve;
use crate::{Error, Result};

/// Keeps records with positive power and a clean status log, in order.
pub fn filter_operational(records: &[ScadaRecord]) -> Vec<ScadaRecord> {
    records
        .iter()
        .filter(|r| r.power > 0.0 && r.status_ok)
        .cloned()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalReason {
    /// Further from the reference curve than the threshold.
    Deviation,
    /// Wind speed outside the reference curve's support.
    OutsideSupport,
}

#[derive(Debug, Clone, Default)]
pub struct NormFilterOutcome {
    pub kept: Vec<ScadaRecord>,
    pub removed: Vec<(ScadaRecord, RemovalReason)>,
}

impl NormFilterOutcome {
    pub fn removed_records(&self) -> Vec<ScadaRecord> {
        self.removed.iter().map(|(r, _)| r.clone()).collect()
    }
}

/// Splits records by their distance to a reference power curve.
///
/// A record is kept iff `|power - curve(v_w)| <= threshold_kw`.
pub fn norm_filter(
    records: &[ScadaRecord],
    reference: &BinnedPowerCurve,
    threshold_kw: f64,
) -> Result<NormFilterOutcome> {
    if !(threshold_kw > 0.0) {
        return Err(Error::InvalidInput(format!(
            "norm filter threshold must be positive, got {threshold_kw}"
        )));
    }
    let (lo, hi) = reference.support();
    let mut out = NormFilterOutcome::default();
    for r in records {
        if r.v_w < lo || r.v_w > hi {
            out.removed.push((r.clone(), RemovalReason::OutsideSupport));
        } else if (r.power - reference.interpolate(r.v_w)).abs() <= threshold_kw {
            out.kept.push(r.clone());
        } else {
            out.removed.push((r.clone(), RemovalReason::Deviation));
        }
    }
    Ok(out)
}
