//! SCADA records, ingestion, filtering, splitting, augmentation and
//! synthetic data generation.

mod augment;
mod csv_io;
mod filter;
mod split;
mod synth;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use augment::{augment_yaw, AugmentedSplit, YawAugmentation, YawGroundTruth};
pub(crate) use csv_io::format_timestamp;
pub use csv_io::{parse_scada_csv, write_scada_csv, ColumnMap, ParseOutcome};
pub use filter::{filter_operational, norm_filter, NormFilterOutcome, RemovalReason};
pub use split::{split_at_midpoint, split_temporal, DataSplit, TimeInterval};
pub use synth::{generate_synthetic, latent_power, RatedTransition, SynthConfig, SynthTruth, TiModel};

/// One 10-minute SCADA observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScadaRecord {
    pub timestamp: DateTime<Utc>,
    /// Wind speed, m/s.
    pub v_w: f64,
    /// Air density, kg/m³.
    pub rho: f64,
    /// Turbulence intensity (σ_v / v̄).
    pub ti: f64,
    /// Absolute yaw misalignment, degrees.
    pub delta_yaw: f64,
    /// Active power, kW.
    pub power: f64,
    /// No stoppage or curtailment according to the turbine logs.
    pub status_ok: bool,
}

impl ScadaRecord {
    /// Checks the physical plausibility ranges of every field.
    pub fn validate(&self) -> Result<(), String> {
        let finite = [self.v_w, self.rho, self.ti, self.delta_yaw, self.power]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err("non-finite field".into());
        }
        if self.v_w < 0.0 {
            return Err(format!("negative wind speed {}", self.v_w));
        }
        if !(0.0..1.0).contains(&self.ti) {
            return Err(format!("turbulence intensity {} outside [0, 1)", self.ti));
        }
        if !(self.rho > 0.8 && self.rho < 1.5) {
            return Err(format!("air density {} outside (0.8, 1.5)", self.rho));
        }
        if !(0.0..=180.0).contains(&self.delta_yaw) {
            return Err(format!("yaw misalignment {} outside [0, 180]", self.delta_yaw));
        }
        if self.power < -50.0 {
            return Err(format!("power {} below -50 kW", self.power));
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) fn record(v_w: f64, power: f64) -> ScadaRecord {
    ScadaRecord {
        timestamp: DateTime::from_timestamp(1_600_000_000, 0).unwrap(),
        v_w,
        rho: 1.225,
        ti: 0.1,
        delta_yaw: 0.0,
        power,
        status_ok: true,
    }
}
