use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{DataSplit, ScadaRecord};
use crate::iec::yaw_power_factor;
use crate::{Error, Result};

/// Ground truth for one augmented record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YawGroundTruth {
    /// Applied power factor cos³(Δ_yaw), or 1 at and above rated wind speed.
    pub c_ymis: f64,
    /// Signed power change from the injected misalignment, kW (≤ 0).
    pub delta_p_true: f64,
    /// Power before augmentation, kW.
    pub p_free: f64,
}

impl YawGroundTruth {
    /// Remaining power `c_ymis · p_free`; the alternative reading of the
    /// ground-truth quantity, kept for reporting alongside the deviation.
    pub fn residual_power(&self) -> f64 {
        self.c_ymis * self.p_free
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YawAugmentation {
    pub sigma_deg: f64,
    pub clip_deg: f64,
    /// Misalignment only reduces power below this wind speed, m/s.
    pub v_rated: f64,
}

impl Default for YawAugmentation {
    fn default() -> Self {
        Self {
            sigma_deg: 7.5,
            clip_deg: 15.0,
            v_rated: 12.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedSplit {
    pub split: DataSplit,
    pub train_truth: Vec<YawGroundTruth>,
    pub val_truth: Vec<YawGroundTruth>,
    pub test_truth: Vec<YawGroundTruth>,
}

fn augment_records(
    records: &[ScadaRecord],
    params: &YawAugmentation,
    seed: u64,
    family: u64,
) -> (Vec<ScadaRecord>, Vec<YawGroundTruth>) {
    let normal = Normal::new(0.0, params.sigma_deg).expect("sigma validated positive");
    records
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let mut rng = crate::rng::sub_stream(seed, family, i as u64);
            let delta = normal.sample(&mut rng).abs().min(params.clip_deg);
            let c = if rec.v_w < params.v_rated {
                yaw_power_factor(delta.min(90.0)).expect("clipped into range")
            } else {
                1.0
            };
            let p_free = rec.power;
            let power = p_free * c;
            let out = ScadaRecord {
                delta_yaw: delta,
                power,
                ..rec.clone()
            };
            let truth = YawGroundTruth {
                c_ymis: c,
                delta_p_true: power - p_free,
                p_free,
            };
            (out, truth)
        })
        .unzip()
}

/// Injects artificial yaw misalignment `|N(0, σ)|` clipped to `clip_deg` and
/// scales power by cos³(Δ) below rated wind speed.
pub fn augment_yaw(split: &DataSplit, params: &YawAugmentation, seed: u64) -> Result<AugmentedSplit> {
    if !(params.sigma_deg > 0.0 && params.clip_deg > 0.0) {
        return Err(Error::InvalidInput(format!(
            "yaw sigma and clip must be positive, got {} and {}",
            params.sigma_deg, params.clip_deg
        )));
    }
    let (train, train_truth) = augment_records(&split.train, params, seed, 1);
    let (val, val_truth) = augment_records(&split.val, params, seed, 2);
    let (test, test_truth) = augment_records(&split.test, params, seed, 3);
    Ok(AugmentedSplit {
        split: DataSplit {
            train,
            val,
            test,
            seed: split.seed,
        },
        train_truth,
        val_truth,
        test_truth,
    })
}
