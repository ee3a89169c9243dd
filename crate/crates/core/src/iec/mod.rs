//! IEC 61400-12-1 physics baseline: method of bins, air-density
//! normalisation, turbulence-intensity correction and the yaw loss factor.

mod binned;
mod zero_ti;

use serde::{Deserialize, Serialize};

pub use binned::{fit_binned_curve, BinnedPowerCurve, BinningOptions, CurveBin};
pub use zero_ti::{fit_zero_ti_curve, ti_expected_power, ZeroTiCurve, ZeroTiOptions};

use crate::data::ScadaRecord;
use crate::models::{Feature, Predictor};
use crate::{Error, Result};

/// Density-normalised wind speed `v · (ρ / ρ_ref)^(1/3)`.
pub fn density_normalize(v: f64, rho: f64, rho_ref: f64) -> Result<f64> {
    if !(rho > 0.0 && rho_ref > 0.0) {
        return Err(Error::InvalidInput(format!(
            "air densities must be positive, got {rho} and {rho_ref}"
        )));
    }
    if rho == rho_ref {
        return Ok(v);
    }
    Ok(v * (rho / rho_ref).cbrt())
}

/// Actuator-disk power factor cos³(Δ) for a yaw misalignment in degrees.
pub fn yaw_power_factor(delta_deg: f64) -> Result<f64> {
    if !(0.0..=90.0).contains(&delta_deg) {
        return Err(Error::InvalidInput(format!(
            "yaw misalignment {delta_deg}° outside [0, 90]"
        )));
    }
    // cos(90°) in floating point is 6e-17, not zero
    if delta_deg == 90.0 {
        return Ok(0.0);
    }
    Ok(delta_deg.to_radians().cos().powi(3))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[derive(Default)]
pub struct IecOptions {
    pub binning: BinningOptions,
    pub zero_ti: ZeroTiOptions,
    /// Reference density; the training mean when absent.
    pub rho_ref: Option<f64>,
    /// Rated power; the largest bin mean when absent.
    pub rated_power: Option<f64>,
}

/// Binned power curve plus zero-turbulence reference curve, predicting power
/// from wind speed, air density and turbulence intensity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IecModel {
    pub binned: BinnedPowerCurve,
    pub zero_ti: ZeroTiCurve,
    pub rho_ref: f64,
    pub rated_power: f64,
}

const IEC_FEATURES: [Feature; 3] = [Feature::WindSpeed, Feature::AirDensity, Feature::Turbulence];

impl IecModel {
    pub fn fit(train: &[ScadaRecord], options: &IecOptions) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyData("IEC model needs training records".into()));
        }
        let rho_ref = match options.rho_ref {
            Some(r) => r,
            None => crate::stats::mean(&train.iter().map(|r| r.rho).collect::<Vec<_>>()),
        };
        let binned = fit_binned_curve(train, &options.binning, rho_ref)?;
        let rated_power = options
            .rated_power
            .unwrap_or_else(|| binned.bins.iter().map(|b| b.mean_p).fold(f64::NEG_INFINITY, f64::max));
        let zero_ti = fit_zero_ti_curve(&binned, rated_power, &options.zero_ti)?;
        Ok(Self {
            binned,
            zero_ti,
            rho_ref,
            rated_power,
        })
    }

    /// Expected 10-minute power at the measured conditions, kW.
    pub fn predict_conditions(&self, v: f64, rho: f64, ti: f64) -> f64 {
        let v_n = if rho > 0.0 {
            v * (rho / self.rho_ref).cbrt()
        } else {
            0.0
        };
        ti_expected_power(&self.zero_ti, v_n, ti.max(0.0)).clamp(0.0, 1.05 * self.rated_power)
    }
}

impl Predictor for IecModel {
    fn features(&self) -> &[Feature] {
        &IEC_FEATURES
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        self.predict_conditions(x[0], x[1], x[2])
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn density_identity_and_reference_value() {
        assert_eq!(density_normalize(10.0, 1.225, 1.225).unwrap(), 10.0);
        // (1.3 / 1.225)^(1/3) = 1.020020...
        let v = density_normalize(10.0, 1.3, 1.225).unwrap();
        assert!((v - 10.2002).abs() < 1e-3, "{v}");
        assert_eq!(density_normalize(0.0, 1.1, 1.3).unwrap(), 0.0);
        assert!(density_normalize(10.0, 0.0, 1.2).is_err());
    }

    #[test]
    fn yaw_factor_values() {
        assert_eq!(yaw_power_factor(0.0).unwrap(), 1.0);
        assert!((yaw_power_factor(15.0).unwrap() - 0.901_221).abs() < 1e-6);
        assert_eq!(yaw_power_factor(90.0).unwrap(), 0.0);
        assert!(yaw_power_factor(-1.0).is_err());
        assert!(yaw_power_factor(91.0).is_err());
    }

    proptest! {
        #[test]
        fn density_identity_exact(v in 0.0f64..40.0, rho in 0.8f64..1.5) {
            prop_assert_eq!(density_normalize(v, rho, rho).unwrap(), v);
        }

        #[test]
        fn yaw_factor_strictly_decreasing(a in 0.001f64..89.999, b in 0.001f64..89.999) {
            prop_assume!((a - b).abs() > 1e-6);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(yaw_power_factor(lo).unwrap() > yaw_power_factor(hi).unwrap());
        }
    }
}
