use chrono::{DateTime, Datelike, Duration, Utc};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Weibull};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ScadaRecord;
use crate::iec::{density_normalize, yaw_power_factor, BinnedPowerCurve, CurveBin};
use crate::{Error, Result};

const SLOTS_PER_YEAR: usize = 52_560;

/// How turbulence interacts with the rated-power limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RatedTransition {
    /// The unlimited cubic ramp is averaged over the turbulent wind and the
    /// controller then caps the 10-minute mean at rated power.
    #[default]
    ControllerClipped,
    /// The rated-limited ramp itself is averaged over the turbulent wind,
    /// the idealisation the IEC turbulence normalisation assumes.
    TurbulenceSmoothed,
}

/// Turbulence intensity as a decreasing function of wind speed with
/// lognormal scatter: `median(v) = reference · (0.75 + 5.6 / max(v, 1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TiModel {
    pub reference: f64,
    pub log_sigma: f64,
    /// Overrides the model with a constant.
    pub fixed: Option<f64>,
}

impl Default for TiModel {
    fn default() -> Self {
        Self {
            reference: 0.10,
            log_sigma: 0.25,
            fixed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_samples: usize,
    pub rated_power: f64,
    pub v_cut_in: f64,
    pub v_rated: f64,
    pub v_cut_out: f64,
    pub weibull_shape: f64,
    pub weibull_scale: f64,
    pub rho_mean: f64,
    pub rho_std: f64,
    /// Amplitude of the annual density cycle (winter maximum), kg/m³.
    pub rho_seasonal_amplitude: f64,
    pub ti: TiModel,
    pub noise_base_kw: f64,
    pub noise_rel: f64,
    pub rated_transition: RatedTransition,
    pub start: DateTime<Utc>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_samples: 20_000,
            rated_power: 2000.0,
            v_cut_in: 3.0,
            v_rated: 12.0,
            v_cut_out: 25.0,
            weibull_shape: 2.0,
            weibull_scale: 8.5,
            rho_mean: 1.225,
            rho_std: 0.04,
            rho_seasonal_amplitude: 0.02,
            ti: TiModel::default(),
            noise_base_kw: 10.0,
            noise_rel: 0.03,
            rated_transition: RatedTransition::default(),
            start: DateTime::from_timestamp(1_609_459_200, 0).expect("valid epoch"), // 2021-01-01
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.v_cut_in > 0.0
            && self.v_cut_in < self.v_rated
            && self.v_rated < self.v_cut_out
            && self.rated_power > 0.0
            && self.n_samples > 0
            && self.weibull_shape > 0.0
            && self.weibull_scale > 0.0
            && self.rho_std >= 0.0
            && self.noise_base_kw >= 0.0
            && self.noise_rel >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid synthetic config: {self:?}")))
        }
    }

    /// Cubic ramp between cut-in and rated wind speed, unlimited above rated.
    fn cubic(&self, v: f64) -> f64 {
        if v < self.v_cut_in {
            return 0.0;
        }
        let ci3 = self.v_cut_in.powi(3);
        self.rated_power * (v.powi(3) - ci3) / (self.v_rated.powi(3) - ci3)
    }

    /// Zero-turbulence ramp: cubic on `[v_cut_in, v_rated]`, rated above.
    pub fn ramp(&self, v: f64) -> f64 {
        self.cubic(v).min(self.rated_power)
    }

    /// Heteroscedastic noise standard deviation at power `p`, kW.
    pub fn noise_sigma(&self, p: f64) -> f64 {
        self.noise_base_kw + self.noise_rel * p.max(0.0)
    }

    /// The zero-turbulence ramp at reference density as a binned curve, the
    /// stand-in for a manufacturer's power curve.
    pub fn manufacturer_curve(&self, bin_width: f64) -> BinnedPowerCurve {
        let n_bins = (self.v_cut_out / bin_width).ceil() as usize;
        let bins = (0..n_bins)
            .map(|k| {
                let c = (k as f64 + 0.5) * bin_width;
                CurveBin {
                    v_center: c,
                    mean_v: c,
                    mean_p: self.ramp(c),
                    mean_ti: 0.0,
                    count: 1,
                }
            })
            .collect();
        BinnedPowerCurve::from_bins(bin_width, self.rho_mean, bins).expect("bins are well-formed")
    }

    fn seasonal_rho_mean(&self, t: &DateTime<Utc>) -> f64 {
        let phase = 2.0 * std::f64::consts::PI * f64::from(t.ordinal0()) / 365.25;
        self.rho_mean + self.rho_seasonal_amplitude * phase.cos()
    }

    fn timestamp(&self, i: usize) -> DateTime<Utc> {
        let slot = if self.n_samples <= SLOTS_PER_YEAR {
            i * SLOTS_PER_YEAR / self.n_samples
        } else {
            i
        };
        self.start + Duration::minutes(10 * slot as i64)
    }
}

/// Noise-free generator output and the noise scale used for each record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub p_latent: f64,
    pub sigma_noise: f64,
}

const SMOOTHING_NODES: usize = 201;

/// Mean of `f` under N(v, σ²) truncated at ±4σ, by uniform-node summation.
fn gaussian_mean(f: impl Fn(f64) -> f64, v: f64, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return f(v);
    }
    let step = 8.0 / (SMOOTHING_NODES - 1) as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..SMOOTHING_NODES {
        let z = -4.0 + k as f64 * step;
        let w = (-0.5 * z * z).exp();
        num += w * f(v + sigma * z);
        den += w;
    }
    num / den
}

/// Noise-free power for the given conditions, kW.
pub fn latent_power(config: &SynthConfig, v_w: f64, rho: f64, ti: f64, delta_yaw: f64) -> f64 {
    if v_w < config.v_cut_in || v_w > config.v_cut_out {
        return 0.0;
    }
    let v_n = density_normalize(v_w, rho, config.rho_mean).expect("positive densities");
    let sigma = ti * v_n;
    let p = match config.rated_transition {
        RatedTransition::ControllerClipped => gaussian_mean(|u| config.cubic(u), v_n, sigma).min(config.rated_power),
        RatedTransition::TurbulenceSmoothed => gaussian_mean(|u| config.ramp(u), v_n, sigma),
    };
    if v_w < config.v_rated {
        p * yaw_power_factor(delta_yaw.clamp(0.0, 90.0)).expect("clamped")
    } else {
        p
    }
}

fn draw_record(config: &SynthConfig, seed: u64, i: usize) -> (ScadaRecord, SynthTruth) {
    let mut rng = crate::rng::stream(seed, i as u64);
    let weibull = Weibull::new(config.weibull_scale, config.weibull_shape).expect("validated");
    let v_w = loop {
        let v: f64 = weibull.sample(&mut rng);
        if v <= config.v_cut_out {
            break v;
        }
    };
    let timestamp = config.timestamp(i);
    let rho_dist = Normal::new(config.seasonal_rho_mean(&timestamp), config.rho_std).expect("validated");
    let rho = rho_dist.sample(&mut rng).clamp(0.9, 1.4);
    let ti = match config.ti.fixed {
        Some(t) => t,
        None => {
            let median = config.ti.reference * (0.75 + 5.6 / v_w.max(1.0));
            let z: f64 = rng.sample(StandardNormal);
            (median * (config.ti.log_sigma * z).exp()).clamp(0.01, 0.6)
        }
    };
    let p_latent = latent_power(config, v_w, rho, ti, 0.0);
    let sigma_noise = config.noise_sigma(p_latent);
    let z: f64 = rng.sample(StandardNormal);
    let record = ScadaRecord {
        timestamp,
        v_w,
        rho,
        ti,
        delta_yaw: 0.0,
        power: p_latent + sigma_noise * z,
        status_ok: true,
    };
    (record, SynthTruth { p_latent, sigma_noise })
}

/// Generates a synthetic SCADA year with its noise-free ground truth.
///
/// Each record draws from its own random stream, so the output is identical
/// for any thread count.
pub fn generate_synthetic(config: &SynthConfig, seed: u64) -> Result<(Vec<ScadaRecord>, Vec<SynthTruth>)> {
    config.validate()?;
    Ok((0..config.n_samples)
        .into_par_iter()
        .map(|i| draw_record(config, seed, i))
        .unzip())
}
