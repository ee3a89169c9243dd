use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::attribution::{shapley_exact, ReferenceBuilder, ReferenceStrategy};
use crate::data::ScadaRecord;
use crate::models::{Feature, FeatureSchema, Predictor};
use crate::stats::{quantile, sum};
use crate::{Error, Result};

/// Training absolute-error quantile above which a report is flagged as low
/// confidence.
pub const CONFIDENCE_QUANTILE: f64 = 0.9;

/// Deviation of one observation from the expected output at its wind
/// speed, split into per-feature contributions plus model error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitoringReport {
    pub timestamp: DateTime<Utc>,
    pub v_w: f64,
    pub power: f64,
    pub f_x: f64,
    /// Expected output for typical ambient conditions and zero yaw.
    pub f_ref: f64,
    /// `power − f_x`.
    pub residual: f64,
    pub features: Vec<Feature>,
    pub phi: Vec<f64>,
    pub reference_values: Vec<f64>,
    /// The wind speed lay outside a conditional table.
    pub used_fallback: bool,
    /// `|power − f_x|`; large values mean the decomposition is unreliable.
    pub abs_error: f64,
    pub low_confidence: bool,
}

impl MonitoringReport {
    pub fn phi_of(&self, feature: Feature) -> Option<f64> {
        self.features.iter().position(|&f| f == feature).map(|i| self.phi[i])
    }

    /// `power − f_ref − (Σ φ + residual)`; zero up to rounding.
    pub fn decomposition_gap(&self) -> f64 {
        (self.power - self.f_ref) - (sum(self.phi.iter().copied()) + self.residual)
    }
}

/// Reusable monitoring context: informed-reference statistics and the
/// confidence threshold, both from the training data.
pub struct Monitor<'a> {
    predictor: &'a dyn Predictor,
    builder: ReferenceBuilder,
    pub confidence_threshold: f64,
}

impl<'a> Monitor<'a> {
    pub fn new(predictor: &'a dyn Predictor, train: &[ScadaRecord], schema: &FeatureSchema) -> Result<Self> {
        if schema.features != predictor.features() {
            return Err(Error::InvalidInput(
                "monitoring schema differs from the model's features".into(),
            ));
        }
        if schema.index_of(Feature::YawMisalignment).is_none() {
            return Err(Error::MissingFeature(Feature::YawMisalignment.name().into()));
        }
        let builder = ReferenceBuilder::new(train, schema)?;
        let errors: Vec<f64> = predictor
            .predict_records(train)
            .iter()
            .zip(train)
            .map(|(p, r)| (r.power - p).abs())
            .collect();
        Ok(Self {
            predictor,
            builder,
            confidence_threshold: quantile(&errors, CONFIDENCE_QUANTILE),
        })
    }

    pub fn decompose(&self, instance: &ScadaRecord) -> Result<MonitoringReport> {
        let x = self.builder.schema.row(instance);
        let reference = self.builder.build(ReferenceStrategy::Informed, Some(&x))?;
        let a = shapley_exact(self.predictor, &x, &reference)?;
        let abs_error = (instance.power - a.f_x).abs();
        Ok(MonitoringReport {
            timestamp: instance.timestamp,
            v_w: instance.v_w,
            power: instance.power,
            f_x: a.f_x,
            f_ref: a.f_ref,
            residual: instance.power - a.f_x,
            features: reference.features.clone(),
            phi: a.phi,
            reference_values: reference.values.clone(),
            used_fallback: reference.used_fallback,
            abs_error,
            low_confidence: abs_error > self.confidence_threshold,
        })
    }
}

/// Single-instance convenience wrapper around [`Monitor`].
pub fn decompose_deviation(
    predictor: &dyn Predictor,
    instance: &ScadaRecord,
    train: &[ScadaRecord],
    schema: &FeatureSchema,
) -> Result<MonitoringReport> {
    Monitor::new(predictor, train, schema)?.decompose(instance)
}
