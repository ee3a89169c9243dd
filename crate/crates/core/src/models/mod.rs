//! Trainable regressors behind a uniform [`Predictor`] contract.

mod forest;
mod mlp;
mod scaler;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use forest::{rf_train, ForestConfig, ForestModel, Node, Tree};
pub use mlp::{
    mlp_train, Activation, EpochRecord, GradientCheck, Layer, MlpConfig, MlpModel, StopReason, TrainingHistory,
};
pub use scaler::{fit_scaler, Standardizer};

use crate::data::{DataSplit, ScadaRecord};
use crate::iec::{IecModel, IecOptions};
use crate::{Error, Result};

/// Model input quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Feature {
    #[serde(rename = "v_w")]
    WindSpeed,
    #[serde(rename = "rho")]
    AirDensity,
    #[serde(rename = "ti")]
    Turbulence,
    #[serde(rename = "delta_yaw")]
    YawMisalignment,
}

impl Feature {
    pub const ALL: [Feature; 4] = [
        Feature::WindSpeed,
        Feature::AirDensity,
        Feature::Turbulence,
        Feature::YawMisalignment,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::WindSpeed => "v_w",
            Feature::AirDensity => "rho",
            Feature::Turbulence => "ti",
            Feature::YawMisalignment => "delta_yaw",
        }
    }

    pub fn value(self, r: &ScadaRecord) -> f64 {
        match self {
            Feature::WindSpeed => r.v_w,
            Feature::AirDensity => r.rho,
            Feature::Turbulence => r.ti,
            Feature::YawMisalignment => r.delta_yaw,
        }
    }

    /// Environmental features follow the weather; technical ones describe the
    /// turbine's own state.
    pub fn is_technical(self) -> bool {
        matches!(self, Feature::YawMisalignment)
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Feature::ALL
            .into_iter()
            .find(|f| f.name() == s.trim())
            .ok_or_else(|| Error::InvalidInput(format!("unknown feature `{s}`")))
    }
}

/// Ordered model inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<Feature>,
}

impl FeatureSchema {
    pub fn new(features: Vec<Feature>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidInput("empty feature schema".into()));
        }
        let mut sorted = features.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != features.len() {
            return Err(Error::InvalidInput("duplicate feature in schema".into()));
        }
        Ok(Self { features })
    }

    /// Wind speed, air density and turbulence intensity.
    pub fn base() -> Self {
        Self {
            features: vec![Feature::WindSpeed, Feature::AirDensity, Feature::Turbulence],
        }
    }

    /// The base set plus yaw misalignment.
    pub fn with_yaw() -> Self {
        Self {
            features: Feature::ALL.to_vec(),
        }
    }

    pub fn parse_list(spec: &str) -> Result<Self> {
        Self::new(spec.split(',').map(str::parse).collect::<Result<_>>()?)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn index_of(&self, f: Feature) -> Option<usize> {
        self.features.iter().position(|&g| g == f)
    }

    pub fn row(&self, r: &ScadaRecord) -> Vec<f64> {
        self.features.iter().map(|f| f.value(r)).collect()
    }

    pub fn rows(&self, records: &[ScadaRecord]) -> Vec<Vec<f64>> {
        records.iter().map(|r| self.row(r)).collect()
    }
}

/// Anything mapping a feature vector in physical units to power in kW.
pub trait Predictor: Send + Sync {
    fn features(&self) -> &[Feature];

    /// Prediction for a row already known to match [`Predictor::features`].
    fn predict_row(&self, x: &[f64]) -> f64;

    fn predict(&self, x: &[f64]) -> Result<f64> {
        let expected = self.features().len();
        if x.len() != expected {
            return Err(Error::SchemaMismatch { expected, got: x.len() });
        }
        Ok(self.predict_row(x))
    }

    fn predict_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter().map(|x| self.predict(x)).collect()
    }

    fn predict_records(&self, records: &[ScadaRecord]) -> Vec<f64> {
        records
            .iter()
            .map(|r| {
                let x: Vec<f64> = self.features().iter().map(|f| f.value(r)).collect();
                self.predict_row(&x)
            })
            .collect()
    }
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn features(&self) -> &[Feature] {
        (**self).features()
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        (**self).predict_row(x)
    }
}

/// Root-mean-square error in kW over a dataset.
pub fn evaluate_rmse(predictor: &dyn Predictor, records: &[ScadaRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyData("cannot evaluate on an empty dataset".into()));
    }
    let preds = predictor.predict_records(records);
    let sq = records.iter().zip(&preds).map(|(r, p)| (p - r.power) * (p - r.power));
    Ok((crate::stats::sum(sq) / records.len() as f64).sqrt())
}

/// Training recipe for one model family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Iec(IecOptions),
    Mlp(MlpConfig),
    Forest(ForestConfig),
}

/// A model recipe with a display label such as `ann_small`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub label: String,
    pub config: ModelConfig,
}

impl ModelSpec {
    /// `iec`, `rf`, `ann_small` or `ann_large`.
    pub fn preset(label: &str) -> Result<Self> {
        let config = match label {
            "iec" => ModelConfig::Iec(IecOptions::default()),
            "rf" => ModelConfig::Forest(ForestConfig::default()),
            "ann_small" => ModelConfig::Mlp(MlpConfig::ann_small()),
            "ann_large" => ModelConfig::Mlp(MlpConfig::ann_large()),
            other => return Err(Error::InvalidInput(format!("unknown model `{other}`"))),
        };
        Ok(Self {
            label: label.to_string(),
            config,
        })
    }

    pub fn is_seeded(&self) -> bool {
        !matches!(self.config, ModelConfig::Iec(_))
    }
}

/// Any fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "snake_case")]
pub enum TrainedModel {
    Iec(IecModel),
    Mlp(MlpModel),
    Forest(ForestModel),
}

impl TrainedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            TrainedModel::Iec(_) => "iec",
            TrainedModel::Mlp(_) => "mlp",
            TrainedModel::Forest(_) => "forest",
        }
    }

    fn inner(&self) -> &dyn Predictor {
        match self {
            TrainedModel::Iec(m) => m,
            TrainedModel::Mlp(m) => m,
            TrainedModel::Forest(m) => m,
        }
    }
}

impl Predictor for TrainedModel {
    fn features(&self) -> &[Feature] {
        self.inner().features()
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        self.inner().predict_row(x)
    }
}

/// Fits one model on a split. The IEC baseline always uses the base
/// feature set and ignores `seed`.
pub fn train_model(config: &ModelConfig, split: &DataSplit, schema: &FeatureSchema, seed: u64) -> Result<TrainedModel> {
    Ok(match config {
        ModelConfig::Iec(opts) => TrainedModel::Iec(IecModel::fit(&split.train_period(), opts)?),
        ModelConfig::Mlp(cfg) => TrainedModel::Mlp(mlp_train(cfg, schema, &split.train, &split.val, seed)?),
        ModelConfig::Forest(cfg) => TrainedModel::Forest(rf_train(cfg, schema, &split.train_period(), seed)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::record;

    struct Constant(f64);

    impl Predictor for Constant {
        fn features(&self) -> &[Feature] {
            &[Feature::WindSpeed]
        }
        fn predict_row(&self, _: &[f64]) -> f64 {
            self.0
        }
    }

    #[test]
    fn rmse_examples() {
        let recs = [record(5.0, 300.0), record(6.0, 400.0)];
        let rmse = evaluate_rmse(&Constant(0.0), &recs).unwrap();
        assert!((rmse - 353.553_390_593_273_7).abs() < 1e-9);
        let reversed = [recs[1].clone(), recs[0].clone()];
        assert_eq!(evaluate_rmse(&Constant(0.0), &reversed).unwrap(), rmse);
        assert_eq!(evaluate_rmse(&Constant(300.0), &recs[..1]).unwrap(), 0.0);
        assert!(evaluate_rmse(&Constant(0.0), &[]).is_err());
    }

    #[test]
    fn schema_mismatch_detected() {
        let err = Constant(1.0).predict(&[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::SchemaMismatch { expected: 1, got: 2 }));
    }

    #[test]
    fn schema_parsing() {
        let s = FeatureSchema::parse_list("v_w,rho,ti,delta_yaw").unwrap();
        assert_eq!(s, FeatureSchema::with_yaw());
        assert!(FeatureSchema::parse_list("v_w,v_w").is_err());
        assert!(FeatureSchema::parse_list("pitch").is_err());
    }

    #[test]
    fn presets_echo_published_hyperparameters() {
        let ModelConfig::Forest(rf) = ModelSpec::preset("rf").unwrap().config else {
            panic!()
        };
        assert_eq!((rf.n_trees, rf.min_samples_leaf, rf.min_samples_split), (100, 30, 3));
        let ModelConfig::Mlp(small) = ModelSpec::preset("ann_small").unwrap().config else {
            panic!()
        };
        assert_eq!(
            (small.hidden.clone(), small.activation),
            (vec![3, 3], Activation::Logistic)
        );
        let ModelConfig::Mlp(large) = ModelSpec::preset("ann_large").unwrap().config else {
            panic!()
        };
        assert_eq!(
            (large.hidden.clone(), large.activation),
            (vec![100, 100, 25], Activation::Relu)
        );
        assert!(ModelSpec::preset("svm").is_err());
    }
}
