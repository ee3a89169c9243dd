use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::ScadaRecord;
use crate::models::{Feature, FeatureSchema};
use crate::stats::{interp_clamped, mean};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceStrategy {
    /// Per-feature training minimum; explains relative to cut-in conditions.
    Min,
    /// Per-feature training mean.
    Mean,
    /// Expected conditions at the instance's wind speed with healthy
    /// technical state.
    Informed,
    /// Caller-supplied values.
    Custom,
}

impl ReferenceStrategy {
    pub fn name(self) -> &'static str {
        match self {
            ReferenceStrategy::Min => "min",
            ReferenceStrategy::Mean => "mean",
            ReferenceStrategy::Informed => "informed",
            ReferenceStrategy::Custom => "custom",
        }
    }
}

impl fmt::Display for ReferenceStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReferenceStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(ReferenceStrategy::Min),
            "mean" => Ok(ReferenceStrategy::Mean),
            "informed" => Ok(ReferenceStrategy::Informed),
            other => Err(Error::InvalidInput(format!(
                "unknown reference strategy `{other}` (expected min, mean or informed)"
            ))),
        }
    }
}

/// Reference input x̃ in physical units, one value per schema feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub strategy: ReferenceStrategy,
    pub features: Vec<Feature>,
    pub values: Vec<f64>,
    /// An informed lookup fell outside a conditional table and used the
    /// global mean instead.
    pub used_fallback: bool,
}

impl ReferencePoint {
    pub fn custom(features: Vec<Feature>, values: Vec<f64>) -> Self {
        Self {
            strategy: ReferenceStrategy::Custom,
            features,
            values,
            used_fallback: false,
        }
    }
}

/// Conditional mean of one feature given wind speed, from 0.5 m/s bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalTable {
    pub feature: Feature,
    pub bin_width: f64,
    /// Mean wind speed per retained bin.
    pub centers: Vec<f64>,
    pub means: Vec<f64>,
    /// Lower edge of the first and upper edge of the last retained bin.
    pub support: (f64, f64),
    pub global_mean: f64,
}

impl ConditionalTable {
    pub const DEFAULT_BIN_WIDTH: f64 = 0.5;
    pub const MIN_ROWS: usize = 10;

    pub fn fit(train: &[ScadaRecord], feature: Feature, bin_width: f64, min_rows: usize) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyData("conditional table needs training rows".into()));
        }
        let mut acc: BTreeMap<i64, (f64, f64, usize)> = BTreeMap::new();
        for r in train {
            let e = acc.entry((r.v_w / bin_width).floor() as i64).or_default();
            e.0 += r.v_w;
            e.1 += feature.value(r);
            e.2 += 1;
        }
        let kept: Vec<(i64, f64, f64)> = acc
            .into_iter()
            .filter(|(_, (_, _, n))| *n >= min_rows)
            .map(|(k, (v, x, n))| (k, v / n as f64, x / n as f64))
            .collect();
        let global_mean = mean(&train.iter().map(|r| feature.value(r)).collect::<Vec<_>>());
        let support = match (kept.first(), kept.last()) {
            (Some(f), Some(l)) => (f.0 as f64 * bin_width, (l.0 + 1) as f64 * bin_width),
            _ => (f64::NAN, f64::NAN),
        };
        Ok(Self {
            feature,
            bin_width,
            centers: kept.iter().map(|k| k.1).collect(),
            means: kept.iter().map(|k| k.2).collect(),
            support,
            global_mean,
        })
    }

    /// Conditional mean at wind speed `v`; the global mean (flagged) outside
    /// the table's support.
    pub fn lookup(&self, v: f64) -> (f64, bool) {
        if self.centers.is_empty() || v < self.support.0 || v >= self.support.1 {
            return (self.global_mean, true);
        }
        (interp_clamped(&self.centers, &self.means, v), false)
    }
}

/// Training statistics needed to build any reference point for a schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceBuilder {
    pub schema: FeatureSchema,
    pub min: Vec<f64>,
    pub mean: Vec<f64>,
    /// Conditional tables for environmental features other than wind speed.
    pub tables: Vec<Option<ConditionalTable>>,
}

impl ReferenceBuilder {
    pub fn new(train: &[ScadaRecord], schema: &FeatureSchema) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyData("reference points need training rows".into()));
        }
        let mut min = Vec::with_capacity(schema.len());
        let mut means = Vec::with_capacity(schema.len());
        let mut tables = Vec::with_capacity(schema.len());
        for &f in &schema.features {
            let col: Vec<f64> = train.iter().map(|r| f.value(r)).collect();
            min.push(col.iter().copied().fold(f64::INFINITY, f64::min));
            means.push(mean(&col));
            tables.push(if f == Feature::WindSpeed || f.is_technical() {
                None
            } else {
                Some(ConditionalTable::fit(
                    train,
                    f,
                    ConditionalTable::DEFAULT_BIN_WIDTH,
                    ConditionalTable::MIN_ROWS,
                )?)
            });
        }
        Ok(Self {
            schema: schema.clone(),
            min,
            mean: means,
            tables,
        })
    }

    /// `instance` is a feature vector in schema order, required for the
    /// informed strategy.
    pub fn build(&self, strategy: ReferenceStrategy, instance: Option<&[f64]>) -> Result<ReferencePoint> {
        let features = self.schema.features.clone();
        let mut used_fallback = false;
        let values = match strategy {
            ReferenceStrategy::Min => self.min.clone(),
            ReferenceStrategy::Mean => self.mean.clone(),
            ReferenceStrategy::Custom => {
                return Err(Error::InvalidInput(
                    "custom references are built with ReferencePoint::custom".into(),
                ))
            }
            ReferenceStrategy::Informed => {
                let x =
                    instance.ok_or_else(|| Error::InvalidInput("informed reference requires an instance".into()))?;
                if x.len() != features.len() {
                    return Err(Error::SchemaMismatch {
                        expected: features.len(),
                        got: x.len(),
                    });
                }
                let wind = self
                    .schema
                    .index_of(Feature::WindSpeed)
                    .ok_or_else(|| Error::MissingFeature(Feature::WindSpeed.name().into()))?;
                let v = x[wind];
                features
                    .iter()
                    .zip(&self.tables)
                    .map(|(&f, table)| match (f, table) {
                        (Feature::WindSpeed, _) => v,
                        (f, _) if f.is_technical() => 0.0,
                        (_, Some(t)) => {
                            let (value, fallback) = t.lookup(v);
                            used_fallback |= fallback;
                            value
                        }
                        (_, None) => unreachable!("environmental features always carry a table"),
                    })
                    .collect()
            }
        };
        Ok(ReferencePoint {
            strategy,
            features,
            values,
            used_fallback,
        })
    }
}

/// One-shot reference construction; prefer [`ReferenceBuilder`] when
/// explaining many instances.
pub fn build_reference(
    strategy: ReferenceStrategy,
    train: &[ScadaRecord],
    schema: &FeatureSchema,
    instance: Option<&[f64]>,
) -> Result<ReferencePoint> {
    ReferenceBuilder::new(train, schema)?.build(strategy, instance)
}
