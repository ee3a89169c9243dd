//! Experiment harnesses built on attributions: comparison of learned
//! strategies against the physics baseline, attribution curves over wind
//! speed, yaw faithfulness, monitoring decompositions and the
//! out-of-distribution study.

mod export;
mod monitoring;
mod ood;

use serde::{Deserialize, Serialize};

pub use export::{write_curves_csv, write_faithfulness_csv, write_monitoring_csv, write_ood_csv, write_strategy_csv};
pub use monitoring::{decompose_deviation, Monitor, MonitoringReport};
pub use ood::{ood_experiment, OodOptions, OodReport, OodRow};

use crate::attribution::{explain_records, Attribution, ReferenceBuilder, ReferenceStrategy};
use crate::data::{ScadaRecord, YawGroundTruth};
use crate::models::{Feature, FeatureSchema, Predictor};
use crate::stats::{mean, std, sum};
use crate::{Error, Result};

/// Rows required for a wind-speed bin to appear in a conditional curve.
pub const MIN_CURVE_ROWS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    /// Features present in both attribution sets.
    pub features: Vec<Feature>,
    /// Squared Pearson correlation per feature; `None` when either series
    /// has zero variance.
    pub r2: Vec<Option<f64>>,
    /// Unweighted mean of the defined per-feature values.
    pub r2_phys: Option<f64>,
    pub n_instances: usize,
}

impl StrategyReport {
    pub fn r2_of(&self, feature: Feature) -> Option<f64> {
        self.features
            .iter()
            .position(|&f| f == feature)
            .and_then(|i| self.r2[i])
    }
}

/// Squared Pearson correlation, or `None` for a constant series.
pub fn squared_correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let (ma, mb) = (mean(a), mean(b));
    let sab = sum(a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)));
    let saa = sum(a.iter().map(|x| (x - ma) * (x - ma)));
    let sbb = sum(b.iter().map(|y| (y - mb) * (y - mb)));
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    // sab² / (saa·sbb) rather than r·r keeps self-correlation exactly 1.
    Some((sab * sab / (saa * sbb)).min(1.0))
}

/// Per-feature agreement between two attribution sets for the same
/// instances, e.g. a learned model and the IEC baseline.
pub fn strategy_correlation(ml: &[Attribution], iec: &[Attribution]) -> Result<StrategyReport> {
    if ml.len() != iec.len() {
        return Err(Error::InvalidInput(format!(
            "attribution sets differ in length ({} vs {})",
            ml.len(),
            iec.len()
        )));
    }
    let (Some(a0), Some(b0)) = (ml.first(), iec.first()) else {
        return Err(Error::EmptyData("no attributions to compare".into()));
    };
    let pairs: Vec<(Feature, usize, usize)> = a0
        .reference
        .features
        .iter()
        .enumerate()
        .filter_map(|(i, f)| b0.reference.features.iter().position(|g| g == f).map(|j| (*f, i, j)))
        .collect();
    if pairs.is_empty() {
        return Err(Error::InvalidInput("attribution sets share no features".into()));
    }
    let r2: Vec<Option<f64>> = pairs
        .iter()
        .map(|&(_, i, j)| {
            let a: Vec<f64> = ml.iter().map(|x| x.phi[i]).collect();
            let b: Vec<f64> = iec.iter().map(|x| x.phi[j]).collect();
            squared_correlation(&a, &b)
        })
        .collect();
    let defined: Vec<f64> = r2.iter().flatten().copied().collect();
    Ok(StrategyReport {
        features: pairs.iter().map(|p| p.0).collect(),
        r2_phys: (!defined.is_empty()).then(|| mean(&defined)),
        r2,
        n_instances: ml.len(),
    })
}

/// Explains `records` with both predictors under the training-minimum
/// reference and correlates the results.
pub fn compare_with_baseline(
    model: &dyn Predictor,
    baseline: &dyn Predictor,
    train: &[ScadaRecord],
    records: &[ScadaRecord],
) -> Result<(StrategyReport, Vec<Attribution>, Vec<Attribution>)> {
    let ml_ref = ReferenceBuilder::new(train, &FeatureSchema::new(model.features().to_vec())?)?;
    let base_ref = ReferenceBuilder::new(train, &FeatureSchema::new(baseline.features().to_vec())?)?;
    let ml = explain_records(model, records, &ml_ref, ReferenceStrategy::Min)?;
    let base = explain_records(baseline, records, &base_ref, ReferenceStrategy::Min)?;
    Ok((strategy_correlation(&ml, &base)?, ml, base))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveBinStats {
    pub v_center: f64,
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub std: f64,
}

/// Distribution of one feature's attribution over wind-speed bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalCurve {
    pub feature: Feature,
    pub bin_width: f64,
    pub bins: Vec<CurveBinStats>,
}

pub fn conditional_attribution_curves(
    attrs: &[Attribution],
    v_list: &[f64],
    bin_width: f64,
) -> Result<Vec<ConditionalCurve>> {
    if attrs.len() != v_list.len() {
        return Err(Error::InvalidInput(
            "attributions and wind speeds are not aligned".into(),
        ));
    }
    if !(bin_width > 0.0) {
        return Err(Error::InvalidInput(format!("bin width {bin_width} must be positive")));
    }
    let Some(first) = attrs.first() else {
        return Ok(Vec::new());
    };
    let mut groups: std::collections::BTreeMap<i64, Vec<usize>> = Default::default();
    for (i, v) in v_list.iter().enumerate() {
        groups.entry((v / bin_width).floor() as i64).or_default().push(i);
    }
    Ok(first
        .reference
        .features
        .iter()
        .enumerate()
        .map(|(k, &feature)| ConditionalCurve {
            feature,
            bin_width,
            bins: groups
                .iter()
                .filter(|(_, rows)| rows.len() >= MIN_CURVE_ROWS)
                .map(|(&b, rows)| {
                    let phi: Vec<f64> = rows.iter().map(|&i| attrs[i].phi[k]).collect();
                    let min = phi.iter().copied().fold(f64::INFINITY, f64::min);
                    let max = phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    CurveBinStats {
                        v_center: (b as f64 + 0.5) * bin_width,
                        count: rows.len(),
                        // Rounding in the mean must not escape the envelope.
                        mean: mean(&phi).clamp(min, max),
                        min,
                        max,
                        std: std(&phi),
                    }
                })
                .collect(),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaithfulnessBin {
    /// Centre of the ground-truth yaw-loss bin, kW.
    pub truth_center: f64,
    pub count: usize,
    pub mean_phi: f64,
    pub std_phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaithfulnessReport {
    pub strategy: ReferenceStrategy,
    pub bin_kw: f64,
    pub bins: Vec<FaithfulnessBin>,
    /// Mean of |phi_delta_yaw − ΔP_true| over all instances, kW.
    pub mae: f64,
    pub n_instances: usize,
}

/// Compares attributed yaw losses with the injected ground truth.
pub fn yaw_faithfulness(truth: &[YawGroundTruth], attrs: &[Attribution], bin_kw: f64) -> Result<FaithfulnessReport> {
    if truth.len() != attrs.len() {
        return Err(Error::InvalidInput(
            "ground truth and attributions are not aligned".into(),
        ));
    }
    if !(bin_kw > 0.0) {
        return Err(Error::InvalidInput(format!("bin width {bin_kw} must be positive")));
    }
    let Some(first) = attrs.first() else {
        return Err(Error::EmptyData("no attributions to score".into()));
    };
    let k = first
        .reference
        .features
        .iter()
        .position(|&f| f == Feature::YawMisalignment)
        .ok_or_else(|| Error::MissingFeature(Feature::YawMisalignment.name().into()))?;
    let mut groups: std::collections::BTreeMap<i64, Vec<f64>> = Default::default();
    for (t, a) in truth.iter().zip(attrs) {
        groups
            .entry((t.delta_p_true / bin_kw).floor() as i64)
            .or_default()
            .push(a.phi[k]);
    }
    let bins = groups
        .into_iter()
        .map(|(b, phi)| FaithfulnessBin {
            truth_center: (b as f64 + 0.5) * bin_kw,
            count: phi.len(),
            mean_phi: mean(&phi),
            std_phi: std(&phi),
        })
        .collect();
    let abs: Vec<f64> = truth
        .iter()
        .zip(attrs)
        .map(|(t, a)| (a.phi[k] - t.delta_p_true).abs())
        .collect();
    Ok(FaithfulnessReport {
        strategy: first.reference.strategy,
        bin_kw,
        bins,
        mae: mean(&abs),
        n_instances: attrs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::ReferencePoint;

    fn attr(phi: Vec<f64>, features: &[Feature]) -> Attribution {
        let total = phi.iter().sum();
        Attribution {
            phi,
            f_x: total,
            f_ref: 0.0,
            reference: ReferencePoint::custom(features.to_vec(), vec![0.0; features.len()]),
        }
    }

    const BASE: [Feature; 3] = [Feature::WindSpeed, Feature::AirDensity, Feature::Turbulence];

    fn sample(n: usize) -> Vec<Attribution> {
        (0..n)
            .map(|i| {
                let t = i as f64;
                attr(vec![t * t, (t * 0.7).sin(), (t * 1.3).cos()], &BASE)
            })
            .collect()
    }

    #[test]
    fn self_correlation_is_exactly_one() {
        let a = sample(50);
        let r = strategy_correlation(&a, &a).unwrap();
        assert_eq!(r.r2_phys, Some(1.0));
        assert!(r.r2.iter().all(|x| *x == Some(1.0)));
    }

    #[test]
    fn affine_rescaling_keeps_correlation() {
        let a = sample(50);
        let b: Vec<Attribution> = a
            .iter()
            .map(|x| attr(x.phi.iter().map(|p| -3.0 * p + 7.0).collect(), &BASE))
            .collect();
        let r = strategy_correlation(&a, &b).unwrap();
        for v in r.r2.iter().flatten() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_series_is_missing_and_excluded() {
        let a = sample(20);
        let b: Vec<Attribution> = a.iter().map(|x| attr(vec![x.phi[0], 1.0, x.phi[2]], &BASE)).collect();
        let r = strategy_correlation(&a, &b).unwrap();
        assert_eq!(r.r2[1], None);
        assert_eq!(r.r2_phys, Some(1.0));
    }

    #[test]
    fn independent_attributions_have_small_correlation() {
        use rand::Rng;
        let mut rng = crate::rng::stream(3, 0);
        let mut draw = |n| -> Vec<Attribution> {
            (0..n)
                .map(|_| attr((0..3).map(|_| rng.random::<f64>()).collect(), &BASE))
                .collect()
        };
        let (a, b) = (draw(1000), draw(1000));
        assert!(strategy_correlation(&a, &b).unwrap().r2_phys.unwrap() < 0.05);
    }

    #[test]
    fn curves_drop_sparse_bins_and_bound_the_mean() {
        let attrs: Vec<Attribution> = (0..9).map(|_| attr(vec![2.0, 0.0, 1.0], &BASE)).collect();
        let v = [5.1, 5.2, 5.3, 5.4, 5.45, 7.1, 7.2, 7.3, 7.4];
        let curves = conditional_attribution_curves(&attrs, &v, 0.5).unwrap();
        assert_eq!(curves.len(), 3);
        assert_eq!(curves[0].bins.len(), 1);
        let b = &curves[0].bins[0];
        assert_eq!((b.v_center, b.count, b.min, b.mean, b.max), (5.25, 5, 2.0, 2.0, 2.0));
    }

    fn truth(d: f64) -> YawGroundTruth {
        YawGroundTruth {
            c_ymis: 0.9,
            delta_p_true: d,
            p_free: 1000.0,
        }
    }

    #[test]
    fn perfect_and_null_yaw_attributions() {
        let f = Feature::ALL;
        let truths: Vec<YawGroundTruth> = [-80.0, -40.0, -5.0, 0.0].map(truth).to_vec();
        let perfect: Vec<Attribution> = truths
            .iter()
            .map(|t| attr(vec![0.0, 0.0, 0.0, t.delta_p_true], &f))
            .collect();
        let rep = yaw_faithfulness(&truths, &perfect, 25.0).unwrap();
        assert_eq!(rep.mae, 0.0);
        assert_eq!(rep.bins.len(), 4);
        let null: Vec<Attribution> = truths.iter().map(|_| attr(vec![0.0; 4], &f)).collect();
        assert_eq!(yaw_faithfulness(&truths, &null, 25.0).unwrap().mae, 31.25);
        assert!(matches!(
            yaw_faithfulness(&truths, &sample(4), 25.0),
            Err(Error::MissingFeature(_))
        ));
    }
}
