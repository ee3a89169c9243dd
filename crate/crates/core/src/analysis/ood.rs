use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::compare_with_baseline;
use crate::data::{DataSplit, ScadaRecord};
use crate::iec::{IecModel, IecOptions};
use crate::models::{evaluate_rmse, train_model, FeatureSchema, ModelSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct OodOptions {
    /// Kept-test instances used for the paired r²_phys against an IEC model
    /// fitted on the kept training data; 0 disables the metric.
    pub r2_instances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OodRow {
    pub label: String,
    pub seed: u64,
    pub rmse_kept: f64,
    pub rmse_removed: f64,
    pub r2_phys: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OodReport {
    pub rows: Vec<OodRow>,
    pub n_kept_train: usize,
    pub n_kept_test: usize,
    pub n_removed_test: usize,
}

impl OodReport {
    pub fn rows_for<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a OodRow> + 'a {
        self.rows.iter().filter(move |r| r.label == label)
    }
}

/// Trains every model on filtered data for every seed and scores it on
/// the filtered and the removed test points. Rows are ordered by model,
/// then seed.
pub fn ood_experiment(
    specs: &[ModelSpec],
    kept: &DataSplit,
    removed_test: &[ScadaRecord],
    schema: &FeatureSchema,
    seeds: &[u64],
    options: &OodOptions,
) -> Result<OodReport> {
    if removed_test.is_empty() {
        return Err(Error::EmptyData("norm filter removed no test points".into()));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidInput("at least one seed is required".into()));
    }
    let train_period = kept.train_period();
    let sample: Vec<ScadaRecord> = match kept.test.len().checked_div(options.r2_instances) {
        None => Vec::new(),
        Some(step) => kept
            .test
            .iter()
            .step_by(step.max(1))
            .take(options.r2_instances)
            .cloned()
            .collect(),
    };
    let baseline = if sample.is_empty() {
        None
    } else {
        Some(IecModel::fit(&train_period, &IecOptions::default())?)
    };
    let jobs: Vec<(&ModelSpec, u64)> = specs.iter().flat_map(|s| seeds.iter().map(move |&k| (s, k))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(spec, seed)| {
            let model = train_model(&spec.config, kept, schema, seed)?;
            let r2_phys = match &baseline {
                Some(b) => compare_with_baseline(&model, b, &train_period, &sample)?.0.r2_phys,
                None => None,
            };
            Ok(OodRow {
                label: spec.label.clone(),
                seed,
                rmse_kept: evaluate_rmse(&model, &kept.test)?,
                rmse_removed: evaluate_rmse(&model, removed_test)?,
                r2_phys,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OodReport {
        rows,
        n_kept_train: train_period.len(),
        n_kept_test: kept.test.len(),
        n_removed_test: removed_test.len(),
    })
}
