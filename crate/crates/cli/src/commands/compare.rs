use rayon::prelude::*;
use serde_json::{json, Map, Value};
use windxai::analysis::{compare_with_baseline, conditional_attribution_curves, write_curves_csv, StrategyReport};
use windxai::attribution::Attribution;
use windxai::data::ScadaRecord;
use windxai::iec::IecModel;
use windxai::FeatureSchema;

use super::{mean_std, train_runs};
use crate::args::{resolve, CompareArgs};
use crate::dataset::{self, Dataset};
use crate::error::{CliError, CliResult};
use crate::output::Outputs;

const DEFAULT_LIMIT: usize = 2000;
const DEFAULT_BIN_WIDTH: f64 = 0.5;

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// `(feature name, r²)` rows of a report, ending with `r2_phys`.
fn report_rows(report: &StrategyReport) -> Vec<(String, Option<f64>)> {
    let mut rows: Vec<(String, Option<f64>)> = report
        .features
        .iter()
        .zip(&report.r2)
        .map(|(f, r)| (f.name().to_string(), *r))
        .collect();
    rows.push(("r2_phys".into(), report.r2_phys));
    rows
}

pub fn compare_strategy(cli: CompareArgs) -> CliResult<()> {
    let (args, echo) = resolve(&cli, cli.common.config.as_ref())?;
    let common = &args.common;
    let dir = dataset::output_dir(common)?;
    let bin_width = args.bin_width.unwrap_or(DEFAULT_BIN_WIDTH);
    let schema = dataset::schema(common, FeatureSchema::base())?;
    let specs = dataset::model_specs(common, "ann_small")?;
    let seeds = dataset::seeds(common)?;
    let data = Dataset::load(common)?;
    let split = data.split(common)?;
    let train_period = split.train_period();
    let mut outputs = Outputs::create(dir)?;

    let iec = outputs.time("fit_iec", || IecModel::fit(&train_period, &Default::default()))?;
    let sample: Vec<ScadaRecord> =
        dataset::stride_indices(split.test.len(), Some(args.limit.unwrap_or(DEFAULT_LIMIT)))?
            .into_iter()
            .map(|i| split.test[i].clone())
            .collect();
    if sample.len() < 2 {
        return Err(CliError::Data("fewer than two test records to correlate".into()));
    }
    let v_list: Vec<f64> = sample.iter().map(|r| r.v_w).collect();

    // The IEC entry, if listed, is the self-comparison sanity check.
    let learned: Vec<_> = specs.iter().filter(|s| s.is_seeded()).cloned().collect();
    let runs = outputs.time("train", || train_runs(&learned, &split, &schema, &seeds))?;
    type Compared = (StrategyReport, Vec<Attribution>, Vec<Attribution>);
    let compared: Vec<Compared> = outputs.time("explain", || {
        runs.par_iter()
            .map(|r| compare_with_baseline(&r.model, &iec, &train_period, &sample))
            .collect::<windxai::Result<_>>()
    })?;

    let mut rows: Vec<(String, Option<u64>, StrategyReport)> = Vec::new();
    let mut iec_attrs: Option<Vec<Attribution>> = None;
    if specs.iter().any(|s| !s.is_seeded()) {
        let (report, attrs, _) = compare_with_baseline(&iec, &iec, &train_period, &sample)?;
        rows.push(("iec".into(), None, report));
        iec_attrs = Some(attrs);
    }
    let mut first_attrs: Vec<(String, Vec<Attribution>)> = Vec::new();
    for (run, (report, ml, base)) in runs.iter().zip(compared) {
        if !first_attrs.iter().any(|(l, _)| *l == run.label) {
            first_attrs.push((run.label.clone(), ml));
        }
        iec_attrs.get_or_insert(base);
        rows.push((run.label.clone(), run.seed, report));
    }

    let mut csv = String::from("label,seed,feature,r2,n_instances\n");
    for (label, seed, report) in &rows {
        let seed = seed.map(|s| s.to_string()).unwrap_or_default();
        for (feature, r2) in report_rows(report) {
            csv.push_str(&format!(
                "{label},{seed},{feature},{},{}\n",
                fmt_opt(r2),
                report.n_instances
            ));
        }
    }
    outputs.write("strategy.csv", csv.as_bytes())?;

    let mut summary = String::from("label,feature,mean_r2,std_r2,runs\n");
    let mut json_summary = Map::new();
    let mut labels: Vec<&str> = Vec::new();
    for (label, _, _) in &rows {
        if !labels.contains(&label.as_str()) {
            labels.push(label);
        }
    }
    for label in labels {
        let reports: Vec<&StrategyReport> = rows.iter().filter(|r| r.0 == label).map(|r| &r.2).collect();
        let mut per_feature = Map::new();
        for (k, (feature, _)) in report_rows(reports[0]).iter().enumerate() {
            let values: Vec<f64> = reports.iter().filter_map(|r| report_rows(r)[k].1).collect();
            if values.is_empty() {
                summary.push_str(&format!("{label},{feature},,,0\n"));
                per_feature.insert(feature.clone(), Value::Null);
                continue;
            }
            let (m, s) = mean_std(&values);
            summary.push_str(&format!("{label},{feature},{m},{s},{}\n", values.len()));
            per_feature.insert(feature.clone(), json!({ "mean": m, "std": s, "runs": values.len() }));
            if feature == "r2_phys" {
                println!("{label:<12} r2_phys {m:.2} ± {s:.2} over {} runs", values.len());
            }
        }
        json_summary.insert(label.to_string(), Value::Object(per_feature));
    }
    outputs.write("strategy_summary.csv", summary.as_bytes())?;

    if let Some(attrs) = &iec_attrs {
        let curves = conditional_attribution_curves(attrs, &v_list, bin_width)?;
        outputs.write_with("curves_iec.csv", |buf| write_curves_csv(buf, &curves))?;
    }
    for (label, attrs) in &first_attrs {
        let curves = conditional_attribution_curves(attrs, &v_list, bin_width)?;
        outputs.write_with(&format!("curves_{label}.csv"), |buf| write_curves_csv(buf, &curves))?;
    }
    outputs.write_json(
        "report.json",
        &json!({ "n_instances": sample.len(), "reference": "min", "summary": json_summary }),
    )?;
    outputs.finish("manifest.json", "compare-strategy", echo, Some(data.input), seeds)?;
    Ok(())
}
