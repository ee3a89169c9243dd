use serde_json::{json, Map};
use windxai::analysis::{ood_experiment, write_ood_csv, OodOptions};
use windxai::data::{norm_filter, DataSplit};
use windxai::iec::{fit_binned_curve, BinningOptions};
use windxai::FeatureSchema;

use super::mean_std;
use crate::args::{resolve, OodArgs};
use crate::dataset::{self, Dataset};
use crate::error::{CliError, CliResult};
use crate::output::Outputs;

const DEFAULT_THRESHOLD_KW: f64 = 100.0;

pub fn ood(cli: OodArgs) -> CliResult<()> {
    let (args, echo) = resolve(&cli, cli.common.config.as_ref())?;
    let common = &args.common;
    let dir = dataset::output_dir(common)?;
    let schema = dataset::schema(common, FeatureSchema::base())?;
    let specs = dataset::model_specs(common, dataset::ALL_MODELS)?;
    let seeds = dataset::seeds(common)?;
    let threshold = args.threshold.unwrap_or(DEFAULT_THRESHOLD_KW);
    let data = Dataset::load(common)?;
    let split = data.split(common)?;
    let mut outputs = Outputs::create(dir)?;

    let curve_kind = args
        .reference_curve
        .clone()
        .unwrap_or_else(|| if data.synth.is_some() { "manufacturer" } else { "binned" }.into());
    let curve = match (curve_kind.as_str(), &data.synth) {
        ("manufacturer", Some(cfg)) => cfg.manufacturer_curve(BinningOptions::default().bin_width),
        ("manufacturer", None) => {
            return Err(CliError::Usage(
                "the manufacturer curve is only known for synthetic data; use --reference-curve binned".into(),
            ))
        }
        ("binned", _) => {
            let period = split.train_period();
            let rho_ref = period.iter().map(|r| r.rho).sum::<f64>() / period.len() as f64;
            fit_binned_curve(&period, &BinningOptions::default(), rho_ref)?
        }
        (other, _) => {
            return Err(CliError::Usage(format!(
                "unknown reference curve `{other}` (expected manufacturer or binned)"
            )))
        }
    };

    let train = norm_filter(&split.train, &curve, threshold)?;
    let val = norm_filter(&split.val, &curve, threshold)?;
    let test = norm_filter(&split.test, &curve, threshold)?;
    let removed = test.removed_records();
    let kept = DataSplit {
        train: train.kept,
        val: val.kept,
        test: test.kept,
        seed: split.seed,
    };
    let options = OodOptions {
        r2_instances: args.r2_instances.unwrap_or(0),
    };
    let report = outputs.time("experiment", || {
        ood_experiment(&specs, &kept, &removed, &schema, &seeds, &options)
    })?;
    outputs.write_with("ood.csv", |buf| write_ood_csv(buf, &report))?;

    let mut summary = Map::new();
    println!(
        "norm filter at {threshold} kW: {} kept / {} removed test records",
        report.n_kept_test, report.n_removed_test
    );
    println!("{:<12} {:>12} {:>14}", "model", "kept [kW]", "removed [kW]");
    for spec in &specs {
        let rows: Vec<_> = report.rows_for(&spec.label).collect();
        let (kept_m, _) = mean_std(&rows.iter().map(|r| r.rmse_kept).collect::<Vec<_>>());
        let (removed_m, _) = mean_std(&rows.iter().map(|r| r.rmse_removed).collect::<Vec<_>>());
        println!("{:<12} {kept_m:>12.2} {removed_m:>14.2}", spec.label);
        summary.insert(
            spec.label.clone(),
            json!({ "mean_rmse_kept_kw": kept_m, "mean_rmse_removed_kw": removed_m, "runs": rows.len() }),
        );
    }
    outputs.write_json(
        "report.json",
        &json!({
            "threshold_kw": threshold,
            "reference_curve": curve_kind,
            "n_kept_train": report.n_kept_train,
            "n_kept_test": report.n_kept_test,
            "n_removed_test": report.n_removed_test,
            "summary": summary,
        }),
    )?;
    outputs.finish("manifest.json", "ood", echo, Some(data.input), seeds)?;
    Ok(())
}
