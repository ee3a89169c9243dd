use rayon::prelude::*;
use serde_json::json;
use windxai::analysis::{write_faithfulness_csv, write_monitoring_csv, yaw_faithfulness, Monitor};
use windxai::attribution::{explain_records, ReferenceBuilder, ReferenceStrategy};
use windxai::data::{augment_yaw, ScadaRecord, YawAugmentation, YawGroundTruth};
use windxai::models::{train_model, Feature};
use windxai::FeatureSchema;

use crate::args::{resolve, MonitorArgs};
use crate::dataset::{self, Dataset};
use crate::error::{CliError, CliResult};
use crate::output::Outputs;

const DEFAULT_LIMIT: usize = 2000;
const DEFAULT_BIN_KW: f64 = 10.0;

pub fn monitor(cli: MonitorArgs) -> CliResult<()> {
    let (args, echo) = resolve(&cli, cli.common.config.as_ref())?;
    let common = &args.common;
    let dir = dataset::output_dir(common)?;
    let schema = dataset::schema(common, FeatureSchema::with_yaw())?;
    if schema.index_of(Feature::YawMisalignment).is_none() {
        return Err(CliError::Usage(format!(
            "monitoring needs feature `{}` in the model schema",
            Feature::YawMisalignment.name()
        )));
    }
    let spec = dataset::model_specs(common, "rf")?.remove(0);
    let seed = dataset::base_seed(common);
    let data = Dataset::load(common)?;
    let plain = data.split(common)?;
    let mut outputs = Outputs::create(dir)?;

    let (split, truth): (_, Option<Vec<YawGroundTruth>>) = if args.augment_yaw {
        let mut params = YawAugmentation::default();
        if let Some(s) = args.yaw_sigma {
            params.sigma_deg = s;
        }
        if let Some(cfg) = &data.synth {
            params.v_rated = cfg.v_rated;
        }
        let aug = augment_yaw(&plain, &params, seed)?;
        (aug.split, Some(aug.test_truth))
    } else {
        (plain, None)
    };
    let train_period = split.train_period();
    let model = outputs.time("train", || train_model(&spec.config, &split, &schema, seed))?;

    let idx = dataset::stride_indices(split.test.len(), Some(args.limit.unwrap_or(DEFAULT_LIMIT)))?;
    let records: Vec<ScadaRecord> = idx.iter().map(|&i| split.test[i].clone()).collect();
    let monitor = Monitor::new(&model, &train_period, &schema)?;
    let reports = outputs.time("decompose", || {
        records
            .par_iter()
            .map(|r| monitor.decompose(r))
            .collect::<windxai::Result<Vec<_>>>()
    })?;
    outputs.write_with("monitoring.csv", |buf| write_monitoring_csv(buf, &reports))?;
    let flagged = reports.iter().filter(|r| r.low_confidence).count();
    println!(
        "{}: decomposed {} test records, {flagged} flagged low-confidence (threshold {:.2} kW)",
        spec.label,
        reports.len(),
        monitor.confidence_threshold
    );

    let mut report = json!({
        "model": spec.label,
        "seed": seed,
        "n_instances": reports.len(),
        "confidence_threshold_kw": monitor.confidence_threshold,
        "low_confidence": flagged,
    });
    if let Some(truth) = truth {
        let truth: Vec<YawGroundTruth> = idx.iter().map(|&i| truth[i]).collect();
        let builder = ReferenceBuilder::new(&train_period, &schema)?;
        let bin_kw = args.bin_kw.unwrap_or(DEFAULT_BIN_KW);
        let mut faith = Vec::new();
        for strategy in [
            ReferenceStrategy::Min,
            ReferenceStrategy::Mean,
            ReferenceStrategy::Informed,
        ] {
            let attrs = outputs.time(&format!("explain_{strategy}"), || {
                explain_records(&model, &records, &builder, strategy)
            })?;
            let f = yaw_faithfulness(&truth, &attrs, bin_kw)?;
            println!("yaw attribution MAE with the {strategy} reference: {:.2} kW", f.mae);
            report["mae_kw"][strategy.name()] = json!(f.mae);
            faith.push(f);
        }
        outputs.write_with("faithfulness.csv", |buf| write_faithfulness_csv(buf, &faith))?;
        if let Some(cfg) = &data.synth {
            let sigma = truth.iter().map(|t| cfg.noise_sigma(t.p_free)).sum::<f64>() / truth.len() as f64;
            report["mean_noise_sigma_kw"] = json!(sigma);
        }
    }
    outputs.write_json("report.json", &report)?;
    outputs.finish("manifest.json", "monitor", echo, Some(data.input), vec![seed])?;
    Ok(())
}
