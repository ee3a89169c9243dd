use windxai::analysis::{write_monitoring_csv, Monitor};
use windxai::attribution::{explain_records, write_attributions_csv, ReferenceBuilder, ReferenceStrategy};
use windxai::data::ScadaRecord;
use windxai::models::{train_model, Feature, TrainedModel};
use windxai::persist::load_model;
use windxai::{FeatureSchema, Predictor};

use crate::args::{resolve, ExplainArgs};
use crate::dataset::{self, Dataset};
use crate::error::{CliError, CliResult};
use crate::output::Outputs;

pub fn explain(cli: ExplainArgs) -> CliResult<()> {
    let (args, echo) = resolve(&cli, cli.common.config.as_ref())?;
    let common = &args.common;
    let dir = dataset::output_dir(common)?;
    let strategy: ReferenceStrategy = args.reference.as_deref().unwrap_or("informed").parse()?;
    let seed = dataset::base_seed(common);

    // Resolve the schema before any training so bad requests fail fast.
    let loaded: Option<TrainedModel> = args.model_file.as_deref().map(load_model).transpose()?;
    let schema = match &loaded {
        Some(m) => FeatureSchema::new(m.features().to_vec())?,
        None => dataset::schema(common, FeatureSchema::base())?,
    };
    if args.monitoring && schema.index_of(Feature::YawMisalignment).is_none() {
        return Err(CliError::Usage(format!(
            "--monitoring needs feature `{}` in the model schema ({})",
            Feature::YawMisalignment.name(),
            schema.features.iter().map(|f| f.name()).collect::<Vec<_>>().join(",")
        )));
    }

    let data = Dataset::load(common)?;
    let split = data.split(common)?;
    let train_period = split.train_period();
    let mut outputs = Outputs::create(dir)?;
    let model = match loaded {
        Some(m) => m,
        None => {
            let spec = dataset::model_specs(common, "ann_small")?.remove(0);
            outputs.time("train", || train_model(&spec.config, &split, &schema, seed))?
        }
    };
    let model_schema = FeatureSchema::new(model.features().to_vec())?;

    let records: Vec<ScadaRecord> = dataset::stride_indices(split.test.len(), args.limit)?
        .into_iter()
        .map(|i| split.test[i].clone())
        .collect();
    let builder = ReferenceBuilder::new(&train_period, &model_schema)?;
    let attrs = outputs.time("explain", || explain_records(&model, &records, &builder, strategy))?;
    outputs.write_with("attributions.csv", |buf| write_attributions_csv(buf, &records, &attrs))?;
    let fallbacks = attrs.iter().filter(|a| a.reference.used_fallback).count();
    println!(
        "explained {} test records with the {strategy} reference ({fallbacks} outside the conditional support)",
        attrs.len()
    );

    if args.monitoring {
        let monitor = Monitor::new(&model, &train_period, &model_schema)?;
        let reports = outputs.time("monitor", || {
            records
                .iter()
                .map(|r| monitor.decompose(r))
                .collect::<windxai::Result<Vec<_>>>()
        })?;
        outputs.write_with("monitoring.csv", |buf| write_monitoring_csv(buf, &reports))?;
        let flagged = reports.iter().filter(|r| r.low_confidence).count();
        println!(
            "monitoring: {flagged} of {} records flagged low-confidence",
            reports.len()
        );
    }
    outputs.finish("manifest.json", "explain", echo, Some(data.input), vec![seed])?;
    Ok(())
}
