mod compare;
mod explain;
mod monitor;
mod ood;

use rayon::prelude::*;
use windxai::data::{generate_synthetic, write_scada_csv, DataSplit, SynthConfig, TiModel};
use windxai::models::{evaluate_rmse, train_model, ModelSpec, TrainedModel};
use windxai::persist::{load_model, model_to_json};
use windxai::FeatureSchema;

use crate::args::{resolve, EvaluateArgs, SynthArgs, TrainArgs};
use crate::dataset::{self, Dataset, DEFAULT_SYNTH_SEED};
use crate::error::{CliError, CliResult};
use crate::output::Outputs;

pub use compare::compare_strategy;
pub use explain::explain;
pub use monitor::monitor;
pub use ood::ood;

/// One fitted model; `seed` is `None` for the deterministic IEC baseline.
pub(crate) struct Run {
    pub label: String,
    pub seed: Option<u64>,
    pub model: TrainedModel,
}

impl Run {
    pub fn stem(&self) -> String {
        match self.seed {
            Some(s) => format!("{}-seed{s}", self.label),
            None => self.label.clone(),
        }
    }
}

/// Fits every seeded model once per seed and unseeded ones once, in
/// parallel. Output order is model order, then seed order.
pub(crate) fn train_runs(
    specs: &[ModelSpec],
    split: &DataSplit,
    schema: &FeatureSchema,
    seeds: &[u64],
) -> CliResult<Vec<Run>> {
    let jobs: Vec<(&ModelSpec, Option<u64>)> = specs
        .iter()
        .flat_map(|spec| {
            let per_seed: Vec<Option<u64>> = if spec.is_seeded() {
                seeds.iter().map(|&s| Some(s)).collect()
            } else {
                vec![None]
            };
            per_seed.into_iter().map(move |s| (spec, s))
        })
        .collect();
    jobs.par_iter()
        .map(|&(spec, seed)| {
            let model = train_model(&spec.config, split, schema, seed.unwrap_or(0))?;
            Ok(Run {
                label: spec.label.clone(),
                seed,
                model,
            })
        })
        .collect()
}

pub fn synth(cli: SynthArgs) -> CliResult<()> {
    let (args, echo) = resolve(&cli, cli.config.as_ref())?;
    let out = args
        .out
        .clone()
        .ok_or_else(|| CliError::Usage("--out <file.csv> is required".into()))?;
    let mut config = SynthConfig::default();
    if let Some(n) = args.n {
        config.n_samples = n;
    }
    if let Some(t) = &args.rated_transition {
        config.rated_transition = dataset::parse_rated_transition(t)?;
    }
    if let Some(ti) = args.ti_fixed {
        config.ti = TiModel {
            fixed: Some(ti),
            ..TiModel::default()
        };
    }
    let seed = args.seed.unwrap_or(DEFAULT_SYNTH_SEED);
    let name = out
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("{} is not a file path", out.display())))?
        .to_string_lossy()
        .into_owned();
    let dir = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let mut outputs = Outputs::create(&dir)?;
    let (records, _) = outputs.time("generate", || generate_synthetic(&config, seed))?;
    outputs.write_with(&name, |buf| write_scada_csv(buf, &records))?;
    let manifest = outputs.finish(&format!("{name}.manifest.json"), "synth", echo, None, vec![seed])?;
    println!("wrote {} records to {}", records.len(), out.display());
    println!("manifest: {}", manifest.display());
    Ok(())
}

pub fn train(cli: TrainArgs) -> CliResult<()> {
    let (args, echo) = resolve(&cli, cli.common.config.as_ref())?;
    let common = &args.common;
    let dir = dataset::output_dir(common)?;
    let specs = dataset::model_specs(common, dataset::ALL_MODELS)?;
    let schema = dataset::schema(common, FeatureSchema::base())?;
    let seeds = dataset::seeds(common)?;
    let data = Dataset::load(common)?;
    let split = data.split(common)?;

    let mut outputs = Outputs::create(dir)?;
    let runs = outputs.time("train", || train_runs(&specs, &split, &schema, &seeds))?;
    for run in &runs {
        let stem = run.stem();
        outputs.write(&format!("{stem}.model.json"), model_to_json(&run.model)?.as_bytes())?;
        if let TrainedModel::Mlp(m) = &run.model {
            outputs.write(&format!("{stem}.history.csv"), m.history.to_csv().as_bytes())?;
            println!(
                "{stem}: {} epochs, best validation loss {:.6} ({:?})",
                m.history.epochs.len(),
                m.history.best_val_loss,
                m.history.stop_reason
            );
        } else {
            println!("{stem}: fitted");
        }
    }
    outputs.finish("manifest.json", "train", echo, Some(data.input), seeds)?;
    Ok(())
}

/// Sample standard deviation; 0 for a single value.
pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn evaluate(cli: EvaluateArgs) -> CliResult<()> {
    let (args, echo) = resolve(&cli, cli.common.config.as_ref())?;
    let common = &args.common;
    let dir = dataset::output_dir(common)?;
    let schema = dataset::schema(common, FeatureSchema::base())?;
    let data = Dataset::load(common)?;
    let split = data.split(common)?;
    let mut outputs = Outputs::create(dir)?;

    let (runs, seeds) = if args.model_files.is_empty() {
        let specs = dataset::model_specs(common, dataset::ALL_MODELS)?;
        let seeds = dataset::seeds(common)?;
        let runs = outputs.time("train", || train_runs(&specs, &split, &schema, &seeds))?;
        (runs, seeds)
    } else {
        let mut runs = Vec::new();
        for path in &args.model_files {
            let label = path
                .file_name()
                .map(|n| n.to_string_lossy().trim_end_matches(".model.json").to_string())
                .unwrap_or_else(|| path.display().to_string());
            runs.push(Run {
                label,
                seed: None,
                model: load_model(path)?,
            });
        }
        (runs, Vec::new())
    };

    let rmse: Vec<f64> = outputs.time("evaluate", || {
        runs.par_iter()
            .map(|r| evaluate_rmse(&r.model, &split.test))
            .collect::<windxai::Result<_>>()
    })?;
    let mut csv = String::from("label,seed,rmse_kw\n");
    for (run, e) in runs.iter().zip(&rmse) {
        let seed = run.seed.map(|s| s.to_string()).unwrap_or_default();
        csv.push_str(&format!("{},{seed},{e}\n", run.label));
    }
    outputs.write("rmse.csv", csv.as_bytes())?;

    let mut labels: Vec<&str> = Vec::new();
    for run in &runs {
        if !labels.contains(&run.label.as_str()) {
            labels.push(&run.label);
        }
    }
    let mut summary = String::from("label,mean_rmse_kw,std_rmse_kw,runs\n");
    println!("{:<12} {:>14} {:>10} {:>5}", "model", "RMSE [kW]", "std", "runs");
    for label in labels {
        let values: Vec<f64> = runs
            .iter()
            .zip(&rmse)
            .filter(|(r, _)| r.label == label)
            .map(|(_, &e)| e)
            .collect();
        let (m, s) = mean_std(&values);
        summary.push_str(&format!("{label},{m},{s},{}\n", values.len()));
        println!("{label:<12} {m:>14.2} {s:>10.2} {:>5}", values.len());
    }
    outputs.write("rmse_summary.csv", summary.as_bytes())?;
    outputs.finish("manifest.json", "evaluate", echo, Some(data.input), seeds)?;
    Ok(())
}
