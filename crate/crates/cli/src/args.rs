//! Command-line flags and their JSON configuration-file mirror. Every
//! option is optional at parse time; a config file fills gaps and flags
//! given on the command line win.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "windxai", version, about = "Explainable wind turbine power-curve models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic SCADA dataset.
    Synth(SynthArgs),
    /// Fit models and save them with their loss histories.
    Train(TrainArgs),
    /// RMSE table over models and seeds.
    Evaluate(EvaluateArgs),
    /// Shapley attributions for the test period under one reference.
    Explain(ExplainArgs),
    /// Correlate learned and IEC attributions (r²_phys).
    CompareStrategy(CompareArgs),
    /// Decompose deviations from expected output; score yaw faithfulness.
    Monitor(MonitorArgs),
    /// Train on norm-filtered data and score removed points.
    Ood(OodArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Train(_) => "train",
            Command::Evaluate(_) => "evaluate",
            Command::Explain(_) => "explain",
            Command::CompareStrategy(_) => "compare-strategy",
            Command::Monitor(_) => "monitor",
            Command::Ood(_) => "ood",
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthArgs {
    /// JSON file with default values for any of these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Number of 10-minute records.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Output CSV file.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// `controller-clipped` or `turbulence-smoothed`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rated_transition: Option<String>,
    /// Constant turbulence intensity instead of the wind-dependent model.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ti_fixed: Option<f64>,
}

/// Data source, split, models and seeds shared by the modelling commands.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct CommonArgs {
    /// JSON file with default values for any of these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// SCADA CSV input.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    /// Column remapping, e.g. `v_w=WindSpeed,power=ActivePower`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub columns: Option<String>,
    /// Use a generated dataset instead of `--data`.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub synthetic: bool,
    /// Records to generate with `--synthetic`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synth_n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synth_seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rated_transition: Option<String>,
    /// Output directory.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// First seed; also seeds the validation split.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Number of consecutive seeds per model.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<usize>,
    /// Comma-separated model inputs, e.g. `v_w,rho,ti`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub features: Option<String>,
    /// Comma-separated presets: iec, rf, ann_small, ann_large.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub models: Option<String>,
    /// Share of the training period held out for validation.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_fraction: Option<f64>,
    /// Cap on MLP training epochs.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_epochs: Option<usize>,
    /// Trees per random forest.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_trees: Option<usize>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    /// Evaluate saved model files instead of training.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub model_files: Vec<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    /// Reference strategy: min, mean or informed.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    /// Saved model to explain instead of training the first `--models` entry.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_file: Option<PathBuf>,
    /// Also write monitoring decompositions (needs delta_yaw).
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub monitoring: bool,
    /// Explain at most this many test records.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    /// Test records to explain per model.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
    /// Wind-speed bin width for attribution curves, m/s.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bin_width: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct MonitorArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    /// Inject artificial yaw misalignment with known ground truth.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub augment_yaw: bool,
    /// Standard deviation of injected yaw, degrees.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub yaw_sigma: Option<f64>,
    /// Decompose at most this many test records.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
    /// Ground-truth bin width for faithfulness curves, kW.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bin_kw: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct OodArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    /// Maximum |power − reference curve| kept by the norm filter, kW.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// `manufacturer` (synthetic data only) or `binned`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_curve: Option<String>,
    /// Kept-test records used for the paired r²_phys; 0 disables it.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r2_instances: Option<usize>,
}

/// Overlays command-line values on the config file at `path` and returns
/// the merged arguments together with their JSON form.
pub fn resolve<T>(cli: &T, path: Option<&PathBuf>) -> CliResult<(T, Value)>
where
    T: Serialize + DeserializeOwned,
{
    let flags = serde_json::to_value(cli)?;
    let merged = match path {
        None => flags,
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
            let mut file: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("config {} is not valid JSON: {e}", p.display())))?;
            let (Value::Object(base), Value::Object(over)) = (&mut file, flags) else {
                return Err(CliError::Usage(format!("config {} must be a JSON object", p.display())));
            };
            base.extend(over);
            file
        }
    };
    let resolved: T =
        serde_json::from_value(merged.clone()).map_err(|e| CliError::Usage(format!("invalid configuration: {e}")))?;
    // Re-serialise so the echo shows exactly what was used.
    let echo = serde_json::to_value(&resolved)?;
    // Flattened structs cannot deny unknown fields, so a key that carried a
    // value yet did not survive the round trip is unknown.
    if let (Value::Object(given), Value::Object(used)) = (&merged, &echo) {
        let unknown: Vec<&str> = given
            .iter()
            .filter(|(k, v)| !used.contains_key(*k) && !is_unset(v))
            .map(|(k, _)| k.as_str())
            .collect();
        if !unknown.is_empty() {
            return Err(CliError::Usage(format!(
                "unknown configuration keys: {}",
                unknown.join(", ")
            )));
        }
    }
    Ok((resolved, echo))
}

fn is_unset(v: &Value) -> bool {
    match v {
        Value::Null | Value::Bool(false) => true,
        Value::Array(a) => a.is_empty(),
        _ => false,
    }
}
