//! Resolving the data source, split, schema and model presets shared by
//! the modelling commands.

use serde_json::Value;
use windxai::data::{
    filter_operational, generate_synthetic, parse_scada_csv, split_at_midpoint, write_scada_csv, ColumnMap, DataSplit,
    RatedTransition, ScadaRecord, SynthConfig,
};
use windxai::models::{ModelConfig, ModelSpec};
use windxai::FeatureSchema;

use crate::args::CommonArgs;
use crate::error::{CliError, CliResult};
use crate::output::{sha256_hex, InputDigest};

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_SEEDS: usize = 10;
pub const DEFAULT_SYNTH_SEED: u64 = 2024;
pub const DEFAULT_VAL_FRACTION: f64 = 0.2;
pub const ALL_MODELS: &str = "iec,rf,ann_small,ann_large";

pub fn parse_rated_transition(raw: &str) -> CliResult<RatedTransition> {
    serde_json::from_value(Value::String(raw.trim().replace('-', "_"))).map_err(|_| {
        CliError::Usage(format!(
            "unknown rated transition `{raw}` (expected controller-clipped or turbulence-smoothed)"
        ))
    })
}

pub struct Dataset {
    pub records: Vec<ScadaRecord>,
    /// Generator settings when the data are synthetic.
    pub synth: Option<SynthConfig>,
    pub input: InputDigest,
}

impl Dataset {
    pub fn load(args: &CommonArgs) -> CliResult<Self> {
        match (&args.data, args.synthetic) {
            (Some(_), true) => Err(CliError::Usage("give either --data or --synthetic, not both".into())),
            (None, false) => Err(CliError::Usage(
                "no data source: give --data <csv> or --synthetic".into(),
            )),
            (Some(path), false) => {
                let mut columns = ColumnMap::default();
                if let Some(spec) = &args.columns {
                    columns = columns.with_overrides(spec)?;
                }
                let bytes =
                    std::fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
                let parsed = parse_scada_csv(path, &columns)?;
                Ok(Self {
                    input: InputDigest {
                        source: path.display().to_string(),
                        sha256: sha256_hex(&bytes),
                        records: parsed.records.len(),
                        dropped_rows: parsed.dropped,
                    },
                    records: parsed.records,
                    synth: None,
                })
            }
            (None, true) => {
                let mut config = SynthConfig::default();
                if let Some(n) = args.synth_n {
                    config.n_samples = n;
                }
                if let Some(t) = &args.rated_transition {
                    config.rated_transition = parse_rated_transition(t)?;
                }
                let (records, _) = generate_synthetic(&config, args.synth_seed.unwrap_or(DEFAULT_SYNTH_SEED))?;
                let mut csv = Vec::new();
                write_scada_csv(&mut csv, &records)?;
                Ok(Self {
                    input: InputDigest {
                        source: "synthetic".into(),
                        sha256: sha256_hex(&csv),
                        records: records.len(),
                        dropped_rows: 0,
                    },
                    records,
                    synth: Some(config),
                })
            }
        }
    }

    /// Operational records split at the time midpoint, with a seeded
    /// validation subset of the training half.
    pub fn split(&self, args: &CommonArgs) -> CliResult<DataSplit> {
        let operational = filter_operational(&self.records);
        Ok(split_at_midpoint(
            &operational,
            args.val_fraction.unwrap_or(DEFAULT_VAL_FRACTION),
            base_seed(args),
        )?)
    }
}

pub fn base_seed(args: &CommonArgs) -> u64 {
    args.seed.unwrap_or(DEFAULT_SEED)
}

pub fn seeds(args: &CommonArgs) -> CliResult<Vec<u64>> {
    let n = args.seeds.unwrap_or(DEFAULT_SEEDS);
    if n == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let base = base_seed(args);
    Ok((0..n as u64).map(|k| base + k).collect())
}

pub fn schema(args: &CommonArgs, default: FeatureSchema) -> CliResult<FeatureSchema> {
    match &args.features {
        Some(list) => Ok(FeatureSchema::parse_list(list)?),
        None => Ok(default),
    }
}

/// Model presets named in `--models` (or `default`), with the epoch and
/// tree-count overrides applied.
pub fn model_specs(args: &CommonArgs, default: &str) -> CliResult<Vec<ModelSpec>> {
    let list = args.models.as_deref().unwrap_or(default);
    let mut specs = Vec::new();
    for label in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let mut spec = ModelSpec::preset(label)?;
        match &mut spec.config {
            ModelConfig::Mlp(cfg) => {
                if let Some(e) = args.max_epochs {
                    cfg.max_epochs = e;
                }
            }
            ModelConfig::Forest(cfg) => {
                if let Some(t) = args.n_trees {
                    cfg.n_trees = t;
                }
            }
            ModelConfig::Iec(_) => {}
        }
        if specs.iter().any(|s: &ModelSpec| s.label == spec.label) {
            return Err(CliError::Usage(format!("model `{label}` listed twice")));
        }
        specs.push(spec);
    }
    if specs.is_empty() {
        return Err(CliError::Usage("no models given".into()));
    }
    Ok(specs)
}

/// Evenly strided indices, at most `limit` of them (all when `None`).
pub fn stride_indices(n: usize, limit: Option<usize>) -> CliResult<Vec<usize>> {
    match limit {
        Some(0) => Err(CliError::Usage("--limit must be at least 1".into())),
        Some(k) if k < n => Ok((0..n).step_by(n / k).take(k).collect()),
        _ => Ok((0..n).collect()),
    }
}

pub fn output_dir(args: &CommonArgs) -> CliResult<&std::path::Path> {
    args.out
        .as_deref()
        .ok_or_else(|| CliError::Usage("--out <dir> is required".into()))
}
