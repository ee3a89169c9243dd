use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use windxai::data::{filter_operational, generate_synthetic, split_at_midpoint, SynthConfig};
use windxai::models::{train_model, FeatureSchema, ForestConfig, MlpConfig, ModelConfig, Predictor, TrainedModel};
use windxai::persist::{load_model, model_from_json, model_to_json, save_model};
use windxai::{iec::IecOptions, Error};

fn split() -> windxai::data::DataSplit {
    let cfg = SynthConfig {
        n_samples: 3000,
        ..SynthConfig::default()
    };
    let (records, _) = generate_synthetic(&cfg, 3).unwrap();
    split_at_midpoint(&filter_operational(&records), 0.2, 3).unwrap()
}

fn random_inputs(n: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    (0..n)
        .map(|_| {
            vec![
                rng.random_range(0.0..26.0),
                rng.random_range(1.0..1.4),
                rng.random_range(0.0..0.4),
            ]
        })
        .collect()
}

fn assert_round_trip(model: &TrainedModel) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(format!("{}.json", model.kind()));
    save_model(model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(&loaded, model);
    let a = model.predict_rows(&random_inputs(1000)).unwrap();
    let b = loaded.predict_rows(&random_inputs(1000)).unwrap();
    for (p, q) in a.iter().zip(&b) {
        assert!((p - q).abs() <= 1e-12 * p.abs().max(1.0));
    }
}

#[test]
fn every_model_kind_round_trips() {
    let s = split();
    let schema = FeatureSchema::base();
    let mlp = MlpConfig {
        max_epochs: 30,
        ..MlpConfig::ann_small()
    };
    let forest = ForestConfig {
        n_trees: 5,
        ..ForestConfig::default()
    };
    for config in [
        ModelConfig::Iec(IecOptions::default()),
        ModelConfig::Mlp(mlp),
        ModelConfig::Forest(forest),
    ] {
        assert_round_trip(&train_model(&config, &s, &schema, 1).unwrap());
    }
}

#[test]
fn unknown_version_is_rejected() {
    let s = split();
    let model = train_model(&ModelConfig::Iec(IecOptions::default()), &s, &FeatureSchema::base(), 0).unwrap();
    let text = model_to_json(&model)
        .unwrap()
        .replace("\"schema_version\":1", "\"schema_version\":7");
    assert!(matches!(model_from_json(&text), Err(Error::UnsupportedVersion(7))));
}

#[test]
fn corrupt_files_are_rejected() {
    assert!(matches!(
        model_from_json("{\"schema_version\":1,\"kind\":\"mlp\"}"),
        Err(Error::CorruptModel(_))
    ));
    assert!(matches!(model_from_json("not json"), Err(Error::CorruptModel(_))));
    assert!(matches!(
        model_from_json("{\"kind\":\"iec\"}"),
        Err(Error::CorruptModel(_))
    ));
}
