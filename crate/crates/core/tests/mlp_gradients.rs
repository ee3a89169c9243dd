//! Backpropagation against central finite differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use windxai::models::{Activation, FeatureSchema, MlpModel, Standardizer};

fn worst_error(activation: Activation, seed: u64) -> f64 {
    let schema = FeatureSchema::with_yaw();
    let mut m = MlpModel::init(schema, Standardizer::identity(4), 0.0, 1.0, &[6, 5], activation, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for l in &mut m.layers {
        l.biases.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    }
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < 5 {
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
        let target = rng.random_range(-1.0..1.0);
        let check = m.gradient_check(&x, target, 1e-5);
        if activation == Activation::Relu && check.min_abs_preactivation < 1e-3 {
            continue;
        }
        worst = worst.max(check.max_relative_error);
        checked += 1;
    }
    worst
}

#[test]
fn logistic_gradients_match_finite_differences() {
    for seed in 0..10 {
        let e = worst_error(Activation::Logistic, seed);
        assert!(e < 1e-5, "seed {seed}: {e}");
    }
}

#[test]
fn relu_gradients_match_finite_differences_away_from_kinks() {
    for seed in 0..10 {
        let e = worst_error(Activation::Relu, seed);
        assert!(e < 1e-5, "seed {seed}: {e}");
    }
}
