//! Deviation decompositions for injected faults on synthetic data, scored
//! against the generator's latent truth.

use std::sync::OnceLock;

use windxai::analysis::{Monitor, MonitoringReport};
use windxai::attribution::{ReferenceBuilder, ReferenceStrategy};
use windxai::data::{
    augment_yaw, filter_operational, generate_synthetic, latent_power, split_at_midpoint, DataSplit, ScadaRecord,
    SynthConfig, YawAugmentation,
};
use windxai::models::{train_model, Feature, FeatureSchema, ModelSpec, TrainedModel};

struct Fixture {
    config: SynthConfig,
    split: DataSplit,
    model: TrainedModel,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let config = SynthConfig::default();
        let (records, _) = generate_synthetic(&config, 21).unwrap();
        let split = split_at_midpoint(&filter_operational(&records), 0.2, 21).unwrap();
        let split = augment_yaw(&split, &YawAugmentation::default(), 21).unwrap().split;
        let spec = ModelSpec::preset("ann_small").unwrap();
        let model = train_model(&spec.config, &split, &FeatureSchema::with_yaw(), 0).unwrap();
        Fixture { config, split, model }
    })
}

/// Record at the informed reference conditions for `v`, with the given yaw
/// and density offsets, and its noiseless latent power.
fn instance(f: &Fixture, v: f64, yaw: f64, d_rho: f64) -> (ScadaRecord, f64) {
    let schema = FeatureSchema::with_yaw();
    let builder = ReferenceBuilder::new(&f.split.train_period(), &schema).unwrap();
    let r = builder
        .build(ReferenceStrategy::Informed, Some(&[v, 1.225, 0.1, 0.0]))
        .unwrap();
    let mut rec = f.split.test[0].clone();
    rec.v_w = v;
    rec.rho = r.values[1] + d_rho;
    rec.ti = r.values[2];
    rec.delta_yaw = yaw;
    rec.power = latent_power(&f.config, rec.v_w, rec.rho, rec.ti, yaw);
    let p_free = latent_power(&f.config, rec.v_w, rec.rho, rec.ti, 0.0);
    (rec, p_free)
}

fn report(f: &Fixture, rec: &ScadaRecord) -> MonitoringReport {
    Monitor::new(&f.model, &f.split.train_period(), &FeatureSchema::with_yaw())
        .unwrap()
        .decompose(rec)
        .unwrap()
}

#[test]
fn injected_yaw_is_attributed_within_noise() {
    let f = fixture();
    for v in [6.0, 8.0, 10.0] {
        let (rec, p_free) = instance(f, v, 12.0, 0.0);
        let rep = report(f, &rec);
        let phi = rep.phi_of(Feature::YawMisalignment).unwrap();
        let truth = (12f64.to_radians().cos().powi(3) - 1.0) * p_free;
        assert!(phi < 0.0, "v={v}: {phi}");
        assert!(
            (phi - truth).abs() < 3.0 * f.config.noise_sigma(p_free),
            "v={v}: {phi} vs {truth}"
        );
        assert!(rep.decomposition_gap().abs() < 1e-8);
    }
}

#[test]
fn instance_at_reference_has_nothing_to_explain() {
    let f = fixture();
    let (rec, _) = instance(f, 7.5, 0.0, 0.0);
    let rep = report(f, &rec);
    assert!(rep.phi.iter().all(|p| p.abs() < 1e-8), "{:?}", rep.phi);
    assert!((rep.f_x - rep.f_ref).abs() < 1e-8);
}

#[test]
fn yaw_compensated_by_density_is_told_apart_from_thin_air() {
    let f = fixture();
    let (yawed, _) = instance(f, 8.0, 12.0, 0.07);
    let (thin, _) = instance(f, 8.0, 0.0, -0.06);
    let a = report(f, &yawed);
    let b = report(f, &thin);
    assert!(a.phi_of(Feature::YawMisalignment).unwrap() < 0.0);
    assert!(a.phi_of(Feature::AirDensity).unwrap() > 0.0);
    assert_eq!(b.phi_of(Feature::YawMisalignment).unwrap(), 0.0);
    assert!(b.phi_of(Feature::AirDensity).unwrap() < 0.0);
    // Similar totals, different causes.
    assert!(
        (a.power - a.f_ref).abs() < 60.0 && (b.power - b.f_ref).abs() < 80.0,
        "{a:?}\n{b:?}"
    );
}
