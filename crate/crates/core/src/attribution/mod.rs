//! Exact Shapley attribution with domain-specific reference points.
//!
//! Features outside a coalition are replaced by the reference value, so an
//! explanation answers "how much of `f(x) - f(x̃)` does each feature
//! account for", in kW.

mod export;
mod reference;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use export::write_attributions_csv;
pub use reference::{build_reference, ConditionalTable, ReferenceBuilder, ReferencePoint, ReferenceStrategy};

use crate::data::ScadaRecord;
use crate::models::Predictor;
use crate::{Error, Result};

/// Largest feature count for exact enumeration (2^n model calls).
pub const MAX_EXACT_FEATURES: usize = 16;
/// Largest feature count for the n!-ordering oracle.
pub const MAX_ORACLE_FEATURES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    /// Per-feature contributions in kW, in schema order.
    pub phi: Vec<f64>,
    pub f_x: f64,
    pub f_ref: f64,
    pub reference: ReferencePoint,
}

impl Attribution {
    /// `Σ φ − (f(x) − f(x̃))`; zero up to rounding.
    pub fn conservation_gap(&self) -> f64 {
        crate::stats::sum(self.phi.iter().copied()) - (self.f_x - self.f_ref)
    }
}

fn check_inputs(predictor: &dyn Predictor, x: &[f64], reference: &ReferencePoint, limit: usize) -> Result<usize> {
    let n = predictor.features().len();
    if n > limit {
        return Err(Error::TooManyFeatures(n, limit));
    }
    if x.len() != n || reference.values.len() != n {
        return Err(Error::SchemaMismatch {
            expected: n,
            got: if x.len() != n { x.len() } else { reference.values.len() },
        });
    }
    if reference.features != predictor.features() {
        return Err(Error::InvalidInput(
            "reference point features differ from the model schema".into(),
        ));
    }
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("instance feature value {v}")));
    }
    Ok(n)
}

fn finite(value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(format!("model output {value}")))
    }
}

/// `s! (n-1-s)! / n!` for every coalition size `s`.
fn coalition_weights(n: usize) -> Vec<f64> {
    let fact: Vec<f64> = (0..=n)
        .scan(1.0, |acc, k| {
            if k > 0 {
                *acc *= k as f64;
            }
            Some(*acc)
        })
        .collect();
    (0..n).map(|s| fact[s] * fact[n - 1 - s] / fact[n]).collect()
}

/// Exact Shapley values over all 2^n coalitions, each evaluated once.
pub fn shapley_exact(predictor: &dyn Predictor, x: &[f64], reference: &ReferencePoint) -> Result<Attribution> {
    let n = check_inputs(predictor, x, reference, MAX_EXACT_FEATURES)?;
    let full = 1usize << n;
    let coalitions: Vec<Vec<f64>> = (0..full)
        .map(|mask| {
            (0..n)
                .map(|i| if mask >> i & 1 == 1 { x[i] } else { reference.values[i] })
                .collect()
        })
        .collect();
    let values = predictor
        .predict_rows(&coalitions)?
        .into_iter()
        .map(finite)
        .collect::<Result<Vec<f64>>>()?;
    let weights = coalition_weights(n);
    let phi = (0..n)
        .map(|i| {
            let bit = 1usize << i;
            let terms = (0..full)
                .filter(|mask| mask & bit == 0)
                .map(|mask| weights[mask.count_ones() as usize] * (values[mask | bit] - values[mask]));
            crate::stats::sum(terms)
        })
        .collect();
    Ok(Attribution {
        phi,
        f_x: values[full - 1],
        f_ref: values[0],
        reference: reference.clone(),
    })
}

/// Heap's algorithm; calls `visit` once per ordering of `0..n`.
fn for_each_permutation(n: usize, mut visit: impl FnMut(&[usize]) -> Result<()>) -> Result<()> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    visit(&perm)?;
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm)?;
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(())
}

/// Shapley values as the average marginal contribution over all n!
/// orderings, re-evaluating the model for every prefix. Slow; serves as an
/// independent check of [`shapley_exact`].
pub fn shapley_permutation_oracle(
    predictor: &dyn Predictor,
    x: &[f64],
    reference: &ReferencePoint,
) -> Result<Attribution> {
    let n = check_inputs(predictor, x, reference, MAX_ORACLE_FEATURES)?;
    let mut totals = vec![0.0; n];
    let mut count = 0usize;
    for_each_permutation(n, |order| {
        let mut z = reference.values.clone();
        let mut before = finite(predictor.predict(&z)?)?;
        for &i in order {
            z[i] = x[i];
            let after = finite(predictor.predict(&z)?)?;
            totals[i] += after - before;
            before = after;
        }
        count += 1;
        Ok(())
    })?;
    Ok(Attribution {
        phi: totals.into_iter().map(|t| t / count as f64).collect(),
        f_x: finite(predictor.predict(x)?)?,
        f_ref: finite(predictor.predict(&reference.values)?)?,
        reference: reference.clone(),
    })
}

/// Explains every record under one reference strategy, in parallel.
pub fn explain_records(
    predictor: &dyn Predictor,
    records: &[ScadaRecord],
    builder: &ReferenceBuilder,
    strategy: ReferenceStrategy,
) -> Result<Vec<Attribution>> {
    records
        .par_iter()
        .map(|r| {
            let x: Vec<f64> = predictor.features().iter().map(|f| f.value(r)).collect();
            let reference = builder.build(strategy, Some(&x))?;
            shapley_exact(predictor, &x, &reference)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Feature;

    struct Product;

    impl Predictor for Product {
        fn features(&self) -> &[Feature] {
            &[Feature::WindSpeed, Feature::AirDensity]
        }
        fn predict_row(&self, x: &[f64]) -> f64 {
            x[0] * x[1]
        }
    }

    struct Linear(Vec<f64>, Vec<Feature>);

    impl Predictor for Linear {
        fn features(&self) -> &[Feature] {
            &self.1
        }
        fn predict_row(&self, x: &[f64]) -> f64 {
            self.0.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + 3.0
        }
    }

    fn point(features: &[Feature], values: Vec<f64>) -> ReferencePoint {
        ReferencePoint::custom(features.to_vec(), values)
    }

    #[test]
    fn product_game_by_hand() {
        let r = point(Product.features(), vec![0.0, 1.0]);
        let a = shapley_exact(&Product, &[2.0, 3.0], &r).unwrap();
        assert!((a.phi[0] - 4.0).abs() < 1e-12 && (a.phi[1] - 2.0).abs() < 1e-12);
        assert_eq!((a.f_x, a.f_ref), (6.0, 0.0));
    }

    #[test]
    fn linear_model_closed_form() {
        let feats = Feature::ALL.to_vec();
        let m = Linear(vec![2.0, -1.5, 40.0, 0.25], feats.clone());
        let x = [9.0, 1.3, 0.12, 7.0];
        let r = point(&feats, vec![3.0, 1.2, 0.2, 0.0]);
        let a = shapley_exact(&m, &x, &r).unwrap();
        for i in 0..4 {
            assert!((a.phi[i] - m.0[i] * (x[i] - r.values[i])).abs() < 1e-10);
        }
    }

    #[test]
    fn null_game_and_single_feature() {
        let r = point(Product.features(), vec![2.0, 3.0]);
        let a = shapley_exact(&Product, &[2.0, 3.0], &r).unwrap();
        assert_eq!(a.phi, vec![0.0, 0.0]);
        let m = Linear(vec![5.0], vec![Feature::WindSpeed]);
        let r = point(&[Feature::WindSpeed], vec![1.0]);
        let o = shapley_permutation_oracle(&m, &[4.0], &r).unwrap();
        assert_eq!(o.phi[0], o.f_x - o.f_ref);
    }

    #[test]
    fn oracle_matches_exact_and_symmetry_holds() {
        struct Sym;
        impl Predictor for Sym {
            fn features(&self) -> &[Feature] {
                &[Feature::WindSpeed, Feature::AirDensity, Feature::Turbulence]
            }
            fn predict_row(&self, x: &[f64]) -> f64 {
                (x[0] * x[1]).sin() * 100.0 + x[2].powi(3) + x[0] * x[1] * x[2]
            }
        }
        let r = point(Sym.features(), vec![0.5, 0.5, -1.0]);
        let x = [1.7, 1.7, 0.4];
        let e = shapley_exact(&Sym, &x, &r).unwrap();
        let o = shapley_permutation_oracle(&Sym, &x, &r).unwrap();
        for (a, b) in e.phi.iter().zip(&o.phi) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!((e.phi[0] - e.phi[1]).abs() < 1e-10);
        assert!(e.conservation_gap().abs() < 1e-8);
    }

    #[test]
    fn too_many_features_rejected() {
        struct Wide(Vec<Feature>);
        impl Predictor for Wide {
            fn features(&self) -> &[Feature] {
                &self.0
            }
            fn predict_row(&self, _: &[f64]) -> f64 {
                0.0
            }
        }
        let w = Wide(vec![Feature::WindSpeed; 17]);
        let r = point(&w.0, vec![0.0; 17]);
        assert!(matches!(
            shapley_exact(&w, &[0.0; 17], &r),
            Err(Error::TooManyFeatures(17, 16))
        ));
        let w = Wide(vec![Feature::WindSpeed; 9]);
        let r = point(&w.0, vec![0.0; 9]);
        assert!(matches!(
            shapley_permutation_oracle(&w, &[0.0; 9], &r),
            Err(Error::TooManyFeatures(9, 8))
        ));
    }

    #[test]
    fn non_finite_output_rejected() {
        struct Nan;
        impl Predictor for Nan {
            fn features(&self) -> &[Feature] {
                &[Feature::WindSpeed]
            }
            fn predict_row(&self, x: &[f64]) -> f64 {
                if x[0] > 1.0 {
                    f64::NAN
                } else {
                    0.0
                }
            }
        }
        let r = point(&[Feature::WindSpeed], vec![0.0]);
        assert!(matches!(shapley_exact(&Nan, &[2.0], &r), Err(Error::NonFinite(_))));
    }

    #[test]
    fn heap_visits_every_ordering_once() {
        let mut seen = std::collections::BTreeSet::new();
        for_each_permutation(4, |p| {
            seen.insert(p.to_vec());
            Ok(())
        })
        .unwrap();
        assert_eq!(seen.len(), 24);
    }
}
