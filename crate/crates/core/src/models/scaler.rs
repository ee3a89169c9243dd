use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Per-column z-score parameters (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn invert(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| v * s + m)
            .collect()
    }
}

/// Fits z-score parameters on training rows only. `names` labels columns in
/// the zero-variance error.
pub fn fit_scaler(rows: &[Vec<f64>], names: &[&str]) -> Result<Standardizer> {
    let dim = names.len();
    if rows.is_empty() {
        return Err(Error::EmptyData("cannot fit a scaler on no rows".into()));
    }
    let mut mean = Vec::with_capacity(dim);
    let mut std = Vec::with_capacity(dim);
    for (j, name) in names.iter().enumerate() {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let s = crate::stats::std(&col);
        if !(s > 0.0) {
            return Err(Error::ZeroVariance(name.to_string()));
        }
        mean.push(crate::stats::mean(&col));
        std.push(s);
    }
    Ok(Standardizer { mean, std })
}
