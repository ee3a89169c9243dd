use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::density_normalize;
use crate::data::ScadaRecord;
use crate::stats::interp_clamped;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveBin {
    pub v_center: f64,
    /// Mean density-normalised wind speed of the bin, m/s.
    pub mean_v: f64,
    /// Mean power, kW.
    pub mean_p: f64,
    /// Mean turbulence intensity.
    pub mean_ti: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BinningOptions {
    pub bin_width: f64,
    /// Bins with fewer records are dropped.
    pub min_count: usize,
}

impl Default for BinningOptions {
    fn default() -> Self {
        Self {
            bin_width: 0.5,
            min_count: 3,
        }
    }
}

/// Method-of-bins power curve over density-normalised wind speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedPowerCurve {
    pub bin_width: f64,
    pub rho_ref: f64,
    pub bins: Vec<CurveBin>,
}

impl BinnedPowerCurve {
    pub fn from_bins(bin_width: f64, rho_ref: f64, bins: Vec<CurveBin>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::EmptyData("power curve has no bins".into()));
        }
        if !(bin_width > 0.0) {
            return Err(Error::InvalidInput(format!("bin width {bin_width} must be positive")));
        }
        let tol = 1e-9 * bin_width;
        for w in bins.windows(2) {
            if w[0].v_center >= w[1].v_center || w[0].mean_v >= w[1].mean_v {
                return Err(Error::InvalidInput("power curve bins not sorted".into()));
            }
        }
        for b in &bins {
            let lo = b.v_center - 0.5 * bin_width;
            if b.count == 0 || b.mean_v < lo - tol || b.mean_v > lo + bin_width + tol {
                return Err(Error::InvalidInput(format!("inconsistent power curve bin {b:?}")));
            }
        }
        Ok(Self {
            bin_width,
            rho_ref,
            bins,
        })
    }

    /// Covered wind-speed range: lower edge of the first bin to upper edge
    /// of the last.
    pub fn support(&self) -> (f64, f64) {
        let half = 0.5 * self.bin_width;
        (
            self.bins[0].v_center - half,
            self.bins[self.bins.len() - 1].v_center + half,
        )
    }

    /// Lower edge of the first retained bin.
    pub fn cut_in(&self) -> f64 {
        self.support().0
    }

    /// Piecewise-linear power between bin means, clamped outside the knots
    /// and zero below the cut-in edge.
    pub fn interpolate(&self, v: f64) -> f64 {
        let first = &self.bins[0];
        if v < self.cut_in() && first.mean_p > 0.0 {
            return 0.0;
        }
        let xs: Vec<f64> = self.bins.iter().map(|b| b.mean_v).collect();
        let ys: Vec<f64> = self.bins.iter().map(|b| b.mean_p).collect();
        interp_clamped(&xs, &ys, v)
    }

    /// Per-bin mean turbulence intensity at `v`, clamped at the ends.
    pub fn turbulence_at(&self, v: f64) -> f64 {
        let xs: Vec<f64> = self.bins.iter().map(|b| b.mean_v).collect();
        let ts: Vec<f64> = self.bins.iter().map(|b| b.mean_ti).collect();
        interp_clamped(&xs, &ts, v)
    }
}

#[derive(Default)]
struct Accum {
    v: f64,
    p: f64,
    ti: f64,
    n: usize,
}

/// Method of bins on density-normalised wind speed with half-open bins
/// `[k·w, (k+1)·w)`.
pub fn fit_binned_curve(train: &[ScadaRecord], options: &BinningOptions, rho_ref: f64) -> Result<BinnedPowerCurve> {
    if train.is_empty() {
        return Err(Error::EmptyData("cannot bin an empty training set".into()));
    }
    let w = options.bin_width;
    if !(w > 0.0) {
        return Err(Error::InvalidInput(format!("bin width {w} must be positive")));
    }
    let mut acc: BTreeMap<i64, Accum> = BTreeMap::new();
    for r in train {
        let v_n = density_normalize(r.v_w, r.rho, rho_ref)?;
        let a = acc.entry((v_n / w).floor() as i64).or_default();
        a.v += v_n;
        a.p += r.power;
        a.ti += r.ti;
        a.n += 1;
    }
    let bins: Vec<CurveBin> = acc
        .into_iter()
        .filter(|(_, a)| a.n >= options.min_count.max(1))
        .map(|(k, a)| {
            let n = a.n as f64;
            CurveBin {
                v_center: (k as f64 + 0.5) * w,
                mean_v: a.v / n,
                mean_p: a.p / n,
                mean_ti: a.ti / n,
                count: a.n,
            }
        })
        .collect();
    if bins.is_empty() {
        return Err(Error::EmptyData(format!(
            "every bin has fewer than {} records",
            options.min_count
        )));
    }
    BinnedPowerCurve::from_bins(w, rho_ref, bins)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::data::record;

    fn opts(min_count: usize) -> BinningOptions {
        BinningOptions {
            bin_width: 0.5,
            min_count,
        }
    }

    #[test]
    fn arithmetic_means_per_bin() {
        let c = fit_binned_curve(&[record(5.1, 300.0), record(5.3, 320.0)], &opts(1), 1.225).unwrap();
        assert_eq!(c.bins.len(), 1);
        let b = c.bins[0];
        assert!((b.mean_v - 5.2).abs() < 1e-12);
        assert!((b.mean_p - 310.0).abs() < 1e-12);
        assert_eq!(b.count, 2);
        assert_eq!(b.v_center, 5.25);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(fit_binned_curve(&[], &opts(1), 1.225).is_err());
    }

    #[test]
    fn sparse_bins_dropped_until_none_remain() {
        assert!(matches!(
            fit_binned_curve(&[record(5.1, 300.0), record(5.3, 320.0)], &opts(3), 1.225),
            Err(Error::EmptyData(_))
        ));
    }

    #[test]
    fn half_open_bin_boundary() {
        let c = fit_binned_curve(&[record(5.5, 300.0)], &opts(1), 1.225).unwrap();
        assert_eq!(c.bins[0].v_center, 5.75);
    }

    #[test]
    fn interpolation_rules() {
        let c = fit_binned_curve(&[record(5.2, 310.0), record(5.7, 400.0)], &opts(1), 1.225).unwrap();
        assert_eq!(c.interpolate(5.2), 310.0);
        assert!((c.interpolate(5.45) - 355.0).abs() < 1e-9);
        assert_eq!(c.interpolate(9.0), 400.0);
        // between cut-in edge and first knot: first value; below the edge: zero
        assert_eq!(c.interpolate(5.1), 310.0);
        assert_eq!(c.interpolate(4.9), 0.0);
    }

    proptest! {
        #[test]
        fn bin_means_within_contributing_range(
            rows in prop::collection::vec((3.0f64..20.0, 0.0f64..2000.0), 1..200)
        ) {
            let recs: Vec<_> = rows.iter().map(|&(v, p)| record(v, p)).collect();
            let c = fit_binned_curve(&recs, &opts(1), 1.225).unwrap();
            for b in &c.bins {
                let lo = b.v_center - 0.25;
                let members: Vec<f64> = recs
                    .iter()
                    .filter(|r| r.v_w >= lo && r.v_w < lo + 0.5)
                    .map(|r| r.power)
                    .collect();
                let min = members.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = members.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(b.mean_p >= min - 1e-9 && b.mean_p <= max + 1e-9);
                prop_assert!(b.mean_v >= lo - 1e-12 && b.mean_v <= lo + 0.5);
            }
        }
    }
}
