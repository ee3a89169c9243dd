use serde::{Deserialize, Serialize};

use super::BinnedPowerCurve;
use crate::stats::{interp_clamped, interp_cubic_clamped};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ZeroTiOptions {
    /// Knot spacing of the reference curve, m/s.
    pub grid_step: f64,
    pub max_iter: usize,
    /// Convergence threshold on the largest knot update, kW.
    pub tol_kw: f64,
}

impl Default for ZeroTiOptions {
    fn default() -> Self {
        Self {
            grid_step: 0.25,
            max_iter: 20,
            tol_kw: 0.5,
        }
    }
}

/// Power curve that would be measured without turbulence, linear between
/// uniformly spaced knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroTiCurve {
    pub grid: Vec<f64>,
    pub p_zero: Vec<f64>,
    pub cut_in: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl ZeroTiCurve {
    pub fn from_knots(grid: Vec<f64>, p_zero: Vec<f64>, cut_in: f64) -> Result<Self> {
        if grid.len() < 2 || grid.len() != p_zero.len() {
            return Err(Error::InvalidInput("zero-TI curve needs matching knots".into()));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("zero-TI grid not increasing".into()));
        }
        Ok(Self {
            grid,
            p_zero,
            cut_in,
            converged: true,
            iterations: 0,
        })
    }

    pub fn step(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    pub fn eval(&self, v: f64) -> f64 {
        interp_clamped(&self.grid, &self.p_zero, v)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            p_zero: self.p_zero.iter().map(|p| p * factor).collect(),
            ..self.clone()
        }
    }
}

const MIN_INTERVALS: usize = 64;
const MAX_INTERVALS: usize = 4096;

/// Expected 10-minute power when the instantaneous wind is Gaussian around
/// `v` with standard deviation `ti · v`.
///
/// Trapezoidal quadrature over `v ± 4σ` with the truncated Gaussian
/// renormalised; nodes are spaced at most a quarter knot apart.
pub fn ti_expected_power(curve: &ZeroTiCurve, v: f64, ti: f64) -> f64 {
    let sigma = ti * v;
    if !(sigma > 1e-12) {
        return curve.eval(v);
    }
    let width = 8.0 * sigma;
    let n = ((width / (0.25 * curve.step())).ceil() as usize).clamp(MIN_INTERVALS, MAX_INTERVALS);
    let h = width / n as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..=n {
        let u = v - 4.0 * sigma + k as f64 * h;
        let z = (u - v) / sigma;
        let mut w = (-0.5 * z * z).exp();
        if k == 0 || k == n {
            w *= 0.5;
        }
        num += w * curve.eval(u);
        den += w;
    }
    num / den
}

/// Iteratively deconvolves the binned curve into a zero-turbulence curve.
///
/// Each pass simulates every bin at its mean wind speed and turbulence,
/// interpolates the bin residuals onto the knots (cubic Hermite, so convex
/// segments are not biased between bin centres) and adds them. Knots are
/// clamped to `[0, 1.05 · rated]` and forced to zero below cut-in.
/// Non-convergence within `max_iter` is reported through the flag.
pub fn fit_zero_ti_curve(binned: &BinnedPowerCurve, rated_power: f64, options: &ZeroTiOptions) -> Result<ZeroTiCurve> {
    if !(options.grid_step > 0.0) {
        return Err(Error::InvalidInput("zero-TI grid step must be positive".into()));
    }
    let (_, hi) = binned.support();
    let cut_in = binned.cut_in();
    let n_knots = (hi / options.grid_step).ceil() as usize + 1;
    let grid: Vec<f64> = (0..n_knots).map(|k| k as f64 * options.grid_step).collect();
    let bin_v: Vec<f64> = binned.bins.iter().map(|b| b.mean_v).collect();
    let cap = 1.05 * rated_power;
    let constrain = |g: f64, p: f64| if g < cut_in { 0.0 } else { p.clamp(0.0, cap) };

    let bin_p: Vec<f64> = binned.bins.iter().map(|b| b.mean_p).collect();
    let p_zero: Vec<f64> = grid
        .iter()
        .map(|&g| constrain(g, interp_cubic_clamped(&bin_v, &bin_p, g)))
        .collect();
    let mut curve = ZeroTiCurve::from_knots(grid, p_zero, cut_in)?;
    curve.converged = false;

    for iteration in 1..=options.max_iter {
        let residuals: Vec<f64> = binned
            .bins
            .iter()
            .map(|b| b.mean_p - ti_expected_power(&curve, b.mean_v, b.mean_ti))
            .collect();
        let mut max_update: f64 = 0.0;
        let next: Vec<f64> = curve
            .grid
            .iter()
            .zip(&curve.p_zero)
            .map(|(&g, &p)| {
                let updated = constrain(g, p + interp_cubic_clamped(&bin_v, &residuals, g));
                max_update = max_update.max((updated - p).abs());
                updated
            })
            .collect();
        curve.p_zero = next;
        curve.iterations = iteration;
        if max_update < options.tol_kw {
            curve.converged = true;
            break;
        }
    }
    Ok(curve)
}
