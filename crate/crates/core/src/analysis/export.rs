//! Tidy CSV emission, one row per bin, instance or run.

use std::io::Write;

use super::{ConditionalCurve, FaithfulnessReport, MonitoringReport, OodReport, StrategyReport};
use crate::data::format_timestamp;
use crate::models::Feature;
use crate::{Error, Result};

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::io("<csv output>", e))
}

/// Per-feature rows followed by an `r2_phys` aggregate row.
pub fn write_strategy_csv<W: Write>(out: W, report: &StrategyReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["feature", "r2", "n_instances"])?;
    let n = report.n_instances.to_string();
    for (f, r2) in report.features.iter().zip(&report.r2) {
        w.write_record([f.name(), &opt(*r2), &n])?;
    }
    w.write_record(["r2_phys", &opt(report.r2_phys), &n])?;
    finish(w)
}

pub fn write_curves_csv<W: Write>(out: W, curves: &[ConditionalCurve]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["feature", "v_center", "count", "mean", "min", "max", "std"])?;
    for c in curves {
        for b in &c.bins {
            w.write_record([
                c.feature.name().to_string(),
                b.v_center.to_string(),
                b.count.to_string(),
                b.mean.to_string(),
                b.min.to_string(),
                b.max.to_string(),
                b.std.to_string(),
            ])?;
        }
    }
    finish(w)
}

pub fn write_faithfulness_csv<W: Write>(out: W, reports: &[FaithfulnessReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ref_strategy", "truth_center", "count", "mean_phi", "std_phi"])?;
    for r in reports {
        for b in &r.bins {
            w.write_record([
                r.strategy.name().to_string(),
                b.truth_center.to_string(),
                b.count.to_string(),
                b.mean_phi.to_string(),
                b.std_phi.to_string(),
            ])?;
        }
    }
    finish(w)
}

pub fn write_monitoring_csv<W: Write>(out: W, reports: &[MonitoringReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "timestamp",
        "v_w",
        "power",
        "f_x",
        "f_ref",
        "residual",
        "phi_v_w",
        "phi_rho",
        "phi_ti",
        "phi_delta_yaw",
        "used_fallback",
        "abs_error",
        "low_confidence",
    ])?;
    for r in reports {
        let mut row = vec![
            format_timestamp(&r.timestamp),
            r.v_w.to_string(),
            r.power.to_string(),
            r.f_x.to_string(),
            r.f_ref.to_string(),
            r.residual.to_string(),
        ];
        row.extend(Feature::ALL.iter().map(|&f| opt(r.phi_of(f))));
        row.push(r.used_fallback.to_string());
        row.push(r.abs_error.to_string());
        row.push(r.low_confidence.to_string());
        w.write_record(&row)?;
    }
    finish(w)
}

pub fn write_ood_csv<W: Write>(out: W, report: &OodReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "seed", "rmse_kept", "rmse_removed", "r2_phys"])?;
    for r in &report.rows {
        w.write_record([
            r.label.clone(),
            r.seed.to_string(),
            r.rmse_kept.to_string(),
            r.rmse_removed.to_string(),
            opt(r.r2_phys),
        ])?;
    }
    finish(w)
}
