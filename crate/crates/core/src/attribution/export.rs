use std::io::Write;

use crate::data::{format_timestamp, ScadaRecord};
use crate::models::Feature;
use crate::{Error, Result};

use super::Attribution;

const HEADER: [&str; 13] = [
    "timestamp",
    "v_w",
    "rho",
    "ti",
    "delta_yaw",
    "power",
    "f_x",
    "f_ref",
    "phi_v_w",
    "phi_rho",
    "phi_ti",
    "phi_delta_yaw",
    "ref_strategy",
];

/// One row per explained record. Contribution columns for features absent
/// from the model schema are left empty.
pub fn write_attributions_csv<W: Write>(out: W, records: &[ScadaRecord], attributions: &[Attribution]) -> Result<()> {
    if records.len() != attributions.len() {
        return Err(Error::InvalidInput(format!(
            "{} records but {} attributions",
            records.len(),
            attributions.len()
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for (r, a) in records.iter().zip(attributions) {
        let mut row = vec![
            format_timestamp(&r.timestamp),
            r.v_w.to_string(),
            r.rho.to_string(),
            r.ti.to_string(),
            r.delta_yaw.to_string(),
            r.power.to_string(),
            a.f_x.to_string(),
            a.f_ref.to_string(),
        ];
        for f in Feature::ALL {
            row.push(
                a.reference
                    .features
                    .iter()
                    .position(|&g| g == f)
                    .map(|i| a.phi[i].to_string())
                    .unwrap_or_default(),
            );
        }
        row.push(a.reference.strategy.name().to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<attributions>", e))?;
    Ok(())
}
