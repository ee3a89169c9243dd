use std::fs::File;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::ScadaRecord;
use crate::{Error, Result};

/// Header names in the source file for each record field.
///
/// `delta_yaw` and `status_ok` are optional; unmapped they default to 0° and
/// `true`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub timestamp: String,
    pub v_w: String,
    pub rho: String,
    pub ti: String,
    pub delta_yaw: Option<String>,
    pub power: String,
    pub status_ok: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            v_w: "v_w".into(),
            rho: "rho".into(),
            ti: "ti".into(),
            delta_yaw: Some("delta_yaw".into()),
            power: "power".into(),
            status_ok: Some("status_ok".into()),
        }
    }
}

impl ColumnMap {
    /// Applies `field=column` overrides, e.g. `v_w=WindSpeed,power=ActivePower`.
    pub fn with_overrides(mut self, spec: &str) -> Result<Self> {
        for pair in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (field, column) = pair
                .split_once('=')
                .ok_or_else(|| Error::InvalidInput(format!("bad column mapping `{pair}`")))?;
            let column = column.trim().to_string();
            match field.trim() {
                "timestamp" => self.timestamp = column,
                "v_w" => self.v_w = column,
                "rho" => self.rho = column,
                "ti" => self.ti = column,
                "power" => self.power = column,
                "delta_yaw" => self.delta_yaw = (!column.is_empty()).then_some(column),
                "status_ok" => self.status_ok = (!column.is_empty()).then_some(column),
                other => return Err(Error::InvalidInput(format!("unknown record field `{other}`"))),
            }
        }
        Ok(self)
    }
}

#[derive(Debug, Clone)]
pub struct ParseOutcome {
    pub records: Vec<ScadaRecord>,
    /// Rows skipped because a mapped field failed to parse or validate.
    pub dropped: usize,
}

struct Indices {
    timestamp: usize,
    v_w: usize,
    rho: usize,
    ti: usize,
    delta_yaw: Option<usize>,
    power: usize,
    status_ok: Option<usize>,
}

fn locate(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::MissingColumn(name.to_string()))
}

/// Optional columns are only required when they appear in the header; a
/// default map names them but files without yaw data are common.
fn locate_optional(headers: &csv::StringRecord, name: &Option<String>) -> Option<usize> {
    name.as_ref().and_then(|n| headers.iter().position(|h| h.trim() == n))
}

pub(crate) fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    if let Ok(ts) = DateTime::parse_from_rfc3339(raw) {
        return Some(ts.with_timezone(&Utc));
    }
    const FORMATS: [&str; 4] = [
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M",
        "%Y-%m-%dT%H:%M",
    ];
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(raw, f).ok())
        .map(|n| n.and_utc())
}

fn parse_bool(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "ok" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

fn parse_row(row: &csv::StringRecord, idx: &Indices) -> Option<ScadaRecord> {
    let num = |i: usize| row.get(i)?.trim().parse::<f64>().ok();
    let rec = ScadaRecord {
        timestamp: parse_timestamp(row.get(idx.timestamp)?)?,
        v_w: num(idx.v_w)?,
        rho: num(idx.rho)?,
        ti: num(idx.ti)?,
        delta_yaw: match idx.delta_yaw {
            Some(i) => num(i)?,
            None => 0.0,
        },
        power: num(idx.power)?,
        status_ok: match idx.status_ok {
            Some(i) => parse_bool(row.get(i)?)?,
            None => true,
        },
    };
    rec.validate().ok()?;
    Some(rec)
}

/// Reads SCADA rows from a headed, comma-separated UTF-8 file.
///
/// Rows whose mapped fields do not parse (or violate the record invariants)
/// are skipped and counted rather than aborting the whole import.
pub fn parse_scada_csv(path: &Path, columns: &ColumnMap) -> Result<ParseOutcome> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    let idx = Indices {
        timestamp: locate(&headers, &columns.timestamp)?,
        v_w: locate(&headers, &columns.v_w)?,
        rho: locate(&headers, &columns.rho)?,
        ti: locate(&headers, &columns.ti)?,
        delta_yaw: locate_optional(&headers, &columns.delta_yaw),
        power: locate(&headers, &columns.power)?,
        status_ok: locate_optional(&headers, &columns.status_ok),
    };

    let mut records = Vec::new();
    let mut dropped = 0;
    for row in reader.records() {
        match row.ok().as_ref().and_then(|r| parse_row(r, &idx)) {
            Some(rec) => records.push(rec),
            None => dropped += 1,
        }
    }
    if records.is_empty() {
        return Err(Error::NoParseableRows { dropped });
    }
    Ok(ParseOutcome { records, dropped })
}

pub(crate) fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Writes records with the canonical column set.
pub fn write_scada_csv<W: Write>(out: W, records: &[ScadaRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["timestamp", "v_w", "rho", "ti", "delta_yaw", "power", "status_ok"])?;
    for r in records {
        w.write_record([
            format_timestamp(&r.timestamp),
            r.v_w.to_string(),
            r.rho.to_string(),
            r.ti.to_string(),
            r.delta_yaw.to_string(),
            r.power.to_string(),
            r.status_ok.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}
