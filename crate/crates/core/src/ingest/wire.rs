use std::fmt::Write as _;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::timeseries::{Kind, Reading, SensorId, Unit};

pub const HEADER: &str = "timestamp,sensor_id,kind,value,unit";
const TS_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

/// Why one line was refused, with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineError {
    pub line: usize,
    pub code: String,
    pub reason: String,
}

impl std::fmt::Display for LineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

/// A parsed line: the reading plus the optional per-session sequence number.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestRecord {
    pub reading: Reading,
    pub seq: Option<u64>,
}

fn err(code: &str, reason: impl Into<String>) -> (String, String) {
    (code.to_owned(), reason.into())
}

pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    NaiveDateTime::parse_from_str(s, TS_FORMAT).ok().map(|t| t.and_utc())
}

pub fn format_timestamp(at: DateTime<Utc>) -> String {
    at.format(TS_FORMAT).to_string()
}

fn parse_fields(fields: &[&str]) -> Result<Reading, (String, String)> {
    let [ts, sensor, kind, value, unit] = fields else {
        return Err(err("FieldCount", format!("expected 5 fields, found {}", fields.len())));
    };
    let at = parse_timestamp(ts)
        .ok_or_else(|| err("BadTimestamp", format!("bad timestamp {ts:?}; expected e.g. 2018-11-05T08:00:00Z")))?;
    let sensor = SensorId::new(*sensor).map_err(|e| err(e.code(), e.to_string()))?;
    let kind: Kind = kind.parse().map_err(|e: crate::timeseries::TimeseriesError| err(e.code(), e.to_string()))?;
    let unit: Unit = unit.parse().map_err(|e: crate::timeseries::TimeseriesError| err(e.code(), e.to_string()))?;
    // Rust also accepts "inf"/"nan" and exponents; only plain decimals are on the wire.
    let plain = !value.is_empty()
        && value.trim_start_matches('-').chars().all(|c| c.is_ascii_digit() || c == '.')
        && value.matches('.').count() <= 1
        && value.trim_start_matches('-').chars().next().is_some_and(|c| c.is_ascii_digit());
    if !plain {
        let code = if value.eq_ignore_ascii_case("nan") || value.to_ascii_lowercase().contains("inf") {
            "NonFinite"
        } else {
            "BadValue"
        };
        return Err(err(code, format!("bad value {value:?}; expected a decimal number")));
    }
    let value: f64 = value.parse().map_err(|_| err("BadValue", format!("bad value {value:?}")))?;
    Reading::new(sensor, at, kind, value, unit).map_err(|e| err(e.code(), e.to_string()))
}

/// Parses one `timestamp,sensor_id,kind,value,unit` line.
pub fn parse_csv(line: &str) -> Result<Reading, LineError> {
    let fields: Vec<&str> = line.trim_end_matches('\r').split(',').collect();
    parse_fields(&fields).map_err(|(code, reason)| LineError { line: 1, code, reason })
}

/// Like [`parse_csv`], also accepting a sixth field with a sequence number.
pub fn parse_record(line: &str, line_no: usize) -> Result<IngestRecord, LineError> {
    let fields: Vec<&str> = line.trim_end_matches('\r').split(',').collect();
    let wrap = |(code, reason): (String, String)| LineError { line: line_no, code, reason };
    let (fields, seq) = match fields.len() {
        6 => {
            let seq = fields[5]
                .parse::<u64>()
                .map_err(|_| wrap(err("BadSequence", format!("bad sequence number {:?}", fields[5]))))?;
            (&fields[..5], Some(seq))
        }
        _ => (&fields[..], None),
    };
    Ok(IngestRecord { reading: parse_fields(fields).map_err(wrap)?, seq })
}

pub fn is_header(line: &str) -> bool {
    line.trim_end_matches('\r') == HEADER
}

pub fn format_csv(r: &Reading) -> String {
    let mut s = String::with_capacity(64);
    write_csv(&mut s, r);
    s
}

fn write_csv(out: &mut String, r: &Reading) {
    let _ =
        write!(out, "{},{},{},{},{}", format_timestamp(r.timestamp()), r.sensor_id(), r.kind(), r.value(), r.unit());
}

/// Header line plus one line per reading, each newline-terminated.
pub fn format_document<'a>(readings: impl IntoIterator<Item = &'a Reading>) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    for r in readings {
        write_csv(&mut out, r);
        out.push('\n');
    }
    out
}
