use std::io::{BufRead, Read};

use serde::{Deserialize, Serialize};

use super::wire::{is_header, parse_record, LineError};
use crate::timeseries::{AppendOutcome, Reading, Store, TimeseriesError};

pub const MAX_LINE_BYTES: usize = 4096;
const BATCH: usize = 8192;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub accepted: usize,
    pub rejected: usize,
    pub duplicates: usize,
    pub blank_lines: usize,
    pub errors: Vec<LineError>,
    /// Framing failure that ended the session early; counts cover what came before it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
}

/// Compares a presented `Authorization` header with the configured token.
pub fn authorize(expected: &str, header: Option<&str>) -> bool {
    let Some(presented) = header.and_then(|h| h.strip_prefix("Bearer ")) else {
        return false;
    };
    let (a, b) = (expected.as_bytes(), presented.trim().as_bytes());
    // Length leaks, content does not.
    !expected.is_empty() && a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

fn flush(
    store: &Store,
    pending: &mut Vec<(usize, Reading)>,
    summary: &mut IngestSummary,
) -> Result<(), TimeseriesError> {
    if pending.is_empty() {
        return Ok(());
    }
    let readings: Vec<Reading> = pending.iter().map(|(_, r)| r.clone()).collect();
    let report = store.append(&readings)?;
    for ((line, _), outcome) in pending.iter().zip(report.outcomes) {
        match outcome {
            AppendOutcome::Accepted => summary.accepted += 1,
            AppendOutcome::Duplicate => summary.duplicates += 1,
            AppendOutcome::Rejected(e) => {
                summary.rejected += 1;
                summary.errors.push(LineError { line: *line, code: e.code().to_owned(), reason: e.to_string() });
            }
        }
    }
    pending.clear();
    Ok(())
}

/// Reads newline-delimited records and appends them. Lines are validated
/// one by one: valid lines commit, invalid ones are reported. Invalid UTF-8,
/// an overlong line or a sequence number that fails to increase aborts the
/// session after committing everything before it.
pub fn ingest_stream<R: BufRead>(store: &Store, mut reader: R) -> Result<IngestSummary, TimeseriesError> {
    let mut summary = IngestSummary::default();
    let mut pending: Vec<(usize, Reading)> = Vec::new();
    let mut last_seq: Option<u64> = None;
    let mut buf = Vec::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        let n = Read::take(&mut reader, MAX_LINE_BYTES as u64 + 1).read_until(b'\n', &mut buf)?;
        if n == 0 {
            break;
        }
        line_no += 1;
        if buf.last() == Some(&b'\n') {
            buf.pop();
        } else if buf.len() > MAX_LINE_BYTES {
            summary.aborted = Some(format!("line {line_no} exceeds {MAX_LINE_BYTES} bytes"));
            break;
        }
        let Ok(line) = std::str::from_utf8(&buf) else {
            summary.aborted = Some(format!("line {line_no} is not valid UTF-8"));
            break;
        };
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            summary.blank_lines += 1;
            continue;
        }
        if line_no == 1 && is_header(line) {
            continue;
        }
        match parse_record(line, line_no) {
            Ok(rec) => {
                if let Some(seq) = rec.seq {
                    if last_seq.is_some_and(|prev| seq <= prev) {
                        summary.aborted = Some(format!(
                            "line {line_no}: sequence number {seq} does not follow {}",
                            last_seq.unwrap_or_default()
                        ));
                        break;
                    }
                    last_seq = Some(seq);
                }
                pending.push((line_no, rec.reading));
                if pending.len() >= BATCH {
                    flush(store, &mut pending, &mut summary)?;
                }
            }
            Err(e) => {
                summary.rejected += 1;
                summary.errors.push(e);
            }
        }
    }
    flush(store, &mut pending, &mut summary)?;
    summary.errors.sort_by_key(|e| e.line);
    Ok(summary)
}
