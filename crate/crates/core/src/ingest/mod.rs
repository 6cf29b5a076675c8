//! Getting telemetry into the store: the line-oriented wire format, ingest
//! sessions, and a deterministic simulator of instrumented schools.

mod session;
mod simulate;
mod wire;

pub use session::{authorize, ingest_stream, IngestSummary, MAX_LINE_BYTES};
pub use simulate::{builtin, DayTarget, LightingSim, LuxSensorSim, MeterSim, SimError, SimScenario, SCENARIOS};
pub use wire::{
    format_csv, format_document, format_timestamp, is_header, parse_csv, parse_record, parse_timestamp, IngestRecord,
    LineError, HEADER,
};
