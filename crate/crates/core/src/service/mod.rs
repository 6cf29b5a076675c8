//! The service layer: one [`Engine`] behind both the HTTP API and the CLI,
//! so both paths run the same analysis code and emit the same JSON.

mod catalog;
mod config;
mod engine;
mod error;
pub mod http;
pub mod text;

pub use catalog::{BaselineRequest, BuildingState, Catalog, CatalogData};
pub use config::Config;
pub use engine::{
    savings_table, BuildingSummary, Clock, ContrastQuery, EnergyBucket, EnergyQuery, EnergySeries, Engine,
    EvaluateRequest, LiveView, OmittedSection, ProgressQuery, ProgressReport, RegisterSummary, ReportDocument,
    SavingsTable, SimulateSummary, TableRow, WasteQuery, WasteReport, WeekSpec, DEFAULT_LOOKBACK_DAYS,
    REPORT_LUX_THRESHOLD,
};
pub use error::{ErrorKind, ServiceError};

/// The JSON body for any response: pretty-printed, newline-terminated.
pub fn render_json<T: serde::Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("response types serialize");
    s.push('\n');
    s
}
