//! Recurring avoidable consumption: lights burning under sufficient
//! daylight, and unoccupied days drawing too much of a working day's energy.

mod contrast;
mod lux;
mod recurrence;

use chrono::NaiveDate;
use thiserror::Error;

use crate::timeseries::TimeseriesError;

pub use contrast::{occupancy_contrast, OccupancyContrast, DEFAULT_ALERT_RATIO};
pub use lux::{
    aggregate_zone_lux, detect_luminosity_waste, LuxAggregation, WasteInterval, WasteParams, DEFAULT_BRIDGE_SECS,
};
pub use recurrence::{annotate_recurrence, recurrence_scan, RecurrencePattern, DEFAULT_CLOCK_TOLERANCE_MIN};

#[derive(Debug, Error)]
pub enum WasteError {
    #[error("zone has no luminosity sensors")]
    NoSensors,
    #[error("missing series: {0}")]
    MissingSeries(String),
    #[error("lux threshold must be positive, got {0}")]
    ThresholdNonPositive(f64),
    #[error("lux threshold {threshold} is below the regulatory minimum of {minimum} lux")]
    ThresholdBelowRegulatory { threshold: f64, minimum: f64 },
    #[error("unknown zone {0:?}")]
    UnknownZone(String),
    #[error("{date}: coverage {coverage:.3} is below the required {required}")]
    InsufficientCoverage { date: NaiveDate, coverage: f64, required: f64 },
    #[error("period covers {found} weekend(s); at least 2 are needed")]
    InsufficientWeekends { found: usize },
    #[error("weekday consumption is zero; the ratio is undefined")]
    ZeroWeekdayConsumption,
    #[error(transparent)]
    Timeseries(#[from] TimeseriesError),
}

impl WasteError {
    pub fn code(&self) -> &'static str {
        match self {
            WasteError::NoSensors => "NoSensors",
            WasteError::MissingSeries(_) => "MissingSeries",
            WasteError::ThresholdNonPositive(_) => "ThresholdNonPositive",
            WasteError::ThresholdBelowRegulatory { .. } => "ThresholdBelowRegulatory",
            WasteError::UnknownZone(_) => "UnknownZone",
            WasteError::InsufficientCoverage { .. } | WasteError::InsufficientWeekends { .. } => "InsufficientCoverage",
            WasteError::ZeroWeekdayConsumption => "ZeroWeekdayConsumption",
            WasteError::Timeseries(e) => e.code(),
        }
    }
}
