//! Storage-agnostic time-series model.
//!
//! Readings are validated at construction, kept per sensor in timestamp
//! order by [`Store`], and turned into energy by trapezoidal integration of
//! power ([`integrate_power`]) or by differencing cumulative counters
//! ([`diff_energy_counter`]). Calendar-day totals are always taken over the
//! building's local civil day.

mod daily;
mod integrate;
mod reading;
mod resample;
mod site;
mod store;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use daily::{building_energy, daily_energy, daily_energy_range, meter_energy, DailyEnergy, DayFlag, MeterEnergy};
pub use integrate::{diff_energy_counter, integrate_power, CounterEnergy, PowerEnergy, DEFAULT_MAX_GAP_SECS};
pub use reading::{BuildingId, Kind, Point, Reading, SensorId, Unit};
pub use resample::{resample, resample_range, Aggregator, Bucket, Resolution};
pub use site::{is_weekend, local_date, local_day_window, Building, Calendar, DateRange, Sensor, Site, Zone};
pub use store::{AppendOutcome, AppendReport, Registry, Snapshot, Store};

/// Half-open-in-spirit instant range; integration treats both edges as inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl Window {
    pub fn new(start: DateTime<Utc>, end: DateTime<Utc>) -> Self {
        Self { start, end }
    }

    pub fn seconds(&self) -> i64 {
        (self.end - self.start).num_seconds()
    }

    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        t >= self.start && t <= self.end
    }
}

#[derive(Debug, Error)]
pub enum TimeseriesError {
    #[error("invalid identifier {0:?}: use 1-128 characters from [A-Za-z0-9._-]")]
    InvalidId(String),
    #[error("unknown kind {0:?}")]
    UnknownKind(String),
    #[error("unknown unit {0:?}")]
    UnknownUnit(String),
    #[error("unit {unit} does not match kind {kind}")]
    UnitMismatch { kind: Kind, unit: Unit },
    #[error("{kind} value {value} is negative")]
    Negative { kind: Kind, value: f64 },
    #[error("value is not finite")]
    NonFinite,
    #[error("timestamps carry second precision only")]
    SubsecondTimestamp,
    #[error("window end must be after its start")]
    EmptyWindow,
    #[error("no reading within or straddling the window")]
    NoData,
    #[error("largest gap of {largest_gap_seconds} s exceeds the configured maximum")]
    GapExceeded { largest_gap_seconds: i64, partial: PowerEnergy },
    #[error("building {0} has no main meter")]
    NoMainMeter(BuildingId),
    #[error("unknown building {0}")]
    UnknownBuilding(BuildingId),
    #[error("unknown sensor {0}")]
    UnknownSensor(SensorId),
    #[error("sensor {sensor} is registered as {expected}, reading is {got}")]
    KindMismatch { sensor: SensorId, expected: Kind, got: Kind },
    #[error("sensor {sensor} belongs to building {owner}")]
    SensorOwnership { sensor: SensorId, owner: BuildingId },
    #[error("invalid site definition: {0}")]
    InvalidSite(String),
    #[error("store file {path}: {reason}")]
    Corrupt { path: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl TimeseriesError {
    /// Stable machine-readable reason.
    pub fn code(&self) -> &'static str {
        match self {
            TimeseriesError::InvalidId(_) => "InvalidId",
            TimeseriesError::UnknownKind(_) => "UnknownKind",
            TimeseriesError::UnknownUnit(_) => "UnknownUnit",
            TimeseriesError::UnitMismatch { .. } => "UnitMismatch",
            TimeseriesError::Negative { .. } => "NegativeValue",
            TimeseriesError::NonFinite => "NonFinite",
            TimeseriesError::SubsecondTimestamp => "SubsecondTimestamp",
            TimeseriesError::EmptyWindow => "EmptyWindow",
            TimeseriesError::NoData => "NoData",
            TimeseriesError::GapExceeded { .. } => "GapExceeded",
            TimeseriesError::NoMainMeter(_) => "NoMainMeter",
            TimeseriesError::UnknownBuilding(_) => "UnknownBuilding",
            TimeseriesError::UnknownSensor(_) => "UnknownSensor",
            TimeseriesError::KindMismatch { .. } => "KindMismatch",
            TimeseriesError::SensorOwnership { .. } => "SensorOwnership",
            TimeseriesError::InvalidSite(_) => "InvalidSite",
            TimeseriesError::Corrupt { .. } => "Corrupt",
            TimeseriesError::Io(_) => "Io",
        }
    }
}
