//! The five-step savings methodology: building profile, no-class baseline
//! with anomalous-day substitution, normal-week analysis of flexible
//! consumption, intervention evaluation and weekly progress tracking.
//!
//! Everything here is a pure function over [`DailyEnergy`] values, so the
//! same inputs always give bit-identical outputs.
//!
//! [`DailyEnergy`]: crate::timeseries::DailyEnergy

mod baseline;
mod intervention;
mod profile;
mod progress;
mod week;

use chrono::NaiveDate;
use thiserror::Error;

use crate::timeseries::{BuildingId, TimeseriesError};

pub use baseline::{
    compute_baseline, substitute_day, AnomalyDecl, BaselineModel, BaselineOptions, DaySet, MemberDay, Substitution,
    UsedAs,
};
pub use intervention::{evaluate_intervention, percent_label, reduction_fraction, InterventionResult};
pub use profile::{
    BuildingProfile, ConsumptionCategory, ConsumptionPoint, Occupancy, ProfileBook, ProfileId, ProfileWarning,
    StoredProfile, Timetable,
};
pub use progress::{track_progress, ProgressPoint, TrackedWeek};
pub use week::{analyze_week, BaselineRef, WeekAnalysis, WeekId};

/// Days below this fraction of metered time do not count.
pub const MIN_COVERAGE: f64 = 0.9;

#[derive(Debug, Error)]
pub enum MethodologyError {
    #[error("unknown building {0}")]
    UnknownBuilding(BuildingId),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("building {0} has no profile with consumption points; register one first")]
    ProfileMissing(BuildingId),
    #[error("no donor days given for {0}")]
    NoDonors(NaiveDate),
    #[error("donor {donor} for {date} lies outside the baseline period")]
    DonorOutsidePeriod { date: NaiveDate, donor: NaiveDate },
    #[error("invalid anomaly declaration: {0}")]
    InvalidAnomaly(String),
    #[error("{date}: coverage {coverage:.3} is below the required {required}")]
    InsufficientCoverage { date: NaiveDate, coverage: f64, required: f64 },
    #[error("only {found} usable days; at least {required} are needed")]
    InsufficientDays { found: usize, required: usize },
    #[error("days from different buildings were mixed")]
    BuildingMismatch,
    #[error("analyses reference different baselines")]
    BaselineMismatch,
    #[error("comparison week has no flexible consumption; reduction is undefined")]
    ZeroFlexible,
    #[error("week {week} does not come after comparison week {comparison}")]
    WeekNotAfterComparison { week: WeekId, comparison: WeekId },
    #[error("invalid week {0:?}; expected e.g. 2018-W47")]
    InvalidWeek(String),
    #[error("invalid period: {0}")]
    InvalidPeriod(String),
    #[error(transparent)]
    Timeseries(#[from] TimeseriesError),
}

impl MethodologyError {
    /// Stable machine-readable reason.
    pub fn code(&self) -> &'static str {
        match self {
            MethodologyError::UnknownBuilding(_) => "UnknownBuilding",
            MethodologyError::InvalidProfile(_) => "InvalidProfile",
            MethodologyError::ProfileMissing(_) => "ProfileMissing",
            MethodologyError::NoDonors(_) => "NoDonors",
            MethodologyError::DonorOutsidePeriod { .. } => "DonorOutsidePeriod",
            MethodologyError::InvalidAnomaly(_) => "InvalidAnomaly",
            MethodologyError::InsufficientCoverage { .. } => "InsufficientCoverage",
            MethodologyError::InsufficientDays { .. } => "InsufficientCoverage",
            MethodologyError::BuildingMismatch => "BuildingMismatch",
            MethodologyError::BaselineMismatch => "BaselineMismatch",
            MethodologyError::ZeroFlexible => "ZeroFlexible",
            MethodologyError::WeekNotAfterComparison { .. } => "WeekNotAfterComparison",
            MethodologyError::InvalidWeek(_) => "InvalidWeek",
            MethodologyError::InvalidPeriod(_) => "InvalidPeriod",
            MethodologyError::Timeseries(e) => e.code(),
        }
    }
}
