use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use super::{MethodologyError, MIN_COVERAGE};
use crate::timeseries::{BuildingId, DailyEnergy, DateRange};

/// Which days of a period enter a mean.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DaySet {
    /// Monday to Friday.
    #[default]
    SchoolDaysOnly,
    AllDays,
}

impl DaySet {
    pub fn includes(self, date: NaiveDate) -> bool {
        match self {
            DaySet::SchoolDaysOnly => !matches!(date.weekday(), Weekday::Sat | Weekday::Sun),
            DaySet::AllDays => true,
        }
    }
}

impl std::str::FromStr for DaySet {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "school_days_only" | "school-days" => Ok(DaySet::SchoolDaysOnly),
            "all_days" | "all-days" => Ok(DaySet::AllDays),
            other => Err(format!("unknown day set {other:?}")),
        }
    }
}

/// An operator's statement that a day is not representative, and which days
/// stand in for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnomalyDecl {
    pub date: NaiveDate,
    pub donors: Vec<NaiveDate>,
    #[serde(default)]
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineOptions {
    pub day_set: DaySet,
    pub min_coverage: f64,
    pub min_days: usize,
}

impl Default for BaselineOptions {
    fn default() -> Self {
        Self { day_set: DaySet::SchoolDaysOnly, min_coverage: MIN_COVERAGE, min_days: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UsedAs {
    Actual,
    Substituted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberDay {
    pub date: NaiveDate,
    /// The value that enters the mean.
    pub kwh: f64,
    /// What the meter recorded, if anything.
    pub actual_kwh: Option<f64>,
    pub used_as: UsedAs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Substitution {
    pub date: NaiveDate,
    pub donor_dates: Vec<NaiveDate>,
    pub reason: String,
    pub kwh: f64,
}

/// Fixed ("inflexible") daily consumption with the record of how it was derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub building_id: BuildingId,
    pub kwh_per_day: f64,
    pub member_days: Vec<MemberDay>,
    pub substitutions: Vec<Substitution>,
    pub period: DateRange,
    pub day_set: DaySet,
}

fn usable_kwh(day: &DailyEnergy, min_coverage: f64) -> Result<f64, MethodologyError> {
    match day.kwh {
        Some(kwh) if day.coverage >= min_coverage => Ok(kwh),
        _ => Err(MethodologyError::InsufficientCoverage {
            date: day.date,
            coverage: day.coverage,
            required: min_coverage,
        }),
    }
}

/// Replaces a day's consumption with the mean of its donors.
pub fn substitute_day(target: &DailyEnergy, donors: &[DailyEnergy]) -> Result<Substitution, MethodologyError> {
    substitute_with(target.date, &target.building_id, donors, MIN_COVERAGE)
}

fn substitute_with(
    date: NaiveDate,
    building: &BuildingId,
    donors: &[DailyEnergy],
    min_coverage: f64,
) -> Result<Substitution, MethodologyError> {
    if donors.is_empty() {
        return Err(MethodologyError::NoDonors(date));
    }
    let mut sum = 0.0;
    for d in donors {
        if &d.building_id != building {
            return Err(MethodologyError::BuildingMismatch);
        }
        sum += usable_kwh(d, min_coverage)?;
    }
    Ok(Substitution {
        date,
        donor_dates: donors.iter().map(|d| d.date).collect(),
        reason: String::new(),
        kwh: sum / donors.len() as f64,
    })
}

fn missing(date: NaiveDate, min_coverage: f64) -> MethodologyError {
    MethodologyError::InsufficientCoverage { date, coverage: 0.0, required: min_coverage }
}

/// Mean daily consumption over the day set of a no-class period, after
/// replacing each declared anomalous day by the mean of its donor days.
pub fn compute_baseline(
    building_id: &BuildingId,
    period: DateRange,
    days: &[DailyEnergy],
    anomalies: &[AnomalyDecl],
    options: &BaselineOptions,
) -> Result<BaselineModel, MethodologyError> {
    if period.end < period.start {
        return Err(MethodologyError::InvalidPeriod(format!("{period} is reversed")));
    }
    let mut by_date: BTreeMap<NaiveDate, &DailyEnergy> = BTreeMap::new();
    for d in days {
        if &d.building_id != building_id {
            return Err(MethodologyError::BuildingMismatch);
        }
        by_date.insert(d.date, d);
    }
    let members: Vec<NaiveDate> = period.days().filter(|d| options.day_set.includes(*d)).collect();

    let anomalous: BTreeSet<NaiveDate> = anomalies.iter().map(|a| a.date).collect();
    if anomalous.len() != anomalies.len() {
        return Err(MethodologyError::InvalidAnomaly("a date is declared twice".into()));
    }
    let mut decls: BTreeMap<NaiveDate, &AnomalyDecl> = BTreeMap::new();
    for a in anomalies {
        if !members.contains(&a.date) {
            return Err(MethodologyError::InvalidAnomaly(format!("{} is not a member day of {period}", a.date)));
        }
        if a.donors.is_empty() {
            return Err(MethodologyError::NoDonors(a.date));
        }
        for donor in &a.donors {
            if !period.contains(*donor) {
                return Err(MethodologyError::DonorOutsidePeriod { date: a.date, donor: *donor });
            }
            if anomalous.contains(donor) {
                return Err(MethodologyError::InvalidAnomaly(format!("donor {donor} is itself declared anomalous")));
            }
        }
        decls.insert(a.date, a);
    }

    if members.len() < options.min_days {
        return Err(MethodologyError::InsufficientDays { found: members.len(), required: options.min_days });
    }

    let mut member_days = Vec::with_capacity(members.len());
    let mut substitutions = Vec::new();
    for date in members {
        let actual = by_date.get(&date).and_then(|d| d.kwh);
        match decls.get(&date) {
            Some(decl) => {
                let donors = decl
                    .donors
                    .iter()
                    .map(|d| by_date.get(d).map(|x| (*x).clone()).ok_or_else(|| missing(*d, options.min_coverage)))
                    .collect::<Result<Vec<_>, _>>()?;
                let mut sub = substitute_with(date, building_id, &donors, options.min_coverage)?;
                sub.reason = decl.reason.clone();
                member_days.push(MemberDay { date, kwh: sub.kwh, actual_kwh: actual, used_as: UsedAs::Substituted });
                substitutions.push(sub);
            }
            None => {
                let day = by_date.get(&date).ok_or_else(|| missing(date, options.min_coverage))?;
                let kwh = usable_kwh(day, options.min_coverage)?;
                member_days.push(MemberDay { date, kwh, actual_kwh: actual, used_as: UsedAs::Actual });
            }
        }
    }

    let kwh_per_day = member_days.iter().map(|m| m.kwh).sum::<f64>() / member_days.len() as f64;
    Ok(BaselineModel {
        building_id: building_id.clone(),
        kwh_per_day,
        member_days,
        substitutions,
        period,
        day_set: options.day_set,
    })
}
