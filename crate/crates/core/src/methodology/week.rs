use std::fmt;
use std::str::FromStr;

use chrono::{NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use super::{BaselineModel, DaySet, MethodologyError};
use crate::timeseries::{BuildingId, DailyEnergy, DateRange};

/// ISO-8601 week, written `2018-W47`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct WeekId {
    year: i32,
    week: u32,
}

impl WeekId {
    pub fn new(year: i32, week: u32) -> Result<Self, MethodologyError> {
        NaiveDate::from_isoywd_opt(year, week, Weekday::Mon)
            .map(|_| Self { year, week })
            .ok_or_else(|| MethodologyError::InvalidWeek(format!("{year}-W{week:02}")))
    }

    pub fn containing(date: NaiveDate) -> Self {
        let iso = chrono::Datelike::iso_week(&date);
        Self { year: iso.year(), week: iso.week() }
    }

    /// Accepts `2018-W47`, or a bare `w47` / `47` resolved against `default_year`.
    pub fn parse_with_year(s: &str, default_year: i32) -> Result<Self, MethodologyError> {
        if let Ok(w) = s.parse() {
            return Ok(w);
        }
        let bare = s.trim_start_matches(['w', 'W']);
        let week: u32 = bare.parse().map_err(|_| MethodologyError::InvalidWeek(s.to_owned()))?;
        Self::new(default_year, week)
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn week(&self) -> u32 {
        self.week
    }

    pub fn monday(&self) -> NaiveDate {
        NaiveDate::from_isoywd_opt(self.year, self.week, Weekday::Mon).expect("validated on construction")
    }

    pub fn dates(&self) -> [NaiveDate; 7] {
        let monday = self.monday();
        std::array::from_fn(|i| monday + chrono::Duration::days(i as i64))
    }

    pub fn range(&self) -> DateRange {
        let d = self.dates();
        DateRange { start: d[0], end: d[6] }
    }

    pub fn next(&self) -> Self {
        Self::containing(self.monday() + chrono::Duration::days(7))
    }
}

impl fmt::Display for WeekId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-W{:02}", self.year, self.week)
    }
}

impl FromStr for WeekId {
    type Err = MethodologyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || MethodologyError::InvalidWeek(s.to_owned());
        let (year, week) = s.split_once(['-']).ok_or_else(bad)?;
        let week = week.strip_prefix(['W', 'w']).ok_or_else(bad)?;
        Self::new(year.parse().map_err(|_| bad())?, week.parse().map_err(|_| bad())?)
    }
}

impl TryFrom<String> for WeekId {
    type Error = MethodologyError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<WeekId> for String {
    fn from(w: WeekId) -> String {
        w.to_string()
    }
}

/// Identity of the baseline an analysis was computed against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRef {
    pub building_id: BuildingId,
    pub period: DateRange,
    pub day_set: DaySet,
    pub kwh_per_day: f64,
}

impl From<&BaselineModel> for BaselineRef {
    fn from(b: &BaselineModel) -> Self {
        Self { building_id: b.building_id.clone(), period: b.period, day_set: b.day_set, kwh_per_day: b.kwh_per_day }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeekAnalysis {
    pub building_id: BuildingId,
    pub week: WeekId,
    pub day_set: DaySet,
    pub daily: Vec<DailyEnergy>,
    pub mean_kwh_per_day: f64,
    /// Mean above the baseline, floored at zero.
    pub flexible_kwh_per_day: f64,
    /// The mean fell below the baseline (flexible was floored).
    pub below_baseline: bool,
    pub baseline_ref: BaselineRef,
}

/// Mean consumption over the week's day set and the part of it above the baseline.
pub fn analyze_week(
    building_id: &BuildingId,
    week: WeekId,
    days: &[DailyEnergy],
    baseline: &BaselineModel,
    day_set: DaySet,
    min_coverage: f64,
) -> Result<WeekAnalysis, MethodologyError> {
    if &baseline.building_id != building_id {
        return Err(MethodologyError::BaselineMismatch);
    }
    let mut daily = Vec::with_capacity(7);
    for date in week.dates() {
        let day = days
            .iter()
            .find(|d| d.date == date)
            .ok_or_else(|| MethodologyError::InvalidPeriod(format!("no daily record for {date} of {week}")))?;
        if &day.building_id != building_id {
            return Err(MethodologyError::BuildingMismatch);
        }
        daily.push(day.clone());
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for day in daily.iter().filter(|d| day_set.includes(d.date)) {
        match day.kwh {
            Some(kwh) if day.coverage >= min_coverage => {
                sum += kwh;
                n += 1;
            }
            _ => {
                return Err(MethodologyError::InsufficientCoverage {
                    date: day.date,
                    coverage: day.coverage,
                    required: min_coverage,
                })
            }
        }
    }
    let mean = sum / n as f64;
    let flexible = (mean - baseline.kwh_per_day).max(0.0);
    Ok(WeekAnalysis {
        building_id: building_id.clone(),
        week,
        day_set,
        daily,
        mean_kwh_per_day: mean,
        flexible_kwh_per_day: flexible,
        below_baseline: mean < baseline.kwh_per_day,
        baseline_ref: BaselineRef::from(baseline),
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::methodology::{MemberDay, UsedAs, MIN_COVERAGE};

    pub fn building() -> BuildingId {
        BuildingId::new("school").unwrap()
    }

    pub fn baseline(kwh: f64) -> BaselineModel {
        let start = NaiveDate::from_ymd_opt(2018, 10, 29).unwrap();
        BaselineModel {
            building_id: building(),
            kwh_per_day: kwh,
            member_days: vec![MemberDay { date: start, kwh, actual_kwh: Some(kwh), used_as: UsedAs::Actual }],
            substitutions: vec![],
            period: DateRange { start, end: NaiveDate::from_ymd_opt(2018, 11, 4).unwrap() },
            day_set: DaySet::SchoolDaysOnly,
        }
    }

    /// A week whose Mon..Fri values are `school`, weekend days 90 kWh.
    pub fn week_days(week: WeekId, school: [f64; 5]) -> Vec<DailyEnergy> {
        week.dates()
            .iter()
            .enumerate()
            .map(|(i, date)| DailyEnergy {
                building_id: building(),
                date: *date,
                kwh: Some(if i < 5 { school[i] } else { 90.0 }),
                coverage: 1.0,
                flags: Default::default(),
                counter_reset: false,
            })
            .collect()
    }

    pub fn analysis(week: &str, school: [f64; 5], base: &BaselineModel) -> WeekAnalysis {
        let week: WeekId = week.parse().unwrap();
        analyze_week(&building(), week, &week_days(week, school), base, DaySet::SchoolDaysOnly, MIN_COVERAGE).unwrap()
    }

    #[test]
    fn week_ids() {
        let w: WeekId = "2018-W47".parse().unwrap();
        assert_eq!(w.monday(), NaiveDate::from_ymd_opt(2018, 11, 19).unwrap());
        assert_eq!(w.to_string(), "2018-W47");
        assert_eq!(WeekId::parse_with_year("w47", 2018).unwrap(), w);
        assert_eq!(WeekId::containing(NaiveDate::from_ymd_opt(2018, 11, 25).unwrap()), w);
        assert_eq!(w.next().to_string(), "2018-W48");
        assert!("2018-W54".parse::<WeekId>().is_err());
        assert!("garbage".parse::<WeekId>().is_err());
        assert_eq!("2020-W53".parse::<WeekId>().unwrap().next().to_string(), "2021-W01");
    }

    #[test]
    fn comparison_week_flexible() {
        let a = analysis("2018-W47", [220.0, 225.0, 215.0, 210.0, 185.0], &baseline(141.9));
        assert!((a.mean_kwh_per_day - 211.0).abs() < 1e-9);
        assert!((a.flexible_kwh_per_day - 69.1).abs() < 1e-9);
        assert!(!a.below_baseline);
    }

    #[test]
    fn saving_week_flexible() {
        let a = analysis("2018-W50", [205.0, 210.0, 200.0, 195.0, 172.5], &baseline(141.9));
        assert!((a.mean_kwh_per_day - 196.5).abs() < 1e-9);
        assert!((a.flexible_kwh_per_day - 54.6).abs() < 1e-9);
    }

    #[test]
    fn mean_equal_to_baseline_has_no_flexible_part() {
        let a = analysis("2018-W47", [100.0; 5], &baseline(100.0));
        assert_eq!(a.flexible_kwh_per_day, 0.0);
        assert!(!a.below_baseline);
        let b = analysis("2018-W47", [90.0; 5], &baseline(100.0));
        assert_eq!(b.flexible_kwh_per_day, 0.0);
        assert!(b.below_baseline);
    }

    #[test]
    fn uncovered_school_day_is_an_error() {
        let week: WeekId = "2018-W47".parse().unwrap();
        let mut days = week_days(week, [200.0; 5]);
        days[2].coverage = 0.85;
        let err =
            analyze_week(&building(), week, &days, &baseline(100.0), DaySet::SchoolDaysOnly, MIN_COVERAGE).unwrap_err();
        assert!(matches!(err, MethodologyError::InsufficientCoverage { .. }));
        // Weekend gaps are irrelevant for the school-day mean but not for all days.
        let mut days = week_days(week, [200.0; 5]);
        days[6].kwh = None;
        days[6].coverage = 0.0;
        assert!(analyze_week(&building(), week, &days, &baseline(100.0), DaySet::SchoolDaysOnly, MIN_COVERAGE).is_ok());
        assert!(analyze_week(&building(), week, &days, &baseline(100.0), DaySet::AllDays, MIN_COVERAGE).is_err());
    }
}
