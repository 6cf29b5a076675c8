use std::collections::BTreeSet;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use super::{
    diff_energy_counter, integrate_power, is_weekend, local_day_window, Building, BuildingId, Kind, Point, Snapshot,
    TimeseriesError, Window,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DayFlag {
    Holiday,
    Weekend,
    Anomalous,
    OccupiedOffhours,
}

/// One local calendar day's consumption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyEnergy {
    pub building_id: BuildingId,
    pub date: NaiveDate,
    /// Unset when some main meter had no usable data that day.
    pub kwh: Option<f64>,
    pub coverage: f64,
    pub flags: BTreeSet<DayFlag>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub counter_reset: bool,
}

impl DailyEnergy {
    pub fn has(&self, flag: DayFlag) -> bool {
        self.flags.contains(&flag)
    }

    pub fn is_weekend(&self) -> bool {
        self.has(DayFlag::Weekend)
    }
}

/// Energy of one or more meters over a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeterEnergy {
    pub kwh: Option<f64>,
    pub coverage: f64,
    pub reset: bool,
}

impl MeterEnergy {
    const MISSING: MeterEnergy = MeterEnergy { kwh: None, coverage: 0.0, reset: false };
}

/// Energy of a single meter, downgrading gaps to a coverage-weighted figure.
pub fn meter_energy(
    kind: Kind,
    points: &[Point],
    window: Window,
    max_gap_secs: i64,
) -> Result<MeterEnergy, TimeseriesError> {
    match kind {
        Kind::Power => match integrate_power(points, window, max_gap_secs) {
            Ok(e) => Ok(MeterEnergy { kwh: Some(e.kwh), coverage: e.coverage(), reset: false }),
            Err(TimeseriesError::GapExceeded { partial, .. }) => Ok(match partial.coverage_weighted_kwh() {
                Some(kwh) => MeterEnergy { kwh: Some(kwh), coverage: partial.coverage(), reset: false },
                None => MeterEnergy::MISSING,
            }),
            Err(TimeseriesError::NoData) => Ok(MeterEnergy::MISSING),
            Err(e) => Err(e),
        },
        Kind::EnergyCounter => match diff_energy_counter(points, window) {
            Ok(c) if c.insufficient_data => Ok(MeterEnergy { reset: c.reset, ..MeterEnergy::MISSING }),
            Ok(c) => Ok(MeterEnergy { kwh: Some(c.kwh), coverage: c.coverage(), reset: c.reset }),
            Err(TimeseriesError::NoData) => Ok(MeterEnergy::MISSING),
            Err(e) => Err(e),
        },
        other => Err(TimeseriesError::InvalidSite(format!("{other} sensors do not meter energy"))),
    }
}

/// Sum over a building's main meters. Coverage is the worst meter's; one
/// meter without data leaves the total unset.
pub fn building_energy(
    building: &Building,
    snapshot: &Snapshot,
    window: Window,
    max_gap_secs: i64,
) -> Result<MeterEnergy, TimeseriesError> {
    if building.main_meters.is_empty() {
        return Err(TimeseriesError::NoMainMeter(building.id.clone()));
    }
    let mut total = MeterEnergy { kwh: Some(0.0), coverage: 1.0, reset: false };
    for meter in &building.main_meters {
        let kind = snapshot.registry().sensor(meter)?.kind;
        let e = meter_energy(kind, snapshot.points(meter), window, max_gap_secs)?;
        total.reset |= e.reset;
        match (total.kwh, e.kwh) {
            (Some(acc), Some(k)) => {
                total.kwh = Some(acc + k);
                total.coverage = total.coverage.min(e.coverage);
            }
            _ => {
                total.kwh = None;
                total.coverage = 0.0;
            }
        }
    }
    Ok(total)
}

pub fn daily_energy(
    building: &Building,
    date: NaiveDate,
    snapshot: &Snapshot,
    max_gap_secs: i64,
) -> Result<DailyEnergy, TimeseriesError> {
    let window = local_day_window(&building.timezone, date);
    let energy = building_energy(building, snapshot, window, max_gap_secs)?;
    let cal = &building.calendar;
    let mut flags = BTreeSet::new();
    if is_weekend(date) {
        flags.insert(DayFlag::Weekend);
    }
    if cal.holidays.contains(&date) {
        flags.insert(DayFlag::Holiday);
    }
    if cal.anomalous.contains(&date) {
        flags.insert(DayFlag::Anomalous);
    }
    if cal.offhours_use.contains(&date) {
        flags.insert(DayFlag::OccupiedOffhours);
    }
    Ok(DailyEnergy {
        building_id: building.id.clone(),
        date,
        kwh: energy.kwh,
        coverage: energy.coverage,
        flags,
        counter_reset: energy.reset,
    })
}

/// Daily energy for every date in `from..=to`.
pub fn daily_energy_range(
    building: &Building,
    from: NaiveDate,
    to: NaiveDate,
    snapshot: &Snapshot,
    max_gap_secs: i64,
) -> Result<Vec<DailyEnergy>, TimeseriesError> {
    let mut out = Vec::new();
    let mut d = from;
    while d <= to {
        out.push(daily_energy(building, d, snapshot, max_gap_secs)?);
        d = d.checked_add_days(Days::new(1)).expect("date in range");
    }
    Ok(out)
}
