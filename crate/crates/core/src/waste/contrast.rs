use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::WasteError;
use crate::timeseries::{BuildingId, DailyEnergy, DateRange, DayFlag};

pub const DEFAULT_ALERT_RATIO: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyContrast {
    pub building_id: BuildingId,
    pub period: DateRange,
    pub weekday_mean_kwh: f64,
    pub weekend_mean_kwh: f64,
    pub weekday_days: usize,
    pub weekend_days: usize,
    /// Weekend mean over weekday mean.
    pub ratio: f64,
    pub alert_ratio: f64,
    pub alert: bool,
}

/// Weekend versus weekday mean daily consumption over `period`.
/// Weekday holidays count in neither group.
pub fn occupancy_contrast(
    building_id: &BuildingId,
    period: DateRange,
    days: &[DailyEnergy],
    alert_ratio: f64,
    min_coverage: f64,
) -> Result<OccupancyContrast, WasteError> {
    let (mut wd_sum, mut wd_n, mut we_sum, mut we_n) = (0.0, 0usize, 0.0, 0usize);
    let mut weekends = BTreeSet::new();
    for date in period.days() {
        let day = days
            .iter()
            .find(|d| d.date == date && &d.building_id == building_id)
            .ok_or(WasteError::InsufficientCoverage { date, coverage: 0.0, required: min_coverage })?;
        let weekend = day.is_weekend();
        if !weekend && day.has(DayFlag::Holiday) {
            continue;
        }
        let kwh = match day.kwh {
            Some(k) if day.coverage >= min_coverage => k,
            _ => return Err(WasteError::InsufficientCoverage { date, coverage: day.coverage, required: min_coverage }),
        };
        if weekend {
            we_sum += kwh;
            we_n += 1;
            weekends.insert(chrono::Datelike::iso_week(&date));
        } else {
            wd_sum += kwh;
            wd_n += 1;
        }
    }
    if weekends.len() < 2 {
        return Err(WasteError::InsufficientWeekends { found: weekends.len() });
    }
    if wd_n == 0 || wd_sum == 0.0 {
        return Err(WasteError::ZeroWeekdayConsumption);
    }
    let weekday_mean = wd_sum / wd_n as f64;
    let weekend_mean = we_sum / we_n as f64;
    let ratio = weekend_mean / weekday_mean;
    Ok(OccupancyContrast {
        building_id: building_id.clone(),
        period,
        weekday_mean_kwh: weekday_mean,
        weekend_mean_kwh: weekend_mean,
        weekday_days: wd_n,
        weekend_days: we_n,
        ratio,
        alert_ratio,
        alert: ratio > alert_ratio,
    })
}
