use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::WasteError;
use crate::timeseries::{Bucket, BuildingId};

/// Data gaps shorter than this do not split an interval.
pub const DEFAULT_BRIDGE_SECS: i64 = 30 * 60;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LuxAggregation {
    #[default]
    Max,
    Median,
}

impl std::str::FromStr for LuxAggregation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max" => Ok(Self::Max),
            "median" => Ok(Self::Median),
            other => Err(format!("unknown lux aggregation {other:?}; expected max or median")),
        }
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Pointwise aggregate of several resampled lux series, matched on bucket start.
/// A bucket is empty only when every sensor is empty there.
pub fn aggregate_zone_lux(series: &[Vec<Bucket>], method: LuxAggregation) -> Result<Vec<Bucket>, WasteError> {
    if series.is_empty() {
        return Err(WasteError::NoSensors);
    }
    let mut grid: BTreeMap<DateTime<Utc>, (Bucket, Vec<f64>)> = BTreeMap::new();
    for s in series {
        for b in s {
            let slot = grid.entry(b.start).or_insert_with(|| (Bucket { value: None, count: 0, ..*b }, Vec::new()));
            slot.0.count += b.count;
            if let Some(v) = b.value {
                slot.1.push(v);
            }
        }
    }
    Ok(grid
        .into_values()
        .map(|(mut bucket, mut values)| {
            bucket.value = match (values.is_empty(), method) {
                (true, _) => None,
                (false, LuxAggregation::Max) => values.iter().copied().reduce(f64::max),
                (false, LuxAggregation::Median) => Some(median(&mut values)),
            };
            bucket
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WasteParams {
    pub lux_threshold: f64,
    pub lights_on_floor_kw: f64,
    /// Retained lighting level. `None` uses the lowest non-zero lights power in the series.
    pub minimal_power_kw: Option<f64>,
    pub regulatory_min_lux: f64,
    pub bridge_secs: i64,
}

impl WasteParams {
    pub fn new(lux_threshold: f64) -> Self {
        Self {
            lux_threshold,
            lights_on_floor_kw: 0.1,
            minimal_power_kw: None,
            regulatory_min_lux: 150.0,
            bridge_secs: DEFAULT_BRIDGE_SECS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WasteInterval {
    pub building_id: BuildingId,
    pub zone: String,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub lux_threshold: f64,
    pub usual_power_kw: f64,
    pub minimal_power_kw: f64,
    pub excess_power_kw: f64,
    pub estimated_daily_savings_kwh: f64,
    pub recurrence_count: usize,
}

impl WasteInterval {
    pub fn hours(&self) -> f64 {
        (self.end - self.start).num_seconds() as f64 / 3600.0
    }
}

#[derive(Clone, Copy)]
enum State {
    On(f64),
    Off,
    Gap,
}

/// Maximal stretches where zone lux is at or above the threshold while the
/// lights draw at least the on-floor. `lights_power` is in watts.
pub fn detect_luminosity_waste(
    building_id: &BuildingId,
    zone: &str,
    lux: &[Bucket],
    lights_power: &[Bucket],
    params: &WasteParams,
) -> Result<Vec<WasteInterval>, WasteError> {
    let t = params.lux_threshold;
    if !(t.is_finite() && t > 0.0) {
        return Err(WasteError::ThresholdNonPositive(t));
    }
    if t < params.regulatory_min_lux {
        return Err(WasteError::ThresholdBelowRegulatory { threshold: t, minimum: params.regulatory_min_lux });
    }
    if lux.iter().all(|b| b.value.is_none()) {
        return Err(WasteError::MissingSeries(format!("luminosity for zone {zone}")));
    }
    if lights_power.iter().all(|b| b.value.is_none()) {
        return Err(WasteError::MissingSeries(format!("lights power for zone {zone}")));
    }
    let power: BTreeMap<DateTime<Utc>, f64> =
        lights_power.iter().filter_map(|b| b.value.map(|v| (b.start, v / 1000.0))).collect();
    let minimal = params
        .minimal_power_kw
        .unwrap_or_else(|| power.values().copied().filter(|kw| *kw > 0.0).reduce(f64::min).unwrap_or(0.0));

    let state = |b: &Bucket| match (b.value, power.get(&b.start)) {
        (Some(l), Some(&kw)) if l >= t && kw >= params.lights_on_floor_kw => State::On(kw),
        (Some(_), Some(_)) => State::Off,
        _ => State::Gap,
    };

    // (first bucket start, last bucket end, powers)
    let mut runs: Vec<(DateTime<Utc>, DateTime<Utc>, Vec<f64>)> = Vec::new();
    let mut open = false;
    for b in lux {
        match state(b) {
            State::On(kw) => match runs.last_mut() {
                Some(run) if open && (b.start - run.1).num_seconds() < params.bridge_secs => {
                    run.1 = b.end;
                    run.2.push(kw);
                }
                _ => {
                    runs.push((b.start, b.end, vec![kw]));
                    open = true;
                }
            },
            State::Off => open = false,
            State::Gap => {}
        }
    }

    Ok(runs
        .into_iter()
        .map(|(start, end, mut powers)| {
            let usual = median(&mut powers);
            let excess = (usual - minimal).max(0.0);
            let hours = (end - start).num_seconds() as f64 / 3600.0;
            WasteInterval {
                building_id: building_id.clone(),
                zone: zone.to_owned(),
                start,
                end,
                lux_threshold: t,
                usual_power_kw: usual,
                minimal_power_kw: minimal,
                excess_power_kw: excess,
                estimated_daily_savings_kwh: excess * hours,
                recurrence_count: 1,
            }
        })
        .collect())
}
