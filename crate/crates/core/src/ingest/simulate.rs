use std::collections::BTreeMap;
use std::f64::consts::TAU;

use chrono::{DateTime, Days, NaiveDate, NaiveTime, Timelike, Utc};
use chrono_tz::Tz;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::wire::format_document;
use crate::methodology::{BuildingProfile, ConsumptionCategory, ConsumptionPoint, Occupancy, Timetable};
use crate::timeseries::{
    local_day_window, Building, BuildingId, Calendar, DateRange, Kind, Reading, Sensor, SensorId, Site, Zone,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("target of {kwh} kWh on {date} is infeasible")]
    InfeasibleTarget { date: NaiveDate, kwh: f64 },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("unknown scenario {0:?}; built-in scenarios are {1}")]
    UnknownScenario(String, String),
}

impl SimError {
    pub fn code(&self) -> &'static str {
        match self {
            SimError::InfeasibleTarget { .. } => "InfeasibleTarget",
            SimError::InvalidScenario(_) => "InvalidScenario",
            SimError::UnknownScenario(..) => "UnknownScenario",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayTarget {
    pub date: NaiveDate,
    pub kwh: f64,
}

fn default_power_step() -> i64 {
    60
}

fn default_lux_step() -> i64 {
    300
}

fn default_noise() -> f64 {
    0.05
}

/// Main meter: a constant base load plus a noisy raised-cosine bump over the
/// active hours, scaled per day so the day integrates to its target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeterSim {
    pub sensor_id: SensorId,
    #[serde(default = "default_power_step")]
    pub step_secs: i64,
    pub active_from: NaiveTime,
    pub active_to: NaiveTime,
    /// Relative amplitude of the multiplicative noise on the bump, below 1.
    #[serde(default = "default_noise")]
    pub noise: f64,
    pub days: Vec<DayTarget>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LuxSensorSim {
    pub sensor_id: SensorId,
    /// Multiplier on the daylight curve; 1.0 crosses the threshold at the configured times.
    pub gain: f64,
}

/// Daylight curve per day: flat at night, linear up through the threshold
/// at `crosses_up`, peaking halfway, back through it at `crosses_down`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightingSim {
    pub dates: DateRange,
    pub lux_sensors: Vec<LuxSensorSim>,
    #[serde(default = "default_lux_step")]
    pub lux_step_secs: i64,
    pub threshold_lux: f64,
    pub night_lux: f64,
    pub peak_lux: f64,
    pub dawn: NaiveTime,
    pub crosses_up: NaiveTime,
    pub crosses_down: NaiveTime,
    pub dusk: NaiveTime,
    pub lights_meter: SensorId,
    #[serde(default = "default_power_step")]
    pub power_step_secs: i64,
    pub lights_w: f64,
    pub lights_on: NaiveTime,
    pub lights_off: NaiveTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub name: String,
    pub seed: u64,
    /// One building and its sensors.
    pub site: Site,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<BuildingProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meter: Option<MeterSim>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lighting: Option<LightingSim>,
}

fn secs(t: NaiveTime) -> f64 {
    t.num_seconds_from_midnight() as f64
}

fn round_tenth(v: f64) -> f64 {
    let r = (v * 10.0).round() / 10.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn check_step(step: i64, what: &str) -> Result<(), SimError> {
    if step <= 0 || 3600 % step != 0 {
        return Err(SimError::InvalidScenario(format!("{what} step {step} s must divide an hour")));
    }
    Ok(())
}

fn next_day(d: NaiveDate) -> NaiveDate {
    d.checked_add_days(Days::new(1)).expect("date in range")
}

/// Sample instants for one local day: `[start, end)` in `step` increments,
/// plus `end` itself when `terminal` is set.
fn instants(tz: &Tz, date: NaiveDate, step: i64, terminal: bool) -> Vec<DateTime<Utc>> {
    let w = local_day_window(tz, date);
    let n = w.seconds() / step;
    let mut out: Vec<_> = (0..n).map(|k| w.start + chrono::Duration::seconds(k * step)).collect();
    if terminal {
        out.push(w.end);
    }
    out
}

fn clock(tz: &Tz, at: DateTime<Utc>, date: NaiveDate) -> f64 {
    let local = at.with_timezone(tz);
    if local.date_naive() == date {
        secs(local.time())
    } else {
        86_400.0
    }
}

impl SimScenario {
    pub fn building(&self) -> Result<&Building, SimError> {
        match self.site.buildings.as_slice() {
            [b] => Ok(b),
            _ => Err(SimError::InvalidScenario("a scenario describes exactly one building".into())),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.site.validate().map_err(|e| SimError::InvalidScenario(e.to_string()))?;
        self.building()?;
        let kind_of = |id: &SensorId| self.site.sensors.iter().find(|s| &s.sensor_id == id).map(|s| s.kind);
        if let Some(m) = &self.meter {
            check_step(m.step_secs, "meter")?;
            if kind_of(&m.sensor_id) != Some(Kind::Power) {
                return Err(SimError::InvalidScenario(format!("{} is not a declared power sensor", m.sensor_id)));
            }
            if !(0.0..1.0).contains(&m.noise) || m.active_from >= m.active_to || m.active_from == NaiveTime::MIN {
                return Err(SimError::InvalidScenario(
                    "meter noise must be in [0,1) and active hours inside the day".into(),
                ));
            }
            let mut seen = std::collections::BTreeSet::new();
            for d in &m.days {
                if !(d.kwh.is_finite() && d.kwh >= 0.0) {
                    return Err(SimError::InfeasibleTarget { date: d.date, kwh: d.kwh });
                }
                if !seen.insert(d.date) {
                    return Err(SimError::InvalidScenario(format!("two targets for {}", d.date)));
                }
            }
        }
        if let Some(l) = &self.lighting {
            check_step(l.lux_step_secs, "lux")?;
            check_step(l.power_step_secs, "lights")?;
            if kind_of(&l.lights_meter) != Some(Kind::Power) {
                return Err(SimError::InvalidScenario(format!("{} is not a declared power sensor", l.lights_meter)));
            }
            for s in &l.lux_sensors {
                if kind_of(&s.sensor_id) != Some(Kind::Luminosity) || !(s.gain >= 0.0 && s.gain.is_finite()) {
                    return Err(SimError::InvalidScenario(format!("bad lux sensor {}", s.sensor_id)));
                }
            }
            let ordered = l.dawn < l.crosses_up && l.crosses_up < l.crosses_down && l.crosses_down < l.dusk;
            let levels = 0.0 <= l.night_lux && l.night_lux < l.threshold_lux && l.threshold_lux < l.peak_lux;
            if !(ordered && levels && l.lights_w >= 0.0 && l.lights_on <= l.lights_off) {
                return Err(SimError::InvalidScenario("lighting curve is not ordered".into()));
            }
        }
        Ok(())
    }

    /// Readings ordered by sensor, then timestamp.
    pub fn run(&self) -> Result<Vec<Reading>, SimError> {
        self.validate()?;
        let tz = self.building()?.timezone;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut series: BTreeMap<SensorId, Vec<Reading>> = BTreeMap::new();
        if let Some(m) = &self.meter {
            series.insert(m.sensor_id.clone(), simulate_meter(m, &tz, &mut rng)?);
        }
        if let Some(l) = &self.lighting {
            for (id, readings) in simulate_lighting(l, &tz) {
                series.insert(id, readings);
            }
        }
        Ok(series.into_values().flatten().collect())
    }

    /// The run as a wire-format document.
    pub fn render(&self) -> Result<String, SimError> {
        Ok(format_document(&self.run()?))
    }
}

fn trapezoid_kwh(values: &[f64], step: i64) -> f64 {
    values.windows(2).map(|w| (w[0] + w[1]) / 2.0 * step as f64).sum::<f64>() / 3.6e6
}

fn simulate_meter(m: &MeterSim, tz: &Tz, rng: &mut ChaCha8Rng) -> Result<Vec<Reading>, SimError> {
    let mut days = m.days.clone();
    days.sort_by_key(|d| d.date);
    let min_target = days.iter().map(|d| d.kwh).reduce(f64::min).unwrap_or(0.0);
    let base_w = round_tenth(0.5 * min_target * 1000.0 / 24.0);
    let (a0, a1) = (secs(m.active_from), secs(m.active_to));
    let mut out = Vec::new();
    for (i, day) in days.iter().enumerate() {
        let terminal = days.get(i + 1).is_none_or(|n| n.date != next_day(day.date));
        let at = instants(tz, day.date, m.step_secs, terminal);
        let bump: Vec<f64> = at
            .iter()
            .map(|t| {
                let c = clock(tz, *t, day.date);
                if c > a0 && c < a1 {
                    let shape = 0.5 * (1.0 - (TAU * (c - a0) / (a1 - a0)).cos());
                    shape * (1.0 + m.noise * rng.random_range(-1.0..=1.0))
                } else {
                    0.0
                }
            })
            .collect();
        let day_secs = local_day_window(tz, day.date).seconds() as f64;
        let needed = day.kwh * 3.6e6 - base_w * day_secs;
        let sum: f64 = bump.iter().sum();
        let scale = match (needed, sum) {
            (n, _) if n.abs() < 1e-6 => 0.0,
            (n, s) if n > 0.0 && s > 0.0 => n / (m.step_secs as f64 * s),
            _ => return Err(SimError::InfeasibleTarget { date: day.date, kwh: day.kwh }),
        };
        let values: Vec<f64> = bump.iter().map(|b| round_tenth(base_w + scale * b)).collect();
        // The day's last interval ends on the next day's first sample, which is the base load.
        let mut check = values.clone();
        if !terminal {
            check.push(base_w);
        }
        let got = trapezoid_kwh(&check, m.step_secs);
        if (got - day.kwh).abs() > (day.kwh * 1e-3).max(1e-6) {
            return Err(SimError::InfeasibleTarget { date: day.date, kwh: day.kwh });
        }
        for (t, v) in at.into_iter().zip(values) {
            out.push(Reading::of_kind(m.sensor_id.clone(), t, Kind::Power, v).expect("simulated power is valid"));
        }
    }
    Ok(out)
}

fn lux_curve(l: &LightingSim, c: f64) -> f64 {
    let mid = (secs(l.crosses_up) + secs(l.crosses_down)) / 2.0;
    let knots = [
        (0.0, l.night_lux),
        (secs(l.dawn), l.night_lux),
        (secs(l.crosses_up), l.threshold_lux),
        (mid, l.peak_lux),
        (secs(l.crosses_down), l.threshold_lux),
        (secs(l.dusk), l.night_lux),
        (86_400.0, l.night_lux),
    ];
    for w in knots.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if c <= x1 {
            if c == x1 {
                return y1;
            }
            return y0 + (y1 - y0) * (c - x0) / (x1 - x0);
        }
    }
    l.night_lux
}

fn simulate_lighting(l: &LightingSim, tz: &Tz) -> Vec<(SensorId, Vec<Reading>)> {
    let dates: Vec<NaiveDate> = l.dates.days().collect();
    let last = *dates.last().expect("date ranges are non-empty");
    let mut out = Vec::new();
    for s in &l.lux_sensors {
        let mut readings = Vec::new();
        for &date in &dates {
            for t in instants(tz, date, l.lux_step_secs, date == last) {
                let v = round_tenth(lux_curve(l, clock(tz, t, date)) * s.gain);
                readings.push(Reading::of_kind(s.sensor_id.clone(), t, Kind::Luminosity, v).expect("valid lux"));
            }
        }
        out.push((s.sensor_id.clone(), readings));
    }
    let (on, off) = (secs(l.lights_on), secs(l.lights_off));
    let mut readings = Vec::new();
    for &date in &dates {
        for t in instants(tz, date, l.power_step_secs, date == last) {
            let c = clock(tz, t, date);
            let v = if c >= on && c < off { l.lights_w } else { 0.0 };
            readings.push(Reading::of_kind(l.lights_meter.clone(), t, Kind::Power, v).expect("valid power"));
        }
    }
    out.push((l.lights_meter.clone(), readings));
    out
}

pub const SCENARIOS: [&str; 4] = ["intervention-study", "hall-lighting", "weekend-baseload", "idle"];

fn id<T: TryFrom<String>>(s: &str) -> T
where
    T::Error: std::fmt::Debug,
{
    T::try_from(s.to_owned()).expect("built-in identifiers are valid")
}

fn hm(h: u32, m: u32) -> NaiveTime {
    NaiveTime::from_hms_opt(h, m, 0).expect("valid clock time")
}

fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

fn sensor(sensor_id: &str, kind: Kind, building: &BuildingId, room: Option<&str>, note: Option<&str>) -> Sensor {
    Sensor {
        sensor_id: id(sensor_id),
        kind,
        building_id: building.clone(),
        room: room.map(str::to_owned),
        orientation_note: note.map(str::to_owned),
    }
}

fn week_targets(monday: NaiveDate, values: [f64; 7]) -> Vec<DayTarget> {
    (0..7u64).map(|i| DayTarget { date: monday + Days::new(i), kwh: values[i as usize] }).collect()
}

fn meter(sensor_id: &str, step_secs: i64, days: Vec<DayTarget>) -> MeterSim {
    MeterSim {
        sensor_id: id(sensor_id),
        step_secs,
        active_from: hm(6, 0),
        active_to: hm(20, 0),
        noise: default_noise(),
        days,
    }
}

/// A technical high school: a no-class week with an anomalous Monday, then a
/// normal comparison week and a week of saving actions.
fn intervention_study() -> SimScenario {
    let b: BuildingId = id("school-a");
    let mut building = Building::new(b.clone(), "Europe/Stockholm".parse().expect("known zone"));
    building.main_meters = vec![id("school-a-main")];
    let no_class = ymd(2018, 10, 29);
    building.calendar = Calendar {
        holidays: (0..5).map(|i| no_class + Days::new(i)).collect(),
        anomalous: [no_class].into(),
        offhours_use: Default::default(),
    };
    let mut days = week_targets(no_class, [168.0, 145.0, 145.0, 145.0, 129.5, 95.0, 95.0]);
    days.extend(week_targets(ymd(2018, 11, 19), [220.0, 225.0, 215.0, 210.0, 185.0, 95.0, 95.0]));
    days.extend(week_targets(ymd(2018, 12, 10), [205.0, 210.0, 200.0, 195.0, 172.5, 95.0, 95.0]));
    let mut rooms: Vec<String> = (1..=8).map(|i| format!("classroom-{i}")).collect();
    rooms.push("computer-room".into());
    rooms.push("fabrication-room".into());
    SimScenario {
        name: "intervention-study".into(),
        seed: 44,
        site: Site { sensors: vec![sensor("school-a-main", Kind::Power, &b, None, None)], buildings: vec![building] },
        profile: Some(BuildingProfile {
            building_id: b,
            consumption_points: vec![
                ConsumptionPoint {
                    category: ConsumptionCategory::TeachingEquipment,
                    label: "computers and workshop equipment".into(),
                },
                ConsumptionPoint { category: ConsumptionCategory::Hvac, label: "ventilation".into() },
                ConsumptionPoint { category: ConsumptionCategory::Lighting, label: "classroom lighting".into() },
            ],
            timetable: Timetable::weekdays(28.0),
            occupancy: Occupancy { students: 1000, educators: 0 },
            monitored_rooms: rooms,
        }),
        meter: Some(meter("school-a-main", 60, days)),
        lighting: None,
    }
}

/// A hall whose lights stay on through bright days.
fn hall_lighting() -> SimScenario {
    let b: BuildingId = id("school-b");
    let mut building = Building::new(b.clone(), "Europe/Rome".parse().expect("known zone"));
    building.main_meters = vec![id("school-b-main")];
    building.zones = vec![Zone {
        label: "hall".into(),
        lux_sensors: vec![id("hall-lux-south"), id("hall-lux-north")],
        lights_meter: id("hall-lights"),
        minimal_power_kw: Some(1.9),
        lights_on_floor_kw: 0.1,
        regulatory_min_lux: 150.0,
    }];
    let dates = DateRange::new(ymd(2019, 3, 4), ymd(2019, 3, 23)).expect("ordered");
    let days = dates
        .days()
        .map(|date| DayTarget { date, kwh: if crate::timeseries::is_weekend(date) { 120.0 } else { 310.0 } })
        .collect();
    SimScenario {
        name: "hall-lighting".into(),
        seed: 8,
        site: Site {
            sensors: vec![
                sensor("school-b-main", Kind::Power, &b, None, None),
                sensor("hall-lights", Kind::Power, &b, Some("hall"), None),
                sensor("hall-lux-south", Kind::Luminosity, &b, Some("hall"), Some("south windows")),
                sensor("hall-lux-north", Kind::Luminosity, &b, Some("hall"), Some("north wall, shaded")),
            ],
            buildings: vec![building],
        },
        profile: None,
        meter: Some(meter("school-b-main", 60, days)),
        lighting: Some(LightingSim {
            dates,
            lux_sensors: vec![
                LuxSensorSim { sensor_id: id("hall-lux-south"), gain: 1.0 },
                LuxSensorSim { sensor_id: id("hall-lux-north"), gain: 0.6 },
            ],
            lux_step_secs: 300,
            threshold_lux: 400.0,
            night_lux: 5.0,
            peak_lux: 900.0,
            dawn: hm(6, 30),
            crosses_up: hm(10, 0),
            crosses_down: hm(17, 0),
            dusk: hm(19, 30),
            lights_meter: id("hall-lights"),
            power_step_secs: 60,
            lights_w: 4900.0,
            lights_on: hm(7, 0),
            lights_off: hm(19, 0),
        }),
    }
}

/// Four months of a school whose weekends draw a third of a weekday.
fn weekend_baseload() -> SimScenario {
    let b: BuildingId = id("school-c");
    let mut building = Building::new(b.clone(), "Europe/Athens".parse().expect("known zone"));
    building.main_meters = vec![id("school-c-main")];
    let start = ymd(2019, 1, 7);
    let days = (0..114u64)
        .map(|i| {
            let date = start + Days::new(i);
            DayTarget { date, kwh: if crate::timeseries::is_weekend(date) { 119.0 } else { 367.0 } }
        })
        .collect();
    SimScenario {
        name: "weekend-baseload".into(),
        seed: 114,
        site: Site { sensors: vec![sensor("school-c-main", Kind::Power, &b, None, None)], buildings: vec![building] },
        profile: None,
        meter: Some(meter("school-c-main", 300, days)),
        lighting: None,
    }
}

fn idle() -> SimScenario {
    let b: BuildingId = id("school-z");
    let mut building = Building::new(b.clone(), Tz::UTC);
    building.main_meters = vec![id("school-z-main")];
    SimScenario {
        name: "idle".into(),
        seed: 0,
        site: Site { sensors: vec![sensor("school-z-main", Kind::Power, &b, None, None)], buildings: vec![building] },
        profile: None,
        meter: Some(meter("school-z-main", 60, week_targets(ymd(2019, 1, 7), [0.0; 7]))),
        lighting: None,
    }
}

pub fn builtin(name: &str) -> Result<SimScenario, SimError> {
    match name {
        "intervention-study" => Ok(intervention_study()),
        "hall-lighting" => Ok(hall_lighting()),
        "weekend-baseload" => Ok(weekend_baseload()),
        "idle" => Ok(idle()),
        other => Err(SimError::UnknownScenario(other.to_owned(), SCENARIOS.join(", "))),
    }
}
