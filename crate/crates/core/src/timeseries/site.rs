use std::collections::BTreeSet;

use chrono::{DateTime, Datelike, Days, LocalResult, NaiveDate, NaiveTime, TimeZone, Utc, Weekday};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use super::{BuildingId, Kind, SensorId, TimeseriesError, Window};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sensor {
    pub sensor_id: SensorId,
    pub kind: Kind,
    pub building_id: BuildingId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub room: Option<String>,
    /// Free text; lux readings depend heavily on which way a sensor faces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation_note: Option<String>,
}

/// Operator-declared day classes for one building.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Calendar {
    #[serde(default)]
    pub holidays: BTreeSet<NaiveDate>,
    #[serde(default)]
    pub anomalous: BTreeSet<NaiveDate>,
    /// Days the building is used by other groups after class hours.
    #[serde(default)]
    pub offhours_use: BTreeSet<NaiveDate>,
}

fn default_floor_kw() -> f64 {
    0.1
}

fn default_regulatory_min_lux() -> f64 {
    150.0
}

/// A lit area with its luminosity sensors and the meter feeding its lights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub label: String,
    pub lux_sensors: Vec<SensorId>,
    pub lights_meter: SensorId,
    /// Lighting that must stay on (safety lighting). Unset means "use the
    /// lowest non-zero lights power observed".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimal_power_kw: Option<f64>,
    /// Lights count as "on" at or above this draw.
    #[serde(default = "default_floor_kw")]
    pub lights_on_floor_kw: f64,
    /// Thresholds below this level are refused.
    #[serde(default = "default_regulatory_min_lux")]
    pub regulatory_min_lux: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub id: BuildingId,
    pub timezone: Tz,
    #[serde(default)]
    pub main_meters: Vec<SensorId>,
    #[serde(default)]
    pub calendar: Calendar,
    #[serde(default)]
    pub zones: Vec<Zone>,
}

impl Building {
    pub fn new(id: BuildingId, timezone: Tz) -> Self {
        Self { id, timezone, main_meters: Vec::new(), calendar: Calendar::default(), zones: Vec::new() }
    }

    pub fn zone(&self, label: &str) -> Option<&Zone> {
        self.zones.iter().find(|z| z.label == label)
    }
}

/// A registration document: buildings plus the sensors installed in them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Site {
    #[serde(default)]
    pub buildings: Vec<Building>,
    #[serde(default)]
    pub sensors: Vec<Sensor>,
}

impl Site {
    /// Cross-checks meters and zones against the sensor list.
    pub fn validate(&self) -> Result<(), TimeseriesError> {
        let find = |id: &SensorId| self.sensors.iter().find(|s| &s.sensor_id == id);
        for s in &self.sensors {
            if !self.buildings.iter().any(|b| b.id == s.building_id) {
                return Err(TimeseriesError::InvalidSite(format!(
                    "sensor {} references undeclared building {}",
                    s.sensor_id, s.building_id
                )));
            }
        }
        for b in &self.buildings {
            for m in &b.main_meters {
                match find(m) {
                    Some(s) if matches!(s.kind, Kind::Power | Kind::EnergyCounter) => {}
                    Some(s) => {
                        return Err(TimeseriesError::InvalidSite(format!(
                            "main meter {m} of {} is a {} sensor",
                            b.id, s.kind
                        )))
                    }
                    None => {
                        return Err(TimeseriesError::InvalidSite(format!("main meter {m} of {} is not declared", b.id)))
                    }
                }
            }
            for z in &b.zones {
                if z.lux_sensors.is_empty() {
                    return Err(TimeseriesError::InvalidSite(format!("zone {} has no lux sensors", z.label)));
                }
                for l in &z.lux_sensors {
                    if find(l).map(|s| s.kind) != Some(Kind::Luminosity) {
                        return Err(TimeseriesError::InvalidSite(format!(
                            "zone {} lists {l}, which is not a declared luminosity sensor",
                            z.label
                        )));
                    }
                }
                if find(&z.lights_meter).map(|s| s.kind) != Some(Kind::Power) {
                    return Err(TimeseriesError::InvalidSite(format!(
                        "zone {} lights meter {} is not a declared power sensor",
                        z.label, z.lights_meter
                    )));
                }
                if !(z.regulatory_min_lux >= 0.0 && z.lights_on_floor_kw >= 0.0) {
                    return Err(TimeseriesError::InvalidSite(format!("zone {} has negative limits", z.label)));
                }
                if let Some(m) = z.minimal_power_kw {
                    if !(m >= 0.0 && m.is_finite()) {
                        return Err(TimeseriesError::InvalidSite(format!(
                            "zone {} minimal power must be a finite non-negative number",
                            z.label
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Inclusive range of calendar dates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, TimeseriesError> {
        if end < start {
            return Err(TimeseriesError::InvalidSite(format!("date range {start}..{end} is reversed")));
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        date >= self.start && date <= self.end
    }

    pub fn days(&self) -> impl Iterator<Item = NaiveDate> {
        let end = self.end;
        self.start.iter_days().take_while(move |d| *d <= end)
    }

    pub fn len(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl std::fmt::Display for DateRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

pub fn is_weekend(date: NaiveDate) -> bool {
    matches!(date.weekday(), Weekday::Sat | Weekday::Sun)
}

pub fn local_date(tz: &Tz, at: DateTime<Utc>) -> NaiveDate {
    at.with_timezone(tz).date_naive()
}

fn local_midnight(tz: &Tz, date: NaiveDate) -> DateTime<Utc> {
    // A few zones skip midnight on DST days; take the first valid instant.
    let mut t = date.and_time(NaiveTime::MIN);
    for _ in 0..48 {
        match tz.from_local_datetime(&t) {
            LocalResult::Single(d) => return d.with_timezone(&Utc),
            LocalResult::Ambiguous(a, _) => return a.with_timezone(&Utc),
            LocalResult::None => t += chrono::Duration::minutes(30),
        }
    }
    Utc.from_utc_datetime(&date.and_time(NaiveTime::MIN))
}

/// The instants bounding a local civil day (23 or 25 h long on DST changes).
pub fn local_day_window(tz: &Tz, date: NaiveDate) -> Window {
    let next = date.checked_add_days(Days::new(1)).unwrap_or(date);
    Window::new(local_midnight(tz, date), local_midnight(tz, next))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dst_days_have_local_length() {
        let tz: Tz = "Europe/Stockholm".parse().unwrap();
        let fall = local_day_window(&tz, NaiveDate::from_ymd_opt(2018, 10, 28).unwrap());
        assert_eq!(fall.seconds(), 25 * 3600);
        let spring = local_day_window(&tz, NaiveDate::from_ymd_opt(2019, 3, 31).unwrap());
        assert_eq!(spring.seconds(), 23 * 3600);
        let plain = local_day_window(&tz, NaiveDate::from_ymd_opt(2018, 11, 5).unwrap());
        assert_eq!(plain.seconds(), 86_400);
        assert_eq!(plain.start.to_rfc3339(), "2018-11-04T23:00:00+00:00");
    }

    #[test]
    fn weekend_follows_local_calendar() {
        assert!(is_weekend(NaiveDate::from_ymd_opt(2018, 11, 3).unwrap()));
        assert!(!is_weekend(NaiveDate::from_ymd_opt(2018, 11, 5).unwrap()));
        let tz: Tz = "Europe/Athens".parse().unwrap();
        // 22:30 UTC Friday is already Saturday in Athens.
        let at = Utc.with_ymd_and_hms(2019, 1, 11, 22, 30, 0).unwrap();
        assert!(is_weekend(local_date(&tz, at)));
    }

    #[test]
    fn site_validation_catches_dangling_meters() {
        let b = BuildingId::new("b").unwrap();
        let mut building = Building::new(b.clone(), Tz::UTC);
        building.main_meters.push(SensorId::new("m").unwrap());
        let mut site = Site { buildings: vec![building], sensors: vec![] };
        assert!(site.validate().is_err());
        site.sensors.push(Sensor {
            sensor_id: SensorId::new("m").unwrap(),
            kind: Kind::Luminosity,
            building_id: b.clone(),
            room: None,
            orientation_note: None,
        });
        assert!(site.validate().is_err());
        site.sensors[0].kind = Kind::Power;
        site.validate().unwrap();
    }
}
