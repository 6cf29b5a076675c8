use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, SubsecRound, Utc};
use serde::{Deserialize, Serialize};

use super::TimeseriesError;

macro_rules! opaque_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub struct $name(String);

        impl $name {
            pub fn new(raw: impl Into<String>) -> Result<Self, TimeseriesError> {
                let raw = raw.into();
                if is_valid_id(&raw) {
                    Ok(Self(raw))
                } else {
                    Err(TimeseriesError::InvalidId(raw))
                }
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl FromStr for $name {
            type Err = TimeseriesError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::new(s)
            }
        }

        impl TryFrom<String> for $name {
            type Error = TimeseriesError;
            fn try_from(s: String) -> Result<Self, Self::Error> {
                Self::new(s)
            }
        }

        impl From<$name> for String {
            fn from(id: $name) -> String {
                id.0
            }
        }
    };
}

opaque_id!(
    /// Identifier of one sensing point. Restricted to `[A-Za-z0-9._-]` so it
    /// can appear unquoted in the wire format and as a log file name.
    SensorId
);
opaque_id!(BuildingId);

fn is_valid_id(s: &str) -> bool {
    !s.is_empty()
        && s.len() <= 128
        && !s.starts_with('.')
        && s.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'-'))
}

/// What a sensing point measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Power,
    EnergyCounter,
    Luminosity,
    Temperature,
    Humidity,
}

impl Kind {
    pub const ALL: [Kind; 5] = [Kind::Power, Kind::EnergyCounter, Kind::Luminosity, Kind::Temperature, Kind::Humidity];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Power => "power",
            Kind::EnergyCounter => "energy_counter",
            Kind::Luminosity => "luminosity",
            Kind::Temperature => "temperature",
            Kind::Humidity => "humidity",
        }
    }

    /// The only unit a reading of this kind may carry.
    pub fn unit(self) -> Unit {
        match self {
            Kind::Power => Unit::Watt,
            Kind::EnergyCounter => Unit::WattHour,
            Kind::Luminosity => Unit::Lux,
            Kind::Temperature => Unit::Celsius,
            Kind::Humidity => Unit::Percent,
        }
    }

    fn non_negative(self) -> bool {
        matches!(self, Kind::Power | Kind::EnergyCounter | Kind::Luminosity)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = TimeseriesError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Kind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| TimeseriesError::UnknownKind(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "W")]
    Watt,
    #[serde(rename = "Wh")]
    WattHour,
    #[serde(rename = "lux")]
    Lux,
    #[serde(rename = "celsius")]
    Celsius,
    #[serde(rename = "percent")]
    Percent,
}

impl Unit {
    pub fn as_str(self) -> &'static str {
        match self {
            Unit::Watt => "W",
            Unit::WattHour => "Wh",
            Unit::Lux => "lux",
            Unit::Celsius => "celsius",
            Unit::Percent => "percent",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Unit {
    type Err = TimeseriesError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Unit::Watt, Unit::WattHour, Unit::Lux, Unit::Celsius, Unit::Percent]
            .into_iter()
            .find(|u| u.as_str() == s)
            .ok_or_else(|| TimeseriesError::UnknownUnit(s.to_owned()))
    }
}

/// A bare `(instant, value)` sample; what the analytical functions consume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub at: DateTime<Utc>,
    pub value: f64,
}

impl Point {
    pub fn new(at: DateTime<Utc>, value: f64) -> Self {
        Self { at, value }
    }
}

/// One validated sensor observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reading {
    sensor_id: SensorId,
    timestamp: DateTime<Utc>,
    value: f64,
    kind: Kind,
    unit: Unit,
}

impl Reading {
    pub fn new(
        sensor_id: SensorId,
        timestamp: DateTime<Utc>,
        kind: Kind,
        value: f64,
        unit: Unit,
    ) -> Result<Self, TimeseriesError> {
        if !value.is_finite() {
            return Err(TimeseriesError::NonFinite);
        }
        if kind.unit() != unit {
            return Err(TimeseriesError::UnitMismatch { kind, unit });
        }
        if kind.non_negative() && value < 0.0 {
            return Err(TimeseriesError::Negative { kind, value });
        }
        if timestamp.trunc_subsecs(0) != timestamp {
            return Err(TimeseriesError::SubsecondTimestamp);
        }
        // -0.0 would print as "-0" in the wire format
        let value = if value == 0.0 { 0.0 } else { value };
        Ok(Self { sensor_id, timestamp, value, kind, unit })
    }

    /// Shorthand using the kind's canonical unit.
    pub fn of_kind(
        sensor_id: SensorId,
        timestamp: DateTime<Utc>,
        kind: Kind,
        value: f64,
    ) -> Result<Self, TimeseriesError> {
        Self::new(sensor_id, timestamp, kind, value, kind.unit())
    }

    pub fn sensor_id(&self) -> &SensorId {
        &self.sensor_id
    }

    pub fn timestamp(&self) -> DateTime<Utc> {
        self.timestamp
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn point(&self) -> Point {
        Point::new(self.timestamp, self.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2018, 11, 5, 8, 0, 0).unwrap()
    }

    fn id(s: &str) -> SensorId {
        SensorId::new(s).unwrap()
    }

    #[test]
    fn rejects_non_finite_values() {
        for v in [f64::NAN, f64::INFINITY, f64::NEG_INFINITY] {
            assert!(matches!(Reading::of_kind(id("m"), t0(), Kind::Temperature, v), Err(TimeseriesError::NonFinite)));
        }
    }

    #[test]
    fn rejects_negative_power_counter_and_lux() {
        for kind in [Kind::Power, Kind::EnergyCounter, Kind::Luminosity] {
            assert!(Reading::of_kind(id("m"), t0(), kind, -1.0).is_err());
        }
        assert!(Reading::of_kind(id("m"), t0(), Kind::Temperature, -12.5).is_ok());
    }

    #[test]
    fn unit_must_match_kind() {
        let err = Reading::new(id("m"), t0(), Kind::Power, 4900.0, Unit::Lux).unwrap_err();
        assert!(matches!(err, TimeseriesError::UnitMismatch { .. }));
        assert!(Reading::new(id("m"), t0(), Kind::EnergyCounter, 1.0, Unit::WattHour).is_ok());
    }

    #[test]
    fn ids_are_restricted() {
        assert!(SensorId::new("main-meter").is_ok());
        assert!(SensorId::new("hall.lux_2").is_ok());
        for bad in ["", "a,b", "a b", "../x", ".hidden", "é"] {
            assert!(SensorId::new(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for k in Kind::ALL {
            assert_eq!(k.as_str().parse::<Kind>().unwrap(), k);
            assert_eq!(k.unit().as_str().parse::<Unit>().unwrap(), k.unit());
        }
        assert!("voltage".parse::<Kind>().is_err());
    }
}
