use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::MethodologyError;
use crate::timeseries::{BuildingId, Registry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsumptionCategory {
    Lighting,
    Hvac,
    Appliances,
    TeachingEquipment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsumptionPoint {
    pub category: ConsumptionCategory,
    pub label: String,
}

/// Occupied (lecture) hours per weekday, Monday first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timetable {
    pub hours: [f64; 7],
}

impl Timetable {
    pub fn weekdays(hours_per_day: f64) -> Self {
        let mut hours = [0.0; 7];
        hours[..5].fill(hours_per_day);
        Self { hours }
    }

    pub fn weekly_hours(&self) -> f64 {
        self.hours.iter().sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Occupancy {
    pub students: u32,
    pub educators: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingProfile {
    pub building_id: BuildingId,
    pub consumption_points: Vec<ConsumptionPoint>,
    pub timetable: Timetable,
    pub occupancy: Occupancy,
    #[serde(default)]
    pub monitored_rooms: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileWarning {
    /// The timetable has no occupied hours at all.
    VacantBuilding,
    NoConsumptionPoints,
}

impl BuildingProfile {
    pub fn validate(&self) -> Result<Vec<ProfileWarning>, MethodologyError> {
        if let Some(h) = self.timetable.hours.iter().find(|h| !(h.is_finite() && **h >= 0.0)) {
            return Err(MethodologyError::InvalidProfile(format!(
                "timetable hours must be finite and non-negative, got {h}"
            )));
        }
        let weekly = self.timetable.weekly_hours();
        if weekly > 168.0 {
            return Err(MethodologyError::InvalidProfile(format!(
                "timetable totals {weekly} h per week; a week has 168"
            )));
        }
        let mut warnings = Vec::new();
        if weekly == 0.0 {
            warnings.push(ProfileWarning::VacantBuilding);
        }
        if self.consumption_points.is_empty() {
            warnings.push(ProfileWarning::NoConsumptionPoints);
        }
        Ok(warnings)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileId {
    pub building_id: BuildingId,
    pub version: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredProfile {
    pub id: ProfileId,
    pub registered_at: DateTime<Utc>,
    pub profile: BuildingProfile,
    pub warnings: Vec<ProfileWarning>,
}

/// Versioned profiles per building. Registering never discards history.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfileBook {
    versions: BTreeMap<BuildingId, Vec<StoredProfile>>,
}

impl ProfileBook {
    pub fn register(
        &mut self,
        profile: BuildingProfile,
        registry: &Registry,
        now: DateTime<Utc>,
    ) -> Result<StoredProfile, MethodologyError> {
        if !registry.buildings.contains_key(&profile.building_id) {
            return Err(MethodologyError::UnknownBuilding(profile.building_id.clone()));
        }
        let warnings = profile.validate()?;
        let history = self.versions.entry(profile.building_id.clone()).or_default();
        let stored = StoredProfile {
            id: ProfileId { building_id: profile.building_id.clone(), version: history.len() as u32 + 1 },
            registered_at: now,
            profile,
            warnings,
        };
        history.push(stored.clone());
        Ok(stored)
    }

    pub fn current(&self, building: &BuildingId) -> Option<&StoredProfile> {
        self.versions.get(building).and_then(|v| v.last())
    }

    pub fn history(&self, building: &BuildingId) -> &[StoredProfile] {
        self.versions.get(building).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// The current profile, required to list at least one consumption point.
    pub fn require_points(&self, building: &BuildingId) -> Result<&StoredProfile, MethodologyError> {
        self.current(building)
            .filter(|p| !p.profile.consumption_points.is_empty())
            .ok_or_else(|| MethodologyError::ProfileMissing(building.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::Building;
    use chrono_tz::Tz;

    fn registry() -> Registry {
        let mut r = Registry::default();
        let id = BuildingId::new("school").unwrap();
        r.buildings.insert(id.clone(), Building::new(id, Tz::UTC));
        r
    }

    fn profile(hours: f64) -> BuildingProfile {
        let mut rooms: Vec<String> = (1..=8).map(|i| format!("classroom-{i}")).collect();
        rooms.push("computer-room".into());
        rooms.push("fabrication-room".into());
        BuildingProfile {
            building_id: BuildingId::new("school").unwrap(),
            consumption_points: vec![
                ConsumptionPoint { category: ConsumptionCategory::TeachingEquipment, label: "computers".into() },
                ConsumptionPoint { category: ConsumptionCategory::Hvac, label: "ventilation".into() },
            ],
            timetable: Timetable::weekdays(hours / 5.0),
            occupancy: Occupancy { students: 1000, educators: 80 },
            monitored_rooms: rooms,
        }
    }

    #[test]
    fn typical_school_profile_is_accepted() {
        let mut book = ProfileBook::default();
        let stored = book.register(profile(140.0), &registry(), Utc::now()).unwrap();
        assert_eq!(stored.id.version, 1);
        assert!(stored.warnings.is_empty());
        assert!((stored.profile.timetable.weekly_hours() - 140.0).abs() < 1e-9);
    }

    #[test]
    fn vacant_timetable_warns() {
        let mut book = ProfileBook::default();
        let stored = book.register(profile(0.0), &registry(), Utc::now()).unwrap();
        assert_eq!(stored.warnings, [ProfileWarning::VacantBuilding]);
    }

    #[test]
    fn more_than_a_week_of_hours_is_rejected() {
        let mut book = ProfileBook::default();
        let err = book.register(profile(170.0), &registry(), Utc::now()).unwrap_err();
        assert!(matches!(err, MethodologyError::InvalidProfile(_)));
    }

    #[test]
    fn versions_are_retained() {
        let mut book = ProfileBook::default();
        let reg = registry();
        book.register(profile(140.0), &reg, Utc::now()).unwrap();
        let second = book.register(profile(120.0), &reg, Utc::now()).unwrap();
        assert_eq!(second.id.version, 2);
        let id = BuildingId::new("school").unwrap();
        assert_eq!(book.history(&id).len(), 2);
        assert_eq!(book.current(&id).unwrap().id.version, 2);
    }

    #[test]
    fn unknown_building() {
        let mut book = ProfileBook::default();
        let mut p = profile(140.0);
        p.building_id = BuildingId::new("elsewhere").unwrap();
        assert!(matches!(book.register(p, &registry(), Utc::now()), Err(MethodologyError::UnknownBuilding(_))));
    }
}
