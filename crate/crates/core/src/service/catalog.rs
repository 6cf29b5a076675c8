//! Operator decisions that analyses depend on, kept next to the store as
//! `catalog.json`: building profiles, the active baseline definition, the
//! pinned comparison week and the last evaluated intervention.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ServiceError;
use crate::methodology::{AnomalyDecl, DaySet, ProfileBook, WeekId};
use crate::timeseries::BuildingId;

const CATALOG_FILE: &str = "catalog.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRequest {
    pub from: chrono::NaiveDate,
    pub to: chrono::NaiveDate,
    /// `None` derives declarations from the building calendar.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anomalies: Option<Vec<AnomalyDecl>>,
    #[serde(default)]
    pub day_set: DaySet,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildingState {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineRequest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison_week: Option<WeekId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saving_week: Option<WeekId>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CatalogData {
    #[serde(default)]
    pub profiles: ProfileBook,
    #[serde(default)]
    pub buildings: BTreeMap<BuildingId, BuildingState>,
}

#[derive(Debug)]
pub struct Catalog {
    path: Option<PathBuf>,
    pub data: CatalogData,
}

impl Catalog {
    pub fn in_memory() -> Self {
        Self { path: None, data: CatalogData::default() }
    }

    pub fn open(root: &Path) -> Result<Self, ServiceError> {
        let path = root.join(CATALOG_FILE);
        let data = match fs::read_to_string(&path) {
            Ok(text) => {
                serde_json::from_str(&text).map_err(|e| ServiceError::io(format!("{}: {e}", path.display())))?
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => CatalogData::default(),
            Err(e) => return Err(e.into()),
        };
        Ok(Self { path: Some(path), data })
    }

    pub fn state(&self, building: &BuildingId) -> BuildingState {
        self.data.buildings.get(building).cloned().unwrap_or_default()
    }

    pub fn state_mut(&mut self, building: &BuildingId) -> &mut BuildingState {
        self.data.buildings.entry(building.clone()).or_default()
    }

    /// Writes through a temporary file so a crash never leaves half a catalog.
    pub fn save(&self) -> Result<(), ServiceError> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(&self.data).expect("catalog serializes"))?;
        fs::rename(&tmp, path)?;
        Ok(())
    }
}
