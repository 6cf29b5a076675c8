use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono_tz::Tz;
use serde::Deserialize;

use super::ServiceError;
use crate::timeseries::BuildingId;

/// `ecoschool.toml`. Every key is optional; command-line flags and
/// environment variables take precedence.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub store_path: Option<PathBuf>,
    pub token: Option<String>,
    pub port: Option<u16>,
    pub bind: Option<String>,
    pub dashboard_dir: Option<PathBuf>,
    #[serde(default)]
    pub timezones: BTreeMap<BuildingId, Tz>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ServiceError> {
        toml::from_str(text).map_err(|e| ServiceError::validation("InvalidConfig", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path).map_err(|e| ServiceError::io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}
