//! Solver configs (TOML) and pigment dictionaries (JSON).

use std::path::Path;

use pigment_core::{PigmentDictionary, SolverConfig};

use crate::error::{file_err, IoError, Result};
use crate::fs::atomic_write;

/// Read a solver config; omitted keys keep their defaults, unknown keys are
/// rejected.
pub fn load_config(path: &Path) -> Result<SolverConfig> {
    let text = std::fs::read_to_string(path).map_err(file_err(path))?;
    let config: SolverConfig = toml::from_str(&text).map_err(|e| IoError::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn save_config(config: &SolverConfig, path: &Path) -> Result<()> {
    let text = toml::to_string_pretty(config).map_err(|e| IoError::Config(e.to_string()))?;
    atomic_write(path, text.as_bytes())
}

pub fn load_dictionary(path: &Path) -> Result<PigmentDictionary> {
    let text = std::fs::read_to_string(path).map_err(file_err(path))?;
    Ok(PigmentDictionary::from_json(&text)?)
}
