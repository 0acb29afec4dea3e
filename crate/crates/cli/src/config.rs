//! JSON configuration files with command-line overrides.
//!
//! Every command reads an optional JSON object whose keys are the long flag
//! names (with `_` for `-`). Flags given on the command line replace the
//! matching keys before the merged object is deserialized.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

pub fn load_object(path: &Path) -> CliResult<Map<String, Value>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    match serde_json::from_str::<Value>(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(CliError::Validation(format!("{}: config must be a JSON object", path.display()))),
        Err(e) => Err(CliError::Validation(format!("{}: {e}", path.display()))),
    }
}

/// Deserializes `T` from the config file overlaid with `flags`. Flag fields
/// serializing to `null` are treated as absent.
pub fn resolve<T, F>(config: Option<&Path>, flags: &F) -> CliResult<T>
where
    T: DeserializeOwned,
    F: Serialize,
{
    let mut merged = match config {
        Some(path) => load_object(path)?,
        None => Map::new(),
    };
    if let Value::Object(overrides) = serde_json::to_value(flags)? {
        for (key, value) in overrides {
            if !value.is_null() {
                merged.insert(key, value);
            }
        }
    }
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| CliError::Validation(format!("invalid configuration: {e}")))
}
