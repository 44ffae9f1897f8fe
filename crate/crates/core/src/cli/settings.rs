//! Option resolution: command-line flag, then config file, then default.
//!
//! The config file holds `key = value` lines using the long flag names
//! (`kf = 5`, `noise = 0.3`); blank lines and lines starting with `#` are
//! ignored. A manifest written by a previous run is also accepted, in which
//! case its `resolved` table is used.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use super::CliError;

#[derive(Debug, Default)]
pub struct Settings {
    file: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value", n + 1))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(format!("line {}: empty key", n + 1));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Settings::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))?;
        let file = match serde_json::from_str::<serde_json::Value>(&text) {
            Ok(json) => {
                let table = json
                    .get("resolved")
                    .and_then(|r| r.as_object())
                    .ok_or_else(|| {
                        CliError::Usage(format!(
                            "--config {}: JSON config must be a run manifest with a 'resolved' table",
                            path.display()
                        ))
                    })?;
                table
                    .iter()
                    .map(|(k, v)| {
                        let v = match v {
                            serde_json::Value::String(s) => s.clone(),
                            other => other.to_string(),
                        };
                        (k.clone(), v)
                    })
                    .collect()
            }
            Err(_) => parse_key_values(&text)
                .map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))?,
        };
        Ok(Settings {
            file,
            resolved: BTreeMap::new(),
        })
    }

    /// Resolves one option and records the chosen value.
    pub fn pick<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => v,
            None => match self.file.get(key) {
                Some(raw) => raw
                    .parse()
                    .map_err(|e| CliError::Usage(format!("config key '{key}' = '{raw}': {e}")))?,
                None => default,
            },
        };
        self.resolved.insert(key.to_string(), value.to_string());
        Ok(value)
    }

    /// Like [`Settings::pick`] for options without a default; absent values
    /// are recorded as empty strings.
    pub fn pick_optional<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value =
            match flag {
                Some(v) => Some(v),
                None => match self.file.get(key).filter(|raw| !raw.is_empty()) {
                    Some(raw) => Some(raw.parse().map_err(|e| {
                        CliError::Usage(format!("config key '{key}' = '{raw}': {e}"))
                    })?),
                    None => None,
                },
            };
        self.resolved.insert(
            key.to_string(),
            value.as_ref().map(|v| v.to_string()).unwrap_or_default(),
        );
        Ok(value)
    }

    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.resolved
    }
}
