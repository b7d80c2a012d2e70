//! Setting resolution: command-line flag, then the JSON config file, then the
//! built-in default.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::CliError;

pub const SEED_ENV: &str = "DDP_SEED";
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Default)]
pub struct ConfigFile {
    values: Map<String, Value>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        match serde_json::from_str::<Value>(&text) {
            Ok(Value::Object(values)) => {
                if let Some((k, _)) = values.iter().find(|(_, v)| v.is_object() || v.is_array()) {
                    return Err(CliError::usage(format!("config key {k:?} is not a flat value")));
                }
                Ok(Self { values })
            }
            Ok(_) => Err(CliError::usage("config file must be a JSON object")),
            Err(e) => Err(CliError::usage(format!("config {}: {e}", path.display()))),
        }
    }

    fn get<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| CliError::usage(format!("config key {key:?}: {e}"))),
        }
    }

    /// Flag value if given, else the config entry under `key`, else `default`.
    pub fn resolve<T: DeserializeOwned>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError> {
        Ok(match flag {
            Some(v) => v,
            None => self.get(key)?.unwrap_or(default),
        })
    }

    pub fn resolve_optional<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    pub fn resolve_required<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<T, CliError> {
        match flag {
            Some(v) => Ok(v),
            None => self.get(key)?.ok_or_else(|| CliError::usage(format!("missing required setting --{key}"))),
        }
    }

    /// Seed from the flag, the config file, `DDP_SEED`, or the default, in that order.
    pub fn resolve_seed(&self, flag: Option<u64>) -> Result<u64, CliError> {
        if let Some(s) = flag {
            return Ok(s);
        }
        if let Some(s) = self.get::<u64>("seed")? {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
            Err(_) => Ok(DEFAULT_SEED),
        }
    }
}

/// Parses `"lo,hi"`.
pub fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected LO,HI, got {s:?}"))?;
    let lo = a.trim().parse::<f64>().map_err(|e| format!("{a:?}: {e}"))?;
    let hi = b.trim().parse::<f64>().map_err(|e| format!("{b:?}: {e}"))?;
    Ok((lo, hi))
}

/// Parses a comma-separated list of numbers; empty input is an error.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let grid = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<f64>().map_err(|e| format!("grid value {p:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if grid.is_empty() {
        return Err("grid is empty".into());
    }
    Ok(grid)
}
