//! Layered settings: command-line flag beats config-file key beats default.

use anyhow::{bail, Context, Result};
use rosterlink::io::parse_kv_path;
use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Default, Clone)]
pub struct Settings {
    file: BTreeMap<String, String>,
}

impl Settings {
    pub fn load(config: Option<&Path>) -> Result<Settings> {
        let file = match config {
            Some(path) => parse_kv_path(path).with_context(|| format!("reading config {}", path.display()))?,
            None => BTreeMap::new(),
        };
        Ok(Settings { file })
    }

    /// Resolve one value: `flag` wins, then the config file, then `default`.
    pub fn get<T: FromStr + Clone>(&self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.file.get(key) {
            Some(raw) => match raw.parse::<T>() {
                Ok(v) => Ok(v),
                Err(e) => bail!("config key {key}={raw:?}: {e}"),
            },
            None => Ok(default),
        }
    }

    pub fn get_opt<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            Some(raw) => match raw.parse::<T>() {
                Ok(v) => Ok(Some(v)),
                Err(e) => bail!("config key {key}={raw:?}: {e}"),
            },
            None => Ok(None),
        }
    }

    /// Comma-separated list value.
    pub fn get_list(&self, key: &str, flag: Option<Vec<String>>, default: &[&str]) -> Vec<String> {
        if let Some(v) = flag {
            if !v.is_empty() {
                return v;
            }
        }
        match self.file.get(key) {
            Some(raw) => raw.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
            None => default.iter().map(|s| s.to_string()).collect(),
        }
    }
}
