//! Flat `key = value` settings files.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

use crate::InputError;

/// Settings from a config file. Keys are flag names without the leading
/// dashes; `_` and `-` are interchangeable.
#[derive(Debug, Default)]
pub struct FileSettings {
    values: BTreeMap<String, String>,
}

impl FileSettings {
    pub fn load(path: &Path, allowed: &[&str]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| InputError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, allowed).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str, allowed: &[&str]) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!(InputError(format!(
                    "line {}: expected `key = value`",
                    i + 1
                )));
            };
            let key = key.trim().replace('_', "-");
            if !allowed.contains(&key.as_str()) {
                bail!(InputError(format!("line {}: unknown key `{key}`", i + 1)));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    /// The command-line value if present, else the file value.
    pub fn pick<T>(&self, cli: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        if cli.is_some() {
            return Ok(cli);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| InputError(format!("config key `{key}`: {e}")).into()),
        }
    }

    /// Boolean flags: set on the command line or `true` in the file.
    pub fn flag(&self, cli: bool, key: &str) -> Result<bool> {
        Ok(cli || self.pick(None::<bool>, key)?.unwrap_or(false))
    }
}
