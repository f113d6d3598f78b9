//! Plain-text `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are
//! case-sensitive; a repeated key overrides the earlier value.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvConfig {
    entries: Vec<(String, String)>,
    origin: Option<PathBuf>,
}

impl KvConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str, origin: Option<&Path>) -> Result<Self> {
        let mut cfg = KvConfig {
            entries: Vec::new(),
            origin: origin.map(Path::to_path_buf),
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    path: cfg.origin_path(),
                    line: i + 1,
                    field: line.to_string(),
                    message: "expected `key = value`".into(),
                });
            };
            cfg.set(key.trim(), value.trim());
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, Some(path))
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    fn origin_path(&self) -> PathBuf {
        self.origin.clone().unwrap_or_else(|| PathBuf::from("<config>"))
    }

    fn bad(&self, key: &str, message: String) -> Error {
        Error::InvalidConfig(format!("{}: `{key}`: {message}", self.origin_path().display()))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.get_str(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| self.bad(key, format!("cannot parse `{v}`: {e}"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        self.get(key)?
            .ok_or_else(|| self.bad(key, "missing required key".into()))
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: fmt::Display,
    {
        let Some(v) = self.get_str(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<T>()
                    .map_err(|e| self.bad(key, format!("cannot parse `{s}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    /// Rejects keys outside `known`, which catches typos in hand-written files.
    pub fn check_keys(&self, known: &[&str]) -> Result<()> {
        for key in self.keys() {
            if !known.contains(&key) {
                return Err(self.bad(key, "unknown key".into()));
            }
        }
        Ok(())
    }
}

impl fmt::Display for KvConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}
