//! Flat `key = value` configuration files.
//!
//! One entry per line, `#` starts a comment, keys are unique. Values are parsed
//! on demand so that each consumer reports the exact key it failed on.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CnsError, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CnsError::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(CnsError::Config(format!("line {}: empty key", lineno + 1)));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(CnsError::Config(format!("duplicate key `{k}`")));
            }
        }
        Ok(ConfigMap { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CnsError::io(path, e))?;
        ConfigMap::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        let v = self
            .raw(key)
            .ok_or_else(|| CnsError::MissingKey(key.to_string()))?;
        v.parse()
            .map_err(|_| CnsError::Config(format!("key `{key}`: cannot parse `{v}`")))
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| CnsError::Config(format!("key `{key}`: cannot parse `{v}`"))),
        }
    }

    /// Comma-separated list of numbers.
    pub fn list(&self, key: &str) -> Result<Vec<f64>> {
        let v = self
            .raw(key)
            .ok_or_else(|| CnsError::MissingKey(key.to_string()))?;
        parse_list(v).map_err(|_| CnsError::Config(format!("key `{key}`: cannot parse `{v}`")))
    }

    pub fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        if self.contains(key) {
            self.list(key)
        } else {
            Ok(default.to_vec())
        }
    }

    /// Canonical text: sorted `key = value` lines.
    pub fn canonical(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }
}

/// Parse `a, b, c`; entries of the form `2^-k` are accepted.
pub fn parse_list(v: &str) -> std::result::Result<Vec<f64>, ()> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| parse_number(s.trim())).collect()
}

/// A float, or `b^e` with float base and integer exponent.
pub fn parse_number(s: &str) -> std::result::Result<f64, ()> {
    if let Some((b, e)) = s.split_once('^') {
        let b: f64 = b.trim().parse().map_err(|_| ())?;
        let e: i32 = e.trim().parse().map_err(|_| ())?;
        return Ok(b.powi(e));
    }
    s.parse().map_err(|_| ())
}
