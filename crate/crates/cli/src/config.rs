//! Flat `key = value` scenario files.
//!
//! Blank lines and anything after `#` are ignored. Every key present must be
//! consumed by the command reading the file; leftovers are reported by
//! [`Config::finish`].

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::CliError;

#[derive(Debug, Default, Clone)]
pub struct Config {
    entries: BTreeMap<String, (usize, String)>,
    used: BTreeSet<String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Config(format!("line {}: expected `key = value`", i + 1)));
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(CliError::Config(format!("line {}: empty key", i + 1)));
            }
            if entries.insert(k.to_string(), (i + 1, v.to_string())).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key `{k}`", i + 1)));
            }
        }
        Ok(Self {
            entries,
            used: BTreeSet::new(),
        })
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                Self::parse(&text)
            }
        }
    }

    fn raw(&mut self, key: &str) -> Option<(usize, String)> {
        let v = self.entries.get(key).cloned();
        if v.is_some() {
            self.used.insert(key.to_string());
        }
        v
    }

    pub fn string(&mut self, key: &str, default: &str) -> String {
        self.raw(key).map(|(_, v)| v).unwrap_or_else(|| default.to_string())
    }

    pub fn f64(&mut self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some((line, v)) => parse_f64(&v).ok_or_else(|| bad(line, key, &v)),
        }
    }

    pub fn usize(&mut self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some((line, v)) => v.parse().map_err(|_| bad(line, key, &v)),
        }
    }

    pub fn i32(&mut self, key: &str, default: i32) -> Result<i32, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some((line, v)) => v.parse().map_err(|_| bad(line, key, &v)),
        }
    }

    pub fn opt_usize(&mut self, key: &str) -> Result<Option<usize>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| bad(line, key, &v)),
        }
    }

    /// Comma-separated reals; an empty value gives an empty list.
    pub fn list(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some((line, v)) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| parse_f64(s).ok_or_else(|| bad(line, key, s)))
                .collect(),
        }
    }

    pub fn finish(&self) -> Result<(), CliError> {
        let unknown: Vec<String> = self
            .entries
            .iter()
            .filter(|(k, _)| !self.used.contains(*k))
            .map(|(k, (line, _))| format!("`{k}` (line {line})"))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(format!("unknown keys: {}", unknown.join(", "))))
        }
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

fn bad(line: usize, key: &str, v: &str) -> CliError {
    CliError::Config(format!("line {line}: bad value `{v}` for `{key}`"))
}
