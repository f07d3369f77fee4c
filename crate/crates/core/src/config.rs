//! Plain-text `key = value` configuration.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! # comment (also after a value)
//! key = value
//! ```
//!
//! Keys are lowercase identifiers (`[a-z][a-z0-9_]*`). Values are trimmed
//! strings; lists are comma separated. Blank lines are ignored and a key may
//! appear only once. [`Config::dump`] writes keys in sorted order, so
//! `parse(dump(c)) == c`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

fn valid_key(k: &str) -> bool {
    let mut chars = k.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

impl Config {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
                line: n + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let (k, v) = (k.trim(), v.trim());
            if !valid_key(k) {
                return Err(Error::Config { line: n + 1, msg: format!("invalid key `{k}`") });
            }
            if v.is_empty() {
                return Err(Error::Config { line: n + 1, msg: format!("empty value for `{k}`") });
            }
            if cfg.entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Config { line: n + 1, msg: format!("duplicate key `{k}`") });
            }
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (k, v) = spec.split_once('=').ok_or_else(|| Error::Config {
            line: 0,
            msg: format!("override `{spec}` is not key=value"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if !valid_key(k) || v.is_empty() {
            return Err(Error::Config { line: 0, msg: format!("invalid override `{spec}`") });
        }
        self.entries.insert(k.to_string(), v.to_string());
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    /// Rejects keys outside `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for k in self.entries.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::Config { line: 0, msg: format!("unknown key `{k}`") });
            }
        }
        Ok(())
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config { line: 0, msg: format!("cannot parse `{key} = {v}`") }),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    /// Real value; accepts `inf`, `pi` multiples like `4pi`.
    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => parse_real(v)
                .map(Some)
                .ok_or_else(|| Error::Config { line: 0, msg: format!("cannot parse `{key} = {v}` as a number") }),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| {
                    parse_real(s.trim())
                        .ok_or_else(|| Error::Config { line: 0, msg: format!("bad list entry `{s}` in `{key}`") })
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }

    pub fn usize_list(&self, key: &str) -> Result<Option<Vec<usize>>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| Error::Config { line: 0, msg: format!("bad list entry `{s}` in `{key}`") })
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }
}

/// Parses reals, `inf`, and multiples of pi such as `pi`, `4pi`, `0.5pi`.
pub fn parse_real(s: &str) -> Option<f64> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
        return Some(f64::INFINITY);
    }
    if let Some(head) = s.strip_suffix("pi") {
        let head = head.trim().trim_end_matches('*');
        let m = if head.is_empty() { 1.0 } else { head.parse::<f64>().ok()? };
        return Some(m * std::f64::consts::PI);
    }
    s.parse().ok()
}
