//! `key = value` configuration with `[section]` headers.
//!
//! Values come from the config file first, then from `--set section.key=value`
//! and the dedicated command-line flags. Every key must be consumed by the
//! subcommand that runs; leftovers are reported as config errors so typos do
//! not pass silently.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

#[derive(Debug, Default)]
pub struct RunConfig {
    values: BTreeMap<(String, String), String>,
    used: RefCell<BTreeSet<(String, String)>>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let ini = ini::Ini::load_from_str(text).map_err(|e| CliError::Config(format!("config file: {e}")))?;
        let mut cfg = RunConfig::default();
        for (section, props) in ini.iter() {
            let section = section.unwrap_or("run");
            for (k, v) in props.iter() {
                cfg.set(section, k, v);
            }
        }
        Ok(cfg)
    }

    pub fn set(&mut self, section: &str, key: &str, value: &str) {
        self.values
            .insert((section.trim().to_string(), key.trim().to_string()), value.trim().to_string());
    }

    /// Applies a `section.key=value` override.
    pub fn set_assignment(&mut self, assignment: &str) -> CliResult<()> {
        let (lhs, value) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("`--set {assignment}`: expected section.key=value")))?;
        let (section, key) = lhs
            .split_once('.')
            .ok_or_else(|| CliError::Config(format!("`--set {assignment}`: expected section.key=value")))?;
        self.set(section, key, value);
        Ok(())
    }

    pub fn raw(&self, section: &str, key: &str) -> Option<&str> {
        let k = (section.to_string(), key.to_string());
        let v = self.values.get(&k)?;
        self.used.borrow_mut().insert(k);
        Some(v.as_str())
    }

    pub fn get<T: FromStr>(&self, section: &str, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(section, key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| CliError::Config(format!("{section}.{key} = `{v}`: {e}"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, section: &str, key: &str, default: T) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(section, key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, section: &str, key: &str) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(section, key)?
            .ok_or_else(|| CliError::Config(format!("missing required key `{key}` in section [{section}]")))
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&self, section: &str, key: &str) -> CliResult<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        let Some(v) = self.raw(section, key) else {
            return Ok(None);
        };
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|e| CliError::Config(format!("{section}.{key}: `{s}`: {e}")))
            })
            .collect::<CliResult<Vec<T>>>()
            .map(Some)
    }

    /// Errors on any key no subcommand read.
    pub fn check_all_used(&self) -> CliResult<()> {
        let used = self.used.borrow();
        let unknown: Vec<String> = self
            .values
            .keys()
            .filter(|k| !used.contains(*k))
            .map(|(s, k)| format!("{s}.{k}"))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(format!("unknown or unused keys: {}", unknown.join(", "))))
        }
    }

    /// Resolved values that were read, as `config.section.key = value` lines.
    pub fn echo(&self) -> Vec<(String, String)> {
        let used = self.used.borrow();
        self.values
            .iter()
            .filter(|(k, _)| used.contains(*k))
            .map(|((s, k), v)| (format!("config.{s}.{k}"), v.clone()))
            .collect()
    }
}

/// A `start:stop:count` range, inclusive of both ends.
pub fn parse_range(text: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || CliError::Config(format!("range `{text}`: expected start:stop:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if count == 0 || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let step = (stop - start) / (count - 1) as f64;
    Ok((0..count)
        .map(|i| if i + 1 == count { stop } else { start + step * i as f64 })
        .collect())
}
