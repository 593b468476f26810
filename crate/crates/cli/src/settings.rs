//! Flag values merged over an optional `key=value` config file.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Keys accepted in config files. Dashes and underscores are interchangeable.
pub const KEYS: &[&str] = &[
    "M", "N", "d", "eta", "r", "cutoff", "encoding", "cluster_tol", "tol", "p_tol", "pg_step",
    "pg_max_iter", "pg_tol", "param", "from", "to", "steps", "out", "samples", "seed", "sigma",
    "map", "emit_choi",
];

fn normalize(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('-', "_")
}

#[derive(Clone, Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Reads a flat `key=value` file; `#` starts a comment.
    pub fn from_config(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut s = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Invalid(format!("config line {}: expected key=value", i + 1)))?;
            s.set(k, v.trim())?;
        }
        Ok(s)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let k = normalize(key);
        if !KEYS.contains(&k.as_str()) {
            return Err(CliError::Invalid(format!("unknown setting '{key}'")));
        }
        self.values.insert(k, value.to_string());
        Ok(())
    }

    /// Flags win over earlier values.
    pub fn overlay(&mut self, flags: &[(&str, &Option<String>)]) -> Result<(), CliError> {
        for (k, v) in flags {
            if let Some(v) = v {
                self.set(k, v)?;
            }
        }
        Ok(())
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.values.get(&normalize(key)).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        match self.get_str(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| CliError::Invalid(format!("invalid value '{v}' for {key}"))),
        }
    }

    pub fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.get_str(key)
            .map(|v| v.parse().map_err(|_| CliError::Invalid(format!("invalid value '{v}' for {key}"))))
            .transpose()
    }
}
