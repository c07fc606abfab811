//! Flat `key = value` configuration files and flag/file/env precedence.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use icageo_core::error::{Error, Result};

const KNOWN_KEYS: &[&str] = &[
    "sources",
    "samples",
    "seed",
    "max_condition",
    "out_dir",
    "input",
    "model",
    "algorithm",
    "score",
    "step",
    "tol",
    "max_iter",
    "center",
    "spec",
];

pub const SEED_ENV: &str = "ICAGEO_SEED";

/// Values read from a config file; keys are normalized to snake_case.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("config line {}: expected key = value", lineno + 1)))?;
            let key = key.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::InvalidConfig(format!("config line {}: unknown key '{key}'", lineno + 1)));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// The flag if given, else the file's value parsed as `T`.
    pub fn resolve<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.get(key) {
            None => Ok(None),
            Some(text) => text
                .parse()
                .map(Some)
                .map_err(|_| Error::InvalidConfig(format!("config value for '{key}' is invalid: '{text}'"))),
        }
    }

    /// Boolean switch: set by the flag, or by `true`/`false` in the file.
    pub fn resolve_flag(&self, flag: bool, key: &str) -> Result<bool> {
        if flag {
            return Ok(true);
        }
        Ok(self.resolve::<bool>(None, key)?.unwrap_or(false))
    }

    /// Flag, then file, then `ICAGEO_SEED`, then 0.
    pub fn resolve_seed(&self, flag: Option<u64>) -> Result<u64> {
        if let Some(seed) = self.resolve(flag, "seed")? {
            return Ok(seed);
        }
        match std::env::var(SEED_ENV) {
            Ok(text) => text
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("{SEED_ENV}='{text}' is not an unsigned integer"))),
            Err(_) => Ok(0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_resolves() {
        let cfg = ConfigFile::parse("# run settings\nseed = 7\nmax-iter=50\n\ncenter = true\n").unwrap();
        assert_eq!(cfg.resolve::<u64>(None, "seed").unwrap(), Some(7));
        assert_eq!(cfg.resolve(Some(3u64), "seed").unwrap(), Some(3));
        assert_eq!(cfg.resolve::<usize>(None, "max_iter").unwrap(), Some(50));
        assert_eq!(cfg.resolve::<f64>(None, "tol").unwrap(), None);
        assert!(cfg.resolve_flag(false, "center").unwrap());
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(ConfigFile::parse("seed 7").is_err());
        assert!(ConfigFile::parse("colour = red").is_err());
        let cfg = ConfigFile::parse("samples = many").unwrap();
        assert!(cfg.resolve::<usize>(None, "samples").is_err());
    }
}
