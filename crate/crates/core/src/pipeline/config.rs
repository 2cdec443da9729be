//! Flat `key = value` settings with precedence command line > file > defaults.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Every key any command understands.
pub const KNOWN_KEYS: &[&str] = &[
    "augment",
    "augment_attempts",
    "batch_size",
    "bucket",
    "checkpoint",
    "checkpoint_every",
    "clip",
    "conformers",
    "corpus",
    "crystal_shift",
    "d_ff",
    "d_model",
    "dropout",
    "heads",
    "input",
    "kind",
    "lattice_mode",
    "layers",
    "lr",
    "lr_end",
    "max_heavy",
    "max_len",
    "max_residues",
    "max_seq_len",
    "min_heavy",
    "min_residues",
    "n",
    "names",
    "orientation",
    "overlap_threshold",
    "precision",
    "prune",
    "prune_max",
    "prune_min",
    "reference",
    "samples",
    "scheme",
    "seed",
    "split_seed",
    "steps",
    "temperature",
    "train",
    "vocab",
];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

impl Settings {
    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Invalid(format!("config line {}: expected key = value", n + 1))
            })?;
            let key = normalize(k);
            check_key(&key)?;
            values.insert(key, v.trim().to_string());
        }
        Ok(Settings { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Settings::parse(&text)
    }

    pub fn from_pairs<K: AsRef<str>, V: Into<String>>(pairs: impl IntoIterator<Item = (K, V)>) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (k, v) in pairs {
            let key = normalize(k.as_ref());
            check_key(&key)?;
            values.insert(key, v.into());
        }
        Ok(Settings { values })
    }

    /// `self` wins over `lower`.
    pub fn over(mut self, lower: &Settings) -> Settings {
        for (k, v) in &lower.values {
            self.values.entry(k.clone()).or_insert_with(|| v.clone());
        }
        self
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(normalize(key), value.into());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Invalid(format!("invalid value {v:?} for {key}"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| Error::Invalid(format!("missing required setting {key}")))
    }

    pub fn flag(&self, key: &str, default: bool) -> Result<bool> {
        match self.values.get(key).map(|v| v.to_ascii_lowercase()) {
            None => Ok(default),
            Some(v) => match v.as_str() {
                "true" | "yes" | "1" | "on" => Ok(true),
                "false" | "no" | "0" | "off" => Ok(false),
                _ => Err(Error::Invalid(format!("invalid boolean {v:?} for {key}"))),
            },
        }
    }
}

fn check_key(key: &str) -> Result<()> {
    if KNOWN_KEYS.contains(&key) {
        Ok(())
    } else {
        Err(Error::Invalid(format!("unknown setting {key:?}")))
    }
}
