//! Flat `key = value` configuration files plus override resolution.
//!
//! Precedence, lowest to highest: built-in defaults, config file, the
//! `NHNS_SEED` environment variable (seed only), a `--preset` bundle, and
//! explicit command-line flags.

use std::collections::BTreeMap;
use std::path::Path;

/// Every accepted configuration key; unknown keys are rejected.
pub const KNOWN_KEYS: &[&str] = &[
    "dim",
    "n",
    "count",
    "seed",
    "modes",
    "m1",
    "m2",
    "decay_2d",
    "tau",
    "eps_interface",
    "t_end",
    "record_every",
    "strategy",
    "checkpoint",
    "tau_etd",
    "krylov_dim",
    "eps_tol",
    "max_outer",
    "gmres_tol",
    "gmres_restart",
    "gmres_max_iter",
    "epochs",
    "lr0",
    "lr_halving_period",
    "weight_decay",
    "batch_size",
    "n_train",
    "n_test",
    "kernel",
    "channels",
    "nmax",
    "steps",
    "reference_refine",
    "taus",
    "strategies",
    "seeds",
    "alpha",
    "beta",
    "epsilon",
    "d",
];

/// Parsed key/value pairs, insertion-order independent.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    pub entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", lineno + 1))?;
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(format!("line {}: unknown key `{key}`", lineno + 1));
            }
            entries.insert(key, value.trim().to_string());
        }
        Ok(ConfigFile { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| format!("config key `{key}`: cannot parse `{raw}`")),
        }
    }
}

/// Seed override from the environment, if present and well-formed.
pub fn env_seed() -> Result<Option<u64>, String> {
    match std::env::var("NHNS_SEED") {
        Err(_) => Ok(None),
        Ok(raw) => raw
            .parse::<u64>()
            .map(Some)
            .map_err(|_| format!("NHNS_SEED must be an unsigned integer, got `{raw}`")),
    }
}

/// Three-way merge helper: flag beats preset beats file beats default.
pub fn pick<T: Clone>(flag: Option<T>, preset: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(preset).or(file).unwrap_or(default)
}
