//! Flat `key = value` config files that preload flag values.
//!
//! Command-line flags always win over config values; config values win over
//! built-in defaults. Keys use the long flag names (without the leading
//! dashes). Unknown keys are rejected so typos fail loudly.

use std::collections::HashMap;
use std::path::Path;

pub struct Config {
    values: HashMap<String, String>,
}

impl Config {
    pub fn empty() -> Self {
        Self {
            values: HashMap::new(),
        }
    }

    pub fn load(path: &Path, allowed_keys: &[&str]) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut values = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!(
                    "{}:{}: expected `key = value`, got `{raw}`",
                    path.display(),
                    lineno + 1
                ));
            };
            let key = key.trim().to_string();
            if !allowed_keys.contains(&key.as_str()) {
                return Err(format!(
                    "{}:{}: unknown key `{key}` (expected one of: {})",
                    path.display(),
                    lineno + 1,
                    allowed_keys.join(", ")
                ));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| format!("config key `{key}`: cannot parse `{raw}`: {e}")),
        }
    }

    /// Flag value if given, else config value, else `default`.
    pub fn resolve<T: std::str::FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
        default: T,
    ) -> Result<T, String>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }

    /// Flag value if given, else config value; errors when neither exists.
    pub fn resolve_required<T: std::str::FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
    ) -> Result<T, String>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(v),
            None => self
                .get(key)?
                .ok_or_else(|| format!("missing required value `--{key}` (flag or config)")),
        }
    }

    pub fn get_string(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}
