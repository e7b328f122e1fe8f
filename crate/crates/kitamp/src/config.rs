//! Plain-text `key = value` configuration files.
//!
//! One key per line, `#` starts a comment (full-line or trailing), values
//! are free text up to the comment marker. Keys are consumed by typed
//! getters; [`KeyValueConfig::finish`] rejects anything left over so typos
//! never silently fall back to defaults.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{file}:{line}: expected `key = value`, got `{text}`")]
    Malformed {
        file: String,
        line: usize,
        text: String,
    },
    #[error("{file}:{line}: duplicate key `{key}` (first set on line {first})")]
    Duplicate {
        file: String,
        line: usize,
        key: String,
        first: usize,
    },
    #[error("{file}:{line}: key `{key}`: {reason}")]
    BadValue {
        file: String,
        line: usize,
        key: String,
        reason: String,
    },
    #[error("missing required key `{key}` in {file}")]
    Missing { file: String, key: String },
    #[error("unknown key{} in {file}: {keys}", if .keys.contains(',') { "s" } else { "" })]
    Unknown { file: String, keys: String },
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

/// A parsed config file with consumption tracking.
#[derive(Debug)]
pub struct KeyValueConfig {
    file: String,
    entries: BTreeMap<String, Entry>,
    consumed: RefCell<BTreeSet<String>>,
}

impl KeyValueConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_str_named(&text, &path.display().to_string())
    }

    pub fn from_str_named(text: &str, file: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Malformed {
                    file: file.to_string(),
                    line: line_no,
                    text: line.to_string(),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(ConfigError::Malformed {
                    file: file.to_string(),
                    line: line_no,
                    text: line.to_string(),
                });
            }
            if let Some(prev) = entries.get(&key) {
                return Err(ConfigError::Duplicate {
                    file: file.to_string(),
                    line: line_no,
                    key,
                    first: prev.line,
                });
            }
            entries.insert(
                key,
                Entry {
                    value,
                    line: line_no,
                },
            );
        }
        Ok(Self {
            file: file.to_string(),
            entries,
            consumed: RefCell::new(BTreeSet::new()),
        })
    }

    /// Empty config (all getters fall back to defaults).
    pub fn empty() -> Self {
        Self {
            file: "<builtin>".to_string(),
            entries: BTreeMap::new(),
            consumed: RefCell::new(BTreeSet::new()),
        }
    }

    /// Overlay `key=value` pairs on top of the parsed file (flags win).
    pub fn override_pair(&mut self, key: &str, value: &str) {
        self.entries.insert(
            key.trim().to_string(),
            Entry {
                value: value.trim().to_string(),
                line: 0,
            },
        );
    }

    fn take(&self, key: &str) -> Option<&Entry> {
        let entry = self.entries.get(key)?;
        self.consumed.borrow_mut().insert(key.to_string());
        Some(entry)
    }

    pub fn get_str(&self, key: &str) -> Option<String> {
        self.take(key).map(|e| e.value.clone())
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<f64>()
                .map(Some)
                .map_err(|_| self.bad_value(key, e, "not a number")),
        }
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<usize>()
                .map(Some)
                .map_err(|_| self.bad_value(key, e, "not a non-negative integer")),
        }
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<u64>()
                .map(Some)
                .map_err(|_| self.bad_value(key, e, "not a non-negative integer")),
        }
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => match e.value.as_str() {
                "true" | "yes" | "1" | "on" => Ok(Some(true)),
                "false" | "no" | "0" | "off" => Ok(Some(false)),
                _ => Err(self.bad_value(key, e, "expected true/false")),
            },
        }
    }

    pub fn require_f64(&self, key: &str) -> Result<f64, ConfigError> {
        self.get_f64(key)?.ok_or_else(|| self.missing(key))
    }

    pub fn require_str(&self, key: &str) -> Result<String, ConfigError> {
        self.get_str(key).ok_or_else(|| self.missing(key))
    }

    /// Comma-separated `freq:value` pairs, e.g. `2e9:0.25,8e9:1.5`.
    pub fn get_freq_table(&self, key: &str) -> Result<Option<Vec<(f64, f64)>>, ConfigError> {
        let Some(e) = self.take(key) else {
            return Ok(None);
        };
        let mut out = Vec::new();
        for item in e.value.split(',') {
            let Some((f, v)) = item.split_once(':') else {
                return Err(self.bad_value(key, e, "expected comma-separated freq:value pairs"));
            };
            let f: f64 = f
                .trim()
                .parse()
                .map_err(|_| self.bad_value(key, e, "bad frequency in table"))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| self.bad_value(key, e, "bad value in table"))?;
            out.push((f, v));
        }
        Ok(Some(out))
    }

    /// Keys sharing a `prefix.` namespace (e.g. per-qubit shot paths).
    pub fn keys_with_prefix(&self, prefix: &str) -> Vec<String> {
        self.entries
            .keys()
            .filter(|k| k.starts_with(prefix))
            .cloned()
            .collect()
    }

    /// Error out if any key was never consumed.
    pub fn finish(&self) -> Result<(), ConfigError> {
        let consumed = self.consumed.borrow();
        let mut unknown = String::new();
        for (key, entry) in &self.entries {
            if !consumed.contains(key) {
                if !unknown.is_empty() {
                    unknown.push_str(", ");
                }
                let _ = write!(unknown, "`{}` (line {})", key, entry.line);
            }
        }
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Unknown {
                file: self.file.clone(),
                keys: unknown,
            })
        }
    }

    fn missing(&self, key: &str) -> ConfigError {
        ConfigError::Missing {
            file: self.file.clone(),
            key: key.to_string(),
        }
    }

    fn bad_value(&self, key: &str, entry: &Entry, reason: &str) -> ConfigError {
        ConfigError::BadValue {
            file: self.file.clone(),
            line: entry.line,
            key: key.to_string(),
            reason: reason.to_string(),
        }
    }
}
