//! Flat `key=value` text files used for curves, economy profiles and synthetic profiles.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are trimmed and must be unique.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    source_name: String,
    entries: BTreeMap<String, (String, u64)>,
}

impl KeyValues {
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx as u64 + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::parse(source_name, line_no, format!("expected key=value, got {line:?}")));
            };
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(Error::parse(source_name, line_no, "empty key"));
            }
            if entries
                .insert(key.clone(), (value.trim().to_string(), line_no))
                .is_some()
            {
                return Err(Error::parse(source_name, line_no, format!("duplicate key {key:?}")));
            }
        }
        Ok(KeyValues {
            source_name: source_name.to_string(),
            entries,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn source_name(&self) -> &str {
        &self.source_name
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| {
            Error::parse(&self.source_name, 0, format!("missing key {key:?}"))
        })
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        let Some((value, line)) = self.entries.get(key) else {
            return Ok(None);
        };
        let parsed: f64 = value.parse().map_err(|_| {
            Error::parse(&self.source_name, *line, format!("{key}: {value:?} is not a number"))
        })?;
        if !parsed.is_finite() {
            return Err(Error::parse(&self.source_name, *line, format!("{key}: value must be finite")));
        }
        Ok(Some(parsed))
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.f64(key)?.ok_or_else(|| {
            Error::parse(&self.source_name, 0, format!("missing key {key:?}"))
        })
    }

    pub fn line_of(&self, key: &str) -> u64 {
        self.entries.get(key).map(|(_, l)| *l).unwrap_or(0)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}
