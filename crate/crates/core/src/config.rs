//! Flat `key = value` configuration text.
//!
//! One assignment per line; `#` starts a comment; blank lines ignored.
//! Order is preserved and duplicate keys are rejected so files stay
//! unambiguous when merged beneath command-line flags.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KvEntry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, Default)]
pub struct KvFile {
    entries: Vec<KvEntry>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<KvFile> {
        let mut entries: Vec<KvEntry> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let stripped = stripped.trim();
            if stripped.is_empty() {
                continue;
            }
            let (key, value) = stripped.split_once('=').ok_or_else(|| Error::Parse {
                line,
                message: format!("expected 'key = value', got '{stripped}'"),
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(Error::Parse {
                    line,
                    message: "empty key".into(),
                });
            }
            if entries.iter().any(|e| e.key == key) {
                return Err(Error::Parse {
                    line,
                    message: format!("duplicate key '{key}'"),
                });
            }
            entries.push(KvEntry { key, value, line });
        }
        Ok(KvFile { entries })
    }

    pub fn entries(&self) -> &[KvEntry] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| e.key == key)
            .map(|e| e.value.as_str())
    }

    /// Inserts or overwrites a key (used when flags win over file values).
    pub fn set(&mut self, key: &str, value: &str) {
        if let Some(e) = self.entries.iter_mut().find(|e| e.key == key) {
            e.value = value.to_string();
        } else {
            self.entries.push(KvEntry {
                key: key.to_string(),
                value: value.to_string(),
                line: 0,
            });
        }
    }

    pub fn f64_value(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| Error::validation(format!("key '{key}': malformed number '{v}'"))),
        }
    }
}
