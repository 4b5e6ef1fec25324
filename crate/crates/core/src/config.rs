//! Flat `key = value` configuration files.
//!
//! One entry per line, `#` starts a comment, lists are comma separated.
//! Keys are case-sensitive and may appear once.

use std::cell::RefCell;
use std::collections::BTreeSet;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    key: String,
    value: String,
}

/// Parsed config with bookkeeping of which keys were read, so leftovers can
/// be reported as unknown.
#[derive(Debug)]
pub struct KvFile {
    entries: Vec<Entry>,
    used: RefCell<BTreeSet<String>>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<Entry> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            };
            let content = content.trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::parse(line, format!("expected 'key = value', got '{content}'")));
            };
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::parse(line, "empty key"));
            }
            if let Some(prev) = entries.iter().find(|e| e.key == key) {
                return Err(Error::parse(
                    line,
                    format!("duplicate key '{key}' (first set on line {})", prev.line),
                ));
            }
            entries.push(Entry {
                line,
                key: key.to_string(),
                value: value.trim().to_string(),
            });
        }
        Ok(Self {
            entries,
            used: RefCell::new(BTreeSet::new()),
        })
    }

    /// Value and line of `key`, marking it as consumed.
    pub fn get(&self, key: &str) -> Option<(usize, &str)> {
        let e = self.entries.iter().find(|e| e.key == key)?;
        self.used.borrow_mut().insert(e.key.clone());
        Some((e.line, e.value.as_str()))
    }

    pub fn require(&self, key: &str) -> Result<(usize, &str)> {
        self.get(key)
            .ok_or_else(|| Error::parse(0, format!("missing key '{key}'")))
    }

    /// Line of `key`, or 0 if absent. Does not mark it consumed.
    pub fn line_of(&self, key: &str) -> usize {
        self.entries
            .iter()
            .find(|e| e.key == key)
            .map_or(0, |e| e.line)
    }

    /// All entries starting with `prefix`, returned as `(line, suffix, value)`.
    pub fn with_prefix(&self, prefix: &str) -> Vec<(usize, &str, &str)> {
        let mut used = self.used.borrow_mut();
        self.entries
            .iter()
            .filter_map(|e| {
                let suffix = e.key.strip_prefix(prefix)?;
                used.insert(e.key.clone());
                Some((e.line, suffix, e.value.as_str()))
            })
            .collect()
    }

    /// Fail on the first key nobody asked for.
    pub fn reject_unused(&self) -> Result<()> {
        let used = self.used.borrow();
        match self.entries.iter().find(|e| !used.contains(&e.key)) {
            Some(e) => Err(Error::parse(e.line, format!("unknown key '{}'", e.key))),
            None => Ok(()),
        }
    }
}

/// Parse one real; accepts `inf` / `-inf`.
pub fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    let t = s.trim();
    t.parse::<f64>()
        .ok()
        .filter(|v| !v.is_nan())
        .ok_or_else(|| format!("'{t}' is not a number"))
}

pub fn parse_f64_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    if s.trim().is_empty() {
        return Err("empty list".into());
    }
    s.split(',').map(parse_f64).collect()
}
