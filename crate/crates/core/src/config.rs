//! `key = value` configuration files.
//!
//! Blank lines and `#` comments are ignored. Keys are long flag names of the
//! selected subcommand, with or without the leading `--`; underscores and
//! dashes are interchangeable.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigEntry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

pub fn parse_config(text: &str, path: &Path) -> Result<Vec<ConfigEntry>> {
    let mut out: Vec<ConfigEntry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.split_once('#').map_or(raw, |(a, _)| a).trim();
        if l.is_empty() {
            continue;
        }
        let (k, v) = l
            .split_once('=')
            .ok_or_else(|| Error::parse(path, line, format!("expected key = value, found {l:?}")))?;
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(Error::parse(path, line, "empty key"));
        }
        if let Some(prev) = out.iter().find(|e| e.key == key) {
            return Err(Error::parse(path, line, format!("duplicate key {key} (first on line {})", prev.line)));
        }
        out.push(ConfigEntry {
            key,
            value: v.trim().to_string(),
            line,
        });
    }
    Ok(out)
}

pub fn read_config(path: impl AsRef<Path>) -> Result<Vec<ConfigEntry>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}
