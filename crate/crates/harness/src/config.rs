//! Flat `key = value` config files. Every key is the long name of a CLI flag
//! (without dashes); the file is spliced into the argument list ahead of the
//! user's own flags, so anything given on the command line wins.

use std::path::Path;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigEntry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

pub fn parse_config(text: &str) -> Result<Vec<ConfigEntry>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| HarnessError::Config { line, msg: format!("expected `key = value`, got `{content}`") })?;
        let key = key.trim().trim_start_matches("--").to_string();
        if key.is_empty() {
            return Err(HarnessError::Config { line, msg: "empty key".into() });
        }
        out.push(ConfigEntry { key, value: value.trim().to_string(), line });
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> Result<Vec<ConfigEntry>> {
    parse_config(&std::fs::read_to_string(path)?)
}

/// Turns entries into flags. `is_switch(key)` tells whether the flag takes
/// no value, in which case `true` emits it and `false` drops it.
pub fn entries_to_args(entries: &[ConfigEntry], is_switch: impl Fn(&str) -> bool) -> Result<Vec<String>> {
    let mut args = Vec::new();
    for e in entries {
        if is_switch(&e.key) {
            match e.value.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" | "" => args.push(format!("--{}", e.key)),
                "false" | "no" | "0" => {}
                other => {
                    return Err(HarnessError::Config {
                        line: e.line,
                        msg: format!("`{}` is a switch, got `{other}`", e.key),
                    })
                }
            }
        } else {
            args.push(format!("--{}", e.key));
            args.push(e.value.clone());
        }
    }
    Ok(args)
}
