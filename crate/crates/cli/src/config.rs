//! Flat `key=value` run configuration.
//!
//! Values are layered: command defaults, then the config file, then `--set`
//! pairs, then dedicated flags. The config file may also be a previously
//! written artifact; its embedded `# config:` lines (CSV) or `config` object
//! (JSON) are read back so the run can be repeated.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use prufer_embed::io::CONFIG_PREFIX;

use crate::CliError;

pub const VERSION: &str = concat!("prufer-embed ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub command: String,
    values: BTreeMap<String, String>,
}

fn parse_pair(line: &str) -> Result<(String, String), CliError> {
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| CliError::validation(format!("expected key=value, got `{line}`")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// Pairs from a plain config file, a CSV artifact or a JSON artifact.
pub fn read_pairs(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        let v: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        let obj = v
            .get("config")
            .and_then(|c| c.as_object())
            .ok_or_else(|| CliError::validation(format!("{} has no config object", path.display())))?;
        return Ok(obj
            .iter()
            .map(|(k, v)| (k.clone(), v.as_str().map_or_else(|| v.to_string(), str::to_string)))
            .collect());
    }
    let mut out = Vec::new();
    let embedded = text.lines().any(|l| l.starts_with(CONFIG_PREFIX));
    for line in text.lines() {
        let line = line.trim_end();
        if let Some(rest) = line.strip_prefix(CONFIG_PREFIX) {
            out.push(parse_pair(rest)?);
        } else if embedded || line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        } else {
            out.push(parse_pair(line)?);
        }
    }
    Ok(out)
}

impl Config {
    pub fn resolve(
        command: &str,
        defaults: &[(&str, &str)],
        file: Option<&Path>,
        set: &[String],
        flags: Vec<(&str, Option<String>)>,
    ) -> Result<Self, CliError> {
        let mut values: BTreeMap<String, String> =
            defaults.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        let mut layer = Vec::new();
        if let Some(path) = file {
            layer.extend(read_pairs(path)?);
        }
        for s in set {
            layer.push(parse_pair(s)?);
        }
        layer.extend(flags.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))));
        if let Some((_, v)) = layer.iter().find(|(k, v)| k == "command" && v != command) {
            return Err(CliError::validation(format!("config was written by `{v}`, not `{command}`")));
        }
        for (k, v) in layer {
            match k.as_str() {
                "command" | "version" => {}
                _ if values.contains_key(&k) => {
                    values.insert(k, v);
                }
                _ => return Err(CliError::validation(format!("unknown key `{k}` for `{command}`"))),
            }
        }
        Ok(Config {
            command: command.to_string(),
            values,
        })
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.values.insert(key.to_string(), value);
    }

    pub fn remove(&mut self, key: &str) {
        self.values.remove(key);
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .parse()
            .map_err(|e| CliError::validation(format!("key `{key}` = `{}`: {e}", self.raw(key))))
    }

    pub fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            "" | "none" | "auto" => Ok(None),
            _ => self.get(key).map(Some),
        }
    }

    /// `command` and `version` first, then every key in order.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("command".to_string(), self.command.clone()),
            ("version".to_string(), VERSION.to_string()),
        ];
        out.extend(self.values.iter().map(|(k, v)| (k.clone(), v.clone())));
        out
    }

    pub fn echo_json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.echo()
                .into_iter()
                .map(|(k, v)| (k, serde_json::Value::String(v)))
                .collect(),
        )
    }
}
