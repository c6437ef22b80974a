//! Run configuration: a JSON file with `model` and `train` sections plus
//! `--set key=value` overrides.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use sacc::attention::ModelConfig;
use sacc::train::TrainConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl RunConfig {
    /// Defaults, then the config file, then each override in order, then
    /// `seed`. The result is validated.
    pub fn load(path: Option<&Path>, overrides: &[String], seed: Option<u64>) -> Result<Self> {
        let mut doc = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| CliError::io(p, &e))?;
                serde_json::from_str::<Value>(&text).map_err(|e| CliError::json("config", &e))?
            }
            None => serde_json::to_value(RunConfig::default())?,
        };
        for item in overrides {
            apply_override(&mut doc, item)?;
        }
        let mut cfg: RunConfig = serde_json::from_value(doc).map_err(|e| CliError::new("config", e.to_string()))?;
        if let Some(s) = seed {
            cfg.train.seed = s;
        }
        cfg.model.validate().map_err(|e| CliError::new("config", e.to_string()))?;
        cfg.train.validate().map_err(|e| CliError::new("config", e.to_string()))?;
        Ok(cfg)
    }
}

/// `section.key=value` or bare `key=value` when exactly one section has
/// that key. The value is read as JSON, falling back to a plain string.
fn apply_override(doc: &mut Value, item: &str) -> Result<()> {
    let Some((key, raw)) = item.split_once('=') else {
        bail!(CliError::new("config", format!("override `{item}` is not of the form key=value")));
    };
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let defaults = serde_json::to_value(RunConfig::default())?;
    let (section, field) = match key.split_once('.') {
        Some((s, f)) => (s.to_string(), f.to_string()),
        None => {
            let owners: Vec<&str> =
                ["model", "train"].into_iter().filter(|s| defaults[s].get(key).is_some()).collect();
            match owners.as_slice() {
                [one] => (one.to_string(), key.to_string()),
                [] => bail!(CliError::new("config", format!("unknown config key `{key}`"))),
                _ => bail!(CliError::new("config", format!("ambiguous config key `{key}`; prefix it with a section"))),
            }
        }
    };
    if defaults.get(&section).and_then(|s| s.get(&field)).is_none() {
        bail!(CliError::new("config", format!("unknown config key `{key}`")));
    }
    let obj = doc
        .as_object_mut()
        .context("config root must be a JSON object")?
        .entry(section)
        .or_insert_with(|| Value::Object(Default::default()));
    obj.as_object_mut().context("config sections must be JSON objects")?.insert(field, value);
    Ok(())
}
