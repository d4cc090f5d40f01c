//! Layering of `--config` JSON under command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Globals {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

pub fn load(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let value: Value = serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))?;
    if !value.is_object() {
        bail!("config {} must hold a JSON object", path.display());
    }
    Ok(value)
}

/// Recursively copies every non-null entry of `top` over `base`.
pub fn overlay(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                if v.is_null() {
                    continue;
                }
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => overlay(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) => {
            if !t.is_null() {
                *b = t;
            }
        }
    }
}

/// Config file, then global flags, then command flags, deserialized into
/// the command's resolved configuration.
pub fn resolve<T: DeserializeOwned>(
    file: Option<&Value>,
    globals: &Globals,
    args: &impl Serialize,
) -> Result<T> {
    let mut merged = file.cloned().unwrap_or_else(|| Value::Object(Map::new()));
    overlay(&mut merged, serde_json::to_value(globals)?);
    overlay(&mut merged, serde_json::to_value(args)?);
    serde_json::from_value(merged).context("invalid configuration")
}
