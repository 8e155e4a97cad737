//! Layered `key=value` configuration: defaults, then a config file, then
//! command-line overrides. The effective configuration is rendered in a
//! canonical form whose SHA-256 tags every output.

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub struct Resolved<C> {
    pub config: C,
    /// One `key=value` line per field, keys sorted, values as JSON.
    pub canonical: String,
    pub sha256: String,
}

/// Splits `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str, origin: &str) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("{origin}:{}: expected key=value, got {line:?}", n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// JSON if it parses, a comma-separated list if it has commas, else a string.
fn parse_value(raw: &str) -> Value {
    if let Ok(v) = serde_json::from_str::<Value>(raw) {
        return v;
    }
    if raw.contains(',') {
        return Value::Array(raw.split(',').map(|p| parse_value(p.trim())).collect());
    }
    Value::String(raw.to_string())
}

pub fn resolve<C>(file: Option<&Path>, overrides: &[(String, String)]) -> CliResult<Resolved<C>>
where
    C: Serialize + DeserializeOwned + Default,
{
    let defaults = match serde_json::to_value(C::default()) {
        Ok(Value::Object(m)) => m,
        _ => unreachable!("configs serialize to objects"),
    };
    let mut pairs = Vec::new();
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        pairs.extend(parse_pairs(&text, &path.display().to_string())?);
    }
    pairs.extend_from_slice(overrides);
    let mut merged = defaults.clone();
    for (k, v) in pairs {
        if !defaults.contains_key(&k) {
            let known: Vec<&str> = defaults.keys().map(String::as_str).collect();
            return Err(CliError::usage(format!("unknown config key {k:?}; known keys: {}", known.join(", "))));
        }
        merged.insert(k, parse_value(&v));
    }
    let config: C =
        serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::usage(format!("config: {e}")))?;
    let canonical = canonical(&config);
    let sha256 = hex::encode(Sha256::digest(canonical.as_bytes()));
    Ok(Resolved { config, canonical, sha256 })
}

fn canonical<C: Serialize>(config: &C) -> String {
    let map: BTreeMap<String, Value> = match serde_json::to_value(config) {
        Ok(Value::Object(m)) => m.into_iter().collect(),
        _ => unreachable!("configs serialize to objects"),
    };
    map.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

/// Accepts a single number where a list is expected.
pub fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(v) => v,
    })
}
