//! Dotted `key=value` overrides applied to parsed configurations.

use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub path: String,
    pub value: Value,
}

impl std::str::FromStr for Override {
    type Err = String;

    /// `rlct.num_chains=2`; the value is read as JSON and falls back to a
    /// plain string (`dataset.kind=text`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (path, raw) = s.split_once('=').ok_or_else(|| format!("override {s:?} is not key=value"))?;
        let path = path.trim();
        if path.is_empty() || path.split('.').any(str::is_empty) {
            return Err(format!("override {s:?} has an empty key segment"));
        }
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        Ok(Self { path: path.to_string(), value })
    }
}

/// Set every override on a JSON-serializable value and read it back.
/// Keys must already exist in the serialized form.
pub fn apply<T>(target: &T, overrides: &[Override]) -> CliResult<T>
where
    T: serde::Serialize + serde::de::DeserializeOwned,
{
    if overrides.is_empty() {
        return serde_json::from_value(serde_json::to_value(target).map_err(to_usage)?).map_err(to_usage);
    }
    let mut tree = serde_json::to_value(target).map_err(to_usage)?;
    for o in overrides {
        let mut node = &mut tree;
        for seg in o.path.split('.') {
            node = match node {
                Value::Object(map) => map.get_mut(seg),
                Value::Array(items) => seg.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
                _ => None,
            }
            .ok_or_else(|| CliError::Usage(format!("unknown override key `{}`", o.path)))?;
        }
        *node = o.value.clone();
    }
    serde_json::from_value(tree).map_err(|e| {
        let keys: Vec<&str> = overrides.iter().map(|o| o.path.as_str()).collect();
        CliError::Usage(format!("override of {} produced an invalid config: {e}", keys.join(", ")))
    })
}

fn to_usage(e: serde_json::Error) -> CliError {
    CliError::Usage(e.to_string())
}
