use std::path::{Path, PathBuf};

use difftof_core::io::{sha256_hex, write_json};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// Loads `T` from an optional JSON file (missing fields take defaults) and
/// applies `key.path=value` overrides on top. Values are parsed as JSON and
/// fall back to plain strings.
pub fn load<T>(path: Option<&Path>, overrides: &[(String, String)]) -> CliResult<T>
where
    T: Serialize + DeserializeOwned + Default,
{
    let base: T = match path {
        None => T::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| {
                CliError::config(format!("{}:{}:{}: {}", p.display(), e.line(), e.column(), e))
            })?
        }
    };
    if overrides.is_empty() {
        return Ok(base);
    }
    let mut value = serde_json::to_value(&base).expect("config serializes");
    for (key, raw) in overrides {
        set_path(&mut value, key, parse_value(raw))?;
    }
    serde_json::from_value(value).map_err(|e| CliError::config(format!("override: {e}")))
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn set_path(root: &mut Value, key: &str, new: Value) -> CliResult<()> {
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| CliError::config(format!("override {key}: {} is not an object", parts[..i].join("."))))?;
        let slot = obj
            .get_mut(*part)
            .ok_or_else(|| CliError::config(format!("override {key}: unknown field `{part}`")))?;
        if i + 1 == parts.len() {
            *slot = new;
            return Ok(());
        }
        cur = slot;
    }
    Err(CliError::config("empty override key"))
}

/// Splits `key=value`.
pub fn parse_override(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.to_string()))
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| format!("expected key=value, got `{s}`"))
}

#[derive(Serialize)]
struct RunManifest<'a, C: Serialize> {
    command: &'a str,
    tool_version: &'a str,
    seed: u64,
    config_hash: String,
    config: &'a C,
    /// Output files, relative to the manifest's directory.
    outputs: Vec<String>,
}

/// Writes `run_manifest.json` next to the outputs of a run.
pub fn write_manifest<C: Serialize>(out_dir: &Path, command: &str, seed: u64, config: &C, outputs: &[PathBuf]) -> CliResult<()> {
    let canonical = serde_json::to_string(config).expect("config serializes");
    let manifest = RunManifest {
        command,
        tool_version: env!("CARGO_PKG_VERSION"),
        seed,
        config_hash: sha256_hex(canonical.as_bytes()),
        config,
        outputs: outputs
            .iter()
            .map(|p| p.strip_prefix(out_dir).unwrap_or(p).to_string_lossy().into_owned())
            .collect(),
    };
    Ok(write_json(&out_dir.join("run_manifest.json"), &manifest)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use difftof_core::optimize::RefineConfig;

    #[test]
    fn overrides_win_over_defaults() {
        let cfg: RefineConfig = load(None, &[("steps".into(), "7".into()), ("loss_norm".into(), "l1".into())]).unwrap();
        assert_eq!(cfg.steps, 7);
    }

    #[test]
    fn unknown_override_is_a_config_error() {
        let err = load::<RefineConfig>(None, &[("stepz".into(), "7".into())]).unwrap_err();
        assert_eq!(err.code, crate::error::EXIT_CONFIG);
        assert!(err.message.contains("stepz"));
    }

    #[test]
    fn malformed_file_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, "{\n  \"steps\": \"many\"\n}").unwrap();
        let err = load::<RefineConfig>(Some(&p), &[]).unwrap_err();
        assert_eq!(err.code, crate::error::EXIT_CONFIG);
        assert!(err.message.contains("c.json:2:"), "{}", err.message);
    }
}
