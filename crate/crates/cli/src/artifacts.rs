//! Output directory handling. Every artifact carries the hash of the
//! resolved configuration: CSV and netlist files in a leading
//! `# config_hash=` line, Matrix Market files in a `% config_hash=` comment
//! and JSON files in a `config_hash` field.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::error::CliError;

pub struct OutputDir {
    root: PathBuf,
    hash: String,
}

impl OutputDir {
    pub fn create(root: &Path, hash: &str) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io("setup", format!("{}: {e}", root.display())))?;
        Ok(Self {
            root: root.to_path_buf(),
            hash: hash.to_string(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn write_csv(&self, stage: &'static str, name: &str, body: &str) -> Result<(), CliError> {
        self.write_raw(stage, name, &format!("# config_hash={}\n{body}", self.hash))
    }

    /// Writes `fields` as a JSON object with `config_hash` and `stage_key` first.
    pub fn write_json(&self, stage: &'static str, name: &str, stage_key: &str, fields: Value) -> Result<(), CliError> {
        let mut obj = Map::new();
        obj.insert("config_hash".into(), Value::String(self.hash.clone()));
        obj.insert("stage_key".into(), Value::String(stage_key.into()));
        match fields {
            Value::Object(map) => obj.extend(map),
            other => {
                obj.insert("data".into(), other);
            }
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(obj)).map_err(|e| CliError::io(stage, e))?;
        text.push('\n');
        self.write_raw(stage, name, &text)
    }

    pub fn write_raw(&self, stage: &'static str, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(stage, e))?;
        }
        fs::write(&path, text).map_err(|e| CliError::io(stage, format!("{}: {e}", path.display())))
    }

    /// Inserts the hash comment below the Matrix Market banner.
    pub fn stamp_mtx(&self, stage: &'static str, path: &Path) -> Result<(), CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(stage, e))?;
        let (banner, rest) = text.split_once('\n').unwrap_or((&text, ""));
        let stamped = format!("{banner}\n% config_hash={}\n{rest}", self.hash);
        fs::write(path, stamped).map_err(|e| CliError::io(stage, e))
    }

    /// Adds the hash to an existing JSON object file.
    pub fn stamp_json(&self, stage: &'static str, path: &Path) -> Result<(), CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(stage, e))?;
        let mut value: Value = serde_json::from_str(&text).map_err(|e| CliError::io(stage, e))?;
        if let Value::Object(map) = &mut value {
            map.insert("config_hash".into(), Value::String(self.hash.clone()));
        }
        let mut out = serde_json::to_string_pretty(&value).map_err(|e| CliError::io(stage, e))?;
        out.push('\n');
        fs::write(path, out).map_err(|e| CliError::io(stage, e))
    }

    /// Reads an upstream JSON artifact of `producer`, checking that it was
    /// made from the same stage inputs.
    pub fn read_upstream(&self, consumer: &'static str, producer: &str, name: &str, stage_key: &str) -> Result<Value, CliError> {
        let path = self.path(name);
        let text = fs::read_to_string(&path).map_err(|_| {
            CliError::dependency(
                consumer,
                format!("missing {} (run `sgmor {producer}` first)", path.display()),
            )
        })?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::dependency(consumer, format!("unreadable {}: {e}", path.display())))?;
        match value.get("stage_key").and_then(Value::as_str) {
            Some(k) if k == stage_key => Ok(value),
            _ => Err(CliError::dependency(
                consumer,
                format!(
                    "{} was produced from a different configuration (rerun `sgmor {producer}`)",
                    path.display()
                ),
            )),
        }
    }
}

/// Deserializes `value[field]`.
pub fn field<T: DeserializeOwned>(stage: &'static str, value: &Value, field: &str) -> Result<T, CliError> {
    let v = value
        .get(field)
        .ok_or_else(|| CliError::dependency(stage, format!("upstream artifact lacks `{field}`")))?;
    serde_json::from_value(v.clone()).map_err(|e| CliError::dependency(stage, format!("bad `{field}`: {e}")))
}

/// Fixed CSV number format: scientific notation, 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}
