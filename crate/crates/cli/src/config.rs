//! JSON config files, flag overrides and the `run.json` provenance record.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

/// A problem with how the tool was invoked (exit code 1).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Top-level object of a config file. `threads` is shared by every
/// subcommand; the remaining keys belong to the subcommand being run.
pub struct ConfigFile {
    pub path: PathBuf,
    pub threads: Option<usize>,
    pub fields: Map<String, Value>,
}

pub fn load_config_file(path: &Path) -> anyhow::Result<ConfigFile> {
    let text =
        fs::read_to_string(path).map_err(|e| usage(format!("cannot read config file {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| usage(format!("config file {} is not valid JSON: {e}", path.display())))?;
    let Value::Object(mut fields) = value else {
        return Err(usage(format!("config file {} must hold a JSON object", path.display())));
    };
    let threads = match fields.remove("threads") {
        None | Some(Value::Null) => None,
        Some(v) => Some(
            serde_json::from_value(v).map_err(|e| usage(format!("config file {}: `threads`: {e}", path.display())))?,
        ),
    };
    Ok(ConfigFile {
        path: path.to_owned(),
        threads,
        fields,
    })
}

/// Overlays the flags that were given on top of the config file values.
pub fn merge<A: Serialize + DeserializeOwned>(file: Option<&ConfigFile>, flags: &A) -> anyhow::Result<A> {
    let Some(file) = file else {
        return Ok(serde_json::from_value(serde_json::to_value(flags)?)?);
    };
    let mut merged = file.fields.clone();
    if let Value::Object(given) = serde_json::to_value(flags)? {
        for (k, v) in given {
            if !v.is_null() {
                merged.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| usage(format!("config file {}: {e}", file.path.display())))
}

pub fn required<T>(v: Option<T>, flag: &str) -> anyhow::Result<T> {
    v.ok_or_else(|| usage(format!("missing required option {flag} (flag or config file key)")))
}

#[derive(Serialize)]
struct RunRecord<'a, C> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    threads: usize,
    config: &'a C,
}

/// Writes `<out>/run.json` with the fully-resolved configuration.
pub fn write_run_record<C: Serialize>(out: &Path, command: &str, threads: usize, config: &C) -> anyhow::Result<()> {
    let record = RunRecord {
        tool: "cmr-forge",
        version: env!("CARGO_PKG_VERSION"),
        command,
        threads,
        config,
    };
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join("run.json");
    let mut text = serde_json::to_string_pretty(&record)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}
