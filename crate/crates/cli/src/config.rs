//! TOML configuration: defaults merged under the user's file, path checks,
//! and the run manifest.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use toml::{Table, Value};

pub const OUT_DIR_ENV: &str = "SPILLOVER_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "spillover-out";

#[derive(Debug)]
pub enum CliError {
    /// Bad or incomplete configuration; exit status 2.
    Config {
        class: &'static str,
        message: String,
    },
    /// Failure while running a pipeline; exit status 1.
    Runtime(spillover_core::Error),
    /// Checks that ran to completion but did not hold; exit status 1.
    Failed {
        class: &'static str,
        message: String,
    },
}

impl CliError {
    pub fn config(class: &'static str, message: impl Into<String>) -> Self {
        CliError::Config {
            class,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Runtime(_) | CliError::Failed { .. } => 1,
        }
    }

    pub fn class(&self) -> &'static str {
        match self {
            CliError::Config { class, .. } | CliError::Failed { class, .. } => class,
            CliError::Runtime(e) => e.class(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let message = match self {
            CliError::Config { message, .. } | CliError::Failed { message, .. } => message.clone(),
            CliError::Runtime(e) => e.to_string(),
        };
        write!(f, "error class={} message={:?}", self.class(), message)
    }
}

impl From<spillover_core::Error> for CliError {
    fn from(e: spillover_core::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Overlay `user` on `base`, recursing into tables; arrays and scalars replace.
pub fn merge(base: &mut Table, user: Table) {
    for (key, value) in user {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(u)) => merge(b, u),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

/// Parse `path` (if any) over the serialized `defaults`. A `[run]` table, as
/// written into manifests, is ignored.
pub fn load<T: Serialize + DeserializeOwned>(path: Option<&Path>, defaults: &T) -> CliResult<T> {
    let mut table = Table::try_from(defaults).map_err(|e| {
        CliError::config("InvalidConfig", format!("cannot serialize defaults: {e}"))
    })?;
    if let Some(path) = path {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::config(
                "ConfigPathMissing",
                format!("cannot read config {}: {e}", path.display()),
            )
        })?;
        let mut user: Table = text
            .parse()
            .map_err(|e| CliError::config("ConfigParse", format!("{}: {e}", path.display())))?;
        user.remove("run");
        merge(&mut table, user);
    }
    T::deserialize(table).map_err(|e| CliError::config("InvalidConfig", e.to_string()))
}

/// Resolve a configured input path against the config's directory and check it exists.
pub fn input_path(path: &Path, base: Option<&Path>, what: &str) -> CliResult<PathBuf> {
    if path.as_os_str().is_empty() {
        return Err(CliError::config(
            "ConfigPathMissing",
            format!("no {what} path configured"),
        ));
    }
    let joined = match base {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    };
    if !joined.is_file() {
        return Err(CliError::config(
            "ConfigPathMissing",
            format!("{what} {} does not exist", joined.display()),
        ));
    }
    Ok(std::path::absolute(&joined)?)
}

pub fn optional_input(
    path: &Option<PathBuf>,
    base: Option<&Path>,
    what: &str,
) -> CliResult<Option<PathBuf>> {
    path.as_ref().map(|p| input_path(p, base, what)).transpose()
}

/// Flag, then config, then the environment, then `spillover-out`.
pub fn out_dir(flag: Option<&Path>, configured: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| configured.map(Path::to_path_buf))
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

#[derive(Debug, Serialize)]
pub struct RunInfo {
    pub command: String,
    pub seed: u64,
    pub version: String,
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
    pub notes: Vec<String>,
}

/// Config echo plus a `[run]` table, written as `manifest.toml`.
pub fn write_manifest<T: Serialize>(dir: &Path, config: &T, run: &RunInfo) -> CliResult<PathBuf> {
    let mut table = Table::try_from(config)
        .map_err(|e| CliError::config("InvalidConfig", format!("cannot serialize config: {e}")))?;
    let run = Table::try_from(run).map_err(|e| {
        CliError::config("InvalidConfig", format!("cannot serialize run info: {e}"))
    })?;
    table.insert("run".into(), Value::Table(run));
    let text = toml::to_string_pretty(&table)
        .map_err(|e| CliError::config("InvalidConfig", format!("cannot write manifest: {e}")))?;
    let path = dir.join("manifest.toml");
    std::fs::write(&path, text)?;
    Ok(path)
}
