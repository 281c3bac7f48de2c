//! Layered run configuration. Values are resolved in increasing priority:
//! built-in defaults, the command's table in the config file, `WORDREP_*`
//! environment variables (path settings only), then command-line flags.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

/// Invalid invocation: unknown values, missing settings, bad combinations.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

/// Process-wide settings stored in the `[run]` table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub threads: Option<usize>,
    pub deterministic: bool,
}

/// A command's resolved settings.
pub trait CommandConfig: Serialize + DeserializeOwned + Default {
    /// Table name in the config file and snapshot.
    const SECTION: &'static str;
    /// Settings that may be overridden from the environment.
    const PATH_FIELDS: &'static [&'static str];

    /// The artifact next to which the snapshot is written by default.
    fn primary_output(&self) -> Option<&Path>;
}

pub fn env_var(field: &str) -> String {
    format!("WORDREP_{}", field.to_ascii_uppercase())
}

/// Returns `value` or a usage error naming every way to supply it.
pub fn required<'a>(value: &'a Option<PathBuf>, field: &str, section: &str) -> Result<&'a Path> {
    value.as_deref().ok_or_else(|| {
        usage(format!(
            "missing required setting `{field}`: pass --{}, set `{field}` under [{}] in the config file, or set {}",
            field.replace('_', "-"),
            section,
            env_var(field)
        ))
    })
}

/// Recursively overlays `over` onto `base`.
pub fn merge(base: &mut Table, over: Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

fn to_table<T: Serialize>(value: &T) -> Result<Table> {
    Table::try_from(value).context("serializing configuration")
}

#[derive(Debug, Default)]
pub struct Resolver {
    file: Table,
}

impl Resolver {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Resolver::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config file {}", path.display()))?;
        let file: Table = text
            .parse()
            .with_context(|| format!("cannot parse config file {}", path.display()))?;
        Ok(Resolver { file })
    }

    fn table(&self, name: &str) -> Result<Table> {
        match self.file.get(name) {
            None => Ok(Table::new()),
            Some(Value::Table(t)) => Ok(t.clone()),
            Some(_) => Err(usage(format!("config key `{name}` must be a table"))),
        }
    }

    fn finish<C: DeserializeOwned>(merged: Table, section: &str) -> Result<C> {
        C::deserialize(Value::Table(merged)).map_err(|e| usage(format!("invalid [{section}] settings: {e}")))
    }

    pub fn run(&self, threads: Option<usize>, deterministic: bool) -> Result<RunConfig> {
        let mut merged = to_table(&RunConfig::default())?;
        merge(&mut merged, self.table("run")?);
        let mut run: RunConfig = Self::finish(merged, "run")?;
        if threads.is_some() {
            run.threads = threads;
        }
        run.deterministic |= deterministic;
        Ok(run)
    }

    pub fn resolve<C: CommandConfig, A: Serialize>(&self, args: &A) -> Result<C> {
        let mut merged = to_table(&C::default())?;
        merge(&mut merged, self.table(C::SECTION)?);
        for field in C::PATH_FIELDS {
            if let Ok(value) = std::env::var(env_var(field)) {
                merged.insert((*field).to_string(), Value::String(value));
            }
        }
        merge(&mut merged, to_table(args)?);
        Self::finish(merged, C::SECTION)
    }
}

/// Writes `[run]` plus the command table; rerunning with `--config` on this
/// file reproduces the run.
pub fn write_snapshot<C: CommandConfig>(path: &Path, run: &RunConfig, config: &C) -> Result<()> {
    let mut doc = Table::new();
    doc.insert("run".into(), Value::Table(to_table(run)?));
    doc.insert(C::SECTION.into(), Value::Table(to_table(config)?));
    let text = toml::to_string(&doc).context("rendering config snapshot")?;
    fs::write(path, text).with_context(|| format!("cannot write config snapshot {}", path.display()))
}

pub fn default_snapshot_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".config.toml");
    PathBuf::from(name)
}

/// `dir/name.ext` -> `dir/name.<suffix>`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}
