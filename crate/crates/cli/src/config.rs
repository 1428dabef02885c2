//! `key=value` experiment configuration: file values first, flags on top.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Every key the runner understands. Flags use the same names.
pub const KEYS: &[&str] = &[
    "group",
    "p",
    "kind",
    "depth",
    "horizon",
    "replicas",
    "seed",
    "out",
    "threads",
    "n-sweep",
    "radii",
    "radius",
    "tolerance",
    "network",
    "windows",
    "grid",
    "thresholds",
    "range",
    "min-length",
    "samples",
    "criteria",
];

/// Keys describing where and how a run executes rather than what it
/// computes; they are left out of the manifest.
pub const RUNTIME_KEYS: &[&str] = &["out", "threads"];

pub const OUT_ENV: &str = "BRWLAB_OUT";
pub const DEFAULT_OUT: &str = "brwlab-out";

#[derive(Debug)]
pub enum CliError {
    Field { field: String, message: String },
    Core(brwlab::Error),
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Field {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Field { .. } => 2,
            CliError::Core(e) if e.is_resource() => 3,
            CliError::Core(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Field { field, message } => write!(f, "invalid {field}: {message}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "{path}: {source}"),
        }
    }
}

impl From<brwlab::Error> for CliError {
    fn from(e: brwlab::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::field("config", format!("line {}: expected key=value", i + 1)))?;
        let key = key.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::field(key, format!("unknown key on config line {}", i + 1)));
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::field(key, format!("repeated on config line {}", i + 1)));
        }
    }
    Ok(map)
}

pub struct Config {
    provided: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
    used: BTreeSet<String>,
}

impl Config {
    pub fn new(file: Option<&Path>, flags: BTreeMap<String, String>) -> CliResult<Self> {
        let mut provided = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                parse_config_text(&text)?
            }
            None => BTreeMap::new(),
        };
        provided.extend(flags);
        Ok(Config {
            provided,
            resolved: BTreeMap::new(),
            used: BTreeSet::new(),
        })
    }

    pub fn has(&self, key: &str) -> bool {
        self.provided.contains_key(key)
    }

    /// The raw value of `key`, or `default`; recorded in the resolved set.
    pub fn text(&mut self, key: &str, default: &str) -> String {
        self.used.insert(key.to_string());
        let v = self.provided.get(key).cloned().unwrap_or_else(|| default.to_string());
        self.resolved.insert(key.to_string(), v.clone());
        v
    }

    pub fn value<T: FromStr>(&mut self, key: &str, default: &str) -> CliResult<T>
    where
        T::Err: fmt::Display,
    {
        let v = self.text(key, default);
        v.parse().map_err(|e: T::Err| CliError::field(key, format!("{v:?}: {e}")))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&mut self, key: &str, default: &str) -> CliResult<Vec<T>>
    where
        T::Err: fmt::Display,
    {
        let v = self.text(key, default);
        v.split(',')
            .map(|s| s.trim().parse().map_err(|e: T::Err| CliError::field(key, format!("{s:?}: {e}"))))
            .collect()
    }

    pub fn parsed<T>(&mut self, key: &str, default: &str, parse: impl Fn(&str) -> brwlab::Result<T>) -> CliResult<T> {
        let v = self.text(key, default);
        parse(&v).map_err(|e| CliError::field(key, e.to_string()))
    }

    /// Rejects keys that were given but that the command does not use, and
    /// returns the resolved configuration.
    pub fn finish(self, command: &str) -> CliResult<BTreeMap<String, String>> {
        if let Some(k) = self.provided.keys().find(|k| !self.used.contains(*k)) {
            return Err(CliError::field(k.clone(), format!("not a parameter of `{command}`")));
        }
        Ok(self.resolved)
    }
}

pub fn default_out() -> String {
    std::env::var(OUT_ENV).unwrap_or_else(|_| DEFAULT_OUT.to_string())
}
