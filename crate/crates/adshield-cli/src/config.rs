//! Plain-text `key=value` run configuration.
//!
//! Every command resolves its parameters as: command-line flag, then config
//! file value, then default. The fully resolved set is written next to the
//! primary output as a sidecar, and re-running a command with only
//! `--config <sidecar>` reproduces the run byte-for-byte (network-free
//! commands).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::AppError;

pub struct Resolver {
    file: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
    requested: BTreeSet<String>,
    command: String,
}

impl Resolver {
    pub fn new(command: &str, config_path: Option<&Path>) -> Result<Self, AppError> {
        let mut file = BTreeMap::new();
        if let Some(path) = config_path {
            let text = fs::read_to_string(path).map_err(|e| {
                AppError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            for (idx, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    AppError::Usage(format!(
                        "{}:{}: expected key=value, got {line:?}",
                        path.display(),
                        idx + 1
                    ))
                })?;
                file.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        let mut resolver = Resolver {
            file,
            resolved: BTreeMap::new(),
            requested: BTreeSet::new(),
            command: command.to_string(),
        };
        if let Some(recorded) = resolver.file.get("command").cloned() {
            resolver.requested.insert("command".into());
            if recorded != command {
                return Err(AppError::Usage(format!(
                    "config was written by the {recorded} command, not {command}"
                )));
            }
        }
        resolver
            .resolved
            .insert("command".into(), command.to_string());
        Ok(resolver)
    }

    fn lookup<T: FromStr + Display>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: Option<T>,
    ) -> Result<Option<T>, AppError>
    where
        T::Err: Display,
    {
        self.requested.insert(key.to_string());
        let value = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(raw) => Some(raw.parse::<T>().map_err(|e| {
                    AppError::Usage(format!("config key {key}: cannot parse {raw:?}: {e}"))
                })?),
                None => default,
            },
        };
        if let Some(v) = &value {
            self.resolved.insert(key.to_string(), v.to_string());
        }
        Ok(value)
    }

    pub fn required<T: FromStr + Display>(
        &mut self,
        key: &str,
        flag: Option<T>,
    ) -> Result<T, AppError>
    where
        T::Err: Display,
    {
        self.lookup(key, flag, None)?
            .ok_or_else(|| AppError::Usage(format!("missing required parameter --{key}")))
    }

    pub fn or_default<T: FromStr + Display>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T, AppError>
    where
        T::Err: Display,
    {
        Ok(self.lookup(key, flag, Some(default))?.expect("has default"))
    }

    pub fn optional<T: FromStr + Display>(
        &mut self,
        key: &str,
        flag: Option<T>,
    ) -> Result<Option<T>, AppError>
    where
        T::Err: Display,
    {
        self.lookup(key, flag, None)
    }

    pub fn flag(&mut self, key: &str, set: bool) -> Result<bool, AppError> {
        self.or_default(key, set.then_some(true), false)
    }

    pub fn path_required(&mut self, key: &str, flag: Option<PathBuf>) -> Result<PathBuf, AppError> {
        let as_string = flag.map(|p| p.display().to_string());
        Ok(PathBuf::from(self.required::<String>(key, as_string)?))
    }

    pub fn path_optional(
        &mut self,
        key: &str,
        flag: Option<PathBuf>,
    ) -> Result<Option<PathBuf>, AppError> {
        let as_string = flag.map(|p| p.display().to_string());
        Ok(self.optional::<String>(key, as_string)?.map(PathBuf::from))
    }

    /// Comma-separated list parameter.
    pub fn list_or_default(
        &mut self,
        key: &str,
        flag: Option<String>,
        default: &str,
    ) -> Result<Vec<String>, AppError> {
        let raw = self.or_default::<String>(key, flag, default.to_string())?;
        Ok(raw
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect())
    }

    /// Reject config-file keys that this command never asked for.
    pub fn check_unused(&self) -> Result<(), AppError> {
        for key in self.file.keys() {
            if !self.requested.contains(key) {
                return Err(AppError::Usage(format!(
                    "config key {key} is not used by the {} command",
                    self.command
                )));
            }
        }
        Ok(())
    }

    /// Write the resolved sidecar next to an output.
    pub fn write_sidecar(&self, output: &Path) -> Result<(), AppError> {
        let mut text = String::new();
        for (key, value) in &self.resolved {
            text.push_str(key);
            text.push('=');
            text.push_str(value);
            text.push('\n');
        }
        let sidecar = sidecar_path(output);
        fs::write(&sidecar, text)
            .map_err(|e| AppError::Data(format!("cannot write sidecar {}: {e}", sidecar.display())))
    }
}

pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".to_string());
    name.push_str(".config");
    output.with_file_name(name)
}
