//! Shared command plumbing: config loading, output directory, failures.

use std::path::{Path, PathBuf};

use kitamp::config::KeyValueConfig;

/// Command failure with the exit-code contract baked in: input/validation
/// problems exit 2, failures arising during computation exit 1.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Compute(String),
}

impl Failure {
    pub fn input(msg: impl ToString) -> Self {
        Failure::Input(msg.to_string())
    }

    pub fn compute(msg: impl ToString) -> Self {
        Failure::Compute(msg.to_string())
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Compute(m) => m,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Compute(_) => 1,
        }
    }
}

pub struct RunContext {
    pub config: KeyValueConfig,
    /// Directory of the config file; relative paths in the config resolve
    /// against it.
    pub config_dir: PathBuf,
    pub out_dir: PathBuf,
}

impl RunContext {
    pub fn new(args: &crate::CommonArgs) -> Result<Self, Failure> {
        let (mut config, config_dir) = match &args.config {
            Some(path) => {
                let cfg = KeyValueConfig::from_path(path).map_err(Failure::input)?;
                let dir = path
                    .parent()
                    .filter(|p| !p.as_os_str().is_empty())
                    .map(Path::to_path_buf)
                    .unwrap_or_else(|| PathBuf::from("."));
                (cfg, dir)
            }
            None => (KeyValueConfig::empty(), PathBuf::from(".")),
        };
        for pair in &args.overrides {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| Failure::input(format!("--set expects KEY=VALUE, got `{pair}`")))?;
            config.override_pair(key, value);
        }
        let out_dir = resolve_out_dir(args.out.as_deref())?;
        Ok(Self {
            config,
            config_dir,
            out_dir,
        })
    }

    /// Resolve a config-supplied path against the config file location.
    pub fn resolve(&self, value: &str) -> PathBuf {
        let p = PathBuf::from(value);
        if p.is_absolute() {
            p
        } else {
            self.config_dir.join(p)
        }
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn write_out(&self, name: &str, contents: &str) -> Result<PathBuf, Failure> {
        let path = self.out_path(name);
        std::fs::write(&path, contents)
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

pub fn resolve_out_dir(flag: Option<&Path>) -> Result<PathBuf, Failure> {
    let out_dir = flag
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os("KITAMP_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| Failure::input(format!("cannot create {}: {e}", out_dir.display())))?;
    Ok(out_dir)
}

/// Pretty JSON with a trailing newline (stable across runs).
pub fn to_json_file(value: &impl serde::Serialize) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text
}
