use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use crate::error::ConfigError;

pub const DEFAULT_BIND_ADDR: &str = "127.0.0.1:8080";
pub const DEFAULT_MAX_UPLOAD_MIB: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub bind_addr: SocketAddr,
    /// On-disk store; `None` keeps everything in memory.
    pub data_dir: Option<PathBuf>,
    pub max_upload_mib: usize,
    /// Number of fits allowed to run at once.
    pub fit_workers: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind_addr: DEFAULT_BIND_ADDR.parse().unwrap(),
            data_dir: None,
            max_upload_mib: DEFAULT_MAX_UPLOAD_MIB,
            fit_workers: std::thread::available_parallelism()
                .map(|n| n.get().min(4))
                .unwrap_or(2),
        }
    }
}

impl ServiceConfig {
    pub fn max_upload_bytes(&self) -> usize {
        self.max_upload_mib.saturating_mul(1024 * 1024)
    }

    /// Parse `key = value` lines. Blank lines and `#` comments are ignored.
    /// Keys are case-insensitive and match the environment variable names.
    pub fn parse(text: &str) -> Result<HashMap<String, String>, ConfigError> {
        let mut out = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: n + 1,
                text: line.to_string(),
            })?;
            out.insert(k.trim().to_ascii_uppercase(), v.trim().to_string());
        }
        Ok(out)
    }

    /// Defaults, then the optional config file, then environment overrides.
    pub fn load(file: Option<&Path>) -> Result<Self, ConfigError> {
        let mut values = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| ConfigError::Io {
                    path: p.to_path_buf(),
                    source: e,
                })?;
                Self::parse(&text)?
            }
            None => HashMap::new(),
        };
        for key in ["BIND_ADDR", "DATA_DIR", "MAX_UPLOAD_MIB", "FIT_WORKERS"] {
            if let Ok(v) = std::env::var(key) {
                values.insert(key.to_string(), v);
            }
        }
        Self::from_values(&values)
    }

    pub fn from_values(values: &HashMap<String, String>) -> Result<Self, ConfigError> {
        let mut cfg = ServiceConfig::default();
        for (key, value) in values {
            let bad = || ConfigError::Value {
                key: key.clone(),
                value: value.clone(),
            };
            match key.as_str() {
                "BIND_ADDR" => cfg.bind_addr = value.parse().map_err(|_| bad())?,
                "DATA_DIR" => cfg.data_dir = (!value.is_empty()).then(|| PathBuf::from(value)),
                "MAX_UPLOAD_MIB" => {
                    cfg.max_upload_mib = value.parse().ok().filter(|&v| v > 0).ok_or_else(bad)?
                }
                "FIT_WORKERS" => cfg.fit_workers = value.parse().ok().filter(|&v| v > 0).ok_or_else(bad)?,
                _ => log::warn!("ignoring unknown config key {key}"),
            }
        }
        Ok(cfg)
    }
}
