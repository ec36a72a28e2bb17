//! Service and pipeline configuration file.
//!
//! ```toml
//! [service]
//! bind_addr = "127.0.0.1:8080"
//! data_dir = "meshpress-data"
//! printer_device = "capture:meshpress-data/printer.bin"
//! stylizer_url = "http://127.0.0.1:8090/stylize"
//!
//! [pipeline]
//! theta_k = 0.3
//! ```
//!
//! Every key is optional. `PRINTER_DEVICE`, `STYLIZER_URL` and `BIND_ADDR`
//! override the file.

use std::path::{Path, PathBuf};

use meshpress_core::PipelineConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum SettingsError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config file: {0}")]
    Parse(String),
    #[error(transparent)]
    Pipeline(#[from] meshpress_core::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceSettings {
    pub bind_addr: String,
    pub data_dir: PathBuf,
    /// Character device path, or `capture:<file>` to append frames to a file.
    pub printer_device: String,
    pub stylizer_url: Option<String>,
    pub stylizer_timeout_ms: u64,
    /// Fail the job (E-STY) instead of falling back to the unstyled photo.
    pub strict_stylize: bool,
    /// Pipelines allowed to run at once.
    pub workers: usize,
}

impl Default for ServiceSettings {
    fn default() -> Self {
        Self {
            bind_addr: "127.0.0.1:8080".into(),
            data_dir: PathBuf::from("meshpress-data"),
            printer_device: "capture:meshpress-data/printer.bin".into(),
            stylizer_url: None,
            stylizer_timeout_ms: 10_000,
            strict_stylize: false,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub service: ServiceSettings,
    pub pipeline: PipelineConfig,
}

impl Settings {
    pub fn from_toml(text: &str) -> Result<Self, SettingsError> {
        let settings: Self =
            toml::from_str(text).map_err(|e| SettingsError::Parse(e.to_string()))?;
        settings.pipeline.validate()?;
        if settings.service.workers == 0 {
            return Err(SettingsError::Parse(
                "service.workers must be at least 1".into(),
            ));
        }
        Ok(settings)
    }

    pub fn load(path: &Path) -> Result<Self, SettingsError> {
        let text = std::fs::read_to_string(path).map_err(|source| SettingsError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Applies `PRINTER_DEVICE`, `STYLIZER_URL` and `BIND_ADDR` from `lookup`.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) {
        if let Some(v) = lookup("PRINTER_DEVICE") {
            self.service.printer_device = v;
        }
        if let Some(v) = lookup("STYLIZER_URL") {
            self.service.stylizer_url = (!v.is_empty()).then_some(v);
        }
        if let Some(v) = lookup("BIND_ADDR") {
            self.service.bind_addr = v;
        }
    }
}
