use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::bodies::SystemModel;
use crate::error::Result;
use crate::propagate::IntegratorSettings;

/// Provenance written next to every artifact as `<file>.meta.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub toolkit: String,
    pub version: String,
    pub command: String,
    pub config: String,
    pub model_hash: String,
    pub model: SystemModel,
    pub integrator: IntegratorSettings,
    pub extra: BTreeMap<String, Value>,
}

impl Metadata {
    pub fn new(command: &str, config: &Path, model: &SystemModel, integrator: &IntegratorSettings) -> Self {
        Metadata {
            toolkit: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.display().to_string(),
            model_hash: model.hash(),
            model: model.clone(),
            integrator: *integrator,
            extra: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.extra
            .insert(key.into(), serde_json::to_value(value).expect("metadata value serializes"));
        self
    }

    pub fn sidecar_path(file: &Path) -> PathBuf {
        let mut name = file.file_name().unwrap_or_default().to_os_string();
        name.push(".meta.json");
        file.with_file_name(name)
    }

    /// Writes the sidecar for `file` and returns its path.
    pub fn attach(&self, file: &Path) -> Result<PathBuf> {
        let path = Self::sidecar_path(file);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }
}
