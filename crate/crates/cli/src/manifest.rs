use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;

pub const MANIFEST_NAME: &str = "manifest.toml";

/// Record of one invocation, written to the output directory before any
/// data file and rewritten with the list of outputs when the run ends.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub output_dir: String,
    pub seed: u64,
    pub status: String,
    pub config_source: String,
    /// The configuration after defaults were applied, as TOML.
    pub resolved_config: String,
    pub parameters: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    #[serde(skip)]
    dir: PathBuf,
}

impl RunManifest {
    pub fn new(subcommand: &str, dir: &Path, seed: u64) -> Self {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Self {
            subcommand: subcommand.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp,
            output_dir: dir.display().to_string(),
            seed,
            status: "running".into(),
            config_source: String::new(),
            resolved_config: String::new(),
            parameters: BTreeMap::new(),
            outputs: Vec::new(),
            dir: dir.to_path_buf(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn write(&self) -> anyhow::Result<()> {
        fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        let text = toml::to_string(self).context("serializing run manifest")?;
        let path = self.dir.join(MANIFEST_NAME);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    /// Writes a data file into the output directory and lists it.
    pub fn emit(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> anyhow::Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(name.to_string());
        Ok(path)
    }

    pub fn finish(&mut self, status: &str) -> anyhow::Result<()> {
        self.status = status.to_string();
        self.write()
    }
}
