//! Output directory with a manifest of every file written.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use confgeo::digest::ManifestEntry;
use serde::Serialize;

use crate::config::RunConfig;

pub struct Artifacts {
    dir: PathBuf,
    inputs: Vec<ManifestEntry>,
    outputs: Vec<ManifestEntry>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    inputs: &'a [ManifestEntry],
    outputs: &'a [ManifestEntry],
    pass: bool,
}

pub fn to_json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), inputs: Vec::new(), outputs: Vec::new() })
    }

    pub fn input(&mut self, entry: ManifestEntry) {
        self.inputs.push(entry);
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(ManifestEntry::new(name, bytes));
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, &to_json_bytes(value)?)
    }

    pub fn field(&mut self, name: &str, field: &[f64]) -> Result<()> {
        let mut bytes = Vec::new();
        confgeo::fields::write_field_json(field, &mut bytes)?;
        self.write(&format!("fields/{name}.json"), &bytes)
    }

    /// Writes `manifest.json` last, so it lists every other output.
    pub fn finish(self, config: &RunConfig, pass: bool) -> Result<()> {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config,
            inputs: &self.inputs,
            outputs: &self.outputs,
            pass,
        };
        let bytes = to_json_bytes(&manifest)?;
        std::fs::write(self.dir.join("manifest.json"), bytes)?;
        Ok(())
    }
}
