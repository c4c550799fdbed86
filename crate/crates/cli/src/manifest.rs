//! Run manifests written next to every artifact.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

use rlr_core::io::file_sha256;

#[derive(Serialize)]
struct FileRef {
    path: String,
    sha256: String,
}

fn file_ref(path: &Path) -> Result<FileRef> {
    Ok(FileRef {
        path: path.display().to_string(),
        sha256: file_sha256(path).with_context(|| format!("hashing {}", path.display()))?,
    })
}

#[derive(Serialize)]
pub struct Manifest {
    tool: &'static str,
    version: &'static str,
    command: String,
    argv: Vec<String>,
    config: Value,
    seeds: BTreeMap<String, u64>,
    inputs: BTreeMap<String, FileRef>,
    outputs: BTreeMap<String, FileRef>,
    details: BTreeMap<String, Value>,
    started_unix_seconds: u64,
    wall_clock_seconds: f64,
    #[serde(skip)]
    started: Instant,
}

impl Manifest {
    pub fn new<C: Serialize>(command: &str, config: &C) -> Result<Self> {
        Ok(Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            argv: std::env::args().collect(),
            config: serde_json::to_value(config)?,
            seeds: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            details: BTreeMap::new(),
            started_unix_seconds: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            wall_clock_seconds: 0.0,
            started: Instant::now(),
        })
    }

    pub fn seed(&mut self, name: &str, seed: u64) {
        self.seeds.insert(name.to_string(), seed);
    }

    pub fn input(&mut self, role: &str, path: &Path) -> Result<()> {
        self.inputs.insert(role.to_string(), file_ref(path)?);
        Ok(())
    }

    pub fn output(&mut self, role: &str, path: &Path) -> Result<()> {
        self.outputs.insert(role.to_string(), file_ref(path)?);
        Ok(())
    }

    pub fn detail<T: Serialize>(&mut self, key: &str, value: T) -> Result<()> {
        self.details.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    /// Writes `<artifact>.manifest.json` and returns its path.
    pub fn write(mut self, artifact: &Path) -> Result<PathBuf> {
        self.wall_clock_seconds = self.started.elapsed().as_secs_f64();
        let path = manifest_path(artifact);
        let mut json = serde_json::to_string_pretty(&self)?;
        json.push('\n');
        std::fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

pub fn manifest_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}
