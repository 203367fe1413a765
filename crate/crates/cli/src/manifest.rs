use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub files: Vec<String>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub tool_version: String,
    pub stages: Vec<StageRecord>,
    /// Set when a stage aborted the run.
    pub failure: Option<String>,
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let canonical = serde_json::to_vec(cfg).expect("config serializes");
    hex::encode(Sha256::digest(&canonical))
}

/// Output directory plus the manifest being accumulated.
pub struct Run {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    current: Option<(String, Instant, Vec<String>)>,
}

impl Run {
    pub fn new(dir: &Path, command: &str, cfg: &ExperimentConfig) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Output { path: dir.display().to_string(), source })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: RunManifest {
                command: command.into(),
                config_hash: config_hash(cfg),
                tool_version: env!("CARGO_PKG_VERSION").into(),
                stages: vec![],
                failure: None,
            },
            current: None,
        })
    }

    pub fn begin(&mut self, stage: &str) {
        self.finish_stage();
        self.current = Some((stage.into(), Instant::now(), vec![]));
    }

    fn finish_stage(&mut self) {
        if let Some((name, start, files)) = self.current.take() {
            self.manifest.stages.push(StageRecord { name, files, wall_seconds: start.elapsed().as_secs_f64() });
        }
    }

    /// Writes `name` inside the output directory via `write` and records it.
    pub fn write<F>(&mut self, name: &str, write: F) -> CliResult<()>
    where
        F: FnOnce(&mut std::io::BufWriter<std::fs::File>) -> resonance_core::Result<()>,
    {
        let path = self.dir.join(name);
        let out_err = |e: std::io::Error| CliError::Output { path: path.display().to_string(), source: e };
        let file = std::fs::File::create(&path).map_err(out_err)?;
        let mut w = std::io::BufWriter::new(file);
        write(&mut w).map_err(|e| match e {
            resonance_core::Error::Io(io) => out_err(io),
            other => CliError::Stage { stage: "write".into(), source: other },
        })?;
        std::io::Write::flush(&mut w).map_err(out_err)?;
        if let Some((_, _, files)) = self.current.as_mut() {
            files.push(name.into());
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            std::io::Write::write_all(w, b"\n")?;
            Ok(())
        })
    }

    /// Closes the last stage and writes manifest.json.
    pub fn close(mut self, failure: Option<&CliError>) -> CliResult<()> {
        self.finish_stage();
        self.manifest.failure = failure.map(|e| e.to_string());
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|source| CliError::Output { path: path.display().to_string(), source })
    }
}
