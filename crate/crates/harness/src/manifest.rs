//! Results manifest: configuration hash, seeds and file digests.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Seeds {
    pub corpus: u64,
    pub split: u64,
    pub init: u64,
    pub train: u64,
    pub sweep: u64,
    pub ngram_order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: &'static str,
    pub config_hash: String,
    pub seeds: Seeds,
    pub failed_trials: usize,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn digest(path: &Path) -> Result<FileDigest, HarnessError> {
    let data = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(FileDigest { path: path.to_path_buf(), sha256: hex::encode(Sha256::digest(&data)) })
}

impl Manifest {
    pub fn new(command: &str, cfg: &ExperimentConfig) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION"),
            config_hash: cfg.hash(),
            seeds: Seeds {
                corpus: cfg.corpus.synthetic_seed,
                split: cfg.corpus.split_seed,
                init: cfg.masc.init_seed,
                train: cfg.train.seed,
                sweep: cfg.sweep.seed,
                ngram_order: cfg.ngram.order,
            },
            failed_trials: 0,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Records digests of the existing files among `inputs` and all `outputs`.
    pub fn with_files(mut self, inputs: &[PathBuf], outputs: &[PathBuf]) -> Result<Self, HarnessError> {
        self.inputs = inputs.iter().filter(|p| p.exists()).map(|p| digest(p)).collect::<Result<_, _>>()?;
        self.outputs = outputs.iter().map(|p| digest(p)).collect::<Result<_, _>>()?;
        Ok(self)
    }

    /// Writes `manifest.json` and a copy of the effective config into `dir`.
    pub fn write(&self, dir: &Path, cfg: &ExperimentConfig) -> Result<PathBuf, HarnessError> {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        let cfg_path = dir.join("config.toml");
        std::fs::write(&cfg_path, cfg.to_toml()).map_err(|e| HarnessError::io(&cfg_path, e))?;
        let path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(self).expect("manifest serialises");
        std::fs::write(&path, json + "\n").map_err(|e| HarnessError::io(&path, e))?;
        Ok(path)
    }
}
