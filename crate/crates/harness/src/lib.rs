//! Experiment harness: builds the source models, runs end-to-end trials and
//! SNR sweeps, and writes CSV, SVG and manifest files.

pub mod artifacts;
pub mod config;
pub mod manifest;
pub mod pipeline;
pub mod plot;
pub mod sweep;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{ExperimentConfig, Variant};
pub use pipeline::{run_trial, Models};
pub use sweep::{run_sweep, SummaryRow, SweepOutput};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("model for {0} is not loaded")]
    MissingModel(String),
    #[error("artifact {path} is missing; run `masc {hint}` first")]
    MissingArtifact { path: PathBuf, hint: &'static str },
    #[error(transparent)]
    Corpus(#[from] masc_core::corpus::CorpusError),
    #[error(transparent)]
    Entropy(#[from] masc_core::entropy::EntropyError),
    #[error(transparent)]
    Ngram(#[from] masc_core::source::NgramError),
    #[error(transparent)]
    Fec(#[from] masc_core::fec::FecError),
    #[error(transparent)]
    Channel(#[from] masc_core::channel::ChannelError),
    #[error(transparent)]
    Model(#[from] masc_model::MascError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }
}
