//! Corpus split and trained models on disk.
//!
//! Layout under `artifacts_dir`: `corpus/{train,val,test}.txt`, `huffman.txt`,
//! `ngram.txt`, `masc.ckpt` and `masc_train_log.csv`.

use std::path::{Path, PathBuf};

use masc_core::corpus::{prepare_corpus, synth, CorpusSplit};
use masc_core::entropy::{huffman_build, unigram_counts, AcConfig, HuffmanTable};
use masc_core::fec::LdpcCode;
use masc_core::source::NgramModel;
use masc_model::train::{train_with, write_log_csv, TrainOutcome};
use masc_model::{MascModel, Params};

use crate::config::{ExperimentConfig, Variant};
use crate::pipeline::Models;
use crate::HarnessError;

pub fn huffman_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.artifacts_dir.join("huffman.txt")
}

pub fn ngram_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.artifacts_dir.join("ngram.txt")
}

pub fn masc_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.artifacts_dir.join("masc.ckpt")
}

pub fn masc_log_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.artifacts_dir.join("masc_train_log.csv")
}

fn write(path: &Path, data: &[u8]) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    std::fs::write(path, data).map_err(|e| HarnessError::io(path, e))
}

fn read(path: &Path, hint: &'static str) -> Result<String, HarnessError> {
    if !path.exists() {
        return Err(HarnessError::MissingArtifact { path: path.to_path_buf(), hint });
    }
    std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

/// Deterministic split of the configured corpus (file or synthetic).
pub fn load_split(cfg: &ExperimentConfig) -> Result<CorpusSplit, HarnessError> {
    let raw = match &cfg.corpus.path {
        Some(p) => std::fs::read(p).map_err(|e| HarnessError::io(p, e))?,
        None => synth::generate(cfg.corpus.synthetic_seed, cfg.corpus.synthetic_sentences).into_bytes(),
    };
    Ok(prepare_corpus(&raw, cfg.corpus.split_seed)?)
}

/// Writes one sentence per line for each split plus a JSON summary.
pub fn write_split(cfg: &ExperimentConfig, split: &CorpusSplit) -> Result<(), HarnessError> {
    let dir = cfg.artifacts_dir.join("corpus");
    for (name, part) in [("train", &split.train), ("val", &split.val), ("test", &split.test)] {
        let mut text = Vec::new();
        for s in CorpusSplit::texts(part) {
            text.extend_from_slice(&s);
            text.push(b'\n');
        }
        write(&dir.join(format!("{name}.txt")), &text)?;
    }
    let meta = serde_json::json!({
        "sentences_before_dedup": split.meta.sentences_before_dedup,
        "train": split.meta.train,
        "val": split.meta.val,
        "test": split.meta.test,
        "max_train_len": split.max_train_len(),
    });
    write(&dir.join("meta.json"), serde_json::to_string_pretty(&meta).expect("json").as_bytes())
}

pub fn build_huffman(split: &CorpusSplit) -> Result<HuffmanTable, HarnessError> {
    Ok(huffman_build(&unigram_counts(split.train.iter()))?)
}

pub fn train_ngram(cfg: &ExperimentConfig, split: &CorpusSplit) -> Result<NgramModel, HarnessError> {
    Ok(NgramModel::train(cfg.ngram.order, cfg.ngram.alpha, split.train.iter())?)
}

/// Trains MASC from `cfg.masc.init_seed`, reporting each log row.
pub fn train_masc(
    cfg: &ExperimentConfig,
    split: &CorpusSplit,
    on_row: impl FnMut(&masc_model::TrainLogRow),
) -> Result<TrainOutcome, HarnessError> {
    Ok(train_with(&cfg.masc, &cfg.train, split, Params::init(&cfg.masc), on_row)?)
}

pub fn save_huffman(cfg: &ExperimentConfig, t: &HuffmanTable) -> Result<(), HarnessError> {
    write(&huffman_path(cfg), t.to_text().as_bytes())
}

pub fn save_ngram(cfg: &ExperimentConfig, m: &NgramModel) -> Result<(), HarnessError> {
    write(&ngram_path(cfg), m.to_table().as_bytes())
}

pub fn save_masc(cfg: &ExperimentConfig, out: &TrainOutcome) -> Result<(), HarnessError> {
    let path = masc_path(cfg);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    MascModel::new(cfg.masc.clone(), out.params.clone())?.save(&path)?;
    let mut log = Vec::new();
    write_log_csv(&out.log, &mut log).expect("writing to memory");
    write(&masc_log_path(cfg), &log)
}

/// Loads what `variants` need; MASC is only read when a MASC variant is requested.
pub fn load_models(cfg: &ExperimentConfig, split: &CorpusSplit, variants: &[Variant]) -> Result<Models, HarnessError> {
    let huffman = HuffmanTable::from_text(&read(&huffman_path(cfg), "build-huffman")?)?;
    let ngram = if variants.contains(&Variant::NgramAc) {
        NgramModel::from_table(&read(&ngram_path(cfg), "train-ngram")?)?
    } else {
        NgramModel::new(1, 1.0)?
    };
    let masc = if variants.iter().any(|v| v.uses_masc()) {
        let path = masc_path(cfg);
        if !path.exists() {
            return Err(HarnessError::MissingArtifact { path, hint: "train-masc" });
        }
        Some(MascModel::load(&path)?)
    } else {
        None
    };
    Ok(assemble(cfg, split, huffman, ngram, masc))
}

/// Packs trained models with the golden code and decoding limits.
pub fn assemble(
    cfg: &ExperimentConfig,
    split: &CorpusSplit,
    huffman: HuffmanTable,
    ngram: NgramModel,
    masc: Option<MascModel>,
) -> Models {
    let masc_ablated = masc.as_ref().map(MascModel::ablated);
    Models {
        huffman,
        ngram,
        masc,
        masc_ablated,
        code: LdpcCode::golden(),
        ac: AcConfig::default(),
        max_tokens: cfg.sweep.guard_factor * split.max_train_len(),
    }
}
