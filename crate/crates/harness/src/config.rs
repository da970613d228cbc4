//! Experiment configuration: one TOML file, any key overridable as `a.b=value`.

use std::path::{Path, PathBuf};

use masc_core::channel::{ChannelKind, EnergyMode};
use masc_model::{MascConfig, TrainConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Huffman,
    NgramAc,
    MascAc,
    /// The trained MASC checkpoint with tables, W_V and the conv bias zeroed.
    MascAcAblated,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Huffman, Variant::NgramAc, Variant::MascAc, Variant::MascAcAblated];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Huffman => "huffman",
            Variant::NgramAc => "ngram-ac",
            Variant::MascAc => "masc-ac",
            Variant::MascAcAblated => "masc-ac-ablated",
        }
    }

    pub fn is_arithmetic(self) -> bool {
        self != Variant::Huffman
    }

    pub fn uses_masc(self) -> bool {
        matches!(self, Variant::MascAc | Variant::MascAcAblated)
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Variant {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown variant {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyModeName {
    PerSymbol,
    FixedTotal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    /// Plain-text corpus; the built-in synthetic generator is used when unset.
    pub path: Option<PathBuf>,
    pub synthetic_sentences: usize,
    pub synthetic_seed: u64,
    pub split_seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self { path: None, synthetic_sentences: 20_000, synthetic_seed: 1, split_seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub variants: Vec<Variant>,
    pub channels: Vec<ChannelKind>,
    pub snr_db: Vec<f64>,
    /// Trials per (variant, channel, SNR); trial `t` sends test sentence `t mod n_test`.
    pub trials: usize,
    /// Trial `t` uses channel seed `seed ^ t`.
    pub seed: u64,
    pub energy_mode: EnergyModeName,
    /// Reference frame length in symbols; 0 means the Huffman frame of the same sentence.
    pub n_ref: usize,
    pub bp_iters: usize,
    /// Decoding stops after `guard_factor` times the longest training sentence.
    pub guard_factor: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            variants: Variant::ALL.to_vec(),
            channels: vec![ChannelKind::Awgn, ChannelKind::Rayleigh],
            snr_db: (-12..=6).map(|s| s as f64).collect(),
            trials: 500,
            seed: 2024,
            energy_mode: EnergyModeName::FixedTotal,
            n_ref: 0,
            bp_iters: 50,
            guard_factor: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NgramConfig {
    pub order: usize,
    pub alpha: f64,
}

impl Default for NgramConfig {
    fn default() -> Self {
        Self { order: 3, alpha: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub results_dir: PathBuf,
    /// Trained models and the prepared corpus split.
    pub artifacts_dir: PathBuf,
    pub corpus: CorpusConfig,
    pub sweep: SweepConfig,
    pub ngram: NgramConfig,
    pub masc: MascConfig,
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            results_dir: "results".into(),
            artifacts_dir: "artifacts".into(),
            corpus: CorpusConfig::default(),
            sweep: SweepConfig::default(),
            ngram: NgramConfig::default(),
            masc: MascConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn parse_value(value: &str) -> toml::Value {
    match format!("v = {value}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key v was just parsed"),
        Err(_) => toml::Value::String(value.to_string()),
    }
}

/// Applies `key.path=value` to a TOML table, creating intermediate tables.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), HarnessError> {
    let (key, value) = spec
        .split_once('=')
        .ok_or_else(|| HarnessError::Config(format!("override {spec:?} is not key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    let (last, path) = parts.split_last().expect("split yields at least one part");
    let mut t = table;
    for p in path {
        let entry = t.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        t = entry
            .as_table_mut()
            .ok_or_else(|| HarnessError::Config(format!("{key}: {p} is not a table")))?;
    }
    t.insert(last.to_string(), parse_value(value.trim()));
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self, HarnessError> {
        let mut table: toml::Table = text.parse().map_err(|e| HarnessError::Config(format!("{e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: Self = table.try_into().map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, HarnessError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| HarnessError::io(p, e))?,
            None => String::new(),
        };
        Self::from_toml(&text, overrides)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let s = &self.sweep;
        if s.trials == 0 {
            return Err(HarnessError::Config("sweep.trials must be at least 1".into()));
        }
        if s.snr_db.is_empty() || s.snr_db.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(HarnessError::Config("sweep.snr_db must be non-empty and strictly increasing".into()));
        }
        if s.snr_db.iter().any(|v| !v.is_finite()) {
            return Err(HarnessError::Config("sweep.snr_db must be finite".into()));
        }
        if s.variants.is_empty() || s.channels.is_empty() {
            return Err(HarnessError::Config("sweep needs at least one variant and one channel".into()));
        }
        if s.guard_factor == 0 || s.bp_iters == 0 {
            return Err(HarnessError::Config("sweep.guard_factor and sweep.bp_iters must be positive".into()));
        }
        if self.masc.vocab_size != masc_core::VOCAB_SIZE {
            return Err(HarnessError::Config(format!("masc.vocab_size must be {}", masc_core::VOCAB_SIZE)));
        }
        self.masc.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    /// Energy mode for a sentence whose Huffman frame has `huffman_symbols` symbols.
    pub fn energy_mode(&self, huffman_symbols: usize) -> EnergyMode {
        match self.sweep.energy_mode {
            EnergyModeName::PerSymbol => EnergyMode::PerSymbol,
            EnergyModeName::FixedTotal => {
                let n_ref = if self.sweep.n_ref > 0 { self.sweep.n_ref } else { huffman_symbols };
                EnergyMode::FixedTotal { n_ref }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml(&cfg.to_toml(), &[]).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let o = |s: &str| s.to_string();
        let cfg = ExperimentConfig::from_toml(
            "[sweep]\ntrials = 3\n",
            &[o("sweep.trials=7"), o("sweep.channels=[\"awgn\"]"), o("masc.d_model=32"), o("results_dir=out/x")],
        )
        .unwrap();
        assert_eq!(cfg.sweep.trials, 7);
        assert_eq!(cfg.sweep.channels, vec![ChannelKind::Awgn]);
        assert_eq!(cfg.masc.d_model, 32);
        assert_eq!(cfg.results_dir, PathBuf::from("out/x"));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(ExperimentConfig::from_toml("[sweep]\nsnr_db = [1.0, 1.0]\n", &[]).is_err());
        assert!(ExperimentConfig::from_toml("[sweep]\ntrials = 0\n", &[]).is_err());
        assert!(ExperimentConfig::from_toml("bogus = 1\n", &[]).is_err());
        assert!(ExperimentConfig::from_toml("", &["sweep.variants=[\"lz77\"]".into()]).is_err());
    }

    #[test]
    fn energy_mode_uses_huffman_reference() {
        let mut cfg = ExperimentConfig::default();
        assert_eq!(cfg.energy_mode(441), EnergyMode::FixedTotal { n_ref: 441 });
        cfg.sweep.n_ref = 1000;
        assert_eq!(cfg.energy_mode(441), EnergyMode::FixedTotal { n_ref: 1000 });
        cfg.sweep.energy_mode = EnergyModeName::PerSymbol;
        assert_eq!(cfg.energy_mode(441), EnergyMode::PerSymbol);
    }
}
