//! AWGN and block-Rayleigh channels with a unified SNR definition.
//!
//! The noise variance is always `10^(-snr_db/10)`. Under the fixed-total
//! energy budget a frame of `n` symbols is sent with amplitude
//! `sqrt(n_ref / n)`, so its total energy equals `n_ref` whatever its length.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fec::LlrVector;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("noise variance must be positive, got {0}")]
    NonPositiveVariance(f64),
    #[error("frame length must be at least one symbol")]
    EmptyFrame,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Awgn,
    Rayleigh,
}

impl std::fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ChannelKind::Awgn => "awgn",
            ChannelKind::Rayleigh => "rayleigh",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum EnergyMode {
    /// Unit amplitude per symbol.
    PerSymbol,
    /// Frame energy fixed to `n_ref` whatever the frame length.
    FixedTotal { n_ref: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub kind: ChannelKind,
    pub snr_db: f64,
    pub energy: EnergyMode,
    pub seed: u64,
}

/// Noise variance and transmit amplitude for a frame of `n` symbols.
pub fn snr_to_sigma(snr_db: f64, energy: EnergyMode, n: usize) -> Result<(f64, f64), ChannelError> {
    if n == 0 {
        return Err(ChannelError::EmptyFrame);
    }
    let sigma2 = 10f64.powf(-snr_db / 10.0);
    let amplitude = match energy {
        EnergyMode::PerSymbol => 1.0,
        EnergyMode::FixedTotal { n_ref } => (n_ref as f64 / n as f64).sqrt(),
    };
    Ok((sigma2, amplitude))
}

/// `LLR_j = 2·a·h·y_j / σ²`, clipped.
pub fn compute_llr(y: &[f64], h: f64, sigma2: f64, amplitude: f64) -> Result<LlrVector, ChannelError> {
    if !(sigma2 > 0.0) {
        return Err(ChannelError::NonPositiveVariance(sigma2));
    }
    let scale = 2.0 * amplitude * h / sigma2;
    Ok(LlrVector::new(y.iter().map(|&v| scale * v).collect()))
}

/// Stateful channel; noise and fading use independent ChaCha streams.
#[derive(Debug, Clone)]
pub struct Channel {
    kind: ChannelKind,
    noise: ChaCha8Rng,
    fading: ChaCha8Rng,
}

impl Channel {
    pub fn new(kind: ChannelKind, seed: u64) -> Self {
        let mut noise = ChaCha8Rng::seed_from_u64(seed);
        noise.set_stream(1);
        let mut fading = ChaCha8Rng::seed_from_u64(seed);
        fading.set_stream(2);
        Self { kind, noise, fading }
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    /// Draws the block gain: 1 for AWGN, Rayleigh with unit mean-square otherwise.
    pub fn draw_gain(&mut self) -> f64 {
        match self.kind {
            ChannelKind::Awgn => 1.0,
            ChannelKind::Rayleigh => {
                let a: f64 = StandardNormal.sample(&mut self.fading);
                let b: f64 = StandardNormal.sample(&mut self.fading);
                (a * a + b * b).sqrt() * std::f64::consts::FRAC_1_SQRT_2
            }
        }
    }

    /// One codeword through `y = h·a·x + z`; returns `(y, h)`.
    pub fn transmit(&mut self, symbols: &[f64], amplitude: f64, sigma2: f64) -> (Vec<f64>, f64) {
        let h = self.draw_gain();
        let sigma = sigma2.sqrt();
        let y = symbols
            .iter()
            .map(|&x| {
                let z: f64 = StandardNormal.sample(&mut self.noise);
                h * amplitude * x + sigma * z
            })
            .collect();
        (y, h)
    }
}
