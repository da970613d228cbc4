//! Reconstruction and link metrics.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Token, EOS};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("BLEU reference has no words")]
    EmptyReference,
    #[error("max_order must be in 1..=4, got {0}")]
    BadOrder(usize),
    #[error("bit vectors differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// Precision used in place of a zero n-gram precision.
pub const BLEU_FLOOR: f64 = 1e-9;

/// Lowercased words with ASCII punctuation removed.
pub fn bleu_words(text: &str) -> Vec<String> {
    text.to_lowercase()
        .chars()
        .filter(|c| !c.is_ascii_punctuation())
        .collect::<String>()
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

fn ngram_counts(words: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    for w in words.windows(n) {
        *m.entry(w).or_insert(0) += 1;
    }
    m
}

/// Sentence-level BLEU with clipped precisions, brevity penalty and a
/// geometric mean over orders `1..=max_order`.
///
/// An order for which neither sentence has any n-gram is skipped, so a short
/// sentence scores 1 against itself; an order where only the hypothesis is too
/// short contributes [`BLEU_FLOOR`].
pub fn bleu(reference: &str, hypothesis: &str, max_order: usize) -> Result<f64, EvalError> {
    if !(1..=4).contains(&max_order) {
        return Err(EvalError::BadOrder(max_order));
    }
    let r = bleu_words(reference);
    if r.is_empty() {
        return Err(EvalError::EmptyReference);
    }
    let h = bleu_words(hypothesis);
    if h.is_empty() {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    let mut orders = 0;
    for n in 1..=max_order {
        let total = h.len().saturating_sub(n - 1);
        if total == 0 && r.len() < n {
            continue;
        }
        let p = if total == 0 {
            BLEU_FLOOR
        } else {
            let rc = ngram_counts(&r, n);
            let matched: usize = ngram_counts(&h, n)
                .iter()
                .map(|(g, &c)| c.min(rc.get(g).copied().unwrap_or(0)))
                .sum();
            (matched as f64 / total as f64).max(BLEU_FLOOR)
        };
        log_sum += p.ln();
        orders += 1;
    }
    let precision = (log_sum / orders as f64).exp();
    let (c, rl) = (h.len() as f64, r.len() as f64);
    let bp = if c > rl { 1.0 } else { (1.0 - rl / c).exp() };
    Ok(bp * precision)
}

/// Fraction of differing positions.
pub fn ber(sent: &[bool], received: &[bool]) -> Result<f64, EvalError> {
    if sent.len() != received.len() {
        return Err(EvalError::LengthMismatch(sent.len(), received.len()));
    }
    if sent.is_empty() {
        return Ok(0.0);
    }
    Ok(bit_errors(sent, received) as f64 / sent.len() as f64)
}

pub fn bit_errors(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressionStats {
    pub total_bits: usize,
    pub source_bytes: usize,
    pub bits_per_byte: f64,
}

/// Codelength per source byte; EOS is not counted as a source byte.
pub fn compression_stats(tokens: &[Token], bits: usize) -> CompressionStats {
    let source_bytes = tokens.iter().filter(|&&t| t != EOS).count();
    CompressionStats { total_bits: bits, source_bytes, bits_per_byte: bits as f64 / source_bytes as f64 }
}

/// Pools several sentences: total bits over total bytes.
pub fn pooled_bits_per_byte<'a, I: IntoIterator<Item = &'a CompressionStats>>(stats: I) -> f64 {
    let (bits, bytes) = stats
        .into_iter()
        .fold((0usize, 0usize), |(b, n), s| (b + s.total_bits, n + s.source_bytes));
    bits as f64 / bytes as f64
}

/// Outcome of sending one sentence through the link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub sentence_id: usize,
    pub variant: String,
    pub channel: String,
    pub snr_db: f64,
    pub seed: u64,
    pub source: String,
    pub reconstructed: String,
    /// Source-coded payload length K in bits.
    pub payload_bits: usize,
    /// Transmitted code bits N (header block included).
    pub codeword_bits: usize,
    /// Hard-decision errors on the received code bits before BP.
    pub channel_bit_errors: usize,
    /// Errors on the code bits after BP.
    pub decoded_bit_errors: usize,
    /// Errors on the recovered payload (when the header was consistent).
    pub payload_bit_errors: usize,
    pub exact: bool,
    pub bleu1: f64,
    pub bleu4: f64,
    /// Decoder outcome flag: `ok`, `guard`, `header`, `truncated`.
    pub flag: String,
    pub load2: Option<f64>,
    pub load3: Option<f64>,
    pub load4: Option<f64>,
    pub load5: Option<f64>,
}
