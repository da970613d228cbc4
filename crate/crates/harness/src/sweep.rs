//! SNR sweeps: every (channel, variant, SNR, trial) combination, aggregated
//! into means with normal-approximation 95% confidence intervals.

use std::path::{Path, PathBuf};

use masc_core::channel::ChannelConfig;
use masc_core::eval::TrialResult;
use masc_core::TokenSequence;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Variant};
use crate::pipeline::{run_trial_encoded, Encoded, Models};
use crate::plot::{line_plot, Series};
use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub variant: String,
    pub channel: String,
    pub snr_db: f64,
    /// Completed trials.
    pub trials: usize,
    /// Trials that raised an error and were excluded.
    pub failed: usize,
    pub bleu1_mean: f64,
    pub bleu1_ci95: f64,
    pub bleu4_mean: f64,
    pub bleu4_ci95: f64,
    pub exact_rate: f64,
    pub payload_bits_mean: f64,
    pub codeword_bits_mean: f64,
    /// Pooled hard-decision BER before BP.
    pub channel_ber: f64,
    /// Pooled code-bit BER after BP.
    pub decoded_ber: f64,
    pub guard_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialFailure {
    pub variant: Variant,
    pub channel: String,
    pub snr_db: f64,
    pub trial: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub trials: Vec<TrialResult>,
    pub summary: Vec<SummaryRow>,
    pub failures: Vec<TrialFailure>,
}

/// Mean and half-width of the 95% normal interval.
pub fn mean_ci95(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * (var / n as f64).sqrt())
}

fn summarise(variant: Variant, channel: &str, snr_db: f64, rows: &[TrialResult], failed: usize) -> SummaryRow {
    let col = |f: fn(&TrialResult) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let (bleu1_mean, bleu1_ci95) = mean_ci95(&col(|r| r.bleu1));
    let (bleu4_mean, bleu4_ci95) = mean_ci95(&col(|r| r.bleu4));
    let n = rows.len().max(1) as f64;
    let code_bits: usize = rows.iter().map(|r| r.codeword_bits).sum();
    let ratio = |e: usize| if code_bits == 0 { f64::NAN } else { e as f64 / code_bits as f64 };
    SummaryRow {
        variant: variant.to_string(),
        channel: channel.to_string(),
        snr_db,
        trials: rows.len(),
        failed,
        bleu1_mean,
        bleu1_ci95,
        bleu4_mean,
        bleu4_ci95,
        exact_rate: rows.iter().filter(|r| r.exact).count() as f64 / n,
        payload_bits_mean: rows.iter().map(|r| r.payload_bits as f64).sum::<f64>() / n,
        codeword_bits_mean: code_bits as f64 / n,
        channel_ber: ratio(rows.iter().map(|r| r.channel_bit_errors).sum()),
        decoded_ber: ratio(rows.iter().map(|r| r.decoded_bit_errors).sum()),
        guard_rate: rows.iter().filter(|r| r.flag == "guard").count() as f64 / n,
    }
}

/// Runs the configured sweep over `sentences` (trial `t` sends sentence `t mod len`).
///
/// Source encodings are computed once per sentence and reused for every SNR
/// point. `progress` receives one line per finished (channel, variant, SNR).
pub fn run_sweep(
    cfg: &ExperimentConfig,
    models: &Models,
    sentences: &[TokenSequence],
    mut progress: impl FnMut(&SummaryRow),
) -> Result<SweepOutput, HarnessError> {
    cfg.validate()?;
    if sentences.is_empty() {
        return Err(HarnessError::Config("no test sentences".into()));
    }
    let s = &cfg.sweep;
    let used = s.trials.min(sentences.len());
    let huffman_symbols: Vec<usize> = sentences[..used]
        .iter()
        .map(|t| models.encode(Variant::Huffman, t).map(|b| models.frame_symbols(b.len())))
        .collect::<Result<_, _>>()?;
    let mut out = SweepOutput { trials: Vec::new(), summary: Vec::new(), failures: Vec::new() };
    for &variant in &s.variants {
        let encoded: Vec<Result<Encoded, String>> =
            sentences[..used].iter().map(|t| models.prepare(variant, t).map_err(|e| e.to_string())).collect();
        for &kind in &s.channels {
            for &snr_db in &s.snr_db {
                let mut rows = Vec::with_capacity(s.trials);
                let mut failed = 0;
                for t in 0..s.trials {
                    let id = t % sentences.len();
                    let channel = ChannelConfig {
                        kind,
                        snr_db,
                        energy: cfg.energy_mode(huffman_symbols[id]),
                        seed: s.seed ^ t as u64,
                    };
                    let result = encoded[id].as_ref().map_err(Clone::clone).and_then(|enc| {
                        run_trial_encoded(models, variant, id, &sentences[id], enc, &channel, s.bp_iters)
                            .map_err(|e| e.to_string())
                    });
                    match result {
                        Ok(r) => rows.push(r),
                        Err(message) => {
                            failed += 1;
                            out.failures.push(TrialFailure {
                                variant,
                                channel: kind.to_string(),
                                snr_db,
                                trial: t,
                                message,
                            });
                        }
                    }
                }
                let row = summarise(variant, &kind.to_string(), snr_db, &rows, failed);
                progress(&row);
                out.summary.push(row);
                out.trials.extend(rows);
            }
        }
    }
    Ok(out)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Writes `trials.csv`, `summary.csv` and one SVG per metric and channel
/// into `dir`; returns the written paths.
pub fn write_outputs(dir: &Path, out: &SweepOutput) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut files = vec![dir.join("trials.csv"), dir.join("summary.csv")];
    write_csv(&files[0], &out.trials)?;
    write_csv(&files[1], &out.summary)?;
    let mut channels: Vec<&str> = out.summary.iter().map(|r| r.channel.as_str()).collect();
    channels.sort_unstable();
    channels.dedup();
    for ch in channels {
        for (metric, label) in [("bleu1", "BLEU-1"), ("bleu4", "BLEU-4")] {
            let mut series: Vec<Series> = Vec::new();
            for r in out.summary.iter().filter(|r| r.channel == ch) {
                let (m, ci) = if metric == "bleu1" { (r.bleu1_mean, r.bleu1_ci95) } else { (r.bleu4_mean, r.bleu4_ci95) };
                match series.iter_mut().find(|s| s.name == r.variant) {
                    Some(s) => s.points.push((r.snr_db, m, ci)),
                    None => series.push(Series { name: r.variant.clone(), points: vec![(r.snr_db, m, ci)] }),
                }
            }
            let path = dir.join(format!("{metric}_{ch}.svg"));
            let svg = line_plot(&format!("{label} vs SNR ({ch})"), "SNR (dB)", label, &series);
            std::fs::write(&path, svg).map_err(|e| HarnessError::io(&path, e))?;
            files.push(path);
        }
    }
    Ok(files)
}

/// Lowest SNR at which the mean BLEU-1 curve reaches `level`, linearly
/// interpolated between grid points; `None` if it never does.
pub fn crossing_snr(points: &[(f64, f64)], level: f64) -> Option<f64> {
    if let Some(&(x0, y0)) = points.first() {
        if y0 >= level {
            return Some(x0);
        }
    }
    points.windows(2).find(|w| w[0].1 < level && w[1].1 >= level).map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        x0 + (level - y0) * (x1 - x0) / (y1 - y0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ci_of_constant_and_known_sample() {
        assert_eq!(mean_ci95(&[0.5; 10]), (0.5, 0.0));
        let (m, ci) = mean_ci95(&[0.0, 1.0]);
        assert_eq!(m, 0.5);
        // sd = sqrt(0.5), n = 2
        assert!((ci - 1.96 * 0.5).abs() < 1e-12);
        assert!(mean_ci95(&[]).0.is_nan());
    }

    #[test]
    fn crossing_interpolates() {
        let pts = [(0.0, 0.1), (2.0, 0.3), (4.0, 0.9)];
        assert!((crossing_snr(&pts, 0.5).unwrap() - (2.0 + 2.0 / 3.0)).abs() < 1e-12);
        assert_eq!(crossing_snr(&pts, 0.05), Some(0.0));
        assert_eq!(crossing_snr(&pts, 0.95), None);
    }
}
