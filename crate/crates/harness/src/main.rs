use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use masc_core::channel::ChannelConfig;
use masc_harness::artifacts::{self, load_models, load_split};
use masc_harness::manifest::Manifest;
use masc_harness::sweep::write_outputs;
use masc_harness::{run_sweep, run_trial, ExperimentConfig, Variant};
use masc_model::gradcheck::{boundary_safe_batch, grad_check};
use masc_model::{LossWeights, MascConfig, MascModel, Params};

#[derive(Parser)]
#[command(name = "masc", about = "Memory-augmented source coding over a noisy LDPC/BPSK link")]
struct Cli {
    /// Experiment config (TOML); built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set sweep.trials=50`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

/// Shortcuts for the channel keys.
#[derive(Args, Default)]
struct ChannelFlags {
    /// `awgn` or `rayleigh`; comma-separated for a sweep.
    #[arg(long)]
    channel: Option<String>,
    /// SNR in dB; comma-separated for a sweep.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<String>,
    /// `per-symbol` or `fixed-total`.
    #[arg(long)]
    energy_mode: Option<String>,
    /// Reference frame length in symbols; 0 uses each sentence's Huffman frame.
    #[arg(long)]
    n_ref: Option<usize>,
    /// Channel seed (trial t uses seed XOR t in a sweep).
    #[arg(long)]
    seed: Option<u64>,
}

impl ChannelFlags {
    /// Translates the flags into sweep overrides; `list` wraps values as arrays.
    fn overrides(&self, list: bool) -> Vec<String> {
        let wrap = |v: &str, quote: bool| {
            let items: Vec<String> =
                v.split(',').map(|s| if quote { format!("\"{}\"", s.trim()) } else { s.trim().to_string() }).collect();
            if list { format!("[{}]", items.join(",")) } else { items.join(",") }
        };
        let mut o = Vec::new();
        if let Some(c) = &self.channel {
            o.push(format!("sweep.channels={}", wrap(c, true)));
        }
        if let Some(s) = &self.snr_db {
            o.push(format!("sweep.snr_db={}", wrap(s, false)));
        }
        if let Some(m) = &self.energy_mode {
            o.push(format!("sweep.energy_mode=\"{m}\""));
        }
        if let Some(n) = self.n_ref {
            o.push(format!("sweep.n_ref={n}"));
        }
        if let Some(s) = self.seed {
            o.push(format!("sweep.seed={s}"));
        }
        o
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Split the corpus and write it under the artifacts directory.
    PrepareCorpus,
    /// Fit the n-gram baseline on the training split.
    TrainNgram,
    /// Build the Huffman table from training unigram counts.
    BuildHuffman,
    /// Train the MASC model and write the checkpoint and training log.
    TrainMasc,
    /// Send one test sentence through the full pipeline.
    RunTrial {
        /// huffman, ngram-ac, masc-ac or masc-ac-ablated.
        #[arg(long)]
        variant: Variant,
        /// Index into the test split.
        #[arg(long, default_value_t = 0)]
        sentence_id: usize,
        #[command(flatten)]
        channel: ChannelFlags,
    },
    /// Run the configured SNR sweep and write CSV, SVG and manifest files.
    Sweep {
        /// Trials per (variant, channel, SNR) point.
        #[arg(long)]
        trials: Option<usize>,
        #[command(flatten)]
        channel: ChannelFlags,
    },
    /// Compare analytic and finite-difference gradients.
    GradCheck {
        /// Use a trained checkpoint instead of the initial parameters.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Number of parameters to check.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Central-difference step.
        #[arg(long, default_value_t = 1e-5)]
        eps: f64,
        /// Validation sentences in the batch; each must sit at least 10 eps from a routing boundary.
        #[arg(long, default_value_t = 2)]
        sentences: usize,
    },
}

fn config(cli: &Cli, extra: Vec<String>) -> Result<ExperimentConfig> {
    let mut overrides = cli.overrides.clone();
    overrides.extend(extra);
    Ok(ExperimentConfig::load(cli.config.as_deref(), &overrides)?)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.cmd {
        Cmd::PrepareCorpus => {
            let cfg = config(&cli, vec![])?;
            let split = load_split(&cfg)?;
            artifacts::write_split(&cfg, &split)?;
            println!(
                "train {} / val {} / test {} sentences ({} before dedup), longest training sequence {} tokens",
                split.train.len(),
                split.val.len(),
                split.test.len(),
                split.meta.sentences_before_dedup,
                split.max_train_len()
            );
        }
        Cmd::TrainNgram => {
            let cfg = config(&cli, vec![])?;
            let split = load_split(&cfg)?;
            let m = artifacts::train_ngram(&cfg, &split)?;
            artifacts::save_ngram(&cfg, &m)?;
            println!("order-{} n-gram written to {}", cfg.ngram.order, artifacts::ngram_path(&cfg).display());
        }
        Cmd::BuildHuffman => {
            let cfg = config(&cli, vec![])?;
            let split = load_split(&cfg)?;
            let t = artifacts::build_huffman(&split)?;
            artifacts::save_huffman(&cfg, &t)?;
            println!("Huffman table written to {}", artifacts::huffman_path(&cfg).display());
        }
        Cmd::TrainMasc => {
            let cfg = config(&cli, vec![])?;
            let split = load_split(&cfg)?;
            println!("{} parameters", cfg.masc.param_count());
            let out = artifacts::train_masc(&cfg, &split, |r| {
                if let Some(v) = r.val_ce {
                    println!("step {:>6}  L_CE {:.4}  L_aux {:.4}  val {:.4}", r.step, r.ce, r.aux, v);
                }
            })?;
            artifacts::save_masc(&cfg, &out)?;
            println!(
                "val L_CE {:.4} -> {:.4} after {} steps; checkpoint {}",
                out.initial_val_ce,
                out.best_val_ce,
                out.steps_run,
                artifacts::masc_path(&cfg).display()
            );
        }
        Cmd::RunTrial { variant, sentence_id, channel } => {
            let cfg = config(&cli, channel.overrides(true))?;
            let split = load_split(&cfg)?;
            let models = load_models(&cfg, &split, &[*variant])?;
            let tokens = split
                .test
                .get(*sentence_id)
                .with_context(|| format!("test split has {} sentences", split.test.len()))?;
            let huff = models.encode(Variant::Huffman, tokens)?;
            let ch = ChannelConfig {
                kind: cfg.sweep.channels[0],
                snr_db: cfg.sweep.snr_db[0],
                energy: cfg.energy_mode(models.frame_symbols(huff.len())),
                seed: cfg.sweep.seed,
            };
            let r = run_trial(&models, *variant, *sentence_id, tokens, &ch, cfg.sweep.bp_iters)?;
            let mut w = csv::Writer::from_writer(std::io::stdout());
            w.serialize(&r)?;
            w.flush()?;
        }
        Cmd::Sweep { trials, channel } => {
            let mut extra = channel.overrides(true);
            if let Some(t) = trials {
                extra.push(format!("sweep.trials={t}"));
            }
            let cfg = config(&cli, extra)?;
            let split = load_split(&cfg)?;
            let models = load_models(&cfg, &split, &cfg.sweep.variants)?;
            let out = run_sweep(&cfg, &models, &split.test, |r| {
                eprintln!(
                    "{:<16} {:<8} {:>6.1} dB  BLEU-1 {:.3}±{:.3}  BLEU-4 {:.3}±{:.3}  exact {:.3}",
                    r.variant, r.channel, r.snr_db, r.bleu1_mean, r.bleu1_ci95, r.bleu4_mean, r.bleu4_ci95, r.exact_rate
                )
            })?;
            for f in &out.failures {
                eprintln!("trial {} ({} {} {} dB) failed: {}", f.trial, f.variant, f.channel, f.snr_db, f.message);
            }
            let files = write_outputs(&cfg.results_dir, &out)?;
            let inputs = [artifacts::huffman_path(&cfg), artifacts::ngram_path(&cfg), artifacts::masc_path(&cfg)];
            let mut manifest = Manifest::new("sweep", &cfg).with_files(&inputs, &files)?;
            manifest.failed_trials = out.failures.len();
            let path = manifest.write(&cfg.results_dir, &cfg)?;
            println!("{} trials ({} failed); manifest {}", out.trials.len(), out.failures.len(), path.display());
        }
        Cmd::GradCheck { checkpoint, samples, eps, sentences } => {
            let cfg = config(&cli, vec![])?;
            let split = load_split(&cfg)?;
            let (mcfg, params): (MascConfig, Params) = match checkpoint {
                Some(p) => {
                    let m = MascModel::load(p)?;
                    (m.config, m.params)
                }
                None => (cfg.masc.clone(), Params::init(&cfg.masc)),
            };
            let batch = boundary_safe_batch(&params, &mcfg, &split.val, *sentences, 10.0 * eps)?;
            let rep = grad_check(&params, &mcfg, &batch, LossWeights::standard(&mcfg), *eps, *samples, 0)?;
            for e in &rep.entries {
                println!("{:<24} {:>8}  analytic {:+.6e}  numeric {:+.6e}  rel {:.2e}", e.name, e.index, e.analytic, e.numeric, e.rel_error);
            }
            println!(
                "{} entries, {} skipped near a routing boundary, min margin {:.3e}, max relative error {:.3e}",
                rep.entries.len(),
                rep.near_boundary.len(),
                rep.min_margin,
                rep.max_rel_error
            );
            if rep.max_rel_error >= 1e-4 {
                bail!("gradient check failed");
            }
        }
    }
    Ok(())
}
