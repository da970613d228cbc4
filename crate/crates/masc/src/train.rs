//! Adam training loop with sparse table updates and validation early stopping.

use std::io::Write;

use masc_core::corpus::CorpusSplit;
use masc_core::TokenSequence;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{MascConfig, N_EXPERTS};
use crate::model::{compute_loss, loss_and_grad, Batch, Grads, LossWeights};
use crate::params::Params;
use crate::routing::RoutingStats;
use crate::MascError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub warmup_steps: usize,
    /// Cosine decay floor as a fraction of `lr`.
    pub min_lr_frac: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub grad_clip: f64,
    pub seed: u64,
    pub eval_every: usize,
    /// Validation sentences used per evaluation (0 = all).
    pub val_sentences: usize,
    /// Evaluations without improvement before stopping (0 = never stop).
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            batch_size: 32,
            lr: 3e-4,
            warmup_steps: 100,
            min_lr_frac: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            grad_clip: 1.0,
            seed: 0,
            eval_every: 100,
            val_sentences: 500,
            patience: 0,
        }
    }
}

impl TrainConfig {
    pub fn lr_at(&self, step: usize) -> f64 {
        if step < self.warmup_steps {
            return self.lr * (step + 1) as f64 / self.warmup_steps as f64;
        }
        let span = self.steps.saturating_sub(self.warmup_steps).max(1) as f64;
        let t = ((step - self.warmup_steps) as f64 / span).min(1.0);
        let cos = 0.5 * (1.0 + (std::f64::consts::PI * t).cos());
        self.lr * (self.min_lr_frac + (1.0 - self.min_lr_frac) * cos)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRow {
    pub step: usize,
    pub ce: f64,
    pub aux: f64,
    pub load: [f64; N_EXPERTS],
    pub val_ce: Option<f64>,
}

pub const LOG_HEADER: &str = "step,L_CE,L_aux,Load_2,Load_3,Load_4,Load_5,val_L_CE";

pub fn write_log_csv<W: Write>(rows: &[TrainLogRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{LOG_HEADER}")?;
    for r in rows {
        let val = r.val_ce.map(|v| format!("{v:.6}")).unwrap_or_default();
        writeln!(
            w,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            r.step, r.ce, r.aux, r.load[0], r.load[1], r.load[2], r.load[3], val
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters with the best validation loss.
    pub params: Params,
    pub log: Vec<TrainLogRow>,
    pub initial_val_ce: f64,
    pub best_val_ce: f64,
    pub steps_run: usize,
}

/// Mean per-token cross-entropy over sentences, batched.
pub fn evaluate(p: &Params, cfg: &MascConfig, seqs: &[TokenSequence]) -> Result<f64, MascError> {
    let (mut nll, mut n) = (0.0, 0usize);
    for chunk in seqs.chunks(32) {
        let refs: Vec<&TokenSequence> = chunk.iter().collect();
        let r = compute_loss(p, cfg, &Batch::from_sequences(&refs, cfg.max_seq_len))?;
        nll += r.ce * r.valid as f64;
        n += r.valid;
    }
    Ok(nll / n as f64)
}

/// Routing statistics accumulated over sentences (teacher forcing).
pub fn routing_stats(p: &Params, cfg: &MascConfig, seqs: &[TokenSequence]) -> Result<RoutingStats, MascError> {
    let mut stats = RoutingStats::new(cfg.top_k);
    for chunk in seqs.chunks(32) {
        let refs: Vec<&TokenSequence> = chunk.iter().collect();
        let r = compute_loss(p, cfg, &Batch::from_sequences(&refs, cfg.max_seq_len))?;
        let mut s = RoutingStats::new(cfg.top_k);
        s.positions = r.valid;
        s.importance = r.imp.map(|v| v * r.valid as f64);
        s.selections = r.load.map(|v| v * (r.valid * cfg.top_k) as f64);
        stats.merge(&s);
    }
    Ok(stats)
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    tm: Vec<Vec<f64>>,
    tv: Vec<Vec<f64>>,
    t: i32,
}

impl Adam {
    fn new(p: &Params) -> Self {
        let dense: Vec<Vec<f64>> = p.dense().iter().map(|t| vec![0.0; t.len()]).collect();
        let tables: Vec<Vec<f64>> = p.memory.tables.iter().map(|t| vec![0.0; t.len()]).collect();
        Self { m: dense.clone(), v: dense, tm: tables.clone(), tv: tables, t: 0 }
    }

    fn step(&mut self, p: &mut Params, g: &Grads, tc: &TrainConfig, lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - tc.beta1.powi(self.t);
        let bc2 = 1.0 - tc.beta2.powi(self.t);
        let (b1, b2, eps) = (tc.beta1, tc.beta2, tc.adam_eps);
        let upd = |w: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *w -= lr * (*m / bc1) / ((*v / bc2).sqrt() + eps);
        };
        let (dense, tables) = p.split_mut();
        for (i, (t, gt)) in dense.into_iter().zip(g.dense.dense()).enumerate() {
            for (j, w) in t.data.iter_mut().enumerate() {
                upd(w, gt.data[j], &mut self.m[i][j], &mut self.v[i][j]);
            }
        }
        // lazy: only rows that received gradient are touched
        for (ti, rows) in g.tables.iter().enumerate() {
            let width = tables[ti].shape[1];
            let mut keys: Vec<&usize> = rows.keys().collect();
            keys.sort_unstable();
            for &r in keys {
                let grow = &rows[&r];
                for (c, &gv) in grow.iter().enumerate() {
                    let k = r * width + c;
                    upd(&mut tables[ti].data[k], gv, &mut self.tm[ti][k], &mut self.tv[ti][k]);
                }
            }
        }
    }
}

/// Trains from `cfg.init_seed`; batches are drawn with `tc.seed`.
pub fn train(cfg: &MascConfig, tc: &TrainConfig, split: &CorpusSplit) -> Result<TrainOutcome, MascError> {
    train_with(cfg, tc, split, Params::init(cfg), |_| {})
}

/// Like [`train`] from given parameters, calling `on_row` for every log row.
pub fn train_with(
    cfg: &MascConfig,
    tc: &TrainConfig,
    split: &CorpusSplit,
    mut params: Params,
    mut on_row: impl FnMut(&TrainLogRow),
) -> Result<TrainOutcome, MascError> {
    cfg.validate()?;
    if split.train.is_empty() {
        return Err(MascError::EmptyCorpus);
    }
    let val: &[TokenSequence] = if tc.val_sentences == 0 || split.val.len() <= tc.val_sentences {
        &split.val
    } else {
        &split.val[..tc.val_sentences]
    };
    let eval = |p: &Params| if val.is_empty() { Ok(f64::NAN) } else { evaluate(p, cfg, val) };
    let initial_val_ce = eval(&params)?;
    let mut best_val_ce = initial_val_ce;
    let mut best = params.clone();
    let mut since_best = 0;
    let mut adam = Adam::new(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    let weights = LossWeights::standard(cfg);
    let mut log = Vec::new();
    let mut steps_run = 0;
    for step in 0..tc.steps {
        let seqs: Vec<&TokenSequence> =
            (0..tc.batch_size).map(|_| &split.train[rng.random_range(0..split.train.len())]).collect();
        let batch = Batch::from_sequences(&seqs, cfg.max_seq_len);
        let (report, mut grads) = loss_and_grad(&params, cfg, &batch, weights)?;
        if !report.total.is_finite() {
            return Err(MascError::Diverged { step, detail: format!("loss {}", report.total) });
        }
        let norm = grads.norm();
        if !norm.is_finite() {
            return Err(MascError::Diverged { step, detail: format!("gradient norm {norm}") });
        }
        if norm > tc.grad_clip {
            grads.scale(tc.grad_clip / norm);
        }
        adam.step(&mut params, &grads, tc, tc.lr_at(step));
        steps_run = step + 1;
        let last = step + 1 == tc.steps;
        let val_ce = if tc.eval_every > 0 && ((step + 1) % tc.eval_every == 0 || last) {
            let v = eval(&params)?;
            if !v.is_finite() && !val.is_empty() {
                return Err(MascError::Diverged { step, detail: format!("validation loss {v}") });
            }
            Some(v)
        } else {
            None
        };
        let row = TrainLogRow { step: step + 1, ce: report.ce, aux: report.aux, load: report.load, val_ce };
        on_row(&row);
        log.push(row);
        if let Some(v) = val_ce {
            if v < best_val_ce || best_val_ce.is_nan() {
                best_val_ce = v;
                best = params.clone();
                since_best = 0;
            } else {
                since_best += 1;
                if tc.patience > 0 && since_best >= tc.patience {
                    break;
                }
            }
        }
    }
    if tc.eval_every == 0 || val.is_empty() {
        best = params;
    }
    Ok(TrainOutcome { params: best, log, initial_val_ce, best_val_ce, steps_run })
}
