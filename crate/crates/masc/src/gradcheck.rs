//! Central finite differences against the analytic gradient.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::MascConfig;
use crate::model::{compute_loss, forward, loss_and_grad, Batch, LossWeights};
use crate::params::Params;
use crate::MascError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckEntry {
    pub name: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    /// `|analytic - numeric| / max(|analytic|, 1e-8)`.
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
    pub max_rel_error: f64,
    /// Parameters whose perturbation flipped a top-k selection.
    pub near_boundary: Vec<(String, usize)>,
    /// Smallest top-k probability margin over the batch.
    pub min_margin: f64,
}

fn selections(p: &Params, cfg: &MascConfig, batch: &Batch) -> Result<Vec<Vec<usize>>, MascError> {
    let mut out = Vec::new();
    for b in 0..batch.len() {
        let n = batch.lengths[b];
        if n > 0 {
            out.extend(forward(p, cfg, &batch.inputs[b][..n])?.routing.into_iter().map(|d| d.selected));
        }
    }
    Ok(out)
}

/// Smallest gap between the k-th and (k+1)-th router probability.
pub fn routing_margin(p: &Params, cfg: &MascConfig, batch: &Batch) -> Result<f64, MascError> {
    let mut m = f64::INFINITY;
    for b in 0..batch.len() {
        let n = batch.lengths[b];
        if n > 0 {
            for d in forward(p, cfg, &batch.inputs[b][..n])?.routing {
                m = m.min(d.margin());
            }
        }
    }
    Ok(m)
}

fn group(name: &str) -> &'static str {
    if name.starts_with("mem.table") {
        "table"
    } else if name.starts_with("mem.w_k") {
        "w_k"
    } else if name.starts_with("mem.w_v") {
        "w_v"
    } else if name.starts_with("mem.w_r") {
        "w_r"
    } else if name.starts_with("mem.conv") {
        "conv"
    } else {
        "backbone"
    }
}

/// Checks `samples` scalars spread evenly over the memory tables (rows the
/// batch touches), W_K, W_V, W_r, the convolution and the backbone.
pub fn grad_check(
    params: &Params,
    cfg: &MascConfig,
    batch: &Batch,
    weights: LossWeights,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<GradCheckReport, MascError> {
    let (_, grads) = loss_and_grad(params, cfg, batch, weights)?;
    let base_sel = selections(params, cfg, batch)?;
    let min_margin = routing_margin(params, cfg, batch)?;
    let loss = |p: &Params| -> Result<f64, MascError> {
        let r = compute_loss(p, cfg, batch)?;
        Ok(weights.ce * r.ce + weights.aux * r.aux)
    };

    let names: Vec<(usize, String)> = params.all().iter().enumerate().map(|(i, t)| (i, t.name.clone())).collect();
    let mut groups: Vec<&'static str> = vec!["table", "w_k", "w_v", "w_r", "conv", "backbone"];
    if !cfg.memory_enabled {
        groups = vec!["backbone"];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut work = params.clone();
    let mut entries = Vec::new();
    let mut near_boundary = Vec::new();
    let per_group = samples.div_ceil(groups.len());
    for g in groups {
        let members: Vec<&(usize, String)> = names.iter().filter(|(_, n)| group(n) == g).collect();
        for _ in 0..per_group {
            let &&(ti, ref name) = members.choose(&mut rng).expect("group is nonempty");
            let index = if g == "table" {
                let tnum = ti - params.dense().len();
                let mut rows: Vec<usize> = grads.tables[tnum].keys().copied().collect();
                rows.sort_unstable();
                match rows.choose(&mut rng) {
                    Some(&r) => r * cfg.slot_dim + rng.random_range(0..cfg.slot_dim),
                    None => continue,
                }
            } else {
                rng.random_range(0..params.all()[ti].len())
            };
            let orig = work.all()[ti].data[index];
            work.all_mut()[ti].data[index] = orig + eps;
            let plus = loss(&work)?;
            let sel_plus = selections(&work, cfg, batch)?;
            work.all_mut()[ti].data[index] = orig - eps;
            let minus = loss(&work)?;
            let sel_minus = selections(&work, cfg, batch)?;
            work.all_mut()[ti].data[index] = orig;
            if sel_plus != base_sel || sel_minus != base_sel {
                near_boundary.push((name.clone(), index));
                continue;
            }
            let numeric = (plus - minus) / (2.0 * eps);
            let analytic = grads.get(params, name, index).expect("index in range");
            let rel_error = (analytic - numeric).abs() / analytic.abs().max(1e-8);
            entries.push(GradCheckEntry { name: name.clone(), index, analytic, numeric, rel_error });
        }
    }
    let max_rel_error = entries.iter().map(|e| e.rel_error).fold(0.0, f64::max);
    Ok(GradCheckReport { entries, max_rel_error, near_boundary, min_margin })
}

/// First `n` sentences whose routing margin is at least `min_margin`, as one batch.
pub fn boundary_safe_batch(
    params: &Params,
    cfg: &MascConfig,
    seqs: &[masc_core::TokenSequence],
    n: usize,
    min_margin: f64,
) -> Result<Batch, MascError> {
    let mut picked = Vec::new();
    for s in seqs {
        if picked.len() == n {
            break;
        }
        let one = Batch::from_sequences(&[s], cfg.max_seq_len);
        if !cfg.memory_enabled || routing_margin(params, cfg, &one)? >= min_margin {
            picked.push(s);
        }
    }
    if picked.is_empty() {
        return Err(MascError::EmptyBatch);
    }
    Ok(Batch::from_sequences(&picked, cfg.max_seq_len))
}
