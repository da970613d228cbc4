//! Batched forward pass, loss and hand-written backward pass.

use std::collections::HashMap;

use masc_core::{Token, TokenSequence, BOS};

use crate::config::{MascConfig, N_EXPERTS, ORDERS};
use crate::hash::{hash_index, suffix_context};
use crate::linalg::{
    alibi_slope, dot, linear, linear_backward, matvec, matvec_t_acc, outer_acc, rmsnorm, rmsnorm_backward, sigmoid,
    silu, silu_grad, softmax_inplace,
};
use crate::params::Params;
use crate::routing::{route_logits, RoutingDecision, RoutingStats};
use crate::MascError;

/// Right-padded batch of input/target pairs; positions at or beyond
/// `lengths[b]` are padding and never contribute to any loss term.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub inputs: Vec<Vec<Token>>,
    pub targets: Vec<Vec<Token>>,
    pub lengths: Vec<usize>,
}

impl Batch {
    /// Inputs `[BOS, t1..t(N-1)]` predicting `[t1..tN]`, cut to `max_len` positions.
    pub fn from_sequences(seqs: &[&TokenSequence], max_len: usize) -> Self {
        let lengths: Vec<usize> = seqs.iter().map(|s| s.len().min(max_len)).collect();
        let width = lengths.iter().copied().max().unwrap_or(0);
        let mut inputs = Vec::with_capacity(seqs.len());
        let mut targets = Vec::with_capacity(seqs.len());
        for (s, &n) in seqs.iter().zip(&lengths) {
            let t = s.as_slice();
            let mut inp = vec![BOS; width];
            inp[1..n].copy_from_slice(&t[..n - 1]);
            let mut tgt = vec![BOS; width];
            tgt[..n].copy_from_slice(&t[..n]);
            inputs.push(inp);
            targets.push(tgt);
        }
        Self { inputs, targets, lengths }
    }

    pub fn valid_positions(&self) -> usize {
        self.lengths.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    pub ce: f64,
    pub aux: f64,
    pub total: f64,
    pub imp: [f64; N_EXPERTS],
    pub load: [f64; N_EXPERTS],
    /// `|Ω|`.
    pub valid: usize,
}

/// Multipliers applied to the two loss terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub ce: f64,
    pub aux: f64,
}

impl LossWeights {
    pub fn standard(cfg: &MascConfig) -> Self {
        Self { ce: 1.0, aux: cfg.lambda_aux }
    }
}

/// Gradients; table gradients are sparse by row.
#[derive(Debug, Clone)]
pub struct Grads {
    pub dense: Params,
    /// One map per table from row index to row gradient.
    pub tables: Vec<HashMap<usize, Vec<f64>>>,
}

impl Grads {
    pub fn zeros(params: &Params) -> Self {
        Self { dense: params.zeros_like(false), tables: vec![HashMap::new(); params.memory.tables.len()] }
    }

    pub fn norm(&self) -> f64 {
        let dense: f64 = self.dense.dense().iter().map(|t| dot(&t.data, &t.data)).sum();
        let tables: f64 = self.tables.iter().flat_map(|m| m.values()).map(|r| dot(r, r)).sum();
        (dense + tables).sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        for t in self.dense.dense_mut() {
            t.data.iter_mut().for_each(|v| *v *= s);
        }
        for r in self.tables.iter_mut().flat_map(|m| m.values_mut()) {
            r.iter_mut().for_each(|v| *v *= s);
        }
    }

    /// Gradient of one scalar by tensor name and flat index.
    pub fn get(&self, params: &Params, name: &str, index: usize) -> Option<f64> {
        if let Some(t) = self.dense.dense().into_iter().find(|t| t.name == name) {
            return t.data.get(index).copied();
        }
        let ti = params.memory.tables.iter().position(|t| t.name == name)?;
        let w = params.memory.tables[ti].shape[1];
        Some(self.tables[ti].get(&(index / w)).map_or(0.0, |r| r[index % w]))
    }
}

struct MemCache {
    u: Vec<f64>,
    rh: Vec<f64>,
    decisions: Vec<RoutingDecision>,
    /// Table row per (position, table).
    rows: Vec<usize>,
    e: Vec<f64>,
    kk: Vec<f64>,
    rk: Vec<f64>,
    kn: Vec<f64>,
    v: Vec<f64>,
    beta: Vec<f64>,
    vt: Vec<f64>,
    rvt: Vec<f64>,
    w: Vec<f64>,
    c: Vec<f64>,
}

struct LayerCache {
    x_in: Vec<f64>,
    mem: Option<MemCache>,
    x_attn_in: Vec<f64>,
    r1: Vec<f64>,
    a: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    /// heads × N × N attention weights (upper triangle zero).
    probs: Vec<f64>,
    o: Vec<f64>,
    x_mid: Vec<f64>,
    r2: Vec<f64>,
    b: Vec<f64>,
    u: Vec<f64>,
    s: Vec<f64>,
}

struct SeqCache {
    n: usize,
    layers: Vec<LayerCache>,
    x_final: Vec<f64>,
    rf: Vec<f64>,
    cf: Vec<f64>,
    /// Softmax of the logits, N × V.
    probs: Vec<f64>,
}

impl SeqCache {
    fn decisions(&self) -> impl Iterator<Item = &RoutingDecision> {
        self.layers.iter().filter_map(|l| l.mem.as_ref()).flat_map(|m| m.decisions.iter())
    }
}

/// Logits and routing for every position of one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub vocab_size: usize,
    /// N × V, row-major.
    pub logits: Vec<f64>,
    /// Empty when the memory branch is disabled.
    pub routing: Vec<RoutingDecision>,
}

impl ForwardOutput {
    pub fn positions(&self) -> usize {
        self.logits.len() / self.vocab_size
    }

    pub fn logits_at(&self, i: usize) -> &[f64] {
        &self.logits[i * self.vocab_size..(i + 1) * self.vocab_size]
    }
}

fn norm_rows(x: &[f64], n: usize, d: usize, gain: Option<&[f64]>) -> (Vec<f64>, Vec<f64>) {
    let mut out = vec![0.0; n * d];
    let r = (0..n).map(|i| rmsnorm(&x[i * d..(i + 1) * d], gain, &mut out[i * d..(i + 1) * d])).collect();
    (out, r)
}

fn memory_forward(p: &Params, cfg: &MascConfig, tokens: &[Token], h: &[f64]) -> MemCache {
    let n = tokens.len();
    let d = cfg.d_model;
    let de = cfg.memory_dim();
    let slot = cfg.slot_dim;
    let mh = cfg.hash_heads;
    let mem = &p.memory;
    let (u, rh) = norm_rows(h, n, d, None);
    let mut decisions = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n * N_EXPERTS * mh);
    let mut e = vec![0.0; n * de];
    for i in 0..n {
        let mut r = [0.0; N_EXPERTS];
        matvec(&mem.w_r.data, &u[i * d..(i + 1) * d], &mut r);
        let dec = route_logits(r, cfg.top_k);
        for (x, &order) in ORDERS.iter().enumerate() {
            let ctx = suffix_context(tokens, i + 1, order);
            for m in 0..mh {
                rows.push(hash_index(&ctx, cfg.hash_seed(x, m), cfg.table_size));
            }
        }
        let ei = &mut e[i * de..(i + 1) * de];
        for (&x, &a) in dec.selected.iter().zip(&dec.alpha) {
            for m in 0..mh {
                let row = mem.tables[x * mh + m].row(rows[(i * N_EXPERTS + x) * mh + m]);
                for (o, &v) in ei[m * slot..(m + 1) * slot].iter_mut().zip(row) {
                    *o += a * v;
                }
            }
        }
        decisions.push(dec);
    }
    let kk = linear(&e, n, &mem.w_k.data, d, None);
    let v = linear(&e, n, &mem.w_v.data, d, None);
    let (kn, rk) = norm_rows(&kk, n, d, None);
    let gs = cfg.gate_scale().sqrt();
    let mut beta = vec![0.0; n];
    let mut vt = vec![0.0; n * d];
    for i in 0..n {
        let s = dot(&u[i * d..(i + 1) * d], &kn[i * d..(i + 1) * d]) / gs;
        beta[i] = sigmoid(s);
        for j in 0..d {
            vt[i * d + j] = beta[i] * v[i * d + j];
        }
    }
    let (w, rvt) = norm_rows(&vt, n, d, None);
    let mut c = vec![0.0; n * d];
    for i in 0..n {
        let ci = &mut c[i * d..(i + 1) * d];
        ci.copy_from_slice(&mem.conv_b.data);
        for j in 0..cfg.conv_kernel.min(i + 1) {
            let tap = &mem.conv_w.data[j * d..(j + 1) * d];
            let src = &w[(i - j) * d..(i - j + 1) * d];
            for ((o, &t), &s) in ci.iter_mut().zip(tap).zip(src) {
                *o += t * s;
            }
        }
    }
    MemCache { u, rh, decisions, rows, e, kk, rk, kn, v, beta, vt, rvt, w, c }
}

fn attention_forward(cfg: &MascConfig, n: usize, q: &[f64], k: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d = cfg.d_model;
    let hd = cfg.head_dim();
    let scale = 1.0 / (hd as f64).sqrt();
    let mut probs = vec![0.0; cfg.n_heads * n * n];
    let mut o = vec![0.0; n * d];
    for h in 0..cfg.n_heads {
        let slope = alibi_slope(h, cfg.n_heads);
        let off = h * hd;
        for i in 0..n {
            let qi = &q[i * d + off..i * d + off + hd];
            let row = &mut probs[(h * n + i) * n..(h * n + i) * n + i + 1];
            for (j, p) in row.iter_mut().enumerate() {
                *p = dot(qi, &k[j * d + off..j * d + off + hd]) * scale - slope * (i - j) as f64;
            }
            softmax_inplace(row);
            let oi = &mut o[i * d + off..i * d + off + hd];
            for (j, &p) in row.iter().enumerate() {
                for (a, &b) in oi.iter_mut().zip(&v[j * d + off..j * d + off + hd]) {
                    *a += p * b;
                }
            }
        }
    }
    (o, probs)
}

fn forward_seq(p: &Params, cfg: &MascConfig, tokens: &[Token]) -> Result<SeqCache, MascError> {
    let n = tokens.len();
    if n == 0 {
        return Err(MascError::EmptyInput);
    }
    if n > cfg.max_seq_len {
        return Err(MascError::TooLong { len: n, max: cfg.max_seq_len });
    }
    let (d, f, vsz) = (cfg.d_model, cfg.d_ff, cfg.vocab_size);
    let mut x = Vec::with_capacity(n * d);
    for &t in tokens {
        let t = usize::from(t);
        if t >= vsz {
            return Err(MascError::TokenOutOfRange(t));
        }
        x.extend_from_slice(p.tok_emb.row(t));
    }
    let mut layers = Vec::with_capacity(cfg.n_layers);
    for (l, lp) in p.layers.iter().enumerate() {
        let x_in = x.clone();
        let mem = if cfg.memory_enabled && l == cfg.memory_layer {
            let mc = memory_forward(p, cfg, tokens, &x);
            for i in 0..n * d {
                x[i] += silu(mc.c[i]) + mc.vt[i];
            }
            Some(mc)
        } else {
            None
        };
        let x_attn_in = x.clone();
        let (a, r1) = norm_rows(&x, n, d, Some(&lp.norm1.data));
        let q = linear(&a, n, &lp.wq.data, d, None);
        let k = linear(&a, n, &lp.wk.data, d, None);
        let v = linear(&a, n, &lp.wv.data, d, None);
        let (o, probs) = attention_forward(cfg, n, &q, &k, &v);
        let att = linear(&o, n, &lp.wo.data, d, None);
        for (xi, ai) in x.iter_mut().zip(&att) {
            *xi += ai;
        }
        let x_mid = x.clone();
        let (b, r2) = norm_rows(&x, n, d, Some(&lp.norm2.data));
        let u = linear(&b, n, &lp.w1.data, f, Some(&lp.b1.data));
        let s: Vec<f64> = u.iter().map(|&v| silu(v)).collect();
        let mo = linear(&s, n, &lp.w2.data, d, Some(&lp.b2.data));
        for (xi, mi) in x.iter_mut().zip(&mo) {
            *xi += mi;
        }
        layers.push(LayerCache { x_in, mem, x_attn_in, r1, a, q, k, v, probs, o, x_mid, r2, b, u, s });
    }
    let (cf, rf) = norm_rows(&x, n, d, Some(&p.norm_f.data));
    let mut probs = linear(&cf, n, &p.w_out.data, vsz, Some(&p.b_out.data));
    for row in probs.chunks_exact_mut(vsz) {
        softmax_inplace(row);
    }
    Ok(SeqCache { n, layers, x_final: x, rf, cf, probs })
}

/// Logits for every position of `tokens` (which should start with BOS).
pub fn forward(p: &Params, cfg: &MascConfig, tokens: &[Token]) -> Result<ForwardOutput, MascError> {
    let c = forward_seq(p, cfg, tokens)?;
    let logits = linear(&c.cf, c.n, &p.w_out.data, cfg.vocab_size, Some(&p.b_out.data));
    let routing = c.decisions().cloned().collect();
    Ok(ForwardOutput { vocab_size: cfg.vocab_size, logits, routing })
}

fn forward_batch(p: &Params, cfg: &MascConfig, batch: &Batch) -> Result<(Vec<SeqCache>, LossReport), MascError> {
    let valid = batch.valid_positions();
    if valid == 0 {
        return Err(MascError::EmptyBatch);
    }
    let mut caches = Vec::with_capacity(batch.len());
    let mut nll = 0.0;
    let mut stats = RoutingStats::new(cfg.top_k);
    for b in 0..batch.len() {
        let n = batch.lengths[b];
        if n == 0 {
            continue;
        }
        let c = forward_seq(p, cfg, &batch.inputs[b][..n])?;
        for (i, &t) in batch.targets[b][..n].iter().enumerate() {
            let pr = c.probs[i * cfg.vocab_size + usize::from(t)];
            nll -= pr.max(f64::MIN_POSITIVE).ln();
        }
        for dec in c.decisions() {
            stats.add(dec);
        }
        caches.push(c);
    }
    let ce = nll / valid as f64;
    let (imp, load, aux) = if stats.positions > 0 {
        (stats.imp(), stats.load(), stats.aux())
    } else {
        ([0.0; N_EXPERTS], [0.0; N_EXPERTS], 0.0)
    };
    let report = LossReport { ce, aux, total: ce + cfg.lambda_aux * aux, imp, load, valid };
    Ok((caches, report))
}

/// Loss over a batch without gradients.
pub fn compute_loss(p: &Params, cfg: &MascConfig, batch: &Batch) -> Result<LossReport, MascError> {
    Ok(forward_batch(p, cfg, batch)?.1)
}

/// Loss and gradients of `w.ce · L_CE + w.aux · L_aux`.
pub fn loss_and_grad(
    p: &Params,
    cfg: &MascConfig,
    batch: &Batch,
    w: LossWeights,
) -> Result<(LossReport, Grads), MascError> {
    let (caches, report) = forward_batch(p, cfg, batch)?;
    let mut g = Grads::zeros(p);
    let inv = 1.0 / report.valid as f64;
    // dL/dπ_n from the importance term, identical at every position
    let aux_dpi = report.load.map(|l| w.aux * N_EXPERTS as f64 * l * inv);
    let mut ci = 0;
    for b in 0..batch.len() {
        let n = batch.lengths[b];
        if n == 0 {
            continue;
        }
        let c = &caches[ci];
        ci += 1;
        let mut dlogits = c.probs.clone();
        for (i, &t) in batch.targets[b][..n].iter().enumerate() {
            dlogits[i * cfg.vocab_size + usize::from(t)] -= 1.0;
        }
        dlogits.iter_mut().for_each(|v| *v *= w.ce * inv);
        backward_seq(p, cfg, &batch.inputs[b][..n], c, &dlogits, &aux_dpi, &mut g);
    }
    let total = w.ce * report.ce + w.aux * report.aux;
    Ok((LossReport { total, ..report }, g))
}

fn backward_seq(
    p: &Params,
    cfg: &MascConfig,
    tokens: &[Token],
    c: &SeqCache,
    dlogits: &[f64],
    aux_dpi: &[f64; N_EXPERTS],
    g: &mut Grads,
) {
    let n = c.n;
    let (d, f, vsz) = (cfg.d_model, cfg.d_ff, cfg.vocab_size);
    let gd = &mut g.dense;
    let dcf = linear_backward(&c.cf, n, &p.w_out.data, vsz, dlogits, &mut gd.w_out.data, Some(&mut gd.b_out.data));
    let mut dx = vec![0.0; n * d];
    for i in 0..n {
        let r = i * d..(i + 1) * d;
        rmsnorm_backward(
            &c.x_final[r.clone()],
            c.rf[i],
            Some(&p.norm_f.data),
            &dcf[r.clone()],
            &mut dx[r],
            Some(&mut gd.norm_f.data),
        );
    }
    for l in (0..cfg.n_layers).rev() {
        let lp = &p.layers[l];
        let lc = &c.layers[l];
        let lg = &mut g.dense.layers[l];
        // feed-forward
        let ds = linear_backward(&lc.s, n, &lp.w2.data, d, &dx, &mut lg.w2.data, Some(&mut lg.b2.data));
        let du: Vec<f64> = ds.iter().zip(&lc.u).map(|(a, &u)| a * silu_grad(u)).collect();
        let db = linear_backward(&lc.b, n, &lp.w1.data, f, &du, &mut lg.w1.data, Some(&mut lg.b1.data));
        for i in 0..n {
            let r = i * d..(i + 1) * d;
            rmsnorm_backward(&lc.x_mid[r.clone()], lc.r2[i], Some(&lp.norm2.data), &db[r.clone()], &mut dx[r], Some(&mut lg.norm2.data));
        }
        // attention
        let do_ = linear_backward(&lc.o, n, &lp.wo.data, d, &dx, &mut lg.wo.data, None);
        let (dq, dk, dv) = attention_backward(cfg, n, lc, &do_);
        let mut da = linear_backward(&lc.a, n, &lp.wq.data, d, &dq, &mut lg.wq.data, None);
        for (src, wt, gw) in [(&dk, &lp.wk, &mut lg.wk), (&dv, &lp.wv, &mut lg.wv)] {
            let part = linear_backward(&lc.a, n, &wt.data, d, src, &mut gw.data, None);
            for (a, b) in da.iter_mut().zip(part) {
                *a += b;
            }
        }
        for i in 0..n {
            let r = i * d..(i + 1) * d;
            rmsnorm_backward(&lc.x_attn_in[r.clone()], lc.r1[i], Some(&lp.norm1.data), &da[r.clone()], &mut dx[r], Some(&mut lg.norm1.data));
        }
        if let Some(mc) = &lc.mem {
            let dh = memory_backward(p, cfg, mc, &lc.x_in, &dx, aux_dpi, g);
            for (a, b) in dx.iter_mut().zip(dh) {
                *a += b;
            }
        }
    }
    let gd = &mut g.dense;
    for (i, &t) in tokens.iter().enumerate() {
        let row = usize::from(t) * d;
        for j in 0..d {
            gd.tok_emb.data[row + j] += dx[i * d + j];
        }
    }
}

fn attention_backward(cfg: &MascConfig, n: usize, lc: &LayerCache, do_: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let d = cfg.d_model;
    let hd = cfg.head_dim();
    let scale = 1.0 / (hd as f64).sqrt();
    let mut dq = vec![0.0; n * d];
    let mut dk = vec![0.0; n * d];
    let mut dv = vec![0.0; n * d];
    let mut dp = vec![0.0; n];
    for h in 0..cfg.n_heads {
        let off = h * hd;
        for i in 0..n {
            let row = &lc.probs[(h * n + i) * n..(h * n + i) * n + i + 1];
            let doi = &do_[i * d + off..i * d + off + hd];
            let mut acc = 0.0;
            for (j, &pj) in row.iter().enumerate() {
                let vj = &lc.v[j * d + off..j * d + off + hd];
                dp[j] = dot(doi, vj);
                acc += pj * dp[j];
                for (a, &b) in dv[j * d + off..j * d + off + hd].iter_mut().zip(doi) {
                    *a += pj * b;
                }
            }
            let qi = &lc.q[i * d + off..i * d + off + hd];
            for (j, &pj) in row.iter().enumerate() {
                let ds = pj * (dp[j] - acc) * scale;
                if ds == 0.0 {
                    continue;
                }
                let kj = &lc.k[j * d + off..j * d + off + hd];
                for (a, &b) in dq[i * d + off..i * d + off + hd].iter_mut().zip(kj) {
                    *a += ds * b;
                }
                for (a, &b) in dk[j * d + off..j * d + off + hd].iter_mut().zip(qi) {
                    *a += ds * b;
                }
            }
        }
    }
    (dq, dk, dv)
}

fn memory_backward(
    p: &Params,
    cfg: &MascConfig,
    mc: &MemCache,
    h: &[f64],
    dy: &[f64],
    aux_dpi: &[f64; N_EXPERTS],
    g: &mut Grads,
) -> Vec<f64> {
    let n = mc.decisions.len();
    let d = cfg.d_model;
    let de = cfg.memory_dim();
    let slot = cfg.slot_dim;
    let mh = cfg.hash_heads;
    let mem = &p.memory;
    let gm = &mut g.dense.memory;

    let dc: Vec<f64> = dy.iter().zip(&mc.c).map(|(a, &c)| a * silu_grad(c)).collect();
    let mut dvt = dy.to_vec();
    let mut dw = vec![0.0; n * d];
    for i in 0..n {
        let dci = &dc[i * d..(i + 1) * d];
        for (a, b) in gm.conv_b.data.iter_mut().zip(dci) {
            *a += b;
        }
        for j in 0..cfg.conv_kernel.min(i + 1) {
            let src = (i - j) * d;
            for t in 0..d {
                gm.conv_w.data[j * d + t] += dci[t] * mc.w[src + t];
                dw[src + t] += dci[t] * mem.conv_w.data[j * d + t];
            }
        }
    }
    let gs = cfg.gate_scale().sqrt();
    let mut du = vec![0.0; n * d];
    let mut dv = vec![0.0; n * d];
    let mut dkk = vec![0.0; n * d];
    for i in 0..n {
        let r = i * d..(i + 1) * d;
        rmsnorm_backward(&mc.vt[r.clone()], mc.rvt[i], None, &dw[r.clone()], &mut dvt[r.clone()], None);
        let beta = mc.beta[i];
        let mut dbeta = 0.0;
        for t in r.clone() {
            dv[t] = beta * dvt[t];
            dbeta += dvt[t] * mc.v[t];
        }
        let ds = dbeta * beta * (1.0 - beta) / gs;
        let mut dkn = vec![0.0; d];
        for (t, x) in r.clone().enumerate() {
            du[x] += ds * mc.kn[x];
            dkn[t] = ds * mc.u[x];
        }
        rmsnorm_backward(&mc.kk[r.clone()], mc.rk[i], None, &dkn, &mut dkk[r], None);
    }
    let mut de_all = linear_backward(&mc.e, n, &mem.w_v.data, d, &dv, &mut gm.w_v.data, None);
    let de_k = linear_backward(&mc.e, n, &mem.w_k.data, d, &dkk, &mut gm.w_k.data, None);
    for (a, b) in de_all.iter_mut().zip(de_k) {
        *a += b;
    }

    let mut dh = vec![0.0; n * d];
    for i in 0..n {
        let dec = &mc.decisions[i];
        let de = &de_all[i * de..(i + 1) * de];
        let mut dalpha = vec![0.0; dec.selected.len()];
        for (s, (&x, &a)) in dec.selected.iter().zip(&dec.alpha).enumerate() {
            for m in 0..mh {
                let ti = x * mh + m;
                let row = mc.rows[(i * N_EXPERTS + x) * mh + m];
                let seg = &de[m * slot..(m + 1) * slot];
                dalpha[s] += dot(seg, mem.tables[ti].row(row));
                let gr = g.tables[ti].entry(row).or_insert_with(|| vec![0.0; slot]);
                for (o, &v) in gr.iter_mut().zip(seg) {
                    *o += a * v;
                }
            }
        }
        let mass: f64 = dec.selected.iter().map(|&x| dec.pi[x]).sum();
        let mean: f64 = dalpha.iter().zip(&dec.alpha).map(|(a, b)| a * b).sum();
        let mut dpi = *aux_dpi;
        for (s, &x) in dec.selected.iter().enumerate() {
            dpi[x] += (dalpha[s] - mean) / mass;
        }
        let pd: f64 = dpi.iter().zip(&dec.pi).map(|(a, b)| a * b).sum();
        let dr: Vec<f64> = (0..N_EXPERTS).map(|x| dec.pi[x] * (dpi[x] - pd)).collect();
        let ui = &mc.u[i * d..(i + 1) * d];
        outer_acc(&mut g.dense.memory.w_r.data, &dr, ui);
        let dui = &mut du[i * d..(i + 1) * d];
        matvec_t_acc(&mem.w_r.data, &dr, dui);
        let r = i * d..(i + 1) * d;
        rmsnorm_backward(&h[r.clone()], mc.rh[i], None, &du[r.clone()], &mut dh[r], None);
    }
    dh
}
