//! Incremental inference with a key/value cache.

use std::collections::VecDeque;
use std::path::Path;

use masc_core::{Predictor, SourceModel, Token, BOS};

use crate::config::{MascConfig, N_EXPERTS, ORDERS};
use crate::hash::hash_index;
use crate::linalg::{alibi_slope, dot, matvec, rmsnorm, sigmoid, silu, softmax_inplace};
use crate::model::forward;
use crate::params::Params;
use crate::routing::{route_logits, RoutingStats};
use crate::MascError;

/// Trained parameters plus their configuration.
#[derive(Debug, Clone)]
pub struct MascModel {
    pub config: MascConfig,
    pub params: Params,
    label: String,
}

impl MascModel {
    pub fn new(config: MascConfig, params: Params) -> Result<Self, MascError> {
        config.validate()?;
        Ok(Self { config, params, label: "masc".into() })
    }

    pub fn load(path: &Path) -> Result<Self, MascError> {
        let (config, params) = crate::checkpoint::load(path)?;
        Self::new(config, params)
    }

    pub fn save(&self, path: &Path) -> Result<(), MascError> {
        crate::checkpoint::save(path, &self.config, &self.params)
    }

    /// Same parameters with the memory branch contributing exactly zero.
    pub fn ablated(&self) -> Self {
        let mut params = self.params.clone();
        params.ablate_memory();
        Self { config: self.config.clone(), params, label: "masc-ablated".into() }
    }

    /// Teacher-forced routing statistics of one sentence.
    pub fn routing_stats(&self, tokens: &[Token]) -> Result<RoutingStats, MascError> {
        let mut stats = RoutingStats::new(self.config.top_k);
        let mut input = vec![BOS];
        input.extend_from_slice(&tokens[..tokens.len().saturating_sub(1)]);
        input.truncate(self.config.max_seq_len);
        for d in forward(&self.params, &self.config, &input)?.routing {
            stats.add(&d);
        }
        Ok(stats)
    }
}

impl SourceModel for MascModel {
    fn vocab_size(&self) -> usize {
        self.config.vocab_size
    }

    fn session(&self) -> Box<dyn Predictor + '_> {
        Box::new(Session::new(&self.config, &self.params))
    }

    fn name(&self) -> String {
        self.label.clone()
    }
}

struct LayerState {
    keys: VecDeque<Vec<f64>>,
    values: VecDeque<Vec<f64>>,
}

/// One stream. Attention looks back at most `max_seq_len` positions; longer
/// streams slide the window, which ALiBi's relative bias makes well defined.
pub struct Session<'a> {
    cfg: &'a MascConfig,
    p: &'a Params,
    history: Vec<Token>,
    layers: Vec<LayerState>,
    conv: VecDeque<Vec<f64>>,
    logits: Vec<f64>,
}

impl<'a> Session<'a> {
    pub fn new(cfg: &'a MascConfig, p: &'a Params) -> Self {
        let layers = (0..cfg.n_layers).map(|_| LayerState { keys: VecDeque::new(), values: VecDeque::new() }).collect();
        let mut s = Self { cfg, p, history: Vec::new(), layers, conv: VecDeque::new(), logits: Vec::new() };
        s.step(BOS);
        s
    }

    fn memory_step(&mut self, h: &[f64]) -> Vec<f64> {
        let cfg = self.cfg;
        let mem = &self.p.memory;
        let (d, slot, mh) = (cfg.d_model, cfg.slot_dim, cfg.hash_heads);
        let mut u = vec![0.0; d];
        rmsnorm(h, None, &mut u);
        let mut r = [0.0; N_EXPERTS];
        matvec(&mem.w_r.data, &u, &mut r);
        let dec = route_logits(r, cfg.top_k);
        let mut e = vec![0.0; cfg.memory_dim()];
        let len = self.history.len();
        for (&x, &a) in dec.selected.iter().zip(&dec.alpha) {
            let n = ORDERS[x];
            let ctx: Vec<Token> =
                (0..n).map(|j| (len + j).checked_sub(n).map_or(BOS, |p| self.history[p])).collect();
            for m in 0..mh {
                let row = mem.tables[x * mh + m].row(hash_index(&ctx, cfg.hash_seed(x, m), cfg.table_size));
                for (o, &v) in e[m * slot..(m + 1) * slot].iter_mut().zip(row) {
                    *o += a * v;
                }
            }
        }
        let mut kk = vec![0.0; d];
        let mut v = vec![0.0; d];
        matvec(&mem.w_k.data, &e, &mut kk);
        matvec(&mem.w_v.data, &e, &mut v);
        let mut kn = vec![0.0; d];
        rmsnorm(&kk, None, &mut kn);
        let beta = sigmoid(dot(&u, &kn) / cfg.gate_scale().sqrt());
        let vt: Vec<f64> = v.iter().map(|x| beta * x).collect();
        let mut w = vec![0.0; d];
        rmsnorm(&vt, None, &mut w);
        self.conv.push_front(w);
        self.conv.truncate(cfg.conv_kernel);
        let mut c = mem.conv_b.data.clone();
        for (j, wj) in self.conv.iter().enumerate() {
            let tap = &mem.conv_w.data[j * d..(j + 1) * d];
            for ((o, &t), &s) in c.iter_mut().zip(tap).zip(wj) {
                *o += t * s;
            }
        }
        c.iter().zip(&vt).map(|(&ci, &vi)| silu(ci) + vi).collect()
    }

    fn step(&mut self, token: Token) {
        let cfg = self.cfg;
        let p = self.p;
        let (d, f, hd) = (cfg.d_model, cfg.d_ff, cfg.head_dim());
        self.history.push(token);
        let mut x = p.tok_emb.row(usize::from(token)).to_vec();
        let scale = 1.0 / (hd as f64).sqrt();
        for l in 0..cfg.n_layers {
            if cfg.memory_enabled && l == cfg.memory_layer {
                let y = self.memory_step(&x);
                x.iter_mut().zip(&y).for_each(|(a, b)| *a += b);
            }
            let lp = &p.layers[l];
            let mut a = vec![0.0; d];
            rmsnorm(&x, Some(&lp.norm1.data), &mut a);
            let mut q = vec![0.0; d];
            let mut k = vec![0.0; d];
            let mut v = vec![0.0; d];
            matvec(&lp.wq.data, &a, &mut q);
            matvec(&lp.wk.data, &a, &mut k);
            matvec(&lp.wv.data, &a, &mut v);
            let st = &mut self.layers[l];
            st.keys.push_back(k);
            st.values.push_back(v);
            if st.keys.len() > cfg.max_seq_len {
                st.keys.pop_front();
                st.values.pop_front();
            }
            let len = st.keys.len();
            let mut o = vec![0.0; d];
            let mut scores = vec![0.0; len];
            for h in 0..cfg.n_heads {
                let slope = alibi_slope(h, cfg.n_heads);
                let r = h * hd..(h + 1) * hd;
                for (j, s) in scores.iter_mut().enumerate() {
                    *s = dot(&q[r.clone()], &st.keys[j][r.clone()]) * scale - slope * (len - 1 - j) as f64;
                }
                softmax_inplace(&mut scores);
                for (j, &pj) in scores.iter().enumerate() {
                    for (oi, &vi) in o[r.clone()].iter_mut().zip(&st.values[j][r.clone()]) {
                        *oi += pj * vi;
                    }
                }
            }
            let mut att = vec![0.0; d];
            matvec(&lp.wo.data, &o, &mut att);
            x.iter_mut().zip(&att).for_each(|(a, b)| *a += b);
            let mut b = vec![0.0; d];
            rmsnorm(&x, Some(&lp.norm2.data), &mut b);
            let mut u = vec![0.0; f];
            matvec(&lp.w1.data, &b, &mut u);
            let s: Vec<f64> = u.iter().zip(&lp.b1.data).map(|(&a, &b)| silu(a + b)).collect();
            let mut m = vec![0.0; d];
            matvec(&lp.w2.data, &s, &mut m);
            x.iter_mut().zip(m.iter().zip(&lp.b2.data)).for_each(|(a, (b, c))| *a += b + c);
        }
        let mut cf = vec![0.0; d];
        rmsnorm(&x, Some(&p.norm_f.data), &mut cf);
        let mut logits = vec![0.0; cfg.vocab_size];
        matvec(&p.w_out.data, &cf, &mut logits);
        logits.iter_mut().zip(&p.b_out.data).for_each(|(a, b)| *a += b);
        self.logits = logits;
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }
}

impl Predictor for Session<'_> {
    fn pmf(&mut self) -> Vec<f64> {
        let mut p = self.logits.clone();
        softmax_inplace(&mut p);
        p
    }

    fn push(&mut self, token: Token) {
        self.step(token);
    }
}
