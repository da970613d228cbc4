use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::{MascConfig, N_EXPERTS, ORDERS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(name: impl Into<String>, shape: &[usize]) -> Self {
        Self { name: name.into(), shape: shape.to_vec(), data: vec![0.0; shape.iter().product()] }
    }

    pub fn filled(name: impl Into<String>, shape: &[usize], v: f64) -> Self {
        Self { name: name.into(), shape: shape.to_vec(), data: vec![v; shape.iter().product()] }
    }

    fn normal(name: impl Into<String>, shape: &[usize], std: f64, rng: &mut ChaCha8Rng) -> Self {
        let dist = Normal::new(0.0, std).expect("positive std");
        let n = shape.iter().product();
        Self { name: name.into(), shape: shape.to_vec(), data: (0..n).map(|_| dist.sample(rng)).collect() }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Row `r` of a 2-D tensor.
    pub fn row(&self, r: usize) -> &[f64] {
        let w = self.shape[1];
        &self.data[r * w..(r + 1) * w]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub norm1: Tensor,
    pub wq: Tensor,
    pub wk: Tensor,
    pub wv: Tensor,
    pub wo: Tensor,
    pub norm2: Tensor,
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryParams {
    /// `E^(n,m)`, indexed `expert * hash_heads + head`.
    pub tables: Vec<Tensor>,
    pub w_k: Tensor,
    pub w_v: Tensor,
    pub w_r: Tensor,
    /// Depthwise causal kernel, tap-major: `conv_w[j]` weights position `i - j`.
    pub conv_w: Tensor,
    pub conv_b: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub tok_emb: Tensor,
    pub layers: Vec<LayerParams>,
    pub norm_f: Tensor,
    pub w_out: Tensor,
    pub b_out: Tensor,
    pub memory: MemoryParams,
}

const INIT_STD: f64 = 0.02;

impl Params {
    pub fn init(cfg: &MascConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.init_seed);
        let (d, f, v) = (cfg.d_model, cfg.d_ff, cfg.vocab_size);
        let resid_std = INIT_STD / (2.0 * cfg.n_layers as f64).sqrt();
        let tok_emb = Tensor::normal("tok_emb", &[v, d], INIT_STD, &mut rng);
        let layers = (0..cfg.n_layers)
            .map(|l| {
                let n = |s: &str| format!("layer{l}.{s}");
                LayerParams {
                    norm1: Tensor::filled(n("norm1"), &[d], 1.0),
                    wq: Tensor::normal(n("wq"), &[d, d], INIT_STD, &mut rng),
                    wk: Tensor::normal(n("wk"), &[d, d], INIT_STD, &mut rng),
                    wv: Tensor::normal(n("wv"), &[d, d], INIT_STD, &mut rng),
                    wo: Tensor::normal(n("wo"), &[d, d], resid_std, &mut rng),
                    norm2: Tensor::filled(n("norm2"), &[d], 1.0),
                    w1: Tensor::normal(n("w1"), &[f, d], INIT_STD, &mut rng),
                    b1: Tensor::zeros(n("b1"), &[f]),
                    w2: Tensor::normal(n("w2"), &[d, f], resid_std, &mut rng),
                    b2: Tensor::zeros(n("b2"), &[d]),
                }
            })
            .collect();
        let norm_f = Tensor::filled("norm_f", &[d], 1.0);
        let w_out = Tensor::normal("w_out", &[v, d], INIT_STD, &mut rng);
        let b_out = Tensor::zeros("b_out", &[v]);
        let de = cfg.memory_dim();
        // memory draws come last so backbone initialisation does not depend on table sizes
        let mut mrng = ChaCha8Rng::seed_from_u64(cfg.init_seed);
        mrng.set_stream(1);
        let w_k = Tensor::normal("mem.w_k", &[d, de], INIT_STD, &mut mrng);
        let w_v = Tensor::normal("mem.w_v", &[d, de], INIT_STD, &mut mrng);
        let w_r = Tensor::normal("mem.w_r", &[N_EXPERTS, d], INIT_STD, &mut mrng);
        let conv_w = Tensor::normal("mem.conv_w", &[cfg.conv_kernel, d], INIT_STD, &mut mrng);
        let conv_b = Tensor::zeros("mem.conv_b", &[d]);
        let mut trng = ChaCha8Rng::seed_from_u64(cfg.init_seed);
        trng.set_stream(2);
        let tables = (0..N_EXPERTS * cfg.hash_heads)
            .map(|i| {
                let name = format!("mem.table.n{}.m{}", ORDERS[i / cfg.hash_heads], i % cfg.hash_heads);
                Tensor::normal(name, &[cfg.table_size, cfg.slot_dim], INIT_STD, &mut trng)
            })
            .collect();
        Self { tok_emb, layers, norm_f, w_out, b_out, memory: MemoryParams { tables, w_k, w_v, w_r, conv_w, conv_b } }
    }

    /// All tensors except the memory tables, in checkpoint order.
    pub fn dense(&self) -> Vec<&Tensor> {
        let mut v = vec![&self.tok_emb];
        for l in &self.layers {
            v.extend([&l.norm1, &l.wq, &l.wk, &l.wv, &l.wo, &l.norm2, &l.w1, &l.b1, &l.w2, &l.b2]);
        }
        v.extend([&self.norm_f, &self.w_out, &self.b_out]);
        let m = &self.memory;
        v.extend([&m.w_k, &m.w_v, &m.w_r, &m.conv_w, &m.conv_b]);
        v
    }

    pub fn dense_mut(&mut self) -> Vec<&mut Tensor> {
        self.split_mut().0
    }

    /// Every tensor, tables last.
    pub fn all(&self) -> Vec<&Tensor> {
        let mut v = self.dense();
        v.extend(self.memory.tables.iter());
        v
    }

    pub fn all_mut(&mut self) -> Vec<&mut Tensor> {
        let (mut v, tables) = self.split_mut();
        v.extend(tables.iter_mut());
        v
    }

    /// Dense tensors and the table list as disjoint borrows.
    pub fn split_mut(&mut self) -> (Vec<&mut Tensor>, &mut Vec<Tensor>) {
        let Params { tok_emb, layers, norm_f, w_out, b_out, memory } = self;
        let mut v = vec![tok_emb];
        for l in layers {
            v.extend([
                &mut l.norm1, &mut l.wq, &mut l.wk, &mut l.wv, &mut l.wo, &mut l.norm2, &mut l.w1, &mut l.b1,
                &mut l.w2, &mut l.b2,
            ]);
        }
        v.extend([norm_f, w_out, b_out]);
        let MemoryParams { tables, w_k, w_v, w_r, conv_w, conv_b } = memory;
        v.extend([w_k, w_v, w_r, conv_w, conv_b]);
        (v, tables)
    }

    /// Same shapes filled with zeros; tables are left empty when `tables` is false.
    pub fn zeros_like(&self, tables: bool) -> Self {
        let mut z = self.clone_structure(tables);
        for t in z.dense_mut() {
            t.data.iter_mut().for_each(|v| *v = 0.0);
        }
        z
    }

    fn clone_structure(&self, tables: bool) -> Self {
        let mut z = Self {
            tok_emb: self.tok_emb.clone(),
            layers: self.layers.clone(),
            norm_f: self.norm_f.clone(),
            w_out: self.w_out.clone(),
            b_out: self.b_out.clone(),
            memory: MemoryParams {
                tables: Vec::new(),
                w_k: self.memory.w_k.clone(),
                w_v: self.memory.w_v.clone(),
                w_r: self.memory.w_r.clone(),
                conv_w: self.memory.conv_w.clone(),
                conv_b: self.memory.conv_b.clone(),
            },
        };
        z.memory.tables = self
            .memory
            .tables
            .iter()
            .map(|t| if tables { Tensor::zeros(t.name.clone(), &t.shape) } else { Tensor::zeros(t.name.clone(), &[0, t.shape[1]]) })
            .collect();
        z
    }

    /// Zeroes the memory tables, the value projection and the conv bias, so the
    /// memory branch adds exactly zero.
    pub fn ablate_memory(&mut self) {
        for t in &mut self.memory.tables {
            t.data.iter_mut().for_each(|v| *v = 0.0);
        }
        self.memory.w_v.data.iter_mut().for_each(|v| *v = 0.0);
        self.memory.conv_b.data.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn scalar_count(&self) -> usize {
        self.all().iter().map(|t| t.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.all().iter().all(|t| t.data.iter().all(|v| v.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> MascConfig {
        MascConfig { d_model: 16, n_heads: 2, d_ff: 32, table_size: 64, slot_dim: 8, ..MascConfig::default() }
    }

    #[test]
    fn count_matches_config() {
        let c = small();
        let p = Params::init(&c);
        assert_eq!(p.scalar_count(), c.param_count());
        assert_eq!(Params::init(&MascConfig::default()).scalar_count(), MascConfig::default().param_count());
    }

    #[test]
    fn init_is_seeded() {
        let c = small();
        assert_eq!(Params::init(&c), Params::init(&c));
        let other = Params::init(&MascConfig { init_seed: 1, ..c.clone() });
        assert_ne!(Params::init(&c).tok_emb, other.tok_emb);
    }

    #[test]
    fn names_are_unique() {
        let p = Params::init(&small());
        let mut names: Vec<&str> = p.all().iter().map(|t| t.name.as_str()).collect();
        let n = names.len();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), n);
    }
}
