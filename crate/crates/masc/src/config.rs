use serde::{Deserialize, Serialize};

use crate::MascError;

/// n-gram orders served by the four memory experts.
pub const ORDERS: [usize; 4] = [2, 3, 4, 5];
pub const N_EXPERTS: usize = ORDERS.len();

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MascConfig {
    pub vocab_size: usize,
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    /// Hidden width of the feed-forward sublayer.
    pub d_ff: usize,
    pub max_seq_len: usize,
    /// The memory branch updates the input of this block.
    pub memory_layer: usize,
    pub hash_heads: usize,
    pub table_size: usize,
    pub slot_dim: usize,
    pub top_k: usize,
    /// Gate temperature; `None` means `d_model`.
    pub gate_scale: Option<f64>,
    pub lambda_aux: f64,
    pub conv_kernel: usize,
    /// One seed per (order, head), order-major.
    pub hash_seeds: Vec<u64>,
    /// Without memory the model is the plain backbone.
    pub memory_enabled: bool,
    pub init_seed: u64,
}

impl Default for MascConfig {
    fn default() -> Self {
        Self {
            vocab_size: masc_core::VOCAB_SIZE,
            d_model: 128,
            n_layers: 2,
            n_heads: 4,
            d_ff: 512,
            max_seq_len: 256,
            memory_layer: 1,
            hash_heads: 2,
            table_size: 1 << 16,
            slot_dim: 64,
            top_k: 2,
            gate_scale: None,
            lambda_aux: 0.01,
            conv_kernel: 4,
            hash_seeds: default_hash_seeds(2),
            memory_enabled: true,
            init_seed: 0,
        }
    }
}

/// Fixed per-(order, head) seeds from a splitmix64 stream.
/// Kept below 2^63 so they survive TOML and JSON integer types.
pub fn default_hash_seeds(hash_heads: usize) -> Vec<u64> {
    let mut state = 0x4d41_5343_u64;
    (0..N_EXPERTS * hash_heads)
        .map(|_| {
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            crate::hash::splitmix64(state) >> 1
        })
        .collect()
}

impl MascConfig {
    pub fn validate(&self) -> Result<(), MascError> {
        let bad = |m: String| Err(MascError::Config(m));
        if self.vocab_size < 2 {
            return bad(format!("vocab_size {} < 2", self.vocab_size));
        }
        if self.d_model == 0 || self.n_heads == 0 || self.d_model % self.n_heads != 0 {
            return bad(format!("d_model {} must be a positive multiple of n_heads {}", self.d_model, self.n_heads));
        }
        if self.n_layers == 0 || self.memory_layer >= self.n_layers {
            return bad(format!("memory_layer {} must be < n_layers {}", self.memory_layer, self.n_layers));
        }
        if !(1..=N_EXPERTS).contains(&self.top_k) {
            return bad(format!("top_k {} outside 1..=4", self.top_k));
        }
        if self.table_size < 2 || self.table_size > u32::MAX as usize {
            return bad(format!("table_size {} out of range", self.table_size));
        }
        if self.hash_heads == 0 || self.slot_dim == 0 || self.conv_kernel == 0 || self.d_ff == 0 {
            return bad("hash_heads, slot_dim, conv_kernel and d_ff must be positive".into());
        }
        if self.max_seq_len == 0 {
            return bad("max_seq_len must be positive".into());
        }
        if self.hash_seeds.len() != N_EXPERTS * self.hash_heads {
            return bad(format!("expected {} hash seeds, got {}", N_EXPERTS * self.hash_heads, self.hash_seeds.len()));
        }
        if !(self.lambda_aux >= 0.0 && self.lambda_aux.is_finite()) {
            return bad(format!("lambda_aux {} must be finite and nonnegative", self.lambda_aux));
        }
        if let Some(s) = self.gate_scale {
            if !(s > 0.0 && s.is_finite()) {
                return bad(format!("gate_scale {s} must be positive"));
            }
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    /// Width of a concatenated expert memory vector.
    pub fn memory_dim(&self) -> usize {
        self.hash_heads * self.slot_dim
    }

    pub fn gate_scale(&self) -> f64 {
        self.gate_scale.unwrap_or(self.d_model as f64)
    }

    pub fn hash_seed(&self, expert: usize, head: usize) -> u64 {
        self.hash_seeds[expert * self.hash_heads + head]
    }

    /// Scalar parameter count, tables included.
    pub fn param_count(&self) -> usize {
        let (d, f, v) = (self.d_model, self.d_ff, self.vocab_size);
        let layer = 2 * d + 4 * d * d + f * d + f + d * f + d;
        let memory = N_EXPERTS * self.hash_heads * self.table_size * self.slot_dim
            + 2 * d * self.memory_dim()
            + N_EXPERTS * d
            + self.conv_kernel * d
            + d;
        v * d + self.n_layers * layer + d + v * d + v + memory
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        let c = MascConfig::default();
        c.validate().unwrap();
        assert_eq!(c.memory_dim(), 128);
        assert_eq!(c.gate_scale(), 128.0);
        assert_eq!(c.hash_seeds, default_hash_seeds(2));
    }

    #[test]
    fn rejects_bad_configs() {
        let base = MascConfig::default();
        for c in [
            MascConfig { top_k: 0, ..base.clone() },
            MascConfig { top_k: 5, ..base.clone() },
            MascConfig { memory_layer: 2, ..base.clone() },
            MascConfig { n_heads: 3, ..base.clone() },
            MascConfig { hash_seeds: vec![1], ..base.clone() },
            MascConfig { lambda_aux: -1.0, ..base.clone() },
        ] {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn param_count_is_deterministic() {
        let c = MascConfig::default();
        assert_eq!(c.param_count(), c.clone().param_count());
        let small = MascConfig { table_size: 16, ..c.clone() };
        assert_eq!(c.param_count() - small.param_count(), 4 * 2 * (65536 - 16) * 64);
    }
}
