//! Mixture-of-memory-experts routing and the load-balancing statistics.

use serde::{Deserialize, Serialize};

use crate::config::{N_EXPERTS, ORDERS};
use crate::linalg::{matvec, rmsnorm, softmax_inplace};
use crate::MascError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingDecision {
    /// Softmax over the four experts.
    pub pi: [f64; N_EXPERTS],
    /// Selected expert indices, highest probability first.
    pub selected: Vec<usize>,
    /// Renormalised weights aligned with `selected`.
    pub alpha: Vec<f64>,
}

impl RoutingDecision {
    /// Selected n-gram orders in ascending order.
    pub fn orders(&self) -> Vec<usize> {
        let mut o: Vec<usize> = self.selected.iter().map(|&e| ORDERS[e]).collect();
        o.sort_unstable();
        o
    }

    /// Probability gap between the last selected and the best unselected expert.
    pub fn margin(&self) -> f64 {
        let last = self.pi[*self.selected.last().expect("k >= 1")];
        (0..N_EXPERTS)
            .filter(|e| !self.selected.contains(e))
            .map(|e| last - self.pi[e])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Top-k selection over router logits; ties go to the lower order.
pub fn route_logits(logits: [f64; N_EXPERTS], k: usize) -> RoutingDecision {
    let mut pi = logits;
    softmax_inplace(&mut pi);
    let mut order: Vec<usize> = (0..N_EXPERTS).collect();
    order.sort_by(|&a, &b| pi[b].total_cmp(&pi[a]).then(a.cmp(&b)));
    order.truncate(k);
    let mass: f64 = order.iter().map(|&e| pi[e]).sum();
    let alpha = order.iter().map(|&e| pi[e] / mass).collect();
    RoutingDecision { pi, selected: order, alpha }
}

/// `π = softmax(W_r · Norm(h))` followed by top-k selection.
pub fn mmer_route(h: &[f64], w_r: &[f64], k: usize) -> Result<RoutingDecision, MascError> {
    if h.iter().any(|v| v.is_nan()) {
        return Err(MascError::NonFinite("router input"));
    }
    let mut u = vec![0.0; h.len()];
    rmsnorm(h, None, &mut u);
    let mut r = [0.0; N_EXPERTS];
    matvec(w_r, &u, &mut r);
    Ok(route_logits(r, k))
}

/// `4 · Σ Imp_n · Load_n`.
pub fn aux_loss(imp: &[f64; N_EXPERTS], load: &[f64; N_EXPERTS]) -> f64 {
    N_EXPERTS as f64 * imp.iter().zip(load).map(|(a, b)| a * b).sum::<f64>()
}

/// Natural-log entropy of a distribution.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

/// Running importance and load over valid positions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoutingStats {
    pub importance: [f64; N_EXPERTS],
    pub selections: [f64; N_EXPERTS],
    pub positions: usize,
    pub k: usize,
}

impl RoutingStats {
    pub fn new(k: usize) -> Self {
        Self { k, ..Default::default() }
    }

    pub fn add(&mut self, d: &RoutingDecision) {
        for e in 0..N_EXPERTS {
            self.importance[e] += d.pi[e];
        }
        for &e in &d.selected {
            self.selections[e] += 1.0;
        }
        self.positions += 1;
    }

    pub fn merge(&mut self, o: &RoutingStats) {
        for e in 0..N_EXPERTS {
            self.importance[e] += o.importance[e];
            self.selections[e] += o.selections[e];
        }
        self.positions += o.positions;
    }

    pub fn imp(&self) -> [f64; N_EXPERTS] {
        self.importance.map(|v| v / self.positions as f64)
    }

    pub fn load(&self) -> [f64; N_EXPERTS] {
        self.selections.map(|v| v / (self.positions * self.k) as f64)
    }

    pub fn aux(&self) -> f64 {
        aux_loss(&self.imp(), &self.load())
    }
}
