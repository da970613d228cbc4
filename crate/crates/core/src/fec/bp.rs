use super::ldpc::LdpcCode;

/// LLR magnitudes are clipped to this value everywhere.
pub const LLR_CLIP: f64 = 30.0;

/// Per-bit log-likelihood ratios; positive means bit 0 is more likely.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrVector(Vec<f64>);

impl LlrVector {
    /// Clips every entry to `±LLR_CLIP`; NaN becomes 0 (no information).
    pub fn new(values: Vec<f64>) -> Self {
        Self(values.into_iter().map(clip).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn hard_decision(&self) -> Vec<bool> {
        self.0.iter().map(|&l| l < 0.0).collect()
    }
}

fn clip(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(-LLR_CLIP, LLR_CLIP)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpOutput {
    pub bits: Vec<bool>,
    pub converged: bool,
    pub iterations: usize,
}

/// Flooding sum-product decoding with early exit on a zero syndrome.
///
/// The hard decision of the channel LLRs is checked before the first
/// iteration, so a clean codeword returns with `iterations == 0`.
pub fn bp_decode(llr: &LlrVector, code: &LdpcCode, max_iters: usize) -> BpOutput {
    let n = code.n();
    assert_eq!(llr.len(), n, "LLR vector length must equal the code length");
    let channel = llr.as_slice();
    let checks = code.check_vars();

    let mut edge_var = Vec::new();
    let mut check_start = Vec::with_capacity(checks.len() + 1);
    for vars in checks {
        check_start.push(edge_var.len());
        edge_var.extend_from_slice(vars);
    }
    check_start.push(edge_var.len());
    let mut var_edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, &v) in edge_var.iter().enumerate() {
        var_edges[v].push(e);
    }

    let mut bits = llr.hard_decision();
    if code.is_codeword(&bits) {
        return BpOutput { bits, converged: true, iterations: 0 };
    }

    let mut v2c: Vec<f64> = edge_var.iter().map(|&v| channel[v]).collect();
    let mut c2v = vec![0.0; edge_var.len()];
    let mut tanhs = Vec::new();
    for iter in 1..=max_iters {
        for c in 0..checks.len() {
            let edges = check_start[c]..check_start[c + 1];
            tanhs.clear();
            tanhs.extend(v2c[edges.clone()].iter().map(|&m| (m / 2.0).tanh()));
            for (j, e) in edges.enumerate() {
                let prod: f64 = tanhs.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, t)| t).product();
                let prod = prod.clamp(-1.0 + 1e-15, 1.0 - 1e-15);
                c2v[e] = clip(2.0 * prod.atanh());
            }
        }
        for v in 0..n {
            let total = channel[v] + var_edges[v].iter().map(|&e| c2v[e]).sum::<f64>();
            bits[v] = total < 0.0;
            for &e in &var_edges[v] {
                v2c[e] = clip(total - c2v[e]);
            }
        }
        if code.is_codeword(&bits) {
            return BpOutput { bits, converged: true, iterations: iter };
        }
    }
    BpOutput { bits, converged: false, iterations: max_iters }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn llr_for(word: &[bool], magnitude: f64) -> LlrVector {
        LlrVector::new(word.iter().map(|&b| if b { -magnitude } else { magnitude }).collect())
    }

    #[test]
    fn clean_codeword_needs_no_iterations() {
        let code = LdpcCode::golden();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m: Vec<bool> = (0..24).map(|_| rng.random()).collect();
        let x = code.encode(&m).unwrap();
        let out = bp_decode(&llr_for(&x, 10.0), &code, 50);
        assert_eq!(out.bits, x);
        assert!(out.converged);
        assert!(out.iterations <= 1);
    }

    #[test]
    fn every_single_bit_flip_is_corrected() {
        let code = LdpcCode::golden();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for trial in 0..4 {
            let m: Vec<bool> = (0..24).map(|_| trial > 0 && rng.random()).collect();
            let x = code.encode(&m).unwrap();
            for pos in 0..49 {
                let mut y = x.clone();
                y[pos] = !y[pos];
                let out = bp_decode(&llr_for(&y, 8.0), &code, 50);
                assert_eq!(out.bits, x, "flip at {pos} not corrected");
                assert!(out.converged);
            }
        }
    }

    #[test]
    fn deterministic_and_clipped() {
        let code = LdpcCode::golden();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let llr = LlrVector::new((0..49).map(|_| rng.random_range(-2.0..2.0)).collect());
        assert_eq!(bp_decode(&llr, &code, 50), bp_decode(&llr, &code, 50));
        let l = LlrVector::new(vec![100.0, -100.0, f64::NAN]);
        assert_eq!(l.as_slice(), &[30.0, -30.0, 0.0]);
    }
}
