//! Next-token probability models.
//!
//! The arithmetic coder only ever talks to a [`Predictor`]: a stateful,
//! autoregressive session that is fed the tokens of one stream in order. The
//! encoder and decoder open identical sessions and push identical tokens, so
//! they see bit-identical distributions.

mod ngram;

pub use ngram::{NgramError, NgramModel};

use crate::corpus::Token;

/// Autoregressive prediction state for one stream.
pub trait Predictor {
    /// Distribution of the next token given every token pushed so far.
    fn pmf(&mut self) -> Vec<f64>;
    fn push(&mut self, token: Token);
}

/// Immutable model that hands out prediction sessions.
pub trait SourceModel: Send + Sync {
    fn vocab_size(&self) -> usize;
    fn session(&self) -> Box<dyn Predictor + '_>;
    /// Short label used in result files.
    fn name(&self) -> String;

    fn next_pmf(&self, prefix: &[Token]) -> Vec<f64> {
        let mut s = self.session();
        for &t in prefix {
            s.push(t);
        }
        s.pmf()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformModel {
    vocab_size: usize,
}

impl UniformModel {
    pub fn new(vocab_size: usize) -> Self {
        assert!(vocab_size >= 2, "uniform model needs at least two symbols");
        Self { vocab_size }
    }
}

struct UniformSession(usize);

impl Predictor for UniformSession {
    fn pmf(&mut self) -> Vec<f64> {
        vec![1.0 / self.0 as f64; self.0]
    }
    fn push(&mut self, _token: Token) {}
}

impl SourceModel for UniformModel {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }
    fn session(&self) -> Box<dyn Predictor + '_> {
        Box::new(UniformSession(self.vocab_size))
    }
    fn name(&self) -> String {
        "uniform".into()
    }
}

/// Context-free model with a fixed distribution; handy for coder tests.
#[derive(Debug, Clone, PartialEq)]
pub struct IidModel {
    probs: Vec<f64>,
}

impl IidModel {
    pub fn new(probs: Vec<f64>) -> Self {
        assert!(probs.len() >= 2);
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

struct IidSession<'a>(&'a [f64]);

impl Predictor for IidSession<'_> {
    fn pmf(&mut self) -> Vec<f64> {
        self.0.to_vec()
    }
    fn push(&mut self, _token: Token) {}
}

impl SourceModel for IidModel {
    fn vocab_size(&self) -> usize {
        self.probs.len()
    }
    fn session(&self) -> Box<dyn Predictor + '_> {
        Box::new(IidSession(&self.probs))
    }
    fn name(&self) -> String {
        "iid".into()
    }
}

/// Checks length, nonnegativity and normalization of a model output.
pub fn is_valid_pmf(p: &[f64], vocab_size: usize) -> bool {
    p.len() == vocab_size
        && p.iter().all(|&x| x.is_finite() && x >= 0.0)
        && (p.iter().sum::<f64>() - 1.0).abs() <= 1e-6
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::VOCAB_SIZE;

    #[test]
    fn uniform_is_flat_and_deterministic() {
        let m = UniformModel::new(VOCAB_SIZE);
        let p = m.next_pmf(&[1, 2, 3]);
        assert!(p.iter().all(|&x| x == 1.0 / 258.0));
        assert_eq!(p, m.next_pmf(&[1, 2, 3]));
        assert_eq!(p, m.next_pmf(&[]));
        assert!(is_valid_pmf(&p, VOCAB_SIZE));
    }
}
