use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{Predictor, SourceModel};
use crate::corpus::{Token, TokenSequence, BOS, VOCAB_SIZE};

#[derive(Debug, Error)]
pub enum NgramError {
    #[error("order must be in 1..=5, got {0}")]
    BadOrder(usize),
    #[error("smoothing must be positive and finite, got {0}")]
    BadAlpha(f64),
    #[error("malformed n-gram table at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Default, PartialEq)]
struct ContextCounts {
    total: u64,
    next: HashMap<Token, u64>,
}

/// Additively smoothed byte n-gram model with backoff to shorter contexts.
///
/// Contexts are the last `order - 1` tokens, left-padded with BOS at the
/// start of a stream. When a context was never observed during training the
/// next shorter one is used instead; an untrained model is uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    order: usize,
    alpha: f64,
    vocab_size: usize,
    counts: HashMap<Vec<Token>, ContextCounts>,
}

impl NgramModel {
    pub fn new(order: usize, alpha: f64) -> Result<Self, NgramError> {
        if !(1..=5).contains(&order) {
            return Err(NgramError::BadOrder(order));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(NgramError::BadAlpha(alpha));
        }
        Ok(Self { order, alpha, vocab_size: VOCAB_SIZE, counts: HashMap::new() })
    }

    pub fn train<'a, I>(order: usize, alpha: f64, corpus: I) -> Result<Self, NgramError>
    where
        I: IntoIterator<Item = &'a TokenSequence>,
    {
        let mut m = Self::new(order, alpha)?;
        for seq in corpus {
            m.observe(seq.as_slice());
        }
        Ok(m)
    }

    pub fn observe(&mut self, tokens: &[Token]) {
        let pad = self.order - 1;
        let mut hist = vec![BOS; pad];
        hist.extend_from_slice(tokens);
        for j in pad..hist.len() {
            let target = hist[j];
            for c in 0..=pad {
                let entry = self.counts.entry(hist[j - c..j].to_vec()).or_default();
                entry.total += 1;
                *entry.next.entry(target).or_insert(0) += 1;
            }
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Smoothed distribution for the longest observed suffix of `context`.
    /// `context` holds the most recent tokens, BOS padded, oldest first.
    fn distribution(&self, context: &[Token]) -> Vec<f64> {
        let v = self.vocab_size as f64;
        for c in (0..=context.len()).rev() {
            if let Some(cc) = self.counts.get(&context[context.len() - c..]) {
                if cc.total == 0 {
                    continue;
                }
                let denom = cc.total as f64 + self.alpha * v;
                let mut p = vec![self.alpha / denom; self.vocab_size];
                for (&t, &n) in &cc.next {
                    p[usize::from(t)] = (n as f64 + self.alpha) / denom;
                }
                return p;
            }
        }
        vec![1.0 / v; self.vocab_size]
    }

    /// Sorted `(context, token, count)` table with a small header.
    pub fn to_table(&self) -> String {
        let mut rows: Vec<(&Vec<Token>, Token, u64)> = self
            .counts
            .iter()
            .flat_map(|(ctx, cc)| cc.next.iter().map(move |(&t, &n)| (ctx, t, n)))
            .collect();
        rows.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut out = String::new();
        let _ = writeln!(out, "# ngram-table v1");
        let _ = writeln!(out, "order\t{}", self.order);
        let _ = writeln!(out, "alpha\t{:e}", self.alpha);
        let _ = writeln!(out, "vocab_size\t{}", self.vocab_size);
        for (ctx, t, n) in rows {
            let ctx: Vec<String> = ctx.iter().map(Token::to_string).collect();
            let _ = writeln!(out, "{}\t{}\t{}", ctx.join(","), t, n);
        }
        out
    }

    pub fn from_table(text: &str) -> Result<Self, NgramError> {
        let err = |line: usize, msg: &str| NgramError::Parse { line: line + 1, msg: msg.into() };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#'));
        let mut header = |key: &str| -> Result<String, NgramError> {
            let (i, l) = lines.next().ok_or_else(|| err(0, "missing header"))?;
            let (k, v) = l.split_once('\t').ok_or_else(|| err(i, "expected key<TAB>value"))?;
            if k != key {
                return Err(err(i, &format!("expected `{key}`")));
            }
            Ok(v.to_string())
        };
        let order: usize = header("order")?.parse().map_err(|_| err(1, "bad order"))?;
        let alpha: f64 = header("alpha")?.parse().map_err(|_| err(2, "bad alpha"))?;
        let vocab_size: usize = header("vocab_size")?.parse().map_err(|_| err(3, "bad vocab_size"))?;
        let mut m = Self::new(order, alpha)?;
        m.vocab_size = vocab_size;
        for (i, l) in lines {
            let mut f = l.split('\t');
            let (Some(ctx), Some(tok), Some(n), None) = (f.next(), f.next(), f.next(), f.next()) else {
                return Err(err(i, "expected 3 fields"));
            };
            let ctx: Vec<Token> = if ctx.is_empty() {
                Vec::new()
            } else {
                ctx.split(',').map(str::parse).collect::<Result<_, _>>().map_err(|_| err(i, "bad context"))?
            };
            if ctx.len() >= order {
                return Err(err(i, "context longer than order - 1"));
            }
            let tok: Token = tok.parse().map_err(|_| err(i, "bad token"))?;
            let n: u64 = n.parse().map_err(|_| err(i, "bad count"))?;
            if usize::from(tok) >= vocab_size {
                return Err(err(i, "token outside vocabulary"));
            }
            let cc = m.counts.entry(ctx).or_default();
            cc.total += n;
            *cc.next.entry(tok).or_insert(0) += n;
        }
        Ok(m)
    }
}

struct NgramSession<'a> {
    model: &'a NgramModel,
    context: Vec<Token>,
}

impl Predictor for NgramSession<'_> {
    fn pmf(&mut self) -> Vec<f64> {
        self.model.distribution(&self.context)
    }

    fn push(&mut self, token: Token) {
        if self.context.is_empty() {
            return;
        }
        self.context.remove(0);
        self.context.push(token);
    }
}

impl SourceModel for NgramModel {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn session(&self) -> Box<dyn Predictor + '_> {
        Box::new(NgramSession { model: self, context: vec![BOS; self.order - 1] })
    }

    fn name(&self) -> String {
        format!("ngram{}", self.order)
    }
}
