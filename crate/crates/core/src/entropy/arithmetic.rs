//! Fixed-precision binary arithmetic coder with follow-bit carry handling.

use super::pmf::{quantize_pmf, AcConfig, ConditionalPmf};
use super::EntropyError;
use crate::bits::Bitstream;
use crate::corpus::{Token, TokenSequence, EOS};
use crate::source::SourceModel;

#[derive(Debug, Clone, Copy)]
struct Bounds {
    half: u64,
    quarter: u64,
    top: u64,
}

impl Bounds {
    fn new(precision: u32) -> Self {
        Self { half: 1 << (precision - 1), quarter: 1 << (precision - 2), top: (1 << precision) - 1 }
    }
}

/// Narrows `[low, high]` to the sub-interval of `[cl, ch)` out of `total`.
fn narrow(low: u64, high: u64, cl: u64, ch: u64, total: u64) -> (u64, u64) {
    let range = u128::from(high - low) + 1;
    let t = u128::from(total);
    let new_high = low + (range * u128::from(ch) / t) as u64 - 1;
    let new_low = low + (range * u128::from(cl) / t) as u64;
    (new_low, new_high)
}

#[derive(Debug, Clone)]
pub struct ArithmeticEncoder {
    b: Bounds,
    low: u64,
    high: u64,
    pending: u64,
    out: Bitstream,
}

impl ArithmeticEncoder {
    pub fn new(config: &AcConfig) -> Self {
        let b = Bounds::new(config.precision());
        Self { b, low: 0, high: b.top, pending: 0, out: Bitstream::new() }
    }

    fn emit(&mut self, bit: bool) {
        self.out.push(bit);
        for _ in 0..self.pending {
            self.out.push(!bit);
        }
        self.pending = 0;
    }

    pub fn encode(&mut self, pmf: &ConditionalPmf, symbol: usize) -> Result<(), EntropyError> {
        let total = pmf.total();
        if total > self.b.quarter {
            return Err(EntropyError::TotalTooLarge { total, limit_bits: self.b.quarter.trailing_zeros() });
        }
        let (cl, ch) = pmf.range(symbol);
        (self.low, self.high) = narrow(self.low, self.high, cl, ch, total);
        loop {
            if self.high < self.b.half {
                self.emit(false);
            } else if self.low >= self.b.half {
                self.emit(true);
                self.low -= self.b.half;
                self.high -= self.b.half;
            } else if self.low >= self.b.quarter && self.high < 3 * self.b.quarter {
                self.pending += 1;
                self.low -= self.b.quarter;
                self.high -= self.b.quarter;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
        }
        Ok(())
    }

    /// Emits the two disambiguating bits (plus any pending follow bits).
    pub fn finish(mut self) -> Bitstream {
        self.pending += 1;
        let bit = self.low >= self.b.quarter;
        self.emit(bit);
        self.out
    }

    pub fn bits_written(&self) -> usize {
        self.out.len()
    }
}

/// Decoder over a finite bit slice; reads past the end as zeros.
#[derive(Debug, Clone)]
pub struct ArithmeticDecoder<'a> {
    b: Bounds,
    bits: &'a [bool],
    pos: usize,
    low: u64,
    high: u64,
    value: u64,
}

impl<'a> ArithmeticDecoder<'a> {
    pub fn new(bits: &'a [bool], config: &AcConfig) -> Self {
        let b = Bounds::new(config.precision());
        let mut d = Self { b, bits, pos: 0, low: 0, high: b.top, value: 0 };
        for _ in 0..config.precision() {
            d.value = (d.value << 1) | d.next_bit();
        }
        d
    }

    fn next_bit(&mut self) -> u64 {
        let bit = self.bits.get(self.pos).copied().unwrap_or(false);
        self.pos += 1;
        u64::from(bit)
    }

    pub fn decode(&mut self, pmf: &ConditionalPmf) -> Result<usize, EntropyError> {
        let total = pmf.total();
        if total > self.b.quarter {
            return Err(EntropyError::TotalTooLarge { total, limit_bits: self.b.quarter.trailing_zeros() });
        }
        let range = u128::from(self.high - self.low) + 1;
        let offset = u128::from(self.value - self.low) + 1;
        let target = ((offset * u128::from(total) - 1) / range) as u64;
        let symbol = pmf.find(target);
        let (cl, ch) = pmf.range(symbol);
        (self.low, self.high) = narrow(self.low, self.high, cl, ch, total);
        loop {
            if self.high < self.b.half {
            } else if self.low >= self.b.half {
                self.value -= self.b.half;
                self.low -= self.b.half;
                self.high -= self.b.half;
            } else if self.low >= self.b.quarter && self.high < 3 * self.b.quarter {
                self.value -= self.b.quarter;
                self.low -= self.b.quarter;
                self.high -= self.b.quarter;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
            self.value = (self.value << 1) | self.next_bit();
        }
        Ok(symbol)
    }

    /// Bits consumed so far, including the initial register fill.
    pub fn position(&self) -> usize {
        self.pos
    }
}

/// Compresses an EOS-terminated sequence with the model's autoregressive PMFs.
pub fn ac_encode(tokens: &TokenSequence, model: &dyn SourceModel, config: &AcConfig) -> Result<Bitstream, EntropyError> {
    if !tokens.ends_with_eos() {
        return Err(EntropyError::MissingEos);
    }
    let vocab = model.vocab_size();
    let mut session = model.session();
    let mut enc = ArithmeticEncoder::new(config);
    for &t in tokens.as_slice() {
        if usize::from(t) >= vocab {
            return Err(EntropyError::VocabMismatch { model: vocab, token: usize::from(t) });
        }
        let pmf = quantize_pmf(&session.pmf(), config)?;
        if pmf.len() != vocab {
            return Err(EntropyError::VocabMismatch { model: vocab, token: pmf.len() });
        }
        enc.encode(&pmf, usize::from(t))?;
        session.push(t);
    }
    Ok(enc.finish())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcDecoded {
    pub tokens: TokenSequence,
    /// Decoding stopped at the length guard rather than at EOS.
    pub hit_guard: bool,
}

/// Decodes tokens until EOS or until `max_tokens` have been produced.
///
/// Any bit pattern is accepted: a corrupted stream simply decodes to other
/// tokens. Errors only arise from a model emitting an invalid distribution.
pub fn ac_decode(
    bits: &Bitstream,
    model: &dyn SourceModel,
    config: &AcConfig,
    max_tokens: usize,
) -> Result<AcDecoded, EntropyError> {
    let mut session = model.session();
    let mut dec = ArithmeticDecoder::new(bits.as_slice(), config);
    let mut out: Vec<Token> = Vec::new();
    while out.len() < max_tokens {
        let pmf = quantize_pmf(&session.pmf(), config)?;
        let t = dec.decode(&pmf)? as Token;
        out.push(t);
        if t == EOS {
            return Ok(AcDecoded { tokens: TokenSequence::new(out).expect("EOS is final"), hit_guard: false });
        }
        session.push(t);
    }
    Ok(AcDecoded { tokens: TokenSequence::new(out).expect("no EOS"), hit_guard: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokenize, VOCAB_SIZE};
    use crate::source::{IidModel, UniformModel};
    use proptest::prelude::*;

    fn cfg() -> AcConfig {
        AcConfig::default()
    }

    #[test]
    fn round_trip_uniform() {
        let m = UniformModel::new(VOCAB_SIZE);
        let s = tokenize(b"The quick brown fox jumps over the lazy dog.");
        let bits = ac_encode(&s, &m, &cfg()).unwrap();
        let back = ac_decode(&bits, &m, &cfg(), 1000).unwrap();
        assert_eq!(back.tokens, s);
        assert!(!back.hit_guard);
        // 45 tokens at log2(258) bits each, plus at most the flush
        let ideal = 45.0 * (258f64).log2();
        assert!((bits.len() as f64) >= ideal.floor() && (bits.len() as f64) <= ideal + 33.0);
    }

    #[test]
    fn certain_model_costs_only_the_flush() {
        // near-certain prediction of token 0 at every step
        let mut p = vec![0.0; 4];
        p[0] = 1.0;
        let m = IidModel::new(p);
        let s = TokenSequence::new(vec![0; 200]).unwrap();
        let mut enc = ArithmeticEncoder::new(&cfg());
        let pmf = quantize_pmf(m.probs(), &cfg()).unwrap();
        for &t in s.as_slice() {
            enc.encode(&pmf, usize::from(t)).unwrap();
        }
        let bits = enc.finish();
        assert!(bits.len() <= 31 + 2, "{}", bits.len());
    }

    #[test]
    fn requires_eos() {
        let m = UniformModel::new(VOCAB_SIZE);
        let s = TokenSequence::new(vec![1, 2]).unwrap();
        assert_eq!(ac_encode(&s, &m, &cfg()), Err(EntropyError::MissingEos));
        let small = UniformModel::new(10);
        assert!(matches!(ac_encode(&tokenize(b"a"), &small, &cfg()), Err(EntropyError::VocabMismatch { .. })));
    }

    #[test]
    fn all_zero_stream_terminates() {
        let m = UniformModel::new(VOCAB_SIZE);
        let bits = Bitstream::from_bits(vec![false; 49]);
        let d = ac_decode(&bits, &m, &cfg(), 64).unwrap();
        assert!(d.tokens.len() <= 64);
        assert!(d.hit_guard || d.tokens.ends_with_eos());
    }

    #[test]
    fn low_precision_rejects_large_totals() {
        let m = UniformModel::new(VOCAB_SIZE);
        let c = AcConfig::new(16).unwrap();
        assert!(matches!(ac_encode(&tokenize(b"x"), &m, &c), Err(EntropyError::TotalTooLarge { .. })));
    }

    #[test]
    fn wide_precision_round_trip() {
        let m = IidModel::new(vec![0.6, 0.3, 0.05, 0.05]);
        let toks = vec![0u16, 1, 2, 3, 0, 0, 1];
        for precision in [24, 31, 48, 62] {
            let c = AcConfig::new(precision).unwrap();
            let pmf = quantize_pmf(m.probs(), &c).unwrap();
            let mut enc = ArithmeticEncoder::new(&c);
            for &t in &toks {
                enc.encode(&pmf, usize::from(t)).unwrap();
            }
            let bits = enc.finish();
            let mut dec = ArithmeticDecoder::new(bits.as_slice(), &c);
            let back: Vec<u16> = toks.iter().map(|_| dec.decode(&pmf).unwrap() as u16).collect();
            assert_eq!(back, toks, "precision {precision}");
        }
    }

    proptest! {
        #[test]
        fn lossless_for_random_models(
            weights in proptest::collection::vec(0.0f64..1.0, 2..40),
            raw in proptest::collection::vec(any::<u16>(), 0..200),
        ) {
            let sum: f64 = weights.iter().sum();
            prop_assume!(sum > 0.0);
            let probs: Vec<f64> = weights.iter().map(|w| w / sum).collect();
            let v = probs.len();
            let pmf = quantize_pmf(&probs, &cfg()).unwrap();
            let toks: Vec<usize> = raw.iter().map(|&r| usize::from(r) % v).collect();
            let mut enc = ArithmeticEncoder::new(&cfg());
            for &t in &toks {
                enc.encode(&pmf, t).unwrap();
            }
            let bits = enc.finish();
            let mut dec = ArithmeticDecoder::new(bits.as_slice(), &cfg());
            let back: Vec<usize> = toks.iter().map(|_| dec.decode(&pmf).unwrap()).collect();
            prop_assert_eq!(back, toks);
        }

        #[test]
        fn decoder_is_total_on_arbitrary_bits(bits in proptest::collection::vec(any::<bool>(), 0..300)) {
            let m = IidModel::new(vec![0.1, 0.2, 0.3, 0.4]);
            let bs = Bitstream::from_bits(bits);
            let mut dec = ArithmeticDecoder::new(bs.as_slice(), &cfg());
            let pmf = quantize_pmf(m.probs(), &cfg()).unwrap();
            for _ in 0..500 {
                prop_assert!(dec.decode(&pmf).unwrap() < 4);
            }
        }
    }
}
