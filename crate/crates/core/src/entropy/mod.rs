//! Entropy coders: an exact integer arithmetic coder driven by any
//! [`SourceModel`](crate::source::SourceModel) and a static Huffman baseline.

mod arithmetic;
mod huffman;
mod pmf;

pub use arithmetic::{ac_decode, ac_encode, AcDecoded, ArithmeticDecoder, ArithmeticEncoder};
pub use huffman::{huffman_build, huffman_decode, huffman_encode, unigram_counts, DecodeMode, HuffmanDecoded, HuffmanTable};
pub use pmf::{quantize_pmf, AcConfig, ConditionalPmf, PMF_TOTAL_BITS};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EntropyError {
    #[error("precision must lie in 16..=62 bits, got {0}")]
    BadPrecision(u32),
    #[error("probability vector contains a NaN, infinite or negative entry at {0}")]
    InvalidProbability(usize),
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("frequency total {total} exceeds the coder limit 2^{limit_bits}")]
    TotalTooLarge { total: u64, limit_bits: u32 },
    #[error("vocabulary of {0} symbols does not fit the quantization total")]
    VocabTooLarge(usize),
    #[error("model vocabulary {model} does not match token id {token}")]
    VocabMismatch { model: usize, token: usize },
    #[error("sequence must end with EOS")]
    MissingEos,
    #[error("empty frequency table")]
    EmptyTable,
    #[error("token {0} has no Huffman code")]
    NoCode(usize),
    #[error("bitstream ends inside a codeword after {0} tokens")]
    TruncatedCodeword(usize),
}
