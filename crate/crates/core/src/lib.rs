//! Building blocks for a separate source–channel coded text link.
//!
//! A sentence is tokenized into bytes, compressed with an arithmetic coder
//! driven by a [`source::SourceModel`] (or with a Huffman baseline), split into
//! LDPC(49,24) codewords, BPSK-modulated over an AWGN or block-Rayleigh channel,
//! belief-propagation decoded and finally decompressed again. The neural source
//! model lives in a separate crate and plugs in through the same trait.

pub mod bits;
pub mod channel;
pub mod corpus;
pub mod entropy;
pub mod eval;
pub mod fec;
pub mod source;

pub use bits::Bitstream;
pub use corpus::{Token, TokenSequence, BOS, EOS, VOCAB_SIZE};
pub use source::{Predictor, SourceModel};
