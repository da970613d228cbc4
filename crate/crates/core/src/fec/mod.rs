//! Channel coding: a systematic LDPC(49,24) code, BPSK mapping,
//! sum-product belief propagation and payload framing.

mod bp;
mod frame;
mod gf2;
mod ldpc;

pub use bp::{bp_decode, BpOutput, LlrVector, LLR_CLIP};
pub use frame::{deframe, frame_payload, HEADER_BITS};
pub use gf2::{gf2_rank, BitMatrix};
pub use ldpc::{ldpc_construct, LdpcCode, GOLDEN_SEED};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FecError {
    #[error("message has {got} bits, the code carries {expected}")]
    MessageLength { got: usize, expected: usize },
    #[error("codeword has {got} bits, expected {expected}")]
    CodewordLength { got: usize, expected: usize },
    #[error("frame header announces {announced} payload bits but the frame carries at most {capacity}")]
    MalformedHeader { announced: usize, capacity: usize },
    #[error("payload of {0} bits does not fit the 16-bit length header")]
    PayloadTooLong(usize),
    #[error("frame has no header block")]
    EmptyFrame,
    #[error("no full-rank parity-check matrix found after {0} attempts")]
    ConstructionFailed(usize),
    #[error("golden code file: {0}")]
    Golden(String),
}

/// BPSK mapping `0 -> +1`, `1 -> -1`.
pub fn bpsk_modulate(bits: &[bool]) -> Vec<f64> {
    bits.iter().map(|&b| if b { -1.0 } else { 1.0 }).collect()
}

/// Hard decision `(1 - sign(x)) / 2`, with `sign(0)` taken as `+1`.
pub fn sign_to_bin(symbols: &[f64]) -> Vec<bool> {
    symbols.iter().map(|&x| x < 0.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bpsk_examples() {
        assert_eq!(bpsk_modulate(&[false, true, false]), vec![1.0, -1.0, 1.0]);
        assert_eq!(sign_to_bin(&[0.8, -1.2, 0.01]), vec![false, true, false]);
        assert_eq!(sign_to_bin(&[0.0, -0.0]), vec![false, false]);
        let x = [true, true, false, true, false];
        assert_eq!(sign_to_bin(&bpsk_modulate(&x)), x);
    }
}
