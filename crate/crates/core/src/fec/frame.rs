//! Segmentation of a variable-length payload into K-bit code blocks.
//!
//! The first block is a header carrying the payload length in its leading 16
//! bits (MSB first), the remaining header bits are zero. Payload blocks follow;
//! the last one is zero padded.

use super::FecError;
use crate::bits::Bitstream;

pub const HEADER_BITS: usize = 16;

pub fn frame_payload(payload: &Bitstream, block_bits: usize) -> Result<Vec<Vec<bool>>, FecError> {
    assert!(block_bits >= HEADER_BITS);
    let len = payload.len();
    if len > usize::from(u16::MAX) {
        return Err(FecError::PayloadTooLong(len));
    }
    let mut header: Vec<bool> = (0..HEADER_BITS).rev().map(|b| (len >> b) & 1 == 1).collect();
    header.resize(block_bits, false);
    let mut blocks = vec![header];
    for chunk in payload.as_slice().chunks(block_bits) {
        let mut b = chunk.to_vec();
        b.resize(block_bits, false);
        blocks.push(b);
    }
    Ok(blocks)
}

/// Reassembles the payload, dropping padding according to the header.
pub fn deframe(blocks: &[Vec<bool>]) -> Result<Bitstream, FecError> {
    let (header, body) = blocks.split_first().ok_or(FecError::EmptyFrame)?;
    let announced = header.iter().take(HEADER_BITS).fold(0usize, |acc, &b| (acc << 1) | usize::from(b));
    let capacity: usize = body.iter().map(Vec::len).sum();
    if announced > capacity {
        return Err(FecError::MalformedHeader { announced, capacity });
    }
    Ok(body.iter().flatten().copied().take(announced).collect())
}
