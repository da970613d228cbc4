use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BitstreamError {
    #[error("serialized bitstream is shorter than its 4-byte length prefix")]
    MissingHeader,
    #[error("length prefix announces {bits} bits but only {bytes} payload bytes follow")]
    Truncated { bits: usize, bytes: usize },
}

/// Ordered bit vector. Its length is exactly the number of bits written.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Bitstream {
    bits: Vec<bool>,
}

impl Bitstream {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self { bits: Vec::with_capacity(n) }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Parses a string of `0`/`1` characters; other characters are ignored.
    pub fn from_str01(s: &str) -> Self {
        Self { bits: s.bytes().filter_map(|c| match c { b'0' => Some(false), b'1' => Some(true), _ => None }).collect() }
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    pub fn extend_from_slice(&mut self, bits: &[bool]) {
        self.bits.extend_from_slice(bits);
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.bits.get(i).copied()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }

    pub fn flip(&mut self, i: usize) {
        self.bits[i] = !self.bits[i];
    }

    pub fn to_string01(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    /// 32-bit big-endian bit count followed by MSB-first packed bytes; the
    /// final byte is zero padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + self.bits.len().div_ceil(8));
        out.extend_from_slice(&(self.bits.len() as u32).to_be_bytes());
        for chunk in self.bits.chunks(8) {
            let mut byte = 0u8;
            for (i, &b) in chunk.iter().enumerate() {
                if b {
                    byte |= 0x80 >> i;
                }
            }
            out.push(byte);
        }
        out
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, BitstreamError> {
        let (head, body) = data.split_at_checked(4).ok_or(BitstreamError::MissingHeader)?;
        let n = u32::from_be_bytes(head.try_into().expect("4 bytes")) as usize;
        if body.len() < n.div_ceil(8) {
            return Err(BitstreamError::Truncated { bits: n, bytes: body.len() });
        }
        let bits = (0..n).map(|i| body[i / 8] & (0x80 >> (i % 8)) != 0).collect();
        Ok(Self { bits })
    }
}

impl fmt::Debug for Bitstream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bitstream({}: {})", self.bits.len(), self.to_string01())
    }
}

impl FromIterator<bool> for Bitstream {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self { bits: iter.into_iter().collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wire_format_is_msb_first_with_be_length() {
        let b = Bitstream::from_str01("1010 0000 1");
        assert_eq!(b.to_bytes(), vec![0, 0, 0, 9, 0b1010_0000, 0b1000_0000]);
        assert_eq!(Bitstream::new().to_bytes(), vec![0, 0, 0, 0]);
    }

    #[test]
    fn rejects_truncated_input() {
        assert_eq!(Bitstream::from_bytes(&[0, 0]), Err(BitstreamError::MissingHeader));
        assert_eq!(
            Bitstream::from_bytes(&[0, 0, 0, 9, 0xff]),
            Err(BitstreamError::Truncated { bits: 9, bytes: 1 })
        );
    }

    proptest! {
        #[test]
        fn serialization_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..500)) {
            let b = Bitstream::from_bits(bits);
            prop_assert_eq!(Bitstream::from_bytes(&b.to_bytes()).unwrap(), b);
        }
    }
}
