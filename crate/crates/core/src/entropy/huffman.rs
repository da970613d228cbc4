use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::EntropyError;
use crate::bits::Bitstream;
use crate::corpus::{Token, TokenSequence, EOS, VOCAB_SIZE};

/// Canonical Huffman code over token ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanTable {
    lengths: Vec<u8>,
    codes: Vec<Vec<bool>>,
    // decoding tree: node -> [child for 0, child for 1]; leaves are encoded as !symbol
    tree: Vec<[i32; 2]>,
}

/// Token unigram counts over a set of sequences.
pub fn unigram_counts<'a, I: IntoIterator<Item = &'a TokenSequence>>(seqs: I) -> Vec<u64> {
    let mut counts = vec![0u64; VOCAB_SIZE];
    for s in seqs {
        for &t in s.as_slice() {
            counts[usize::from(t)] += 1;
        }
    }
    counts
}

/// Optimal prefix code for `freqs`; zero counts are raised to 1 so every
/// token stays encodable.
pub fn huffman_build(freqs: &[u64]) -> Result<HuffmanTable, EntropyError> {
    if freqs.len() < 2 {
        return Err(EntropyError::EmptyTable);
    }
    let n = freqs.len();
    // (weight, creation order) keeps merges deterministic
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> =
        freqs.iter().enumerate().map(|(i, &f)| Reverse((f.max(1), i))).collect();
    let mut parent = vec![usize::MAX; 2 * n - 1];
    let mut next = n;
    while heap.len() > 1 {
        let Reverse((wa, a)) = heap.pop().expect("len > 1");
        let Reverse((wb, b)) = heap.pop().expect("len > 1");
        parent[a] = next;
        parent[b] = next;
        heap.push(Reverse((wa + wb, next)));
        next += 1;
    }
    let lengths: Vec<u8> = (0..n)
        .map(|mut i| {
            let mut d = 0u8;
            while parent[i] != usize::MAX {
                i = parent[i];
                d += 1;
            }
            d
        })
        .collect();
    Ok(HuffmanTable::from_lengths(lengths))
}

impl HuffmanTable {
    /// Canonical code assignment: shorter codes first, ties by symbol id.
    pub fn from_lengths(lengths: Vec<u8>) -> Self {
        let mut order: Vec<usize> = (0..lengths.len()).collect();
        order.sort_by_key(|&s| (lengths[s], s));
        let mut codes = vec![Vec::new(); lengths.len()];
        let mut code: u64 = 0;
        let mut prev_len = 0u8;
        for (k, &s) in order.iter().enumerate() {
            let len = lengths[s];
            if k > 0 {
                code = (code + 1) << (len - prev_len);
            }
            prev_len = len;
            codes[s] = (0..len).rev().map(|b| (code >> b) & 1 == 1).collect();
        }

        let mut tree: Vec<[i32; 2]> = vec![[0, 0]];
        for (s, c) in codes.iter().enumerate() {
            let mut node = 0usize;
            for (depth, &bit) in c.iter().enumerate() {
                let slot = usize::from(bit);
                if depth + 1 == c.len() {
                    tree[node][slot] = !(s as i32);
                } else {
                    if tree[node][slot] == 0 {
                        tree.push([0, 0]);
                        tree[node][slot] = (tree.len() - 1) as i32;
                    }
                    node = tree[node][slot] as usize;
                }
            }
        }
        Self { lengths, codes, tree }
    }

    pub fn lengths(&self) -> &[u8] {
        &self.lengths
    }

    pub fn code(&self, symbol: usize) -> &[bool] {
        &self.codes[symbol]
    }

    pub fn kraft_sum(&self) -> f64 {
        self.lengths.iter().map(|&l| 2f64.powi(-i32::from(l))).sum()
    }

    pub fn is_prefix_free(&self) -> bool {
        let mut sorted: Vec<&Vec<bool>> = self.codes.iter().collect();
        sorted.sort();
        sorted.windows(2).all(|w| !w[1].starts_with(w[0]))
    }

    /// Serialized as one code length per line.
    pub fn to_text(&self) -> String {
        self.lengths.iter().map(|l| format!("{l}\n")).collect()
    }

    pub fn from_text(text: &str) -> Result<Self, EntropyError> {
        let lengths: Vec<u8> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.trim().parse().map_err(|_| EntropyError::EmptyTable))
            .collect::<Result<_, _>>()?;
        if lengths.len() < 2 || lengths.iter().any(|&l| l == 0 || l > 63) {
            return Err(EntropyError::EmptyTable);
        }
        let t = Self::from_lengths(lengths);
        if t.kraft_sum() > 1.0 {
            return Err(EntropyError::EmptyTable);
        }
        Ok(t)
    }
}

pub fn huffman_encode(tokens: &TokenSequence, table: &HuffmanTable) -> Result<Bitstream, EntropyError> {
    let mut out = Bitstream::new();
    for &t in tokens.as_slice() {
        let s = usize::from(t);
        if s >= table.codes.len() {
            return Err(EntropyError::NoCode(s));
        }
        out.extend_from_slice(&table.codes[s]);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeMode {
    /// A stream that ends inside a codeword is an error.
    Strict,
    /// Trailing partial codewords are dropped.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanDecoded {
    pub tokens: TokenSequence,
    pub hit_guard: bool,
    pub truncated: bool,
}

/// Decodes until EOS, the end of the stream, or `max_tokens`.
pub fn huffman_decode(
    bits: &Bitstream,
    table: &HuffmanTable,
    mode: DecodeMode,
    max_tokens: usize,
) -> Result<HuffmanDecoded, EntropyError> {
    let mut out: Vec<Token> = Vec::new();
    let mut node = 0usize;
    let mut mid_codeword = false;
    for bit in bits.iter() {
        if out.len() >= max_tokens {
            break;
        }
        let next = table.tree[node][usize::from(bit)];
        if next < 0 {
            let s = (!next) as Token;
            out.push(s);
            node = 0;
            mid_codeword = false;
            if s == EOS {
                break;
            }
        } else {
            node = next as usize;
            mid_codeword = true;
        }
    }
    let hit_guard = out.len() >= max_tokens && out.last() != Some(&EOS);
    if mid_codeword && !hit_guard && mode == DecodeMode::Strict {
        return Err(EntropyError::TruncatedCodeword(out.len()));
    }
    Ok(HuffmanDecoded {
        tokens: TokenSequence::new(out).expect("EOS terminates decoding"),
        hit_guard,
        truncated: mid_codeword,
    })
}
