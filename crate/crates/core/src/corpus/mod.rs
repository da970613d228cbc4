//! Byte-level tokenization and reproducible corpus preparation.

pub mod synth;

use std::collections::HashSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Token id. Byte values occupy `0..256`, followed by the two specials.
pub type Token = u16;

pub const BOS: Token = 256;
pub const EOS: Token = 257;
pub const VOCAB_SIZE: usize = 258;

/// Name of the generator used for shuffling, recorded in split metadata.
pub const SHUFFLE_PRNG: &str = "ChaCha8Rng (rand_chacha 0.9) + Fisher-Yates";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorpusError {
    #[error("token id {0} outside the vocabulary")]
    OutOfVocab(u32),
    #[error("special token {token} at interior position {pos}")]
    InteriorSpecial { token: Token, pos: usize },
    #[error("EOS may only appear as the final token (found at {0})")]
    MisplacedEos(usize),
    #[error("corpus has {0} distinct sentences, at least 10 are required")]
    TooFewSentences(usize),
    #[error("empty corpus input")]
    Empty,
}

/// Sequence of token ids with at most one EOS, in final position.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct TokenSequence(Vec<Token>);

impl TokenSequence {
    pub fn new(tokens: Vec<Token>) -> Result<Self, CorpusError> {
        for (pos, &t) in tokens.iter().enumerate() {
            if usize::from(t) >= VOCAB_SIZE {
                return Err(CorpusError::OutOfVocab(u32::from(t)));
            }
            if t == EOS && pos + 1 != tokens.len() {
                return Err(CorpusError::MisplacedEos(pos));
            }
        }
        Ok(Self(tokens))
    }

    pub fn as_slice(&self) -> &[Token] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ends_with_eos(&self) -> bool {
        self.0.last() == Some(&EOS)
    }

    pub fn into_inner(self) -> Vec<Token> {
        self.0
    }
}

impl fmt::Debug for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl AsRef<[Token]> for TokenSequence {
    fn as_ref(&self) -> &[Token] {
        &self.0
    }
}

/// Maps bytes to token ids and appends EOS.
pub fn tokenize(text: &[u8]) -> TokenSequence {
    let mut tokens: Vec<Token> = text.iter().map(|&b| Token::from(b)).collect();
    tokens.push(EOS);
    TokenSequence(tokens)
}

/// Inverse of [`tokenize`]. A trailing EOS is optional; any other special is rejected.
pub fn detokenize(tokens: &[Token]) -> Result<Vec<u8>, CorpusError> {
    let body = match tokens.split_last() {
        Some((&EOS, rest)) => rest,
        _ => tokens,
    };
    body.iter()
        .enumerate()
        .map(|(pos, &t)| match t {
            0..=255 => Ok(t as u8),
            BOS | EOS => Err(CorpusError::InteriorSpecial { token: t, pos }),
            _ => Err(CorpusError::OutOfVocab(u32::from(t))),
        })
        .collect()
}

/// Best-effort reconstruction used on the receive side: specials are dropped.
pub fn detokenize_lossy(tokens: &[Token]) -> Vec<u8> {
    tokens.iter().filter(|&&t| t < 256).map(|&t| t as u8).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitMetadata {
    pub seed: u64,
    pub prng: String,
    pub sentences_before_dedup: usize,
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSplit {
    pub train: Vec<TokenSequence>,
    pub val: Vec<TokenSequence>,
    pub test: Vec<TokenSequence>,
    pub meta: SplitMetadata,
}

impl CorpusSplit {
    /// Sentence bytes (without EOS) of one split.
    pub fn texts(split: &[TokenSequence]) -> Vec<Vec<u8>> {
        split
            .iter()
            .map(|s| detokenize(s.as_slice()).expect("corpus sequences are valid"))
            .collect()
    }

    /// Longest training sequence in tokens (EOS included).
    pub fn max_train_len(&self) -> usize {
        self.train.iter().map(TokenSequence::len).max().unwrap_or(0)
    }
}

/// Splits text into sentences at `.`, `!` or `?` followed by whitespace or end of line.
pub fn split_sentences(raw: &[u8]) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for line in raw.split(|&b| b == b'\n') {
        let mut start = 0;
        for i in 0..line.len() {
            let is_end = matches!(line[i], b'.' | b'!' | b'?')
                && (i + 1 == line.len() || line[i + 1].is_ascii_whitespace());
            if is_end {
                push_trimmed(&mut out, &line[start..=i]);
                start = i + 1;
            }
        }
        push_trimmed(&mut out, &line[start..]);
    }
    out
}

fn push_trimmed(out: &mut Vec<Vec<u8>>, s: &[u8]) {
    let t = s.trim_ascii();
    if !t.is_empty() {
        out.push(t.to_vec());
    }
}

/// Split, dedupe (first occurrence wins), shuffle with a seeded ChaCha8 and cut 80/10/10.
pub fn prepare_corpus(raw: &[u8], seed: u64) -> Result<CorpusSplit, CorpusError> {
    if raw.is_empty() {
        return Err(CorpusError::Empty);
    }
    let sentences = split_sentences(raw);
    let before = sentences.len();
    let mut seen = HashSet::with_capacity(before);
    let mut unique: Vec<Vec<u8>> = sentences
        .into_iter()
        .filter(|s| seen.insert(s.clone()))
        .collect();
    if unique.len() < 10 {
        return Err(CorpusError::TooFewSentences(unique.len()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    unique.shuffle(&mut rng);

    let n = unique.len();
    let n_train = (n * 8 + 5) / 10;
    let n_val = (n + 5) / 10;
    let mut seqs: Vec<TokenSequence> = unique.iter().map(|s| tokenize(s)).collect();
    let test = seqs.split_off(n_train + n_val);
    let val = seqs.split_off(n_train);
    let train = seqs;
    Ok(CorpusSplit {
        meta: SplitMetadata {
            seed,
            prng: SHUFFLE_PRNG.to_string(),
            sentences_before_dedup: before,
            train: train.len(),
            val: val.len(),
            test: test.len(),
        },
        train,
        val,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize(b"").as_slice(), &[EOS]);
        assert_eq!(tokenize(b"Ab").as_slice(), &[65, 98, EOS]);
        assert_eq!(detokenize(&[EOS]).unwrap(), b"");
        assert_eq!(detokenize(&[72, 105, EOS]).unwrap(), b"Hi");
    }

    #[test]
    fn detokenize_rejects_interior_specials() {
        assert_eq!(
            detokenize(&[72, EOS, 105, EOS]),
            Err(CorpusError::InteriorSpecial { token: EOS, pos: 1 })
        );
        assert!(detokenize(&[BOS, 72]).is_err());
        assert!(detokenize(&[300]).is_err());
    }

    #[test]
    fn token_sequence_rejects_misplaced_eos() {
        assert!(TokenSequence::new(vec![1, EOS, 2]).is_err());
        assert!(TokenSequence::new(vec![1, 2, EOS]).is_ok());
        assert!(TokenSequence::new(vec![258]).is_err());
    }

    #[test]
    fn random_byte_strings_round_trip() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let len = rng.random_range(0..200);
            let bytes: Vec<u8> = (0..len).map(|_| rng.random()).collect();
            let t = tokenize(&bytes);
            assert_eq!(t.len(), bytes.len() + 1);
            assert_eq!(detokenize(t.as_slice()).unwrap(), bytes);
        }
    }

    proptest! {
        #[test]
        fn tokenize_detokenize_identity(bytes in proptest::collection::vec(any::<u8>(), 0..300)) {
            prop_assert_eq!(detokenize(tokenize(&bytes).as_slice()).unwrap(), bytes);
        }
    }

    fn numbered(n: usize) -> String {
        (0..n).map(|i| format!("Sentence number {i} is here. ")).collect()
    }

    #[test]
    fn sentence_splitting() {
        let s = split_sentences(b"  Hello there. How are you?Fine! ok\nNew line 3.14 pi.  \n\n");
        let s: Vec<&[u8]> = s.iter().map(Vec::as_slice).collect();
        assert_eq!(
            s,
            vec![&b"Hello there."[..], b"How are you?Fine!", b"ok", b"New line 3.14 pi."]
        );
    }

    #[test]
    fn duplicates_are_removed() {
        let mut raw = numbered(20);
        raw.push_str("Sentence number 3 is here.\n");
        let split = prepare_corpus(raw.as_bytes(), 1).unwrap();
        assert_eq!(split.meta.sentences_before_dedup, 21);
        assert_eq!(split.train.len() + split.val.len() + split.test.len(), 20);
    }

    #[test]
    fn split_sizes_and_disjointness() {
        let split = prepare_corpus(numbered(100).as_bytes(), 3).unwrap();
        assert_eq!((split.train.len(), split.val.len(), split.test.len()), (80, 10, 10));
        let mut all: Vec<&TokenSequence> =
            split.train.iter().chain(&split.val).chain(&split.test).collect();
        all.sort_by(|a, b| a.as_slice().cmp(b.as_slice()));
        all.dedup();
        assert_eq!(all.len(), 100);

        for n in [10, 11, 17, 33, 999] {
            let s = prepare_corpus(numbered(n).as_bytes(), 0).unwrap();
            let f = n as f64;
            assert!((s.train.len() as f64 - 0.8 * f).abs() <= 1.0);
            assert!((s.val.len() as f64 - 0.1 * f).abs() <= 1.0);
            assert!((s.test.len() as f64 - 0.1 * f).abs() <= 1.0);
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let raw = numbered(50);
        let a = prepare_corpus(raw.as_bytes(), 42).unwrap();
        let b = prepare_corpus(raw.as_bytes(), 42).unwrap();
        let c = prepare_corpus(raw.as_bytes(), 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn too_few_sentences() {
        assert_eq!(
            prepare_corpus(numbered(9).as_bytes(), 0),
            Err(CorpusError::TooFewSentences(9))
        );
        assert_eq!(prepare_corpus(b"", 0), Err(CorpusError::Empty));
    }
}
