//! Suffix contexts and seeded hashing into memory tables.

use masc_core::{Token, BOS};

/// splitmix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The `n` tokens ending at 1-based position `i`, left-padded with BOS.
pub fn suffix_context(tokens: &[Token], i: usize, n: usize) -> Vec<Token> {
    assert!(i >= 1 && i <= tokens.len(), "position {i} outside 1..={}", tokens.len());
    (0..n)
        .map(|j| {
            let pos = i as isize - n as isize + j as isize;
            if pos < 0 {
                BOS
            } else {
                tokens[pos as usize]
            }
        })
        .collect()
}

/// Multiply-shift hash of a context into `[0, table_size)`.
///
/// Only token ids and the seed enter the hash, so indices are stable
/// across processes and machines.
pub fn hash_index(context: &[Token], seed: u64, table_size: usize) -> usize {
    let mut acc = splitmix64(seed ^ context.len() as u64);
    for &t in context {
        acc = (acc ^ u64::from(t)).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        acc ^= acc >> 32;
    }
    let mixed = splitmix64(acc);
    ((u128::from(mixed) * table_size as u128) >> 64) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn suffix_examples() {
        let (a, b, c) = (97, 98, 99);
        assert_eq!(suffix_context(&[a, b, c], 3, 2), vec![b, c]);
        assert_eq!(suffix_context(&[a, b, c], 1, 3), vec![BOS, BOS, a]);
        let t = [1, 2, 3, 4, 5, 6];
        assert_eq!(suffix_context(&t, 5, 5), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn hash_is_deterministic_and_in_range() {
        let ctx = [5u16, 7, 257];
        assert_eq!(hash_index(&ctx, 3, 1000), hash_index(&ctx, 3, 1000));
        // frozen so that any change to the hash is noticed
        assert_eq!(hash_index(&ctx, 3, 1 << 16), 65184);
        assert_eq!(hash_index(&[BOS, BOS], 1, 1000), 606);
        for t in 2..50 {
            assert!(hash_index(&ctx, 11, t) < t);
        }
    }

    #[test]
    fn buckets_are_roughly_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = 1024;
        let mut counts = vec![0usize; t];
        let n = 100_000;
        for _ in 0..n {
            let len = rng.random_range(2..=5);
            let ctx: Vec<Token> = (0..len).map(|_| rng.random_range(0..258)).collect();
            counts[hash_index(&ctx, 42, t)] += 1;
        }
        let mean = n as f64 / t as f64;
        let max = *counts.iter().max().unwrap() as f64;
        assert!(max <= 3.0 * mean, "max bucket {max}, mean {mean}");
    }

    #[test]
    fn heads_hash_independently() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = 4096;
        let n = 20_000;
        let same = (0..n)
            .filter(|_| {
                let ctx: Vec<Token> = (0..3).map(|_| rng.random_range(0..258)).collect();
                hash_index(&ctx, 1, t) == hash_index(&ctx, 2, t)
            })
            .count();
        let frac_differ = 1.0 - same as f64 / n as f64;
        assert!(frac_differ >= 1.0 - 1.0 / t as f64 - 0.002, "{frac_differ}");
    }
}
