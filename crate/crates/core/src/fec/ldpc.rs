use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gf2::{gf2_rank, mask, pivot_columns_from_right, reduce_on_columns, BitMatrix};
use super::FecError;

pub const N: usize = 49;
pub const K: usize = 24;
const M: usize = N - K;
const COLUMN_WEIGHT: usize = 3;
const MAX_ATTEMPTS: usize = 2000;

/// Seed from which the committed golden code was built.
pub const GOLDEN_SEED: u64 = 20240601;

const GOLDEN_TEXT: &str = include_str!("../../data/ldpc_49_24.txt");

/// Systematic binary LDPC code: `G = [I_K | P]` and `G·Hᵀ = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LdpcCode {
    h: BitMatrix,
    g: BitMatrix,
    p: BitMatrix,
    perm: Vec<usize>,
    seed: u64,
    check_vars: Vec<Vec<usize>>,
}

/// Number of 4-cycles in the Tanner graph of `h`.
fn four_cycles(h: &BitMatrix) -> usize {
    let cols: Vec<u64> = (0..h.n_cols())
        .map(|c| (0..h.n_rows()).fold(0u64, |acc, r| acc | (u64::from(h.get(r, c)) << r)))
        .collect();
    let mut n = 0;
    for a in 0..cols.len() {
        for b in a + 1..cols.len() {
            let o = (cols[a] & cols[b]).count_ones() as usize;
            n += o * o.saturating_sub(1) / 2;
        }
    }
    n
}

fn random_parity_check(rng: &mut ChaCha8Rng) -> BitMatrix {
    let max_row_weight = (N * COLUMN_WEIGHT).div_ceil(M);
    let mut h = BitMatrix::zeros(M, N);
    let mut deg = [0usize; M];
    let mut pairs: HashSet<(usize, usize)> = HashSet::new();
    for c in 0..N {
        let mut chosen: Vec<usize> = Vec::with_capacity(COLUMN_WEIGHT);
        for _ in 0..COLUMN_WEIGHT {
            let best = (0..M)
                .filter(|r| !chosen.contains(r) && deg[*r] < max_row_weight)
                .map(|r| {
                    let cycles = chosen.iter().filter(|&&q| pairs.contains(&(q.min(r), q.max(r)))).count();
                    (cycles, deg[r], rng.random::<u32>(), r)
                })
                .min()
                .map(|t| t.3)
                .expect("row capacity exceeds edge count");
            chosen.push(best);
        }
        for (i, &a) in chosen.iter().enumerate() {
            deg[a] += 1;
            h.set(a, c, true);
            for &b in &chosen[i + 1..] {
                pairs.insert((a.min(b), a.max(b)));
            }
        }
    }
    h
}

fn distinct_columns(h: &BitMatrix) -> bool {
    let cols: HashSet<Vec<bool>> = (0..h.n_cols()).map(|c| h.column(c)).collect();
    cols.len() == h.n_cols()
}

/// Column-weight-3 random construction; keeps the full-rank candidate with the
/// fewest 4-cycles over a bounded number of attempts, then reorders columns so
/// the information bits come first.
pub fn ldpc_construct(seed: u64) -> Result<LdpcCode, FecError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(usize, BitMatrix)> = None;
    for _ in 0..MAX_ATTEMPTS {
        let h = random_parity_check(&mut rng);
        if gf2_rank(&h) != M || !distinct_columns(&h) {
            continue;
        }
        let cycles = four_cycles(&h);
        if best.as_ref().is_none_or(|(b, _)| cycles < *b) {
            best = Some((cycles, h));
        }
        if cycles == 0 {
            break;
        }
    }
    let (_, h) = best.ok_or(FecError::ConstructionFailed(MAX_ATTEMPTS))?;

    let mut pivots = pivot_columns_from_right(&h);
    pivots.sort_unstable();
    let mut perm: Vec<usize> = (0..N).filter(|c| !pivots.contains(c)).collect();
    perm.extend(&pivots);
    let h = h.permute_columns(&perm);
    LdpcCode::from_parts(h, perm, seed)
}

impl LdpcCode {
    fn from_parts(h: BitMatrix, perm: Vec<usize>, seed: u64) -> Result<Self, FecError> {
        let parity_cols: Vec<usize> = (K..N).collect();
        let reduced = reduce_on_columns(&h, &parity_cols)
            .ok_or_else(|| FecError::Golden("parity columns of H are singular".into()))?;
        let mut p = BitMatrix::zeros(K, M);
        for i in 0..K {
            for j in 0..M {
                p.set(i, j, reduced.get(j, i));
            }
        }
        Self::assemble(h, p, perm, seed)
    }

    fn assemble(h: BitMatrix, p: BitMatrix, perm: Vec<usize>, seed: u64) -> Result<Self, FecError> {
        let g_rows = (0..K).map(|i| (1u64 << i) | (p.row(i) << K)).collect();
        let g = BitMatrix::from_rows(N, g_rows);
        let check_vars = (0..M).map(|r| (0..N).filter(|&c| h.get(r, c)).collect()).collect();
        let code = Self { h, g, p, perm, seed, check_vars };
        if !code.generator_is_orthogonal() {
            return Err(FecError::Golden("G·Hᵀ ≠ 0".into()));
        }
        Ok(code)
    }

    /// The committed code used by every experiment.
    pub fn golden() -> Self {
        Self::from_golden_text(GOLDEN_TEXT).expect("committed golden code is valid")
    }

    pub fn n(&self) -> usize {
        N
    }

    pub fn k(&self) -> usize {
        K
    }

    pub fn rate(&self) -> f64 {
        K as f64 / N as f64
    }

    pub fn parity_check(&self) -> &BitMatrix {
        &self.h
    }

    pub fn generator(&self) -> &BitMatrix {
        &self.g
    }

    pub fn column_permutation(&self) -> &[usize] {
        &self.perm
    }

    pub(crate) fn check_vars(&self) -> &[Vec<usize>] {
        &self.check_vars
    }

    pub fn generator_is_orthogonal(&self) -> bool {
        self.g.rows().iter().all(|&row| self.h.mul_vec(row).iter().all(|&s| !s))
    }

    pub fn four_cycle_count(&self) -> usize {
        four_cycles(&self.h)
    }

    /// `x_b = m·G (mod 2)`.
    pub fn encode(&self, message: &[bool]) -> Result<Vec<bool>, FecError> {
        if message.len() != K {
            return Err(FecError::MessageLength { got: message.len(), expected: K });
        }
        let word = message
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .fold(0u64, |acc, (i, _)| acc ^ self.g.row(i));
        Ok(unpack(word, N))
    }

    pub fn syndrome(&self, word: &[bool]) -> Vec<bool> {
        self.h.mul_vec(pack(word))
    }

    pub fn is_codeword(&self, word: &[bool]) -> bool {
        word.len() == N && self.syndrome(word).iter().all(|&s| !s)
    }

    /// Systematic positions: the first K bits.
    pub fn extract_message(&self, word: &[bool]) -> Result<Vec<bool>, FecError> {
        if word.len() != N {
            return Err(FecError::CodewordLength { got: word.len(), expected: N });
        }
        Ok(word[..K].to_vec())
    }

    /// Smallest weight of a nonzero vector `x` with `H·x = 0` among weights
    /// `1..=max_weight`, by exhaustive search.
    pub fn min_weight_up_to(&self, max_weight: usize) -> Option<usize> {
        let cols: Vec<u64> = (0..N)
            .map(|c| (0..M).fold(0u64, |acc, r| acc | (u64::from(self.h.get(r, c)) << r)))
            .collect();
        fn search(cols: &[u64], start: usize, left: usize, acc: u64, used: usize) -> bool {
            if left == 0 {
                return used > 0 && acc == 0;
            }
            (start..cols.len()).any(|c| search(cols, c + 1, left - 1, acc ^ cols[c], used + 1))
        }
        (1..=max_weight).find(|&w| search(&cols, 0, w, 0, 0))
    }

    pub fn to_golden_text(&self) -> String {
        let mut s = format!("# LDPC({N},{K}) parity-check matrix, column-weight {COLUMN_WEIGHT}, seed {}\n", self.seed);
        s.push_str(&format!("H {M} {N}\n"));
        s.push_str(&self.h.to_text());
        s.push_str(&format!("PERM {N}\n"));
        s.push_str(&self.perm.iter().map(usize::to_string).collect::<Vec<_>>().join(" "));
        s.push('\n');
        s.push_str(&format!("P {K} {M}\n"));
        s.push_str(&self.p.to_text());
        s
    }

    pub fn from_golden_text(text: &str) -> Result<Self, FecError> {
        let bad = |m: &str| FecError::Golden(m.to_string());
        let mut seed = 0;
        let mut lines = text.lines().filter(|l| {
            if let Some(rest) = l.strip_prefix('#') {
                if let Some(s) = rest.rsplit("seed ").next().and_then(|s| s.trim().parse().ok()) {
                    seed = s;
                }
                false
            } else {
                !l.trim().is_empty()
            }
        });
        fn matrix<'a>(
            lines: &mut impl Iterator<Item = &'a str>,
            tag: &str,
            rows: usize,
            cols: usize,
        ) -> Result<BitMatrix, FecError> {
            let bad = |m: &str| FecError::Golden(m.to_string());
            let header = lines.next().ok_or_else(|| bad("unexpected end of file"))?;
            if header.trim() != format!("{tag} {rows} {cols}") {
                return Err(bad(&format!("expected `{tag} {rows} {cols}`, found `{header}`")));
            }
            let mut m = BitMatrix::zeros(rows, cols);
            for r in 0..rows {
                let line = lines.next().ok_or_else(|| bad("missing matrix row"))?.trim();
                if line.len() != cols {
                    return Err(bad(&format!("{tag} row {r} has {} entries", line.len())));
                }
                for (c, ch) in line.chars().enumerate() {
                    match ch {
                        '0' => {}
                        '1' => m.set(r, c, true),
                        _ => return Err(bad("matrix entries must be 0 or 1")),
                    }
                }
            }
            Ok(m)
        }
        let h = matrix(&mut lines, "H", M, N)?;
        let header = lines.next().ok_or_else(|| bad("missing PERM"))?;
        if header.trim() != format!("PERM {N}") {
            return Err(bad("expected PERM header"));
        }
        let perm: Vec<usize> = lines
            .next()
            .ok_or_else(|| bad("missing permutation"))?
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| bad("bad permutation entry"))?;
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        if sorted != (0..N).collect::<Vec<_>>() {
            return Err(bad("PERM is not a permutation"));
        }
        let p = matrix(&mut lines, "P", K, M)?;
        if gf2_rank(&h) != M {
            return Err(bad("H is not full rank"));
        }
        Self::assemble(h, p, perm, seed)
    }
}

fn pack(word: &[bool]) -> u64 {
    word.iter().enumerate().fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i)) & mask(N)
}

fn unpack(word: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| word >> i & 1 == 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_file_matches_construction() {
        let built = ldpc_construct(GOLDEN_SEED).unwrap();
        if std::env::var_os("MASC_BLESS").is_some() {
            let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/ldpc_49_24.txt");
            std::fs::write(path, built.to_golden_text()).unwrap();
        }
        assert_eq!(built.to_golden_text(), GOLDEN_TEXT);
        assert_eq!(LdpcCode::golden(), built);
    }

    #[test]
    fn golden_code_algebra() {
        let code = LdpcCode::golden();
        assert!(code.generator_is_orthogonal());
        assert_eq!(gf2_rank(code.parity_check()), 25);
        for r in 0..K {
            for c in 0..K {
                assert_eq!(code.generator().get(r, c), r == c);
            }
        }
        for c in 0..N {
            let w = code.parity_check().column(c).iter().filter(|&&b| b).count();
            assert_eq!(w, COLUMN_WEIGHT);
        }
    }

    #[test]
    fn golden_code_minimum_distance() {
        let code = LdpcCode::golden();
        assert_eq!(code.min_weight_up_to(2), None);
    }

    #[test]
    fn encode_examples() {
        let code = LdpcCode::golden();
        assert_eq!(code.encode(&[false; K]).unwrap(), vec![false; N]);
        let mut e1 = vec![false; K];
        e1[0] = true;
        let row0: Vec<bool> = (0..N).map(|c| code.generator().get(0, c)).collect();
        assert_eq!(code.encode(&e1).unwrap(), row0);
        assert!(code.encode(&[true; 23]).is_err());
    }

    #[test]
    fn random_messages_satisfy_syndrome() {
        let code = LdpcCode::golden();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let m: Vec<bool> = (0..K).map(|_| rng.random()).collect();
            let x = code.encode(&m).unwrap();
            assert!(code.is_codeword(&x));
            assert_eq!(code.extract_message(&x).unwrap(), m);
        }
        assert!(code.extract_message(&[false; 10]).is_err());
    }

    #[test]
    fn golden_parser_rejects_garbage() {
        assert!(LdpcCode::from_golden_text("H 25 49\n0101\n").is_err());
        let broken = GOLDEN_TEXT.replacen("PERM 49", "PERM 48", 1);
        assert!(LdpcCode::from_golden_text(&broken).is_err());
    }
}
