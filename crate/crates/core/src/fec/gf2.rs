use std::fmt;

/// Dense binary matrix with at most 64 columns; row `r` bit `c` is entry (r, c).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(cols <= 64);
        Self { cols, rows: vec![0; rows] }
    }

    pub fn from_rows(cols: usize, rows: Vec<u64>) -> Self {
        assert!(cols <= 64);
        let mask = mask(cols);
        assert!(rows.iter().all(|r| r & !mask == 0), "bits beyond column count");
        Self { cols, rows }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r] >> c & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        if v {
            self.rows[r] |= 1 << c;
        } else {
            self.rows[r] &= !(1 << c);
        }
    }

    pub fn row(&self, r: usize) -> u64 {
        self.rows[r]
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    pub fn column(&self, c: usize) -> Vec<bool> {
        (0..self.rows.len()).map(|r| self.get(r, c)).collect()
    }

    /// Parity of `row · x` for each row, with `x` packed like a row.
    pub fn mul_vec(&self, x: u64) -> Vec<bool> {
        self.rows.iter().map(|r| (r & x).count_ones() % 2 == 1).collect()
    }

    pub fn permute_columns(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.cols);
        let rows = self
            .rows
            .iter()
            .map(|&r| perm.iter().enumerate().fold(0u64, |acc, (j, &src)| acc | ((r >> src & 1) << j)))
            .collect();
        Self { cols: self.cols, rows }
    }

    pub fn to_text(&self) -> String {
        self.rows
            .iter()
            .map(|&r| (0..self.cols).map(|c| if r >> c & 1 == 1 { '1' } else { '0' }).collect::<String>() + "\n")
            .collect()
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows.len(), self.cols)?;
        f.write_str(&self.to_text())
    }
}

pub(crate) fn mask(cols: usize) -> u64 {
    if cols == 64 {
        u64::MAX
    } else {
        (1u64 << cols) - 1
    }
}

/// Rank over GF(2) by Gaussian elimination.
pub fn gf2_rank(m: &BitMatrix) -> usize {
    let mut rows = m.rows.clone();
    let mut rank = 0;
    for c in 0..m.cols {
        let Some(p) = (rank..rows.len()).find(|&r| rows[r] >> c & 1 == 1) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank];
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && *row >> c & 1 == 1 {
                *row ^= pivot;
            }
        }
        rank += 1;
    }
    rank
}

/// Reduces `m` so that the columns in `pivots` (one per row, in order) form an
/// identity. Returns `None` when those columns are singular.
pub(crate) fn reduce_on_columns(m: &BitMatrix, pivots: &[usize]) -> Option<BitMatrix> {
    assert_eq!(pivots.len(), m.n_rows());
    let mut rows = m.rows.clone();
    for (i, &c) in pivots.iter().enumerate() {
        let p = (i..rows.len()).find(|&r| rows[r] >> c & 1 == 1)?;
        rows.swap(i, p);
        let pivot = rows[i];
        for (r, row) in rows.iter_mut().enumerate() {
            if r != i && *row >> c & 1 == 1 {
                *row ^= pivot;
            }
        }
    }
    Some(BitMatrix { cols: m.cols, rows })
}

/// Pivot columns found by elimination scanning columns from last to first.
pub(crate) fn pivot_columns_from_right(m: &BitMatrix) -> Vec<usize> {
    let mut rows = m.rows.clone();
    let mut pivots = Vec::new();
    for c in (0..m.cols).rev() {
        let rank = pivots.len();
        let Some(p) = (rank..rows.len()).find(|&r| rows[r] >> c & 1 == 1) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank];
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && *row >> c & 1 == 1 {
                *row ^= pivot;
            }
        }
        pivots.push(c);
    }
    pivots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_examples() {
        let id = BitMatrix::from_rows(3, vec![0b001, 0b010, 0b100]);
        assert_eq!(gf2_rank(&id), 3);
        let dep = BitMatrix::from_rows(3, vec![0b011, 0b110, 0b101]);
        assert_eq!(gf2_rank(&dep), 2);
        assert_eq!(gf2_rank(&BitMatrix::zeros(4, 5)), 0);
    }

    #[test]
    fn permutation_moves_columns() {
        let m = BitMatrix::from_rows(3, vec![0b001]);
        let p = m.permute_columns(&[2, 1, 0]);
        assert!(p.get(0, 2) && !p.get(0, 0));
    }
}
