use super::EntropyError;

/// Quantized distributions always sum to `2^PMF_TOTAL_BITS`.
pub const PMF_TOTAL_BITS: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AcConfig {
    precision: u32,
}

impl AcConfig {
    pub fn new(precision: u32) -> Result<Self, EntropyError> {
        if !(16..=62).contains(&precision) {
            return Err(EntropyError::BadPrecision(precision));
        }
        Ok(Self { precision })
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// Largest frequency total that keeps every symbol interval nonempty.
    pub fn max_total(&self) -> u64 {
        1 << (self.precision - 2)
    }
}

impl Default for AcConfig {
    fn default() -> Self {
        Self { precision: 31 }
    }
}

/// Integer frequency table; every symbol has frequency at least 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionalPmf {
    freqs: Vec<u32>,
    cumulative: Vec<u64>,
}

impl ConditionalPmf {
    pub fn from_freqs(freqs: Vec<u32>) -> Self {
        assert!(freqs.iter().all(|&f| f >= 1), "zero frequency");
        let mut cumulative = Vec::with_capacity(freqs.len() + 1);
        let mut acc = 0u64;
        cumulative.push(0);
        for &f in &freqs {
            acc += u64::from(f);
            cumulative.push(acc);
        }
        Self { freqs, cumulative }
    }

    pub fn freqs(&self) -> &[u32] {
        &self.freqs
    }

    pub fn total(&self) -> u64 {
        *self.cumulative.last().expect("nonempty")
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// `[low, high)` cumulative range of `symbol`.
    pub fn range(&self, symbol: usize) -> (u64, u64) {
        (self.cumulative[symbol], self.cumulative[symbol + 1])
    }

    /// Symbol whose cumulative range contains `target`.
    pub fn find(&self, target: u64) -> usize {
        debug_assert!(target < self.total());
        self.cumulative.partition_point(|&c| c <= target) - 1
    }

    pub fn probability(&self, symbol: usize) -> f64 {
        f64::from(self.freqs[symbol]) / self.total() as f64
    }
}

/// Converts model probabilities into frequencies summing to exactly 2^20.
///
/// Each symbol first gets a floor of 1, the remaining mass is distributed in
/// proportion to the (renormalized) probabilities by floor rounding, and the
/// leftover units go to the largest fractional parts, lowest index first on ties.
pub fn quantize_pmf(probabilities: &[f64], config: &AcConfig) -> Result<ConditionalPmf, EntropyError> {
    let total: u64 = 1 << PMF_TOTAL_BITS;
    if total > config.max_total() {
        return Err(EntropyError::TotalTooLarge { total, limit_bits: config.precision() - 2 });
    }
    let v = probabilities.len();
    if v == 0 || v as u64 >= total {
        return Err(EntropyError::VocabTooLarge(v));
    }
    if let Some(i) = probabilities.iter().position(|p| !p.is_finite() || *p < 0.0) {
        return Err(EntropyError::InvalidProbability(i));
    }
    let sum: f64 = probabilities.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(EntropyError::NotNormalized(sum));
    }

    let spare = (total - v as u64) as f64;
    let mut freqs = Vec::with_capacity(v);
    let mut fracs = Vec::with_capacity(v);
    let mut assigned = 0u64;
    for (i, &p) in probabilities.iter().enumerate() {
        let raw = p / sum * spare;
        let whole = raw.floor();
        freqs.push(1 + whole as u32);
        fracs.push((raw - whole, i));
        assigned += 1 + whole as u64;
    }
    let mut leftover = total - assigned;
    fracs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut k = 0;
    while leftover > 0 {
        freqs[fracs[k % v].1] += 1;
        leftover -= 1;
        k += 1;
    }
    Ok(ConditionalPmf::from_freqs(freqs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{FromPrimitive, Signed, ToPrimitive};

    #[test]
    fn config_bounds() {
        assert!(AcConfig::new(15).is_err());
        assert!(AcConfig::new(63).is_err());
        assert_eq!(AcConfig::default().precision(), 31);
        assert_eq!(AcConfig::default().max_total(), 1 << 29);
    }

    #[test]
    fn uniform_over_four() {
        let q = quantize_pmf(&[0.25; 4], &AcConfig::default()).unwrap();
        assert_eq!(q.freqs(), &[1 << 18; 4]);
    }

    #[test]
    fn zero_probability_gets_floor() {
        let q = quantize_pmf(&[0.5, 0.0, 0.5], &AcConfig::default()).unwrap();
        assert_eq!(q.freqs()[1], 1);
        assert_eq!(q.total(), 1 << 20);
    }

    #[test]
    fn rejects_bad_input() {
        let c = AcConfig::default();
        assert_eq!(quantize_pmf(&[0.5, f64::NAN], &c), Err(EntropyError::InvalidProbability(1)));
        assert_eq!(quantize_pmf(&[1.5, -0.5], &c), Err(EntropyError::InvalidProbability(1)));
        assert!(matches!(quantize_pmf(&[0.5, 0.4], &c), Err(EntropyError::NotNormalized(_))));
        assert!(matches!(
            quantize_pmf(&[0.5, 0.5], &AcConfig::new(20).unwrap()),
            Err(EntropyError::TotalTooLarge { .. })
        ));
    }

    /// Exact rational target `p * 2^20` for each symbol; the quantized value
    /// must stay within 4 units of it.
    fn assert_close_to_exact(probs: &[f64]) {
        let q = quantize_pmf(probs, &AcConfig::default()).unwrap();
        assert_eq!(q.total(), 1 << 20);
        let total = BigRational::from_integer(BigInt::from(1u64 << 20));
        for (i, &p) in probs.iter().enumerate() {
            let exact = BigRational::from_f64(p).unwrap() * &total;
            let got = BigRational::from_integer(BigInt::from(q.freqs()[i]));
            let diff = (got - exact).abs().to_f64().unwrap();
            assert!(diff <= 4.0, "symbol {i}: off by {diff}");
        }
    }

    #[test]
    fn half_quarter_quarter() {
        let q = quantize_pmf(&[0.5, 0.25, 0.25], &AcConfig::default()).unwrap();
        assert_eq!(q.freqs(), &[1 << 19, 1 << 18, 1 << 18]);
        assert_close_to_exact(&[0.5, 0.25, 0.25]);
        assert_close_to_exact(&[0.7, 0.2, 0.1]);
        assert_close_to_exact(&[0.999, 0.0005, 0.0004, 0.0001]);
    }

    #[test]
    fn lookup_matches_ranges() {
        let q = ConditionalPmf::from_freqs(vec![3, 1, 4, 1, 5]);
        for s in 0..5 {
            let (lo, hi) = q.range(s);
            for t in lo..hi {
                assert_eq!(q.find(t), s);
            }
        }
    }
}
