//! Digit-restricted Cantor sets `K₀ = {x̂ : x(n) = 0 for n ∈ D}` and
//! `K₁ = {x̂ : x(n) = 0 for n ∉ D}` with `x̂ = Σ 2^{-n-1} x(n)`.
//!
//! `D ⊆ ℕ` is stored as alternating runs of digit indices, starting with a
//! run outside `D`. "Level n" refers to the first `n` digits `{0, …, n-1}`.

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};
use crate::metric::FiniteMetricSpace;

/// How block lengths are produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockRule {
    /// `L_1 = 1`, `L_k = k · (L_1 + … + L_{k-1})`.
    Default,
    /// Explicit strictly increasing lengths.
    Lengths(Vec<u64>),
}

/// `D` as a finite list of alternating runs, out first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitBlocks {
    /// Exclusive end index of each run; run `i` is inside `D` iff `i` is odd.
    ends: Vec<u64>,
}

/// Block lengths of the default rule that fit in `u64` totals.
fn default_lengths() -> Vec<u64> {
    let mut lengths = vec![1u64];
    let mut total = 1u64;
    for k in 2u64.. {
        let Some(len) = total.checked_mul(k) else { break };
        let Some(next) = total.checked_add(len) else { break };
        lengths.push(len);
        total = next;
    }
    lengths
}

pub fn make_digit_blocks(rule: &BlockRule) -> Result<DigitBlocks> {
    let lengths = match rule {
        BlockRule::Default => default_lengths(),
        BlockRule::Lengths(l) => l.clone(),
    };
    if lengths.windows(2).any(|w| w[1] <= w[0]) || lengths.first() == Some(&0) {
        return Err(Error::InvalidBlocks("block lengths must be positive and strictly increasing".into()));
    }
    if lengths.len() < 2 {
        return Err(Error::InvalidBlocks("D needs at least one block inside it".into()));
    }
    let mut ends = Vec::with_capacity(lengths.len());
    let mut total = 0u64;
    for len in lengths {
        total = total.checked_add(len).ok_or_else(|| Error::InvalidBlocks("block lengths overflow".into()))?;
        ends.push(total);
    }
    Ok(DigitBlocks { ends })
}

impl DigitBlocks {
    /// Largest level on which `D` is determined.
    pub fn horizon(&self) -> u64 {
        *self.ends.last().expect("nonempty")
    }

    pub fn contains(&self, digit: u64) -> bool {
        let run = self.ends.partition_point(|&e| e <= digit);
        run % 2 == 1
    }

    /// `|n ∩ D|`.
    pub fn count_in(&self, n: u64) -> u64 {
        let mut start = 0;
        let mut count = 0;
        for (i, &end) in self.ends.iter().enumerate() {
            if start >= n {
                break;
            }
            if i % 2 == 1 {
                count += end.min(n) - start;
            }
            start = end;
        }
        count
    }

    /// `|n ∩ D| / n`.
    pub fn density(&self, n: u64) -> f64 {
        self.count_in(n) as f64 / n as f64
    }

    /// `(end, inside D)` for every run.
    pub fn runs(&self) -> impl Iterator<Item = (u64, bool)> + '_ {
        self.ends.iter().enumerate().map(|(i, &e)| (e, i % 2 == 1))
    }

    /// Levels `n ≤ max_n` with `(n-1)/2 < |n ∩ D| ≤ n/2`.
    pub fn f_subsequence(&self, max_n: u64) -> Vec<u64> {
        (1..=max_n.min(self.horizon()))
            .filter(|&n| {
                let c = self.count_in(n);
                2 * c > n - 1 && 2 * c <= n
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// `K₀`: digits in `D` are forced to zero.
    ForcedZeroOn,
    /// `K₁`: digits outside `D` are forced to zero.
    ForcedZeroOff,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitSet {
    pub blocks: DigitBlocks,
    pub depth: u64,
    pub variant: Variant,
}

/// Materialized levels are limited by exact `f64` dyadic positions.
pub const MAX_MATERIAL_DEPTH: u64 = 53;

impl DigitSet {
    pub fn new(blocks: DigitBlocks, depth: u64, variant: Variant) -> Result<Self> {
        if depth > blocks.horizon() {
            return Err(Error::DepthExceeded { requested: depth, depth: blocks.horizon() });
        }
        Ok(Self { blocks, depth, variant })
    }

    pub fn k0(depth: u64) -> Result<Self> {
        Self::new(make_digit_blocks(&BlockRule::Default)?, depth, Variant::ForcedZeroOn)
    }

    pub fn k1(depth: u64) -> Result<Self> {
        Self::new(make_digit_blocks(&BlockRule::Default)?, depth, Variant::ForcedZeroOff)
    }

    pub fn label(&self) -> &'static str {
        match self.variant {
            Variant::ForcedZeroOn => "k0",
            Variant::ForcedZeroOff => "k1",
        }
    }

    fn check(&self, n: u64) -> Result<()> {
        if n > self.depth {
            return Err(Error::DepthExceeded { requested: n, depth: self.depth });
        }
        Ok(())
    }

    pub fn is_free(&self, digit: u64) -> bool {
        self.blocks.contains(digit) == (self.variant == Variant::ForcedZeroOff)
    }

    /// Number of free digits among the first `n`.
    pub fn free_digits(&self, n: u64) -> Result<u64> {
        self.check(n)?;
        let inside = self.blocks.count_in(n);
        Ok(match self.variant {
            Variant::ForcedZeroOn => n - inside,
            Variant::ForcedZeroOff => inside,
        })
    }

    /// Number of surviving level-`n` binary intervals, `2^{free digits}`.
    pub fn covering(&self, n: u64) -> Result<BigUint> {
        Ok(BigUint::one() << self.free_digits(n)?)
    }

    /// Natural log of [`covering`](Self::covering).
    pub fn ln_covering(&self, n: u64) -> Result<f64> {
        Ok(self.free_digits(n)? as f64 * std::f64::consts::LN_2)
    }

    /// Covering number at `2^{-n}` of the level-`n` left endpoints. When the
    /// last digit is free, endpoints pair up at distance exactly `2^{-n}`.
    pub fn discretization_covering(&self, n: u64) -> Result<BigUint> {
        let all = self.covering(n)?;
        Ok(if n >= 1 && self.is_free(n - 1) { all >> 1 } else { all })
    }

    /// Left endpoints of all surviving level-`n` intervals, increasing.
    pub fn discretize(&self, n: u64, cap: usize) -> Result<FiniteMetricSpace> {
        self.check(n)?;
        if n > MAX_MATERIAL_DEPTH {
            return Err(Error::DepthExceeded { requested: n, depth: MAX_MATERIAL_DEPTH });
        }
        let free: Vec<u64> = (0..n).filter(|&d| self.is_free(d)).collect();
        let count = 1u128 << free.len();
        if count > cap as u128 {
            return Err(Error::TooManyPoints { count, cap });
        }
        let scale = 0.5f64.powi(n as i32);
        let mut xs: Vec<f64> = (0..count as u64)
            .map(|bits| {
                let j: u64 = free.iter().enumerate().filter(|(b, _)| bits >> b & 1 == 1).map(|(_, &d)| 1u64 << (n - 1 - d)).sum();
                j as f64 * scale
            })
            .collect();
        xs.sort_by(f64::total_cmp);
        FiniteMetricSpace::from_line(&format!("{}-depth{n}", self.label()), xs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Metric;
    use crate::packing::{covering_count, Caps};

    #[test]
    fn default_blocks() {
        let b = make_digit_blocks(&BlockRule::Default).unwrap();
        let runs: Vec<_> = b.runs().take(6).collect();
        assert_eq!(runs, vec![(1, false), (3, true), (12, false), (60, true), (360, false), (2520, true)]);
        assert_eq!(b.count_in(20), 10);
        assert_eq!(b.f_subsequence(32), vec![2, 4, 20]);
    }

    #[test]
    fn density_dips_and_rises() {
        let b = make_digit_blocks(&BlockRule::Default).unwrap();
        let ends: Vec<_> = b.runs().collect();
        for k in 1..=8usize {
            let (out_end, inside) = ends[2 * k - 2];
            assert!(!inside);
            assert!(b.density(out_end) <= 1.0 / k as f64);
            let (in_end, inside) = ends[2 * k - 1];
            assert!(inside);
            assert!(b.density(in_end) >= 1.0 - 1.0 / k as f64);
        }
    }

    #[test]
    fn rejects_bad_rules() {
        assert!(make_digit_blocks(&BlockRule::Lengths(vec![2, 2])).is_err());
        assert!(make_digit_blocks(&BlockRule::Lengths(vec![3])).is_err());
        assert!(make_digit_blocks(&BlockRule::Lengths(vec![])).is_err());
    }

    #[test]
    fn covering_counts() {
        let k0 = DigitSet::k0(64).unwrap();
        let k1 = DigitSet::k1(64).unwrap();
        assert_eq!(k0.covering(0).unwrap(), BigUint::one());
        for n in 0..=40 {
            assert_eq!(k0.covering(n).unwrap() * k1.covering(n).unwrap(), BigUint::one() << n);
        }
        // digits 3..12 lie outside D, so K₀ doubles on each of those levels
        for n in 4..=12 {
            assert_eq!(k0.covering(n).unwrap(), k0.covering(n - 1).unwrap() * 2u32);
        }
        assert!(matches!(k0.covering(65), Err(Error::DepthExceeded { .. })));
    }

    #[test]
    fn discretization_matches_oracles() {
        let k0 = DigitSet::k0(16).unwrap();
        let x = k0.discretize(4, 1 << 20).unwrap();
        assert_eq!(x.line().unwrap(), &[0.0, 0.0625, 0.5, 0.5625]);
        for set in [DigitSet::k0(16).unwrap(), DigitSet::k1(16).unwrap()] {
            for n in 0..=14 {
                let x = set.discretize(n, 1 << 20).unwrap();
                assert_eq!(BigUint::from(x.len()), set.covering(n).unwrap());
                let exact = covering_count(&x, &x.all_points(), 0.5f64.powi(n as i32), Caps::default()).unwrap();
                assert_eq!(BigUint::from(exact), set.discretization_covering(n).unwrap(), "{} n={n}", set.label());
                assert!(BigUint::from(exact) <= set.covering(n).unwrap());
            }
        }
        assert!(matches!(DigitSet::k1(16).unwrap().discretize(16, 8), Err(Error::TooManyPoints { .. })));
    }
}
