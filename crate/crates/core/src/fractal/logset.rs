//! `E = {1/ln n : n ≥ 2} ∪ {0}`, optionally cut off at index `N`.

use crate::error::{Error, Result};
use crate::fractal::CountBracket;
use crate::metric::FiniteMetricSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LogSequenceSet {
    /// Largest index `N`; `None` is the full infinite set.
    pub cutoff: Option<u64>,
}

/// Beyond this index `f64` cannot tell consecutive indices apart reliably.
const INDEX_LIMIT: u64 = 1 << 50;

/// Switch to the dense-tail bracket once gaps drop below `δ / 2^20`.
const DENSE_RATIO: f64 = 1.0 / (1u64 << 20) as f64;

pub fn point(n: u64) -> f64 {
    1.0 / (n as f64).ln()
}

impl LogSequenceSet {
    pub fn new(cutoff: u64) -> Result<Self> {
        if cutoff < 2 {
            return Err(Error::InvalidScale(format!("cutoff {cutoff} must be at least 2")));
        }
        if cutoff >= INDEX_LIMIT {
            return Err(Error::InvalidScale(format!("cutoff {cutoff} is beyond 2^50")));
        }
        Ok(Self { cutoff: Some(cutoff) })
    }

    pub fn infinite() -> Self {
        Self { cutoff: None }
    }

    /// The points `1/ln 2 > 1/ln 3 > … > 1/ln N` followed by `0`.
    pub fn discretize(&self, cap: usize) -> Result<FiniteMetricSpace> {
        let n = self.cutoff.ok_or_else(|| Error::InvalidScale("cannot materialize the infinite set".into()))?;
        let count = (n - 1) as u128 + 1;
        if count > cap as u128 {
            return Err(Error::TooManyPoints { count, cap });
        }
        let mut xs: Vec<f64> = (2..=n).map(point).collect();
        xs.push(0.0);
        FiniteMetricSpace::from_line(&format!("logset-{n}"), xs)
    }

    /// `N_δ(E)` by the top-down greedy sweep, jumping straight to the next
    /// start index. Exact for a cutoff set. For the infinite set the sweep
    /// runs exactly until the gaps fall far below `δ`, and the remaining
    /// interval `[0, s]` contributes a bracket: each greedy step then
    /// advances by more than `δ` and at most `δ + γ` for the current gap `γ`.
    pub fn covering(&self, delta: f64) -> Result<CountBracket<u64>> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidScale(format!("δ = {delta} must be positive")));
        }
        let last = self.cutoff.unwrap_or(INDEX_LIMIT);
        let mut count = 1u64;
        let (mut cur, mut s) = (2u64, point(2));
        loop {
            if s <= delta {
                return Ok(CountBracket::exact(count));
            }
            let t = s - delta;
            let guess = (1.0 / t).exp().floor() + 1.0;
            if self.cutoff.is_none() {
                let gap = s - point(cur + 1);
                if gap <= delta * DENSE_RATIO || guess >= INDEX_LIMIT as f64 {
                    let lower = 1 + ((s - delta) / (delta + gap)).ceil() as u64;
                    let upper = 1 + (s / delta - 1.0).ceil().max(0.0) as u64;
                    return Ok(CountBracket { lower: count - 1 + lower, upper: count - 1 + upper.max(lower) });
                }
            }
            let p = |n: u64| s - point(n) > delta;
            let mut n = if guess.is_finite() { (guess as u64).clamp(cur + 1, last + 1) } else { last + 1 };
            while n > cur + 1 && p(n - 1) {
                n -= 1;
            }
            while n <= last && !p(n) {
                n += 1;
            }
            count += 1;
            if n > last {
                // only 0 is left below s - δ
                return Ok(CountBracket::exact(count));
            }
            cur = n;
            s = point(n);
        }
    }
}
