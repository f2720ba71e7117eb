//! Hausdorff (gauge) functions and scales.

use crate::error::{Error, Result};

/// Nondecreasing positive function on `(0, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub enum GaugeFunction {
    /// `r ↦ r^s`.
    PowerLaw(f64),
    /// Right-continuous step function. Breakpoints are strictly decreasing
    /// radii with nonincreasing positive values; `g(r)` is the value of the
    /// largest breakpoint `≤ r`, and the last value below the smallest.
    Table(Vec<(f64, f64)>),
    /// Pointwise product.
    Product(Box<GaugeFunction>, Box<GaugeFunction>),
}

const MONOTONE_GRID: usize = 1000;

impl GaugeFunction {
    pub fn power(s: f64) -> Result<Self> {
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::InvalidGauge(format!("exponent {s} must be finite and nonnegative")));
        }
        Ok(Self::PowerLaw(s))
    }

    pub fn table(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::InvalidGauge("table needs at least one breakpoint".into()));
        }
        for w in breakpoints.windows(2) {
            if !(w[1].0 < w[0].0) {
                return Err(Error::InvalidGauge("breakpoint radii must strictly decrease".into()));
            }
        }
        if let Some(&(r, v)) = breakpoints.iter().find(|&&(r, v)| !(r > 0.0 && v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidGauge(format!("breakpoint ({r}, {v}) is not positive")));
        }
        let g = Self::Table(breakpoints);
        g.check_monotone()?;
        Ok(g)
    }

    pub fn times(&self, other: &GaugeFunction) -> GaugeFunction {
        GaugeFunction::Product(Box::new(self.clone()), Box::new(other.clone()))
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Self::PowerLaw(s) => r.powf(*s),
            Self::Table(bp) => bp.iter().find(|&&(x, _)| x <= r).map_or(bp[bp.len() - 1].1, |&(_, v)| v),
            Self::Product(a, b) => a.eval(r) * b.eval(r),
        }
    }

    /// Checks monotonicity on all breakpoints and a log-spaced grid.
    pub fn check_monotone(&self) -> Result<()> {
        let mut probes = self.breakpoints();
        probes.extend((0..MONOTONE_GRID).map(|k| 10f64.powf(-12.0 + 14.0 * k as f64 / (MONOTONE_GRID - 1) as f64)));
        probes.sort_by(f64::total_cmp);
        let mut last = 0.0;
        for r in probes {
            let v = self.eval(r);
            if !(v > 0.0) || v < last {
                return Err(Error::InvalidGauge(format!("not nondecreasing and positive at r = {r}")));
            }
            last = v;
        }
        Ok(())
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::PowerLaw(_) => Vec::new(),
            Self::Table(bp) => bp.iter().map(|&(r, _)| r).collect(),
            Self::Product(a, b) => {
                let mut v = a.breakpoints();
                v.extend(b.breakpoints());
                v
            }
        }
    }
}

/// Rule that extends a scale to arbitrarily small members.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Generator {
    /// `2^{-k}`, `k = 0, 1, ...`
    Dyadic,
    /// `anchor * ratio^k`, `k = 0, 1, ...`, with `0 < ratio < 1`.
    Geometric { anchor: f64, ratio: f64 },
}

impl Generator {
    /// Natural log of member `k`.
    pub fn ln_member(&self, k: u64) -> f64 {
        match self {
            Self::Dyadic => -(k as f64) * std::f64::consts::LN_2,
            Self::Geometric { anchor, ratio } => anchor.ln() + k as f64 * ratio.ln(),
        }
    }

    pub fn member(&self, k: u64) -> f64 {
        match self {
            Self::Dyadic => 2f64.powi(-(k.min(i32::MAX as u64) as i32)),
            Self::Geometric { anchor, ratio } => anchor * ratio.powf(k as f64),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::Dyadic => Ok(()),
            Self::Geometric { anchor, ratio } => {
                if anchor.is_finite() && *anchor > 0.0 && *ratio > 0.0 && *ratio < 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidScale(format!("geometric generator needs anchor > 0 and 0 < ratio < 1, got {anchor}, {ratio}")))
                }
            }
        }
    }
}

/// Finite truncation of a scale: strictly decreasing positive radii.
#[derive(Debug, Clone, PartialEq)]
pub struct Scale {
    values: Vec<f64>,
    generator: Option<Generator>,
}

impl Scale {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(&v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidScale(format!("member {v} is not positive")));
        }
        if values.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidScale("members must strictly decrease".into()));
        }
        Ok(Self { values, generator: None })
    }

    pub fn generated(generator: Generator, count: usize) -> Result<Self> {
        generator.validate()?;
        let values: Vec<f64> = (0..count as u64).map(|k| generator.member(k)).collect();
        let mut s = Self::new(values)?;
        s.generator = Some(generator);
        Ok(s)
    }

    pub fn dyadic(count: usize) -> Self {
        Self::generated(Generator::Dyadic, count).expect("dyadic scale is valid")
    }

    pub fn geometric(anchor: f64, ratio: f64, count: usize) -> Result<Self> {
        Self::generated(Generator::Geometric { anchor, ratio }, count)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn generator(&self) -> Option<&Generator> {
        self.generator.as_ref()
    }

    /// Members in `(0, δ]`, largest first.
    pub fn admissible(&self, delta: f64) -> Vec<f64> {
        self.values.iter().copied().filter(|&r| r <= delta).collect()
    }

    /// Every member divided by `c` (the image scale under `x ↦ x / c`).
    pub fn divided_by(&self, c: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|r| r / c).collect())
    }
}
