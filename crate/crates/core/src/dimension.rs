//! Slope statistics `log N_δ / |log δ|` and their liminf/limsup estimates,
//! plus `(Q,m)`-homogeneity certificates on sampled families.
//!
//! Rows keep `ln δ` and `ln count` so that oracle rows at scales far below
//! `f64` range (digit sets at level `10^5`) are representable. Values that
//! do not fit a plain number are written as `exp(<ln>)` in CSV files.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fractal::{DigitSet, Schedule};
use crate::metric::{diam, format_float, parse_float, Metric};
use crate::packing::{self, approx_le, Caps, CoverMode, Mode};

/// Ordered from most to least trustworthy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Oracle,
    Exact,
    Greedy,
}

impl Source {
    pub fn as_str(&self) -> &'static str {
        match self {
            Source::Oracle => "oracle",
            Source::Exact => "exact",
            Source::Greedy => "greedy",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(Source::Oracle),
            "exact" => Ok(Source::Exact),
            "greedy" => Ok(Source::Greedy),
            _ => Err(Error::Parse(format!("unknown source {s:?}"))),
        }
    }
}

/// Below this `ln x` plain `f64` output underflows.
const LN_PLAIN_MIN: f64 = -700.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    /// `δ`, or 0 when only the log is representable.
    pub delta: f64,
    pub ln_delta: f64,
    pub count: Option<u64>,
    pub ln_count: f64,
    pub slope: f64,
    pub source: Source,
}

fn slope(ln_count: f64, ln_delta: f64) -> f64 {
    ln_count / ln_delta.abs()
}

impl ScalingRow {
    pub fn new(delta: f64, count: u64, source: Source) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidScale(format!("δ = {delta} must be positive")));
        }
        Self::build(delta, delta.ln(), Some(count), (count as f64).ln(), source)
    }

    /// A row known only through logs; plain values are used where they fit.
    pub fn from_logs(ln_delta: f64, ln_count: f64, source: Source) -> Result<Self> {
        let (delta, ln_delta) = if ln_delta > LN_PLAIN_MIN {
            let d = ln_delta.exp();
            (d, d.ln())
        } else {
            (0.0, ln_delta)
        };
        let (count, ln_count) = integral_count(ln_count);
        Self::build(delta, ln_delta, count, ln_count, source)
    }

    /// A row at `δ = 2^{-n}`, exact whenever `2^{-n}` is a normal `f64`.
    pub fn dyadic(n: u64, ln_count: f64, source: Source) -> Result<Self> {
        if n == 0 || n > 1022 {
            return Self::from_logs(-(n as f64) * std::f64::consts::LN_2, ln_count, source);
        }
        let delta = 0.5f64.powi(n as i32);
        let (count, ln_count) = integral_count(ln_count);
        Self::build(delta, delta.ln(), count, ln_count, source)
    }

    fn build(delta: f64, ln_delta: f64, count: Option<u64>, ln_count: f64, source: Source) -> Result<Self> {
        if ln_delta == 0.0 {
            return Err(Error::InvalidScale("δ = 1 has |log δ| = 0".into()));
        }
        if !ln_delta.is_finite() || count == Some(0) || !(ln_count >= 0.0) {
            return Err(Error::InvalidScale(format!("bad row: ln δ = {ln_delta}, ln count = {ln_count}")));
        }
        Ok(Self { delta, ln_delta, count, ln_count, slope: slope(ln_count, ln_delta), source })
    }

    fn delta_field(&self) -> String {
        if self.delta > 0.0 {
            format_float(self.delta)
        } else {
            format!("exp({})", format_float(self.ln_delta))
        }
    }

    fn count_field(&self) -> String {
        match self.count {
            Some(c) => c.to_string(),
            None => format!("exp({})", format_float(self.ln_count)),
        }
    }
}

/// Recovers an integer count from its log when that is unambiguous.
fn integral_count(ln_count: f64) -> (Option<u64>, f64) {
    let rounded = ln_count.exp().round();
    if ln_count < 40.0 && (rounded.ln() - ln_count).abs() <= 1e-12 * ln_count.abs().max(1.0) {
        (Some(rounded as u64), rounded.ln())
    } else {
        (None, ln_count)
    }
}

fn parse_exp(s: &str) -> Option<Result<f64>> {
    s.trim().strip_prefix("exp(").and_then(|r| r.strip_suffix(')')).map(parse_float)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub label: String,
    pub rows: Vec<ScalingRow>,
}

impl ScalingReport {
    /// Checks that `δ` strictly decreases and that counts do not decrease
    /// (greedy rows are lower bounds and exempt from the latter).
    pub fn new(label: impl Into<String>, rows: Vec<ScalingRow>) -> Result<Self> {
        for w in rows.windows(2) {
            if !(w[1].ln_delta < w[0].ln_delta) {
                return Err(Error::InvalidScale("scales must be strictly decreasing".into()));
            }
            let greedy = w[0].source == Source::Greedy || w[1].source == Source::Greedy;
            if !greedy && w[1].ln_count < w[0].ln_count - 1e-12 * w[0].ln_count.abs() {
                return Err(Error::InvalidScale(format!("count decreases between δ = {} and δ = {}", w[0].delta_field(), w[1].delta_field())));
            }
        }
        Ok(Self { label: label.into(), rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn worst_source(&self) -> Option<Source> {
        self.rows.iter().map(|r| r.source).max()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["delta", "count", "slope", "source"])?;
        for r in &self.rows {
            w.write_record([r.delta_field(), r.count_field(), format_float(r.slope), r.source.as_str().to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv is utf-8"))
    }

    /// Reads a report and checks every stored slope against its row.
    pub fn read_csv<R: Read>(label: impl Into<String>, input: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let headers = rd.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["delta", "count", "slope", "source"] {
            return Err(Error::Parse(format!("unexpected header {headers:?}")));
        }
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let source = Source::parse(&rec[3])?;
            let ln_delta = match parse_exp(&rec[0]) {
                Some(ln) => ln?,
                None => parse_float(&rec[0])?.ln(),
            };
            let delta = if parse_exp(&rec[0]).is_some() { 0.0 } else { parse_float(&rec[0])? };
            let (count, ln_count) = match parse_exp(&rec[1]) {
                Some(ln) => (None, ln?),
                None => {
                    let c: u64 = rec[1].trim().parse().map_err(|_| Error::Parse(format!("bad count {:?}", &rec[1])))?;
                    (Some(c), (c as f64).ln())
                }
            };
            let row = ScalingRow::build(delta, ln_delta, count, ln_count, source)?;
            let stored = parse_float(&rec[2])?;
            if row.slope != stored {
                return Err(Error::Parse(format!("slope {stored} does not match its row (recomputed {})", row.slope)));
            }
            rows.push(row);
        }
        Self::new(label, rows)
    }
}

/// What a report built from a finite space measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Covering,
    Capacity,
}

/// Report of `N_δ` or `C_δ` on a finite set. `Greedy` mode never fails on
/// size: coverings use the greedy upper bound, capacities the greedy lower
/// bound.
pub fn scaling_report<M: Metric + ?Sized>(
    label: impl Into<String>,
    space: &M,
    set: &[usize],
    deltas: &[f64],
    quantity: Quantity,
    mode: Mode,
    caps: Caps,
) -> Result<ScalingReport> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let line = space.line().is_some();
    let rows = deltas
        .iter()
        .map(|&delta| {
            let (count, source) = match (quantity, mode) {
                (Quantity::Covering, Mode::Exact) => (packing::covering_count(space, set, delta, caps)?, Source::Exact),
                (Quantity::Covering, Mode::Greedy) => {
                    let b = packing::covering(space, set, delta, CoverMode::GreedySweep, caps)?;
                    (b.upper, if b.is_exact() || line { Source::Exact } else { Source::Greedy })
                }
                (Quantity::Capacity, Mode::Exact) => (packing::capacity_count(space, set, delta, caps)?, Source::Exact),
                (Quantity::Capacity, Mode::Greedy) => {
                    let r = packing::capacity(space, set, delta, Mode::Greedy, caps)?;
                    (r.count, if line { Source::Exact } else { Source::Greedy })
                }
            };
            ScalingRow::new(delta, count as u64, source)
        })
        .collect::<Result<Vec<_>>>()?;
    ScalingReport::new(label, rows)
}

/// Oracle report of a digit set at the scales `2^{-n}`.
pub fn digit_report(set: &DigitSet, levels: &[u64]) -> Result<ScalingReport> {
    let ln2 = std::f64::consts::LN_2;
    let rows = levels
        .iter()
        .map(|&n| ScalingRow::dyadic(n, set.free_digits(n)? as f64 * ln2, Source::Oracle))
        .collect::<Result<Vec<_>>>()?;
    ScalingReport::new(set.label(), rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    Lbdim,
    Ubdim,
    DpdimSchedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub kind: EstimateKind,
    pub value: f64,
    pub window: f64,
    pub subsequence: Option<Vec<usize>>,
    pub source_quality: Source,
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub confidence_note: String,
}

impl DimensionEstimate {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub const DEFAULT_WINDOW: f64 = 0.5;
pub const MIN_WINDOW_ROWS: usize = 4;

/// Rows used by an estimate: the subsequence first, then the tail window.
fn window_rows<'a>(report: &'a ScalingReport, window: f64, subsequence: Option<&[usize]>) -> Result<Vec<&'a ScalingRow>> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::InvalidScale(format!("window {window} must lie in (0, 1]")));
    }
    let picked: Vec<&ScalingRow> = match subsequence {
        Some(idx) => idx
            .iter()
            .map(|&i| report.rows.get(i).ok_or_else(|| Error::InvalidScale(format!("row {i} is out of range"))))
            .collect::<Result<_>>()?,
        None => report.rows.iter().collect(),
    };
    let take = ((picked.len() as f64) * window).ceil() as usize;
    let tail = picked[picked.len() - take.min(picked.len())..].to_vec();
    if tail.len() < MIN_WINDOW_ROWS {
        return Err(Error::InsufficientData { rows: tail.len(), needed: MIN_WINDOW_ROWS });
    }
    Ok(tail)
}

fn extreme(kind: EstimateKind, report: &ScalingReport, window: Option<f64>, subsequence: Option<&[usize]>) -> Result<DimensionEstimate> {
    // an explicit subsequence already is the tail the caller wants
    let window = window.unwrap_or(if subsequence.is_some() { 1.0 } else { DEFAULT_WINDOW });
    let rows = window_rows(report, window, subsequence)?;
    let slopes = rows.iter().map(|r| r.slope);
    let value = match kind {
        EstimateKind::Ubdim => slopes.fold(f64::NEG_INFINITY, f64::max),
        _ => slopes.fold(f64::INFINITY, f64::min),
    };
    let source_quality = rows.iter().map(|r| r.source).max().expect("nonempty");
    let confidence_note = match source_quality {
        Source::Greedy => "greedy rows bound the count from one side only".to_string(),
        _ => String::new(),
    };
    Ok(DimensionEstimate { kind, value, window, subsequence: subsequence.map(<[usize]>::to_vec), source_quality, confidence_note })
}

pub fn lbdim_estimate(report: &ScalingReport, window: Option<f64>, subsequence: Option<&[usize]>) -> Result<DimensionEstimate> {
    extreme(EstimateKind::Lbdim, report, window, subsequence)
}

pub fn ubdim_estimate(report: &ScalingReport, window: Option<f64>, subsequence: Option<&[usize]>) -> Result<DimensionEstimate> {
    extreme(EstimateKind::Ubdim, report, window, subsequence)
}

/// Which side of a stage's covering bracket a report uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Lower,
    Upper,
}

/// Oracle report of one exhaustion stage at the scales `2^{-n}`.
pub fn stage_report(stage: &crate::fractal::Stage, levels: &[u64], bound: Bound) -> Result<ScalingReport> {
    let rows = levels
        .iter()
        .map(|&n| {
            let b = stage.ln_covering(n)?;
            let ln_count = match bound {
                Bound::Lower => b.lower,
                Bound::Upper => b.upper,
            };
            ScalingRow::dyadic(n, ln_count, Source::Oracle)
        })
        .collect::<Result<Vec<_>>>()?;
    ScalingReport::new(stage.label(), rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleEstimate {
    /// Sup over stages of the stage lbdim estimates, from upper counts.
    pub estimate: DimensionEstimate,
    pub stages: Vec<DimensionEstimate>,
    /// Min over all stages of the lower-count slopes on the subsequence.
    pub lower_companion: Option<f64>,
}

/// Evaluates the supplied schedule only, so the value bounds `d̃pdim` from
/// above. `subsequence` holds levels (not row indices) for the companion.
pub fn dpdim_schedule_estimate(schedule: &Schedule, levels: &[u64], window: Option<f64>, subsequence: Option<&[u64]>) -> Result<ScheduleEstimate> {
    if schedule.stages.is_empty() {
        return Err(Error::EmptySet);
    }
    let stages = schedule
        .stages
        .iter()
        .map(|stage| lbdim_estimate(&stage_report(stage, levels, Bound::Upper)?, window, None))
        .collect::<Result<Vec<_>>>()?;
    let best = stages.iter().max_by(|a, b| a.value.total_cmp(&b.value)).expect("nonempty");
    let estimate = DimensionEstimate {
        kind: EstimateKind::DpdimSchedule,
        confidence_note: "upper bound: evaluated on the supplied exhaustion only".into(),
        ..best.clone()
    };
    let lower_companion = match subsequence {
        Some(sub) if !sub.is_empty() => {
            let mut low = f64::INFINITY;
            for stage in &schedule.stages {
                for row in stage_report(stage, sub, Bound::Lower)?.rows {
                    low = low.min(row.slope);
                }
            }
            Some(low)
        }
        _ => None,
    };
    Ok(ScheduleEstimate { estimate, stages, lower_companion })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneityRow {
    pub sample: usize,
    pub r: f64,
    pub capacity: usize,
    pub diam: f64,
    /// `C_r(E) (r / diam E)^m`.
    pub ratio: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneityCertificate {
    pub m: f64,
    /// Smallest `Q` consistent with every row.
    pub q: f64,
    pub rows: Vec<HomogeneityRow>,
    /// Pairs with `r > diam E`.
    pub skipped: usize,
    pub exact: bool,
}

impl HomogeneityCertificate {
    pub fn violations(&self, q: f64) -> Vec<&HomogeneityRow> {
        self.rows.iter().filter(|r| !approx_le(r.ratio, q)).collect()
    }
}

/// `Q* = max C_r(E)(r/diam E)^m` over the sampled sets and radii `r ≤ diam E`.
/// Capacities above the exact cap fall back to greedy, which only bounds
/// `Q*` from below; `exact` records whether that happened.
pub fn homogeneity_certify<M: Metric + ?Sized>(space: &M, samples: &[Vec<usize>], radii: &[f64], m: f64, caps: Caps) -> Result<HomogeneityCertificate> {
    if !(m >= 0.0 && m.is_finite()) {
        return Err(Error::InvalidScale(format!("m = {m} must be nonnegative")));
    }
    let mut rows = Vec::new();
    let mut skipped = 0;
    for (sample, set) in samples.iter().enumerate() {
        let d = diam(space, set)?;
        for &r in radii {
            if !(r > 0.0) {
                return Err(Error::InvalidScale(format!("r = {r} must be positive")));
            }
            if r > d {
                skipped += 1;
                continue;
            }
            let (capacity, exact) = match packing::capacity_count(space, set, r, caps) {
                Ok(c) => (c, true),
                Err(Error::TooLargeForExact { .. }) => (packing::capacity(space, set, r, Mode::Greedy, caps)?.count, false),
                Err(e) => return Err(e),
            };
            rows.push(HomogeneityRow { sample, r, capacity, diam: d, ratio: capacity as f64 * (r / d).powf(m), exact });
        }
    }
    let q = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let exact = rows.iter().all(|r| r.exact);
    Ok(HomogeneityCertificate { m, q, rows, skipped, exact })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Homo1Row {
    pub r: f64,
    pub t: f64,
    /// `C_r(X) r^m`.
    pub lhs: f64,
    /// `2^m Q C_t(X) t^m`.
    pub rhs: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Homo1Report {
    pub rows: Vec<Homo1Row>,
    /// `max_δ C_δ δ^m` over every sampled scale.
    pub max_value: f64,
    /// `C_δ δ^m` at the coarsest sampled scale.
    pub coarse_value: f64,
    /// `max_value ≤ 2^m Q coarse_value`.
    pub scale_ok: bool,
}

impl Homo1Report {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| !r.ok).count() + usize::from(!self.scale_ok)
    }
}

/// `C_r(X) r^m ≤ 2^m Q C_t(X) t^m` for each pair `r ≤ t`, and the same
/// comparison of every sampled scale against the coarsest one.
pub fn homo1_check<M: Metric + ?Sized>(space: &M, set: &[usize], q: f64, m: f64, pairs: &[(f64, f64)], caps: Caps) -> Result<Homo1Report> {
    let factor = 2f64.powf(m) * q;
    let value = |d: f64| -> Result<f64> { Ok(packing::capacity_count(space, set, d, caps)? as f64 * d.powf(m)) };
    let mut rows = Vec::with_capacity(pairs.len());
    let mut scales: Vec<f64> = Vec::new();
    for &(r, t) in pairs {
        if !(r > 0.0 && r <= t) {
            return Err(Error::InvalidScale(format!("need 0 < r ≤ t, got r = {r}, t = {t}")));
        }
        let lhs = value(r)?;
        let rhs = factor * value(t)?;
        rows.push(Homo1Row { r, t, lhs, rhs, ok: approx_le(lhs, rhs) });
        scales.extend([r, t]);
    }
    let (max_value, coarse_value) = match scales.iter().copied().reduce(f64::max) {
        Some(coarse) => {
            let mut best = 0.0f64;
            for &d in &scales {
                best = best.max(value(d)?);
            }
            (best, value(coarse)?)
        }
        None => (0.0, 0.0),
    };
    let scale_ok = approx_le(max_value, factor * coarse_value);
    Ok(Homo1Report { rows, max_value, coarse_value, scale_ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal::{exhaustion_schedule, Component, LogSequenceSet, ScheduleKind};
    use crate::metric::FiniteMetricSpace;
    use crate::rng::SplitMix64;

    fn grid(n: usize) -> FiniteMetricSpace {
        FiniteMetricSpace::from_line("grid", (0..n).map(|i| i as f64 / n as f64).collect()).unwrap()
    }

    #[test]
    fn digit_slopes_are_exact() {
        let k0 = DigitSet::k0(64).unwrap();
        let levels: Vec<u64> = (1..=64).collect();
        let rep = digit_report(&k0, &levels).unwrap();
        for (row, &n) in rep.rows.iter().zip(&levels) {
            let want = (n - k0.blocks.count_in(n)) as f64 / n as f64;
            assert!((row.slope - want).abs() <= 1e-12 * want.max(1e-300), "n={n}");
        }
        assert_eq!(rep.rows[11].count, Some(1 << 10));
        // ends of the first in-blocks: |n ∖ D| / n ≤ 1/k
        let b = &k0.blocks;
        let ends: Vec<u64> = b.runs().filter(|r| r.1).map(|r| r.0).take(4).collect();
        let deep = DigitSet::k0(*ends.last().unwrap()).unwrap();
        let rep = digit_report(&deep, &ends).unwrap();
        for (k, row) in rep.rows.iter().enumerate() {
            assert!(row.slope <= 1.0 / (k + 1) as f64);
        }
        assert!(rep.rows[3].count.is_none() && rep.rows[3].delta == 0.0);
    }

    #[test]
    fn singleton_and_grid() {
        let one = FiniteMetricSpace::from_line("pt", vec![0.3]).unwrap();
        let deltas: Vec<f64> = (1..=6).map(|k| 0.5f64.powi(k)).collect();
        let rep = scaling_report("pt", &one, &[0], &deltas, Quantity::Covering, Mode::Exact, Caps::default()).unwrap();
        assert!(rep.rows.iter().all(|r| r.count == Some(1) && r.slope == 0.0));
        assert_eq!(lbdim_estimate(&rep, None, None).map(|e| e.value).unwrap_or(-1.0), -1.0);
        assert_eq!(lbdim_estimate(&rep, Some(1.0), None).unwrap().value, 0.0);

        let g = grid(1 << 12);
        let deltas: Vec<f64> = (1..=10).map(|k| 0.5f64.powi(k)).collect();
        let rep = scaling_report("grid", &g, &g.all_points(), &deltas, Quantity::Covering, Mode::Exact, Caps::default()).unwrap();
        let lo = lbdim_estimate(&rep, None, None).unwrap();
        let hi = ubdim_estimate(&rep, None, None).unwrap();
        assert!(lo.value <= hi.value);
        assert!((lo.value - 1.0).abs() <= 1.0 / 6.0 && (hi.value - 1.0).abs() <= 1.0 / 6.0);
        assert_eq!(lo.source_quality, Source::Exact);
    }

    #[test]
    fn rows_are_validated() {
        assert!(ScalingRow::new(1.0, 3, Source::Exact).is_err());
        let a = ScalingRow::new(0.5, 2, Source::Exact).unwrap();
        let b = ScalingRow::new(0.25, 1, Source::Exact).unwrap();
        assert!(ScalingReport::new("x", vec![a.clone(), b]).is_err());
        assert!(ScalingReport::new("x", vec![a.clone(), a.clone()]).is_err());
        let short = ScalingReport::new("x", vec![a]).unwrap();
        assert!(matches!(lbdim_estimate(&short, Some(1.0), None), Err(Error::InsufficientData { rows: 1, needed: 4 })));
    }

    #[test]
    fn csv_round_trip() {
        let k0 = DigitSet::k0(2520).unwrap();
        let rep = digit_report(&k0, &[3, 12, 60, 360, 2520]).unwrap();
        let text = rep.to_csv_string().unwrap();
        assert!(text.contains("exp("));
        let back = ScalingReport::read_csv("k0", text.as_bytes()).unwrap();
        assert_eq!(back, rep);
        let bad = text.replacen("oracle", "guess", 1);
        assert!(ScalingReport::read_csv("k0", bad.as_bytes()).is_err());
        let first = text.lines().nth(1).unwrap();
        let slope = first.split(',').nth(2).unwrap();
        let tampered = text.replacen(slope, "0.5", 1);
        assert!(ScalingReport::read_csv("k0", tampered.as_bytes()).is_err());
    }

    #[test]
    fn estimate_json_fields() {
        let rep = digit_report(&DigitSet::k0(32).unwrap(), &(1..=32).collect::<Vec<_>>()).unwrap();
        let est = lbdim_estimate(&rep, None, Some(&[2, 11, 19, 31])).unwrap();
        let v: serde_json::Value = serde_json::from_str(&est.to_json().unwrap()).unwrap();
        assert_eq!(v["kind"], "lbdim");
        assert_eq!(v["source_quality"], "oracle");
        assert_eq!(v["subsequence"][1], 11);
        assert_eq!(v["window"], 1.0);
    }

    #[test]
    fn schedules() {
        let levels: Vec<u64> = (1..=32).collect();
        let k0 = Component::Digit(DigitSet::k0(32).unwrap());
        let single = exhaustion_schedule(std::slice::from_ref(&k0), ScheduleKind::Natural { stages: 1 }).unwrap();
        let est = dpdim_schedule_estimate(&single, &levels, None, None).unwrap();
        let direct = lbdim_estimate(&digit_report(&DigitSet::k0(32).unwrap(), &levels).unwrap(), None, None).unwrap();
        assert_eq!(est.estimate.value, direct.value);

        let comps = vec![k0, Component::Digit(DigitSet::k1(32).unwrap()), Component::Log(LogSequenceSet::infinite())];
        let sched = exhaustion_schedule(&comps, ScheduleKind::Natural { stages: 3 }).unwrap();
        let est = dpdim_schedule_estimate(&sched, &levels, None, Some(&[2, 4, 20])).unwrap();
        assert!(est.lower_companion.unwrap() >= 0.5 - 1e-12);
        assert!(est.estimate.value >= 0.5 && est.estimate.value <= 0.75, "{}", est.estimate.value);
    }

    #[test]
    fn homogeneity() {
        let g = grid(16);
        let all = g.all_points();
        let radii: Vec<f64> = (1..=40).map(|k| k as f64 / 40.0).collect();
        let cert = homogeneity_certify(&g, &[all.clone(), vec![0, 3, 9], vec![2, 5]], &radii, 1.0, Caps::default()).unwrap();
        assert!(cert.exact && cert.q > 1.0 && cert.q <= 2.0);
        assert!(cert.violations(cert.q).is_empty());
        let pt = homogeneity_certify(&g, &[vec![4]], &radii, 1.0, Caps::default()).unwrap();
        assert_eq!((pt.q, pt.skipped, pt.rows.len()), (0.0, 40, 0));

        let mut rng = SplitMix64::new(5);
        let pairs: Vec<(f64, f64)> = (0..50)
            .map(|_| {
                let a = rng.next_f64() * 0.9 + 0.01;
                let b = rng.next_f64() * 0.9 + 0.01;
                (a.min(b), a.max(b))
            })
            .collect();
        let rep = homo1_check(&g, &all, cert.q, 1.0, &pairs, Caps::default()).unwrap();
        assert_eq!(rep.violations(), 0);
        let same = homo1_check(&g, &all, 1.0, 1.0, &[(0.2, 0.2)], Caps::default()).unwrap();
        assert_eq!(same.violations(), 0);
    }
}
