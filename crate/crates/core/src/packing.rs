//! δ-capacity, covering numbers, weak packings and the scaled packing and
//! box pre-measures on finite metric spaces.
//!
//! All separation tests are strict (`dist > δ`) and all diameter tests are
//! non-strict (`diam ≤ δ`), compared exactly on the stored floats. Packing
//! radii range over the finite set `Δ ∩ (0, δ]`, so every supremum is an
//! attained maximum over a finite search space.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::{GaugeFunction, Scale};
use crate::graph::{self, Graph};
use crate::metric::{format_float, FiniteMetricSpace, Metric, ProductSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverMode {
    Exact,
    GreedySweep,
    Sandwich,
}

/// Size limits for the exponential-time solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    pub capacity: usize,
    pub covering: usize,
    pub packing: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self { capacity: 40, covering: 24, packing: 40 }
    }
}

impl Caps {
    pub fn uniform(cap: usize) -> Self {
        Self { capacity: cap, covering: cap, packing: cap }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    pub count: usize,
    /// Sorted point ids with pairwise distances `> δ`.
    pub witness: Vec<usize>,
    pub exact: bool,
}

/// Bracket on a covering number; `lower == upper` means exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoverBound {
    pub lower: usize,
    pub upper: usize,
}

impl CoverBound {
    pub fn exact(n: usize) -> Self {
        Self { lower: n, upper: n }
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    pub fn value(&self) -> Option<usize> {
        self.is_exact().then_some(self.lower)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidScale(format!("δ = {delta} must be positive and finite")))
    }
}

/// Points of `set` sorted by their line coordinate.
fn sorted_on_line(xs: &[f64], set: &[usize]) -> Vec<usize> {
    let mut order = set.to_vec();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]).then(a.cmp(&b)));
    order.dedup();
    order
}

/// Left-to-right sweep on the line. It is simultaneously an optimal
/// gap-`>δ` selection and an optimal diameter-`≤δ` cover, so it returns
/// both the capacity witness and the cover count.
fn line_sweep<M: Metric + ?Sized>(space: &M, xs: &[f64], set: &[usize], delta: f64) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    for i in sorted_on_line(xs, set) {
        match chosen.last() {
            Some(&last) if space.dist(last, i) <= delta => {}
            _ => chosen.push(i),
        }
    }
    chosen.sort_unstable();
    chosen
}

fn conflict_graph<M: Metric + ?Sized>(space: &M, set: &[usize], delta: f64) -> Graph {
    Graph::from_fn(set.len(), |a, b| space.dist(set[a], set[b]) <= delta)
}

fn dedup(set: &[usize]) -> Vec<usize> {
    let mut v = set.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// `C_δ(E)`: the largest subset of `E` with all pairwise distances `> δ`.
///
/// Line-embedded inputs use the sorted sweep in both modes (it is exact).
/// Otherwise `Exact` solves maximum independent set on the conflict graph
/// (edges where `dist ≤ δ`) and returns the lexicographically smallest
/// optimal witness; `Greedy` scans ids in increasing order and returns a
/// maximal set, which is a lower bound.
pub fn capacity<M: Metric + ?Sized>(
    space: &M,
    set: &[usize],
    delta: f64,
    mode: Mode,
    caps: Caps,
) -> Result<CapacityResult> {
    check_delta(delta)?;
    let set = dedup(set);
    if let Some(xs) = space.line() {
        let witness = line_sweep(space, xs, &set, delta);
        return Ok(CapacityResult { count: witness.len(), witness, exact: true });
    }
    let g = conflict_graph(space, &set, delta);
    let local = match mode {
        Mode::Greedy => graph::greedy_independent_set(&g, 0..set.len()),
        Mode::Exact => {
            if set.len() > caps.capacity {
                return Err(Error::TooLargeForExact { size: set.len(), cap: caps.capacity });
            }
            graph::canonical_max_independent_set(&g)
        }
    };
    let witness: Vec<usize> = local.iter().map(|&a| set[a]).collect();
    Ok(CapacityResult { count: witness.len(), witness, exact: mode == Mode::Exact })
}

/// Exact capacity count without witness canonicalization.
pub fn capacity_count<M: Metric + ?Sized>(space: &M, set: &[usize], delta: f64, caps: Caps) -> Result<usize> {
    check_delta(delta)?;
    let set = dedup(set);
    if let Some(xs) = space.line() {
        return Ok(line_sweep(space, xs, &set, delta).len());
    }
    if set.len() > caps.capacity {
        return Err(Error::TooLargeForExact { size: set.len(), cap: caps.capacity });
    }
    Ok(graph::max_independent_set(&conflict_graph(space, &set, delta)).len())
}

/// Exact `C_δ(X × Y)` for two line-embedded factors: `C_δ(X)·C_δ(Y)`.
///
/// The product of two separated sets is separated in the max metric, and
/// `C_δ(X × Y) ≤ N_δ(X)·C_δ(Y)` with `N_δ = C_δ` on the line.
pub fn line_product_capacity(left: &FiniteMetricSpace, right: &FiniteMetricSpace, delta: f64) -> Result<usize> {
    if left.line().is_none() || right.line().is_none() {
        return Err(Error::InvalidMetric("both factors must be embedded in the line".into()));
    }
    let caps = Caps::default();
    Ok(capacity_count(left, &left.all_points(), delta, caps)? * capacity_count(right, &right.all_points(), delta, caps)?)
}

/// `N_δ(E)`: the fewest sets of diameter `≤ δ` covering `E`.
///
/// `Exact` uses the line sweep for line-embedded inputs and otherwise the
/// chromatic number of the separation graph (edges where `dist > δ`); its
/// color classes are exactly the diameter-`≤δ` blocks. `GreedySweep` is
/// exact on the line and a greedy bracket elsewhere. `Sandwich` brackets
/// `N_δ` between the capacity `C_δ` and a greedy cover.
pub fn covering<M: Metric + ?Sized>(
    space: &M,
    set: &[usize],
    delta: f64,
    mode: CoverMode,
    caps: Caps,
) -> Result<CoverBound> {
    check_delta(delta)?;
    let set = dedup(set);
    if set.is_empty() {
        return Ok(CoverBound::exact(0));
    }
    if let Some(xs) = space.line() {
        return Ok(CoverBound::exact(line_sweep(space, xs, &set, delta).len()));
    }
    let separation = Graph::from_fn(set.len(), |a, b| space.dist(set[a], set[b]) > delta);
    match mode {
        CoverMode::Exact => {
            if set.len() > caps.covering {
                return Err(Error::TooLargeForExact { size: set.len(), cap: caps.covering });
            }
            Ok(CoverBound::exact(graph::chromatic_number(&separation).0))
        }
        CoverMode::GreedySweep => {
            let upper = graph::dsatur_greedy(&separation).0;
            let lower = graph::greedy_independent_set(&conflict_graph(space, &set, delta), 0..set.len()).len();
            Ok(CoverBound { lower, upper })
        }
        CoverMode::Sandwich => {
            let upper = graph::dsatur_greedy(&separation).0;
            let lower = if set.len() <= caps.capacity {
                graph::max_independent_set(&conflict_graph(space, &set, delta)).len()
            } else {
                graph::greedy_independent_set(&conflict_graph(space, &set, delta), 0..set.len()).len()
            };
            Ok(CoverBound { lower, upper })
        }
    }
}

/// Exact covering number, failing if the instance is above the cap.
pub fn covering_count<M: Metric + ?Sized>(space: &M, set: &[usize], delta: f64, caps: Caps) -> Result<usize> {
    let b = covering(space, set, delta, CoverMode::Exact, caps)?;
    Ok(b.lower)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PackEntry {
    pub point_id: usize,
    pub radius: f64,
}

/// Weak packing `{(x_i, r_i)}`: `dist(x_i, x_j) > max(r_i, r_j)` for `i ≠ j`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Packing {
    pub entries: Vec<PackEntry>,
}

impl Packing {
    pub fn new(entries: impl IntoIterator<Item = (usize, f64)>) -> Self {
        Self { entries: entries.into_iter().map(|(point_id, radius)| PackEntry { point_id, radius }).collect() }
    }

    pub fn uniform(points: &[usize], radius: f64) -> Self {
        Self::new(points.iter().map(|&p| (p, radius)))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `g(π) = Σ g(r_i)`.
    pub fn value(&self, g: &GaugeFunction) -> f64 {
        self.entries.iter().map(|e| g.eval(e.radius)).sum()
    }

    pub fn common_radius(&self) -> Option<f64> {
        let r = self.entries.first()?.radius;
        self.entries.iter().all(|e| e.radius == r).then_some(r)
    }

    /// First offending pair of entry indices, if any.
    pub fn violation<M: Metric + ?Sized>(&self, space: &M) -> Option<(usize, usize)> {
        for (a, p) in self.entries.iter().enumerate() {
            for (b, q) in self.entries.iter().enumerate().skip(a + 1) {
                if space.dist(p.point_id, q.point_id) <= p.radius.max(q.radius) {
                    return Some((a, b));
                }
            }
        }
        None
    }

    pub fn validate<M: Metric + ?Sized>(&self, space: &M) -> Result<()> {
        if let Some(e) = self.entries.iter().find(|e| !(e.radius > 0.0) || e.point_id >= space.len()) {
            return Err(Error::InvalidPacking(format!("entry ({}, {}) is out of range", e.point_id, e.radius)));
        }
        match self.violation(space) {
            None => Ok(()),
            Some((a, b)) => Err(Error::InvalidPacking(format!(
                "points {} and {} are within max radius",
                self.entries[a].point_id, self.entries[b].point_id
            ))),
        }
    }

    /// `(Δ, δ)`-validity: every radius is a member of Δ and at most δ.
    pub fn is_scaled(&self, scale: &Scale, delta: f64) -> bool {
        self.entries.iter().all(|e| e.radius <= delta && scale.values().contains(&e.radius))
    }

    pub fn distinct_radii(&self) -> Vec<f64> {
        let mut r: Vec<f64> = self.entries.iter().map(|e| e.radius).collect();
        r.sort_by(|a, b| b.total_cmp(a));
        r.dedup();
        r
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PackingResult {
    pub value: f64,
    pub packing: Packing,
    pub exact: bool,
}

/// `pack^g_{Δ,δ}(E)`: the largest `g(π)` over `(Δ, δ)`-packings of `E`.
///
/// `Exact` solves a maximum-weight independent set over (point, radius)
/// pairs weighted by `g(r)`, with a conflict wherever two pairs violate the
/// weak-packing condition (pairs at the same point always conflict).
/// `Greedy` visits points by decreasing nearest-neighbour distance and gives
/// each the largest feasible admissible radius.
pub fn pack_premeasure<M: Metric + ?Sized>(
    space: &M,
    set: &[usize],
    g: &GaugeFunction,
    scale: &Scale,
    delta: f64,
    mode: Mode,
    caps: Caps,
) -> Result<PackingResult> {
    check_delta(delta)?;
    let set = dedup(set);
    let radii = scale.admissible(delta);
    if set.is_empty() || radii.is_empty() {
        return Ok(PackingResult { value: 0.0, packing: Packing::default(), exact: true });
    }
    // Gauge values on the active grid, computed once.
    let weights: Vec<f64> = radii.iter().map(|&r| g.eval(r)).collect();
    let packing = match mode {
        Mode::Exact => {
            if set.len() > caps.packing {
                return Err(Error::TooLargeForExact { size: set.len(), cap: caps.packing });
            }
            let k = radii.len();
            let vertex = |v: usize| (v / k, v % k);
            let conflict = Graph::from_fn(set.len() * k, |u, v| {
                let ((p, a), (q, b)) = (vertex(u), vertex(v));
                p == q || space.dist(set[p], set[q]) <= radii[a].max(radii[b])
            });
            let w: Vec<f64> = (0..set.len() * k).map(|v| weights[v % k]).collect();
            let (_, chosen) = graph::max_weight_independent_set(&conflict, &w);
            Packing::new(chosen.into_iter().map(|v| (set[v / k], radii[v % k])))
        }
        Mode::Greedy => greedy_packing(space, &set, &radii),
    };
    let value = packing.entries.iter().map(|e| weights[radii.iter().position(|&r| r == e.radius).expect("admissible radius")]).sum();
    Ok(PackingResult { value, packing, exact: mode == Mode::Exact })
}

fn greedy_packing<M: Metric + ?Sized>(space: &M, set: &[usize], radii: &[f64]) -> Packing {
    let nearest: Vec<f64> = set
        .iter()
        .map(|&i| set.iter().filter(|&&j| j != i).map(|&j| space.dist(i, j)).fold(f64::INFINITY, f64::min))
        .collect();
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.sort_by(|&a, &b| nearest[b].total_cmp(&nearest[a]).then(set[a].cmp(&set[b])));
    let mut chosen: Vec<(usize, f64)> = Vec::new();
    for a in order {
        let p = set[a];
        if let Some(&r) = radii.iter().find(|&&r| chosen.iter().all(|&(q, rq)| space.dist(p, q) > r.max(rq))) {
            chosen.push((p, r));
        }
    }
    chosen.sort_by_key(|&(p, _)| p);
    Packing::new(chosen)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxResult {
    pub value: f64,
    /// Radius attaining the maximum.
    pub radius: Option<f64>,
    pub exact: bool,
}

/// `boxm^g_{Δ,δ}(E) = max_{r ∈ Δ∩(0,δ]} C_r(E)·g(r)`.
pub fn box_premeasure<M: Metric + ?Sized>(
    space: &M,
    set: &[usize],
    g: &GaugeFunction,
    scale: &Scale,
    delta: f64,
    mode: Mode,
    caps: Caps,
) -> Result<BoxResult> {
    check_delta(delta)?;
    let mut best = BoxResult { value: 0.0, radius: None, exact: true };
    if set.is_empty() {
        return Ok(best);
    }
    for r in scale.admissible(delta) {
        let c = capacity(space, set, r, mode, caps)?;
        best.exact &= c.exact;
        let v = c.count as f64 * g.eval(r);
        if v > best.value {
            best.value = v;
            best.radius = Some(r);
        }
    }
    Ok(best)
}

/// Builds `σ = {((x_i, y_ij), r_i)}` from a packing `π` of the left factor
/// and, for each entry of `π`, a uniform packing of the right factor with
/// the same radius. `σ` is validated as a weak packing of the product.
pub fn combine_product_packing(product: &ProductSpace, pi: &Packing, sections: &[Packing]) -> Result<Packing> {
    pi.validate(product.left())?;
    if sections.len() != pi.len() {
        return Err(Error::InvalidPacking(format!("{} sections for {} packing entries", sections.len(), pi.len())));
    }
    let mut out = Vec::new();
    for (entry, sec) in pi.entries.iter().zip(sections) {
        if sec.entries.iter().any(|e| e.radius != entry.radius) {
            return Err(Error::InvalidPacking(format!("section for point {} is not uniform with radius {}", entry.point_id, entry.radius)));
        }
        sec.validate(product.right())?;
        out.extend(sec.entries.iter().map(|e| (product.id(entry.point_id, e.point_id), entry.radius)));
    }
    let sigma = Packing::new(out);
    sigma.validate(product)?;
    Ok(sigma)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzRow {
    pub delta: f64,
    pub image_capacity: usize,
    pub domain_capacity: usize,
    pub capacity_ok: bool,
    pub image_box: f64,
    pub domain_box_scaled: f64,
    pub box_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzReport {
    pub c: f64,
    pub s: f64,
    pub rows: Vec<LipschitzRow>,
}

impl LipschitzReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| !(r.capacity_ok && r.box_ok)).count()
    }
}

/// Relative slack for comparing real-valued pre-measure values that are
/// computed along different rounding paths.
pub const REAL_TOLERANCE: f64 = 1e-12;

pub fn approx_le(a: f64, b: f64) -> bool {
    a <= b || a - b <= REAL_TOLERANCE * a.abs().max(b.abs())
}

/// Checks `C_δ(f(E)) ≤ C_{δ/c}(E)` and
/// `boxm^s_{Δ,δ}(f(E)) ≤ c^s · boxm^s_{Δ/c,δ/c}(E)` at every δ, where
/// `map[k]` is the image in `target` of `set[k]`.
#[allow(clippy::too_many_arguments)]
pub fn lipschitz_image_check(
    domain: &FiniteMetricSpace,
    set: &[usize],
    target: &FiniteMetricSpace,
    map: &[usize],
    c: f64,
    s: f64,
    scale: &Scale,
    deltas: &[f64],
    caps: Caps,
) -> Result<LipschitzReport> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidScale(format!("Lipschitz constant {c} must be positive")));
    }
    if map.len() != set.len() {
        return Err(Error::InvalidMetric("map must give one image per point".into()));
    }
    for a in 0..set.len() {
        for b in a + 1..set.len() {
            if target.dist(map[a], map[b]) > c * domain.dist(set[a], set[b]) {
                return Err(Error::NotLipschitz { a: set[a], b: set[b], c });
            }
        }
    }
    let image = dedup(map);
    let g = GaugeFunction::power(s)?;
    let scaled = scale.divided_by(c)?;
    let mut rows = Vec::new();
    for &delta in deltas {
        let image_capacity = capacity(target, &image, delta, Mode::Exact, caps)?.count;
        let domain_capacity = capacity(domain, set, delta / c, Mode::Exact, caps)?.count;
        let image_box = box_premeasure(target, &image, &g, scale, delta, Mode::Exact, caps)?.value;
        let domain_box_scaled = c.powf(s) * box_premeasure(domain, set, &g, &scaled, delta / c, Mode::Exact, caps)?.value;
        rows.push(LipschitzRow {
            delta,
            image_capacity,
            domain_capacity,
            capacity_ok: image_capacity <= domain_capacity,
            image_box,
            domain_box_scaled,
            box_ok: approx_le(image_box, domain_box_scaled),
        });
    }
    Ok(LipschitzReport { c, s, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityRow {
    pub delta: f64,
    pub capacity_exact: Option<usize>,
    pub capacity_greedy: usize,
    pub covering_upper: usize,
    pub covering_lower: usize,
}

/// One row per δ of the capacity/covering comparison table.
pub fn capacity_rows<M: Metric + ?Sized>(space: &M, set: &[usize], deltas: &[f64], caps: Caps) -> Result<Vec<CapacityRow>> {
    deltas
        .iter()
        .map(|&delta| {
            let capacity_exact = match capacity_count(space, set, delta, caps) {
                Ok(c) => Some(c),
                Err(Error::TooLargeForExact { .. }) => None,
                Err(e) => return Err(e),
            };
            let capacity_greedy = capacity(space, set, delta, Mode::Greedy, caps)?.count;
            let cover = match covering(space, set, delta, CoverMode::Exact, caps) {
                Ok(b) => b,
                Err(Error::TooLargeForExact { .. }) => covering(space, set, delta, CoverMode::Sandwich, caps)?,
                Err(e) => return Err(e),
            };
            Ok(CapacityRow {
                delta,
                capacity_exact,
                capacity_greedy,
                covering_upper: cover.upper,
                covering_lower: cover.lower,
            })
        })
        .collect()
}

pub fn write_capacity_rows<W: Write>(rows: &[CapacityRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["delta", "capacity_exact", "capacity_greedy", "covering_upper", "covering_lower"])?;
    for r in rows {
        w.write_record([
            format_float(r.delta),
            r.capacity_exact.map(|c| c.to_string()).unwrap_or_default(),
            r.capacity_greedy.to_string(),
            r.covering_upper.to_string(),
            r.covering_lower.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::product;

    fn line(xs: &[f64]) -> FiniteMetricSpace {
        FiniteMetricSpace::from_line("t", xs.to_vec()).unwrap()
    }

    fn r1() -> GaugeFunction {
        GaugeFunction::power(1.0).unwrap()
    }

    #[test]
    fn capacity_is_strict() {
        let x = line(&[0.0, 1.0, 2.0]);
        let c = capacity(&x, &[0, 1, 2], 0.5, Mode::Exact, Caps::default()).unwrap();
        assert_eq!(c.count, 3);
        let c = capacity(&x, &[0, 1, 2], 1.0, Mode::Exact, Caps::default()).unwrap();
        assert_eq!((c.count, c.witness), (2, vec![0, 2]));
    }

    #[test]
    fn covering_small_cases() {
        let x = line(&[0.0, 1.0, 2.0]);
        assert_eq!(covering_count(&x, &[0, 1, 2], 1.0, Caps::default()).unwrap(), 2);
        assert_eq!(covering_count(&x, &[1], 0.01, Caps::default()).unwrap(), 1);
        let m = x.subspace(&[0, 1, 2]);
        let matrix = FiniteMetricSpace::from_matrix("m", 3, (0..9).map(|k| m.dist(k / 3, k % 3)).collect()).unwrap();
        assert_eq!(covering_count(&matrix, &[0, 1, 2], 1.0, Caps::default()).unwrap(), 2);
        assert_eq!(capacity(&matrix, &[0, 1, 2], 1.0, Mode::Exact, Caps::default()).unwrap().witness, vec![0, 2]);
    }

    #[test]
    fn exact_cap_is_enforced() {
        let pts: Vec<f64> = (0..50).flat_map(|i| [i as f64, (i * i % 7) as f64]).collect();
        let x = FiniteMetricSpace::from_points("p", 2, pts).unwrap();
        let all = x.all_points();
        assert!(matches!(capacity(&x, &all, 1.0, Mode::Exact, Caps::default()), Err(Error::TooLargeForExact { .. })));
        assert!(capacity(&x, &all, 1.0, Mode::Greedy, Caps::default()).is_ok());
        assert!(matches!(covering(&x, &all, 1.0, CoverMode::Exact, Caps::default()), Err(Error::TooLargeForExact { .. })));
        let b = covering(&x, &all, 1.0, CoverMode::Sandwich, Caps::default()).unwrap();
        assert!(b.lower <= b.upper);
    }

    #[test]
    fn pack_two_points() {
        let x = line(&[0.0, 1.0]);
        let s = Scale::new(vec![0.9, 0.4]).unwrap();
        let p = pack_premeasure(&x, &[0, 1], &r1(), &s, 0.9, Mode::Exact, Caps::default()).unwrap();
        assert!((p.value - 1.8).abs() < 1e-15);
        assert_eq!(p.packing.distinct_radii(), vec![0.9]);
        let s = Scale::new(vec![1.0]).unwrap();
        let p = pack_premeasure(&x, &[0, 1], &r1(), &s, 1.0, Mode::Exact, Caps::default()).unwrap();
        assert_eq!(p.value, 1.0);
        assert_eq!(p.packing.len(), 1);
        let p = pack_premeasure(&x, &[], &r1(), &s, 1.0, Mode::Exact, Caps::default()).unwrap();
        assert_eq!((p.value, p.packing.len()), (0.0, 0));
        let p = pack_premeasure(&x, &[0, 1], &r1(), &s, 0.5, Mode::Exact, Caps::default()).unwrap();
        assert_eq!(p.value, 0.0);
    }

    #[test]
    fn box_three_points() {
        let x = line(&[0.0, 1.0, 2.0]);
        let s = Scale::new(vec![1.5, 0.5]).unwrap();
        let b = box_premeasure(&x, &[0, 1, 2], &r1(), &s, 2.0, Mode::Exact, Caps::default()).unwrap();
        assert_eq!(b.value, 3.0);
        let single = box_premeasure(&x, &[1], &GaugeFunction::power(0.5).unwrap(), &s, 2.0, Mode::Exact, Caps::default()).unwrap();
        assert_eq!(single.value, 1.5f64.sqrt());
    }

    #[test]
    fn combiner_examples() {
        let x = line(&[0.0, 3.0]);
        let y = line(&[0.0, 1.5]);
        let p = product(&x, &y);
        let pi = Packing::uniform(&[0, 1], 1.0);
        let sec = Packing::uniform(&[0, 1], 1.0);
        let sigma = combine_product_packing(&p, &pi, &[sec.clone(), sec]).unwrap();
        assert_eq!(sigma.len(), 4);
        assert_eq!(sigma.value(&r1().times(&r1())), 4.0);

        let single = combine_product_packing(&product(&line(&[0.0]), &line(&[0.0, 2.0, 4.0])), &Packing::uniform(&[0], 1.0), &[Packing::uniform(&[0, 1, 2], 1.0)]).unwrap();
        assert_eq!(single.len(), 3);
        assert!(single.entries.iter().all(|e| e.radius == 1.0));

        assert!(combine_product_packing(&p, &Packing::default(), &[]).unwrap().is_empty());
        let bad = Packing::uniform(&[0, 1], 2.0);
        assert!(matches!(combine_product_packing(&p, &Packing::uniform(&[0, 1], 1.0), &[bad.clone(), bad]), Err(Error::InvalidPacking(_))));
    }

    #[test]
    fn lipschitz_examples() {
        let x = line(&[0.0, 1.0, 2.0]);
        let half = line(&[0.0, 0.5, 1.0]);
        let s = Scale::dyadic(6);
        let rep = lipschitz_image_check(&x, &[0, 1, 2], &half, &[0, 1, 2], 0.5, 1.0, &s, &[0.4], Caps::default()).unwrap();
        assert_eq!((rep.rows[0].image_capacity, rep.rows[0].domain_capacity), (3, 3));
        assert_eq!(rep.violations(), 0);
        let id = lipschitz_image_check(&x, &[0, 1, 2], &x, &[0, 1, 2], 1.0, 0.5, &s, &[0.3, 0.9], Caps::default()).unwrap();
        assert!(id.rows.iter().all(|r| r.image_capacity == r.domain_capacity && r.image_box == r.domain_box_scaled));
        let point = line(&[7.0]);
        let col = lipschitz_image_check(&x, &[0, 1, 2], &point, &[0, 0, 0], 1.0, 1.0, &s, &[0.1, 0.6], Caps::default()).unwrap();
        assert!(col.rows.iter().all(|r| r.image_capacity == 1));
        assert!(matches!(
            lipschitz_image_check(&x, &[0, 1, 2], &x, &[0, 2, 1], 1.0, 1.0, &s, &[0.1], Caps::default()),
            Err(Error::NotLipschitz { .. })
        ));
    }

    #[test]
    fn packing_json() {
        let p = Packing::new([(3, 0.5)]);
        assert_eq!(p.to_json().unwrap(), r#"[{"point_id":3,"radius":0.5}]"#);
    }
}
