//! Property suites behind `packdim verify`, random clouds and run settings.
//!
//! Every randomized suite draws trial `i` from `SplitMix64::for_trial` with
//! a per-suite seed, so a report depends only on the seed and parameters.

use serde::Serialize;
use serde_json::{json, Value};

use crate::dimension::{homo1_check, homogeneity_certify};
use crate::error::{Error, Result};
use crate::fractal::z::{self, Depth, ZRadius};
use crate::fractal::DigitSet;
use crate::gauge::{GaugeFunction, Generator, Scale};
use crate::metric::{diam, product, FiniteMetricSpace, Metric};
use crate::packing::{self, approx_le, Caps, Mode, Packing};
use crate::premeasure::{random_table, verify_lemma_mi};
use crate::rng::{mix, SplitMix64};

/// Exact-solver caps used by the suites unless overridden.
pub const SUITE_CAPS: Caps = Caps { capacity: 256, covering: 256, packing: 256 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    Sandwich,
    Products,
    Rectangle,
    LemmaMi,
    ZInvariants,
    ZScaling,
    Homogeneity,
    Lipschitz,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Sandwich,
        Suite::Products,
        Suite::Rectangle,
        Suite::LemmaMi,
        Suite::ZInvariants,
        Suite::ZScaling,
        Suite::Homogeneity,
        Suite::Lipschitz,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Sandwich => "sandwich",
            Suite::Products => "products",
            Suite::Rectangle => "rectangle",
            Suite::LemmaMi => "lemma-mi",
            Suite::ZInvariants => "z-invariants",
            Suite::ZScaling => "z-scaling",
            Suite::Homogeneity => "homogeneity",
            Suite::Lipschitz => "lipschitz",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| Error::Parse(format!("unknown suite {s:?}")))
    }

    pub fn default_trials(&self) -> usize {
        match self {
            Suite::Sandwich => 100,
            Suite::Products => 50,
            Suite::Rectangle => 50,
            Suite::LemmaMi => 1000,
            Suite::ZInvariants | Suite::ZScaling => 1,
            Suite::Homogeneity => 12,
            Suite::Lipschitz => 30,
        }
    }

    fn seed(&self, seed: u64) -> u64 {
        let salt = Suite::ALL.iter().position(|s| s == self).expect("listed") as u64;
        mix(seed ^ mix(salt.wrapping_add(0x5EED)))
    }
}

/// Parameters shared by all suites.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteParams {
    pub seed: u64,
    pub trials: Option<usize>,
    pub caps: Caps,
    /// ℤ parameters; `None` runs the default family.
    pub s: Option<f64>,
    pub m: Option<u32>,
    pub depth: Option<usize>,
}

impl Default for SuiteParams {
    fn default() -> Self {
        Self { seed: 42, trials: None, caps: SUITE_CAPS, s: None, m: None, depth: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub trials: usize,
    /// Individual inequalities checked.
    pub checks: usize,
    pub violations: Vec<Value>,
}

impl SuiteReport {
    fn new(suite: Suite, seed: u64, trials: usize) -> Self {
        Self { suite: suite.name().into(), seed, trials, checks: 0, violations: Vec::new() }
    }

    fn check(&mut self, ok: bool, witness: impl FnOnce() -> Value) {
        self.checks += 1;
        if !ok {
            self.violations.push(witness());
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `n` distinct points in `[0,1]^dim`. Half the clouds snap coordinates to
/// multiples of 1/8 so that distance ties (and strict-inequality edge
/// cases) occur.
pub fn random_cloud(rng: &mut SplitMix64, n: usize, dim: usize, label: impl Into<String>) -> Result<FiniteMetricSpace> {
    let snap = rng.chance(0.5);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut attempts = 0;
    while rows.len() < n {
        attempts += 1;
        let row: Vec<f64> = (0..dim).map(|_| if snap && attempts < 50 * n { rng.below(9) as f64 / 8.0 } else { rng.next_f64() }).collect();
        if !rows.contains(&row) {
            rows.push(row);
        }
    }
    FiniteMetricSpace::from_points(label, dim, rows.concat())
}

/// A mix of realized pairwise distances (exact ties) and uniform values in
/// `(0, 1.2 diam]`.
fn random_scales<M: Metric + ?Sized>(rng: &mut SplitMix64, spaces: &[&M], count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let top = spaces.iter().map(|s| diam(*s, &s.all_points()).unwrap_or(0.0)).fold(0.0, f64::max).max(1e-3);
    for k in 0..count {
        let space = spaces[k % spaces.len()];
        let n = space.len() as u64;
        if k % 2 == 0 && n >= 2 {
            let a = rng.below(n) as usize;
            let b = (a + 1 + rng.below(n - 1) as usize) % n as usize;
            out.push(space.dist(a, b));
        } else {
            out.push((rng.next_f64().max(1e-6)) * 1.2 * top);
        }
    }
    out
}

fn sandwich(p: &SuiteParams) -> Result<SuiteReport> {
    let trials = p.trials.unwrap_or(Suite::Sandwich.default_trials());
    let mut rep = SuiteReport::new(Suite::Sandwich, p.seed, trials);
    for t in 0..trials {
        let mut rng = SplitMix64::for_trial(Suite::Sandwich.seed(p.seed), t as u64);
        let n = rng.range_inclusive(1, 30) as usize;
        let dim = rng.range_inclusive(1, 3) as usize;
        let x = random_cloud(&mut rng, n, dim, "cloud")?;
        let all = x.all_points();
        for delta in random_scales(&mut rng, &[&x], 8) {
            let c = packing::capacity_count(&x, &all, delta, p.caps)?;
            let n1 = packing::covering_count(&x, &all, delta, p.caps)?;
            let n2 = packing::covering_count(&x, &all, 2.0 * delta, p.caps)?;
            rep.check(n2 <= c && c <= n1, || json!({"trial": t, "n": n, "dim": dim, "delta": delta, "N_2delta": n2, "C_delta": c, "N_delta": n1}));
        }
    }
    Ok(rep)
}

fn products(p: &SuiteParams) -> Result<SuiteReport> {
    let trials = p.trials.unwrap_or(Suite::Products.default_trials());
    let mut rep = SuiteReport::new(Suite::Products, p.seed, trials);
    for t in 0..trials {
        let mut rng = SplitMix64::for_trial(Suite::Products.seed(p.seed), t as u64);
        let (nx, ny) = (rng.range_inclusive(1, 12) as usize, rng.range_inclusive(1, 12) as usize);
        let (dx, dy) = (rng.range_inclusive(1, 2) as usize, rng.range_inclusive(1, 2) as usize);
        let x = random_cloud(&mut rng, nx, dx, "x")?;
        let y = random_cloud(&mut rng, ny, dy, "y")?;
        let xy = product(&x, &y);
        let (ax, ay, axy) = (x.all_points(), y.all_points(), xy.all_points());
        for r in random_scales(&mut rng, &[&x, &y], 6) {
            let nx_r = packing::covering_count(&x, &ax, r, p.caps)?;
            let ny_r = packing::covering_count(&y, &ay, r, p.caps)?;
            let cy = packing::capacity_count(&y, &ay, r, p.caps)?;
            let cxy = packing::capacity_count(&xy, &axy, r, p.caps)?;
            let nxy = packing::covering_count(&xy, &axy, r, p.caps)?;
            let witness = || json!({"trial": t, "r": r, "C_XY": cxy, "N_XY": nxy, "N_X": nx_r, "N_Y": ny_r, "C_Y": cy});
            rep.check(cxy <= nx_r * cy, witness);
            rep.check(nxy <= nx_r * ny_r, witness);
        }
    }
    Ok(rep)
}

fn rectangle(p: &SuiteParams) -> Result<SuiteReport> {
    let trials = p.trials.unwrap_or(Suite::Rectangle.default_trials());
    let mut rep = SuiteReport::new(Suite::Rectangle, p.seed, trials);
    let g = GaugeFunction::power(0.5)?;
    let h = GaugeFunction::power(0.7)?;
    let gh = g.times(&h);
    for t in 0..trials {
        let mut rng = SplitMix64::for_trial(Suite::Rectangle.seed(p.seed), t as u64);
        let (nx, ny) = (rng.range_inclusive(1, 8) as usize, rng.range_inclusive(1, 8) as usize);
        let (dx, dy) = (rng.range_inclusive(1, 2) as usize, rng.range_inclusive(1, 2) as usize);
        let x = random_cloud(&mut rng, nx, dx, "x")?;
        let y = random_cloud(&mut rng, ny, dy, "y")?;
        let xy = product(&x, &y);
        let anchor = 0.25 + 0.75 * rng.next_f64();
        let scale = Scale::geometric(anchor, 0.5, 4)?;
        let delta = if rng.chance(0.5) { anchor } else { anchor * (0.2 + 0.8 * rng.next_f64()) };
        let radii = scale.admissible(delta);
        if radii.is_empty() {
            continue;
        }
        let (ax, ay) = (x.all_points(), y.all_points());
        let lhs = packing::pack_premeasure(&xy, &xy.all_points(), &gh, &scale, delta, Mode::Exact, p.caps)?;
        let px = packing::pack_premeasure(&x, &ax, &h, &scale, delta, Mode::Exact, p.caps)?;
        let mut low_y = f64::INFINITY;
        for &r in &radii {
            low_y = low_y.min(packing::capacity_count(&y, &ay, r, p.caps)? as f64 * g.eval(r));
        }
        let rhs = px.value * low_y;
        rep.check(approx_le(rhs, lhs.value), || json!({"trial": t, "delta": delta, "pack_XY": lhs.value, "pack_X": px.value, "min_CY_g": low_y}));
        let sections = px
            .packing
            .entries
            .iter()
            .map(|e| packing::capacity(&y, &ay, e.radius, Mode::Exact, p.caps).map(|c| Packing::uniform(&c.witness, e.radius)))
            .collect::<Result<Vec<_>>>()?;
        match packing::combine_product_packing(&xy, &px.packing, &sections) {
            Ok(sigma) => {
                let v = sigma.value(&gh);
                rep.check(sigma.is_scaled(&scale, delta) && approx_le(rhs, v) && approx_le(v, lhs.value), || {
                    json!({"trial": t, "delta": delta, "sigma": v, "pack_XY": lhs.value, "bound": rhs})
                });
            }
            Err(e) => rep.check(false, || json!({"trial": t, "delta": delta, "combiner_error": e.to_string()})),
        }
    }
    Ok(rep)
}

fn lemma_mi(p: &SuiteParams) -> Result<SuiteReport> {
    let trials = p.trials.unwrap_or(Suite::LemmaMi.default_trials());
    let mut rep = SuiteReport::new(Suite::LemmaMi, p.seed, trials);
    for t in 0..trials {
        let mut rng = SplitMix64::for_trial(Suite::LemmaMi.seed(p.seed), t as u64);
        let n = rng.range_inclusive(1, 4) as usize;
        let table = random_table(n, &mut rng);
        let lemma = verify_lemma_mi(&table);
        rep.checks += 1;
        for v in lemma.violations {
            rep.violations.push(json!({"trial": t, "n": n, "clause": v.clause, "sets": v.sets, "values": v.values, "table": table.to_json()}));
        }
    }
    Ok(rep)
}

const Z_FAMILY: [(f64, u32); 3] = [(0.5, 1), (0.5, 2), (1.0, 2)];
const Z_DEPTH: usize = 8;

fn z_family(p: &SuiteParams) -> Vec<(f64, u32)> {
    match (p.s, p.m) {
        (None, None) => Z_FAMILY.to_vec(),
        (s, m) => vec![(s.unwrap_or(0.5), m.unwrap_or(1))],
    }
}

fn z_invariants(p: &SuiteParams) -> Result<SuiteReport> {
    let family = z_family(p);
    let depth = p.depth.unwrap_or(Z_DEPTH);
    let mut rep = SuiteReport::new(Suite::ZInvariants, p.seed, family.len());
    for (s, m) in family {
        let zc = z::build_z(s, m, Generator::Dyadic, depth)?;
        let checks = zc.check_invariants();
        rep.check(checks.exact, || json!({"s": s, "m": m, "clause": "exact_arithmetic"}));
        for c in checks.checks {
            rep.check(c.ok, || json!({"s": s, "m": m, "clause": c.clause, "level": c.level}));
        }
    }
    Ok(rep)
}

/// Relative tolerance on the closed-form ℤ bounds.
pub const Z_TOLERANCE: f64 = 1e-9;

fn z_scaling(p: &SuiteParams) -> Result<SuiteReport> {
    let (s, m) = (p.s.unwrap_or(0.5), p.m.unwrap_or(1));
    let depth = p.depth.unwrap_or(Z_DEPTH);
    let mut rep = SuiteReport::new(Suite::ZScaling, p.seed, 1);
    let zc = z::build_z(s, m, Generator::Dyadic, depth)?;
    if zc.kind != z::ZKind::Tree || depth < 2 {
        return Ok(rep);
    }
    let q = 1.0 - zc.p;
    let theta1 = z::ZConstruction::theta(1);
    let ln_cap = (theta1 + theta1 * (q * (zc.ln_u[1] - zc.ln_r[1])).exp()).ln();
    let tol = Z_TOLERANCE.ln_1p();
    let (lo, hi) = (zc.ln_r[depth], zc.ln_u[1]);
    let mut radii: Vec<ZRadius> = (1..=depth).flat_map(|n| [ZRadius::R(n), ZRadius::U(n)]).filter(|r| (lo..=hi).contains(&zc.ln_radius(*r))).collect();
    let mut rng = SplitMix64::for_trial(Suite::ZScaling.seed(p.seed), 0);
    let floor = lo.max(-700.0);
    radii.extend((0..64).map(|_| ZRadius::Value((floor + (hi - floor) * rng.next_f64()).exp())));
    for r in radii {
        let cov = zc.z_covering(r)?;
        let ln_n = z::ln_big(&cov.tree.upper);
        let lr = zc.ln_radius(r);
        rep.check(ln_n + q * lr <= ln_cap + tol, || json!({"check": "scaled_count", "ln_r": lr, "ln_count": ln_n, "ln_bound": ln_cap}));
        rep.check(ln_n <= cov.ln_bound + tol, || json!({"check": "closed_form_count", "ln_r": lr, "ln_count": ln_n, "ln_bound": cov.ln_bound}));
        rep.check(cov.scaled_bound <= cov.theta_bound * (1.0 + Z_TOLERANCE), || json!({"check": "theta_bound", "ln_r": lr, "scaled": cov.scaled_bound, "theta": cov.theta_bound}));
    }
    let n = depth;
    let v = z::ln_big(&zc.big_g[n]) + q * zc.ln_u[n];
    let low = (1.0 - 1.0 / n as f64).ln() + q * (zc.ln_u[n] - zc.ln_r[n]);
    let high = (1.0 + 1.0 / n as f64).ln();
    rep.check(low - tol <= v && v <= high + tol, || json!({"check": "value_at_u", "level": n, "ln_value": v, "ln_low": low, "ln_high": high}));
    let at_u = zc.tree_count(ZRadius::U(n), Depth::Infinite)?;
    rep.check(at_u.is_exact() && at_u.lower == zc.big_g[n], || json!({"check": "count_at_u", "level": n}));
    if m == 1 {
        mass_surrogate(&zc, &mut rng, p.caps, &mut rep)?;
    }
    Ok(rep)
}

/// `μ(B) ≤ C_{r_n - u_n}(B) r_n^{1-p} / (1 - 1/n)` on random unions `B` of
/// level-`n` cells, represented by their corners.
fn mass_surrogate(zc: &z::ZConstruction, rng: &mut SplitMix64, caps: Caps, rep: &mut SuiteReport) -> Result<()> {
    use num_traits::ToPrimitive;
    for n in 2..=zc.n_max.min(4) {
        let Some(total) = zc.big_g[n].to_u64().filter(|&g| g <= 1 << 14) else { continue };
        let radix: Vec<u64> = zc.g[..n].iter().map(|g| g.to_u64().expect("small")).collect();
        let r = zc.ln_r[n].exp() - zc.ln_u[n].exp();
        for _ in 0..8 {
            let size = rng.range_inclusive(1, total.min(64));
            let mut cells: Vec<u64> = (0..size).map(|_| rng.below(total)).collect();
            cells.sort_unstable();
            cells.dedup();
            let corners: Vec<f64> = cells
                .iter()
                .map(|&c| {
                    let mut tau = vec![0u64; n];
                    let mut rest = c;
                    for j in (0..n).rev() {
                        tau[j] = rest % radix[j];
                        rest /= radix[j];
                    }
                    zc.corner(&tau)
                })
                .collect();
            let b = FiniteMetricSpace::from_line("cells", corners)?;
            let cap = packing::capacity_count(&b, &b.all_points(), r, caps)?;
            let mass = cells.len() as f64 / total as f64;
            let bound = cap as f64 * ((1.0 - zc.p) * zc.ln_r[n]).exp() / (1.0 - 1.0 / n as f64);
            rep.check(approx_le(mass, bound), || json!({"check": "mass", "level": n, "cells": cells.len(), "mass": mass, "bound": bound}));
        }
    }
    Ok(())
}

/// Certifies `Q` on the whole set and on every ball `B(x, t)` (the sets the
/// two-scale comparison relies on), then checks the comparison.
pub fn homogeneity_trial(x: &FiniteMetricSpace, m: f64, rs: &[f64], ts: &[f64], caps: Caps) -> Result<(f64, Vec<Value>, usize)> {
    let all = x.all_points();
    let mut samples = vec![all.clone()];
    let radii: Vec<f64> = rs.iter().chain(ts).copied().collect();
    for i in 0..x.len() {
        for &t in &radii {
            let ball: Vec<usize> = all.iter().copied().filter(|&j| x.dist(i, j) <= t).collect();
            samples.push(ball);
        }
    }
    samples.sort();
    samples.dedup();
    let cert = homogeneity_certify(x, &samples, &radii, m, caps)?;
    let mut bad = Vec::new();
    if !cert.exact {
        bad.push(json!({"check": "certificate_exact"}));
    }
    let pairs: Vec<(f64, f64)> = rs.iter().flat_map(|&a| ts.iter().map(move |&b| (a.min(b), a.max(b)))).collect();
    let report = homo1_check(x, &all, cert.q, m, &pairs, caps)?;
    for row in report.rows.iter().filter(|r| !r.ok) {
        bad.push(json!({"check": "two_scale", "r": row.r, "t": row.t, "lhs": row.lhs, "rhs": row.rhs, "q": cert.q}));
    }
    if !report.scale_ok {
        bad.push(json!({"check": "coarsest_scale", "max": report.max_value, "coarse": report.coarse_value, "q": cert.q}));
    }
    Ok((cert.q, bad, pairs.len() + 2))
}

fn homogeneity(p: &SuiteParams) -> Result<SuiteReport> {
    let trials = p.trials.unwrap_or(Suite::Homogeneity.default_trials());
    let mut rep = SuiteReport::new(Suite::Homogeneity, p.seed, trials);
    for t in 0..trials {
        let mut rng = SplitMix64::for_trial(Suite::Homogeneity.seed(p.seed), t as u64);
        let (x, m) = if t == 0 {
            (DigitSet::k0(16)?.discretize(16, 1 << 20)?, 1.0)
        } else if t % 3 == 2 {
            let n = rng.range_inclusive(2, 16) as usize;
            (random_cloud(&mut rng, n, 2, "plane")?, 2.0)
        } else {
            let n = rng.range_inclusive(2, 40) as usize;
            (random_cloud(&mut rng, n, 1, "line")?, 1.0)
        };
        let d = diam(&x, &x.all_points())?;
        let mut draw = |k: usize| -> Vec<f64> { (0..k).map(|_| d * rng.next_f64().max(1e-3)).collect() };
        let (rs, ts) = (draw(10), draw(10));
        let (_, bad, checks) = homogeneity_trial(&x, m, &rs, &ts, p.caps)?;
        rep.checks += checks;
        for mut b in bad {
            b["trial"] = json!(t);
            b["space"] = json!(x.label());
            rep.violations.push(b);
        }
    }
    Ok(rep)
}

fn lipschitz(p: &SuiteParams) -> Result<SuiteReport> {
    let trials = p.trials.unwrap_or(Suite::Lipschitz.default_trials());
    let mut rep = SuiteReport::new(Suite::Lipschitz, p.seed, trials);
    let scale = Scale::geometric(1.0, 0.5, 6)?;
    for t in 0..trials {
        let mut rng = SplitMix64::for_trial(Suite::Lipschitz.seed(p.seed), t as u64);
        let n = rng.range_inclusive(1, 10) as usize;
        let dim = rng.range_inclusive(1, 2) as usize;
        let x = random_cloud(&mut rng, n, dim, "domain")?;
        // powers of two keep c·d(x, y) exact
        let c = [0.25, 0.5, 1.0, 2.0][rng.below(4) as usize];
        let project = dim == 2 && rng.chance(0.5);
        let mut images: Vec<f64> = Vec::new();
        let mut map = Vec::with_capacity(n);
        for i in 0..n {
            let pt = x.coords(i).expect("embedded");
            let img: Vec<f64> = if project { vec![c * pt[0]] } else { pt.iter().map(|v| c * v).collect() };
            let w = img.len();
            let k = (0..images.len() / w).find(|&k| images[k * w..(k + 1) * w] == img[..]).unwrap_or_else(|| {
                images.extend(&img);
                images.len() / w - 1
            });
            map.push(k);
        }
        let target = FiniteMetricSpace::from_points("image", if project { 1 } else { dim }, images)?;
        let s = [0.3, 0.5, 1.0][rng.below(3) as usize];
        let deltas: Vec<f64> = (0..4).map(|_| rng.next_f64().max(1e-3)).collect();
        let report = packing::lipschitz_image_check(&x, &x.all_points(), &target, &map, c, s, &scale, &deltas, p.caps)?;
        for row in report.rows {
            rep.check(row.capacity_ok && row.box_ok, || json!({"trial": t, "c": c, "s": s, "row": row}));
        }
    }
    Ok(rep)
}

pub fn run_suite(suite: Suite, params: &SuiteParams) -> Result<SuiteReport> {
    match suite {
        Suite::Sandwich => sandwich(params),
        Suite::Products => products(params),
        Suite::Rectangle => rectangle(params),
        Suite::LemmaMi => lemma_mi(params),
        Suite::ZInvariants => z_invariants(params),
        Suite::ZScaling => z_scaling(params),
        Suite::Homogeneity => homogeneity(params),
        Suite::Lipschitz => lipschitz(params),
    }
}

/// Every suite with its default trial count.
pub fn run_battery(params: &SuiteParams) -> Result<Vec<SuiteReport>> {
    Suite::ALL.iter().map(|&s| run_suite(s, params)).collect()
}

pub fn battery_json(reports: &[SuiteReport]) -> Result<String> {
    Ok(serde_json::to_string_pretty(reports)?)
}
