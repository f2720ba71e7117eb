//! One test per acceptance criterion. Each prints a single summary line
//! straight to stdout (so it is visible without `--nocapture`) and then
//! asserts.

use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use packdim::dimension::{self, lbdim_estimate, stage_report, Bound};
use packdim::fractal::z::{ln_big, Depth, ZRadius};
use packdim::fractal::{build_z, exhaustion_schedule, Component, DigitSet, LogSequenceSet, ScheduleKind};
use packdim::gauge::Generator;
use packdim::harness::{self, homogeneity_trial, Suite, SuiteParams};
use packdim::metric::{diam, Metric};
use packdim::packing::{capacity_count, covering_count, line_product_capacity, Caps};
use packdim::rng::SplitMix64;

/// Relative slack on slopes computed from logs.
const SLOPE_TOLERANCE: f64 = 1e-12;
/// Relative slack on the ℤ closed forms.
const Z_TOLERANCE: f64 = 1e-9;

fn report(k: u32, name: &str, ok: bool, detail: &str, elapsed: Duration, limit: Duration) -> bool {
    let in_time = elapsed <= limit;
    let verdict = if ok && in_time { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout();
    writeln!(out, "criterion {k:>2} [{verdict}] {name}: {detail} ({:.2}s, limit {}s)", elapsed.as_secs_f64(), limit.as_secs()).unwrap();
    out.flush().unwrap();
    ok && in_time
}

fn suite(s: Suite, seed: u64) -> harness::SuiteReport {
    harness::run_suite(s, &SuiteParams { seed, ..SuiteParams::default() }).unwrap()
}

fn suite_line(k: u32, name: &str, s: Suite, seed: u64, limit: u64) -> bool {
    let t = Instant::now();
    let rep = suite(s, seed);
    let detail = format!("{} trials, {} checks, {} violations", rep.trials, rep.checks, rep.violations.len());
    report(k, name, rep.passed(), &detail, t.elapsed(), Duration::from_secs(limit))
}

#[test]
fn criterion_01_digit_covering_identity() {
    let t = Instant::now();
    let mut out = std::io::stdout();
    let mut mismatches = Vec::new();
    for set in [DigitSet::k0(16).unwrap(), DigitSet::k1(16).unwrap()] {
        for n in 0..=16u64 {
            let x = set.discretize(n, 1 << 20).unwrap();
            let exact = covering_count(&x, &x.all_points(), 0.5f64.powi(n as i32), Caps::default()).unwrap();
            let want = set.covering(n).unwrap();
            let ok = BigUint::from(exact) == want;
            writeln!(out, "    {} n={n:>2}: exact covering {exact:>5}, 2^free = {want:>5} {}", set.label(), if ok { "" } else { "MISMATCH" }).unwrap();
            if !ok {
                mismatches.push(format!("{}@{n}", set.label()));
            }
        }
    }
    let detail = if mismatches.is_empty() { "all 34 levels match".to_string() } else { format!("{} mismatching levels: {}", mismatches.len(), mismatches.join(" ")) };
    let ok = report(1, "digit-set covering identity", mismatches.is_empty(), &detail, t.elapsed(), Duration::from_secs(10));
    assert!(ok, "{detail}");
}

#[test]
fn criterion_02_sandwich() {
    let rep = suite(Suite::Sandwich, 1);
    assert_eq!((rep.trials, rep.checks), (100, 800));
    assert!(suite_line(2, "sandwich N_2δ ≤ C_δ ≤ N_δ", Suite::Sandwich, 1, 60));
}

#[test]
fn criterion_03_products() {
    let rep = suite(Suite::Products, 1);
    assert_eq!((rep.trials, rep.checks), (50, 600));
    assert!(suite_line(3, "product capacity bounds", Suite::Products, 1, 60));
}

#[test]
fn criterion_04_example_slopes() {
    let t = Instant::now();
    let mut notes = Vec::new();
    let mut ok = true;

    // (a) K₀ on the levels that close the first four blocks of D
    let levels = [3u64, 60, 2520, 181440];
    let k0 = DigitSet::k0(181440).unwrap();
    let rep = dimension::digit_report(&k0, &levels).unwrap();
    let est = lbdim_estimate(&rep, Some(1.0), None).unwrap();
    ok &= est.value <= 0.15;
    notes.push(format!("(a) K0 lbdim {:.4} ≤ 0.15", est.value));

    // (b) K₀ ∪ K₁ on F
    let comps = vec![Component::Digit(DigitSet::k0(32).unwrap()), Component::Digit(DigitSet::k1(32).unwrap())];
    let sched = exhaustion_schedule(&comps, ScheduleKind::Natural { stages: 1 }).unwrap();
    let f = k0.blocks.f_subsequence(32);
    assert_eq!(f, vec![2, 4, 20]);
    for bound in [Bound::Lower, Bound::Upper] {
        for row in stage_report(&sched.stages[0], &f, bound).unwrap().rows {
            let n = (-row.ln_delta / std::f64::consts::LN_2).round();
            let inside = row.slope >= 0.5 * (1.0 - SLOPE_TOLERANCE) && row.slope <= (0.5 + 2.0 / n) * (1.0 + SLOPE_TOLERANCE);
            ok &= inside;
            if !inside {
                notes.push(format!("(b) slope {} at n={n} outside", row.slope));
            }
        }
    }
    notes.push(format!("(b) F={f:?} slopes within [0.5, 0.5+2/n]"));

    // (c) log set: analytic oracle against the materialized sweep, then δ = 1e-9
    let cutoff = LogSequenceSet::new(1_000_000).unwrap();
    let pts = cutoff.discretize(1 << 20).unwrap();
    for delta in [1e-2, 1e-3, 1e-4, 1e-5] {
        let oracle = cutoff.covering(delta).unwrap();
        let sweep = covering_count(&pts, &pts.all_points(), delta, Caps::default()).unwrap() as u64;
        ok &= oracle.is_exact() && oracle.lower == sweep;
    }
    let b = LogSequenceSet::infinite().covering(1e-9).unwrap();
    let slope = (b.lower as f64).ln() / 1e-9f64.ln().abs();
    ok &= slope >= 0.70;
    notes.push(format!("(c) log-set slope at 1e-9 ≥ {slope:.4} (count in [{}, {}])", b.lower, b.upper));

    let detail = notes.join("; ");
    assert!(report(4, "digit and log-set slopes", ok, &detail, t.elapsed(), Duration::from_secs(30)), "{detail}");
}

#[test]
fn criterion_05_z_invariants() {
    let rep = suite(Suite::ZInvariants, 42);
    assert_eq!(rep.trials, 3);
    assert!(suite_line(5, "Z construction invariants (depth 8)", Suite::ZInvariants, 42, 10));
}

#[test]
fn criterion_06_z_scaling() {
    assert!(harness::Z_TOLERANCE <= Z_TOLERANCE);
    assert!(suite_line(6, "Z scaling sandwich (s=0.5, m=1, n*=8)", Suite::ZScaling, 42, 10));
}

#[test]
fn criterion_07_product_with_z() {
    let t = Instant::now();
    let x = DigitSet::k0(16).unwrap().discretize(16, 1 << 20).unwrap();
    let d = diam(&x, &x.all_points()).unwrap();
    let mut rng = SplitMix64::new(7);
    let mut draw = |k: usize| -> Vec<f64> { (0..k).map(|_| d * rng.next_f64().max(1e-3)).collect() };
    let (rs, ts) = (draw(10), draw(10));
    let (q, bad, _) = homogeneity_trial(&x, 1.0, &rs, &ts, Caps::default()).unwrap();
    let mut ok = bad.is_empty() && q >= 1.0;

    let (s, depth) = (0.5, 8usize);
    let z = build_z(s, 1, Generator::Dyadic, depth).unwrap();
    let radius = |n: usize| z.generator.member(z.index[n]);
    // on the materialized level-4 corners the sweep is exact and must sit in the tree bracket
    let y4 = z.discretize(4, 1 << 20).unwrap();
    let small = x.subspace(&(0..64).collect::<Vec<_>>());
    for n in 1..=depth {
        let r = radius(n);
        let tree = z.tree_count(ZRadius::R(n), Depth::Finite(4)).unwrap();
        let sweep = BigUint::from(capacity_count(&y4, &y4.all_points(), r, Caps::default()).unwrap());
        ok &= tree.lower <= sweep && sweep <= tree.upper;
        let direct = line_product_capacity(&small, &y4, r).unwrap();
        ok &= direct == capacity_count(&small, &small.all_points(), r, Caps::default()).unwrap() * sweep.to_usize().unwrap();
    }
    let mut scales = 0;
    let mut worst = f64::NEG_INFINITY;
    for n in 1..=depth {
        let ln_r = z.ln_r[n];
        let cx = capacity_count(&x, &x.all_points(), radius(n), Caps::default()).unwrap() as f64;
        // the depth-8 tree count is used through its upper end
        let cy = z.tree_count(ZRadius::R(n), Depth::Finite(depth)).unwrap();
        // C(X × Y) = C(X) C(Y) on line factors
        let lhs = cx.ln() + ln_big(&cy.upper) + ln_r;
        let rhs = (2.0 * q).ln() + cx.ln() + s * ln_r + (1.0 + 1.0 / n as f64).ln();
        ok &= lhs <= rhs + Z_TOLERANCE.ln_1p();
        worst = worst.max(lhs - rhs);
        scales += 1;
    }
    ok &= scales >= 6;
    let detail = format!("Q = {q:.4}, {scales} scales, max ln(lhs/rhs) = {worst:.4}");
    assert!(report(7, "product with Z at the scales r_n", ok, &detail, t.elapsed(), Duration::from_secs(120)), "{detail}");
}

#[test]
fn criterion_08_lemma_mi() {
    let rep = suite(Suite::LemmaMi, 3);
    assert_eq!(rep.trials, 1000);
    assert!(suite_line(8, "Method I / Method D lemma suite", Suite::LemmaMi, 3, 60));
}

#[test]
fn criterion_09_rectangle() {
    let rep = suite(Suite::Rectangle, 1);
    assert_eq!(rep.trials, 50);
    assert!(suite_line(9, "rectangle inequality and combiner", Suite::Rectangle, 1, 120));
}

#[test]
fn criterion_10_determinism() {
    let t = Instant::now();
    let run = || {
        let out = Command::new(env!("CARGO_BIN_EXE_packdim")).args(["verify", "all", "--seed", "42"]).output().unwrap();
        (out.status.code(), out.stdout)
    };
    let (a, b) = (run(), run());
    let ok = a == b && a.0 == Some(0) && !a.1.is_empty();
    let detail = format!("two runs of `verify all --seed 42`: {} bytes, identical = {}", a.1.len(), a.1 == b.1);
    assert!(report(10, "determinism", ok, &detail, t.elapsed(), Duration::from_secs(300)), "{detail}");
}
