//! Exact Method I and Method D on finite ground sets, with exhaustive
//! checks of the outer-measure properties.
//!
//! Subsets are bitmasks over at most 12 points. Values live in `[0, ∞]`
//! and use IEEE infinity, so `∞ + x = ∞` and `min(∞, x) = x` hold natively.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::metric::{diam, Metric};
use crate::packing::approx_le;
use crate::rng::SplitMix64;

pub const MAX_GROUND: usize = 12;

pub type Mask = u32;

#[derive(Debug, Clone, PartialEq)]
pub struct PreMeasureTable {
    n: usize,
    values: Vec<f64>,
}

fn masks(n: usize) -> std::ops::Range<Mask> {
    0..(1 << n)
}

/// Nonempty submasks of `set`, largest first.
fn submasks(set: Mask) -> impl Iterator<Item = Mask> {
    let mut next = Some(set);
    std::iter::from_fn(move || {
        let t = next?;
        if t == 0 {
            return None;
        }
        next = Some((t - 1) & set);
        Some(t)
    })
}

fn approx_eq(a: f64, b: f64) -> bool {
    approx_le(a, b) && approx_le(b, a)
}

impl PreMeasureTable {
    /// Validates `τ(∅) = 0`, `values ⊂ [0, ∞]` and monotonicity.
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n > MAX_GROUND {
            return Err(Error::TooLargeForExact { size: n, cap: MAX_GROUND });
        }
        if values.len() != 1 << n {
            return Err(Error::NotPreMeasure(format!("expected {} values, got {}", 1usize << n, values.len())));
        }
        if values[0] != 0.0 {
            return Err(Error::NotPreMeasure("value of the empty set must be 0".into()));
        }
        if let Some(m) = masks(n).find(|&m| !(values[m as usize] >= 0.0)) {
            return Err(Error::NotPreMeasure(format!("value at {m:#b} is negative or NaN")));
        }
        let t = Self { n, values };
        if let Some((a, b)) = t.monotone_violation() {
            return Err(Error::NotPreMeasure(format!("τ({a:#b}) > τ({b:#b})")));
        }
        Ok(t)
    }

    pub fn from_fn(n: usize, f: impl Fn(Mask) -> f64) -> Result<Self> {
        if n > MAX_GROUND {
            return Err(Error::TooLargeForExact { size: n, cap: MAX_GROUND });
        }
        Self::new(n, masks(n).map(f).collect())
    }

    pub fn counting(n: usize) -> Result<Self> {
        Self::from_fn(n, |m| m.count_ones() as f64)
    }

    /// `τ(E) = diam(E)`, with `τ(∅) = 0`.
    pub fn diameter<M: Metric + ?Sized>(space: &M) -> Result<Self> {
        Self::from_fn(space.len(), |m| {
            let ids: Vec<usize> = (0..space.len()).filter(|&i| m >> i & 1 == 1).collect();
            if ids.is_empty() {
                0.0
            } else {
                diam(space, &ids).expect("nonempty")
            }
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, set: Mask) -> f64 {
        self.values[set as usize]
    }

    pub fn full(&self) -> Mask {
        ((1u64 << self.n) - 1) as Mask
    }

    fn check_subset(&self, set: Mask) -> Result<()> {
        if set & !self.full() != 0 {
            return Err(Error::NotPreMeasure(format!("subset {set:#b} is outside the ground set")));
        }
        Ok(())
    }

    fn monotone_violation(&self) -> Option<(Mask, Mask)> {
        for a in masks(self.n) {
            for i in 0..self.n {
                let b = a | 1 << i;
                if b != a && self.get(a) > self.get(b) {
                    return Some((a, b));
                }
            }
        }
        None
    }

    pub fn to_json(&self) -> Value {
        let values: Vec<Value> = self.values.iter().map(|&v| if v.is_infinite() { json!("inf") } else { json!(v) }).collect();
        json!({ "n": self.n, "values": values })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let n = v["n"].as_u64().ok_or_else(|| Error::Parse("missing n".into()))? as usize;
        let raw = v["values"].as_array().ok_or_else(|| Error::Parse("missing values".into()))?;
        let values = raw
            .iter()
            .map(|x| match x {
                Value::String(s) if s == "inf" => Ok(f64::INFINITY),
                _ => x.as_f64().ok_or_else(|| Error::Parse(format!("bad value {x}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodI {
    pub value: f64,
    /// Blocks of an optimal partition, each a nonempty mask.
    pub partition: Vec<Mask>,
}

/// Method I values for every subset, with the first block of an optimal
/// partition of each.
///
/// By monotonicity, an optimal cover can be taken to be a partition, so
/// `τ̂(S) = min over blocks T ∋ min(S) of τ(T) + τ̂(S \ T)`.
pub fn method_i_table(t: &PreMeasureTable) -> (Vec<f64>, Vec<Mask>) {
    let size = 1usize << t.n;
    let mut best = vec![0.0; size];
    let mut first = vec![0 as Mask; size];
    for s in 1..size as Mask {
        let low = s & s.wrapping_neg();
        let mut value = f64::INFINITY;
        let mut block = s;
        for b in submasks(s).filter(|b| b & low != 0) {
            let v = t.get(b) + best[(s & !b) as usize];
            if v < value {
                value = v;
                block = b;
            }
        }
        best[s as usize] = value;
        first[s as usize] = block;
    }
    (best, first)
}

pub fn method_i(t: &PreMeasureTable, set: Mask) -> Result<MethodI> {
    t.check_subset(set)?;
    let (best, first) = method_i_table(t);
    let mut partition = Vec::new();
    let mut rest = set;
    while rest != 0 {
        let b = first[rest as usize];
        partition.push(b);
        rest &= !b;
    }
    Ok(MethodI { value: best[set as usize], partition })
}

/// The Method I table as a pre-measure table.
pub fn method_i_premeasure(t: &PreMeasureTable) -> PreMeasureTable {
    PreMeasureTable { n: t.n, values: method_i_table(t).0 }
}

/// Method D. Every increasing chain in a finite ground set reaches `E`, so
/// the value is `τ(E)`; chains of length at most 3 are enumerated as a
/// self-check.
pub fn method_d(t: &PreMeasureTable, set: Mask) -> Result<f64> {
    t.check_subset(set)?;
    let target = t.get(set);
    let mut inf = target;
    for e2 in std::iter::once(0).chain(submasks(set)) {
        for e1 in std::iter::once(0).chain(submasks(e2)) {
            inf = inf.min(t.get(e1).max(t.get(e2)).max(target));
        }
    }
    if inf != target {
        return Err(Error::NotPreMeasure(format!("chain infimum {inf} differs from τ = {target} at {set:#b}")));
    }
    Ok(target)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Flags {
    pub monotone: bool,
    pub subadditive: bool,
    pub metric: bool,
    pub additive_on_separated: bool,
}

/// Decides each flag exactly on the stored values. On a finite space
/// "separated" means disjoint.
pub fn classify(t: &PreMeasureTable) -> Flags {
    let mut f = Flags { monotone: t.monotone_violation().is_none(), subadditive: true, metric: true, additive_on_separated: true };
    for a in masks(t.n) {
        for b in masks(t.n) {
            let (u, sum) = (t.get(a | b), t.get(a) + t.get(b));
            if u > sum {
                f.subadditive = false;
            }
            if a & b == 0 {
                if u < sum {
                    f.metric = false;
                }
                if u != sum {
                    f.additive_on_separated = false;
                }
            }
        }
    }
    f
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Violation {
    pub clause: &'static str,
    pub sets: Vec<Mask>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LemmaReport {
    pub flags: Flags,
    pub violations: Vec<Violation>,
}

impl LemmaReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks on every subset: `τ̂ ≤ τ`, `τ̂` monotone and subadditive,
/// `τ̂` additive on disjoint pairs when `τ` is metric, `→τ = τ̂` when `τ`
/// is subadditive, and idempotence of Method I.
pub fn verify_lemma_mi(t: &PreMeasureTable) -> LemmaReport {
    let flags = classify(t);
    let (hat, _) = method_i_table(t);
    let mut violations = Vec::new();
    let mut flag = |clause, sets: Vec<Mask>, values: Vec<f64>| violations.push(Violation { clause, sets, values });
    for s in masks(t.n) {
        let (h, v) = (hat[s as usize], t.get(s));
        if !approx_le(h, v) {
            flag("method_i_le_tau", vec![s], vec![h, v]);
        }
        if flags.subadditive {
            match method_d(t, s) {
                Ok(d) if approx_eq(d, h) => {}
                Ok(d) => flag("method_d_eq_method_i", vec![s], vec![d, h]),
                Err(_) => flag("method_d_chain_check", vec![s], vec![v]),
            }
        }
    }
    for a in masks(t.n) {
        for b in masks(t.n) {
            let (u, ha, hb) = (hat[(a | b) as usize], hat[a as usize], hat[b as usize]);
            if !approx_le(u, ha + hb) {
                flag("method_i_subadditive", vec![a, b], vec![u, ha + hb]);
            }
            if a & b == 0 && (!approx_le(ha, u) || !approx_le(hb, u)) {
                flag("method_i_monotone", vec![a, b], vec![ha, hb, u]);
            }
            if flags.metric && a & b == 0 && !approx_eq(u, ha + hb) {
                flag("method_i_additive_on_separated", vec![a, b], vec![u, ha + hb]);
            }
        }
    }
    let twice = method_i_table(&PreMeasureTable { n: t.n, values: hat.clone() }).0;
    for s in masks(t.n) {
        if !approx_eq(twice[s as usize], hat[s as usize]) {
            flag("method_i_idempotent", vec![s], vec![twice[s as usize], hat[s as usize]]);
        }
    }
    LemmaReport { flags, violations }
}

/// A random pre-measure on `n` points. Kinds rotate with `rng`: the
/// monotone closure of random block values (with occasional `∞`), a
/// concave power of an additive weight (subadditive) and a convex power of
/// one (metric).
pub fn random_table(n: usize, rng: &mut SplitMix64) -> PreMeasureTable {
    let size = 1usize << n;
    let kind = rng.below(3);
    let values = match kind {
        0 => {
            let mut v: Vec<f64> = (0..size).map(|m| if m == 0 { 0.0 } else if rng.chance(0.03) { f64::INFINITY } else { rng.next_f64() * 4.0 }).collect();
            for m in 1..size {
                for i in 0..n {
                    if m >> i & 1 == 1 {
                        v[m] = v[m].max(v[m & !(1 << i)]);
                    }
                }
            }
            v
        }
        _ => {
            let w: Vec<f64> = (0..n).map(|_| rng.next_f64() + 0.05).collect();
            let p = if kind == 1 { 0.3 + 0.6 * rng.next_f64() } else { 1.1 + rng.next_f64() };
            (0..size).map(|m| (0..n).filter(|&i| m >> i & 1 == 1).map(|i| w[i]).sum::<f64>().powf(p)).collect()
        }
    };
    PreMeasureTable::new(n, values).expect("random tables are monotone")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::FiniteMetricSpace;

    fn squares(n: usize) -> PreMeasureTable {
        PreMeasureTable::from_fn(n, |m| (m.count_ones() as f64).powi(2)).unwrap()
    }

    #[test]
    fn counting_is_fixed() {
        let c = PreMeasureTable::counting(5).unwrap();
        assert_eq!(method_i_premeasure(&c), c);
        let f = classify(&c);
        assert!(f.monotone && f.subadditive && f.metric && f.additive_on_separated);
        assert!(verify_lemma_mi(&c).ok());
    }

    #[test]
    fn squares_reduce_to_counting() {
        let t = squares(3);
        let r = method_i(&t, 0b111).unwrap();
        assert_eq!(r.value, 3.0);
        assert_eq!(r.partition.len(), 3);
        assert_eq!(method_d(&t, 0b011).unwrap(), 4.0);
        assert_eq!(method_i(&t, 0b011).unwrap().value, 2.0);
        assert_eq!(method_i_premeasure(&t), PreMeasureTable::counting(3).unwrap());
        let f = classify(&t);
        assert!(f.monotone && !f.subadditive && f.metric);
        assert!(verify_lemma_mi(&t).ok());
    }

    #[test]
    fn indicator_uses_one_block() {
        let t = PreMeasureTable::from_fn(4, |m| if m == 0 { 0.0 } else { 1.0 }).unwrap();
        let r = method_i(&t, 0b1011).unwrap();
        assert_eq!((r.value, r.partition), (1.0, vec![0b1011]));
        assert!(verify_lemma_mi(&t).ok());
    }

    #[test]
    fn diameter_flags() {
        let x = FiniteMetricSpace::from_line("x", vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let t = PreMeasureTable::diameter(&x).unwrap();
        let f = classify(&t);
        assert!(f.monotone && !f.metric);
        assert!(verify_lemma_mi(&t).ok());
    }

    #[test]
    fn infinity_and_json() {
        let t = PreMeasureTable::from_fn(2, |m| if m == 0b11 { f64::INFINITY } else { m.count_ones() as f64 }).unwrap();
        assert_eq!(method_i(&t, 0b11).unwrap().value, 2.0);
        let back = PreMeasureTable::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
        assert!(t.to_json().to_string().contains("\"inf\""));
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(matches!(PreMeasureTable::from_fn(13, |_| 0.0), Err(Error::TooLargeForExact { .. })));
        assert!(PreMeasureTable::new(1, vec![1.0, 1.0]).is_err());
        assert!(PreMeasureTable::new(2, vec![0.0, 2.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn random_tables_pass() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..200 {
            let t = random_table(4, &mut rng);
            let rep = verify_lemma_mi(&t);
            assert!(rep.ok(), "{:?}", rep.violations);
        }
    }
}
