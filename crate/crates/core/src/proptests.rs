use proptest::prelude::*;

use crate::dimension::{ScalingReport, ScalingRow, Source};
use crate::fractal::{build_z, LogSequenceSet};
use crate::gauge::Generator;
use crate::graph::{max_weight_independent_set, Graph};
use crate::metric::{product, FiniteMetricSpace, Metric};
use crate::packing::{capacity_count, covering_count, line_product_capacity, Caps};
use crate::premeasure::{random_table, verify_lemma_mi};
use crate::rng::SplitMix64;

fn cloud(dim: usize, max: usize) -> impl Strategy<Value = FiniteMetricSpace> {
    prop::collection::btree_set(prop::collection::vec(0u32..64, dim), 1..=max).prop_map(move |pts| {
        let coords = pts.into_iter().flatten().map(|c| c as f64 / 64.0).collect();
        FiniteMetricSpace::from_points("cloud", dim, coords).unwrap()
    })
}

fn line(max: usize) -> impl Strategy<Value = FiniteMetricSpace> {
    cloud(1, max)
}

fn brute_mwis(g: &Graph, w: &[f64]) -> f64 {
    let n = g.len();
    (0u32..1 << n)
        .filter(|&mask| (0..n).all(|i| mask >> i & 1 == 0 || (i + 1..n).all(|j| mask >> j & 1 == 0 || !g.has_edge(i, j))))
        .map(|mask| (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| w[i]).sum())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mwis_matches_brute_force(n in 1usize..=12, edges in prop::collection::vec((0usize..12, 0usize..12), 0..40), w in prop::collection::vec(1u32..20, 12)) {
        let mut g = Graph::new(n);
        for (a, b) in edges {
            if a < n && b < n && a != b {
                g.add_edge(a, b);
            }
        }
        let weights: Vec<f64> = w[..n].iter().map(|&x| x as f64).collect();
        let (value, set) = max_weight_independent_set(&g, &weights);
        prop_assert_eq!(value, brute_mwis(&g, &weights));
        prop_assert_eq!(set.iter().map(|&i| weights[i]).sum::<f64>(), value);
        for (k, &a) in set.iter().enumerate() {
            for &b in &set[k + 1..] {
                prop_assert!(!g.has_edge(a, b));
            }
        }
    }

    #[test]
    fn sandwich_and_monotonicity(x in cloud(2, 14), k in 1i32..7) {
        let all = x.all_points();
        let delta = 0.5f64.powi(k);
        let c = capacity_count(&x, &all, delta, Caps::default()).unwrap();
        let n1 = covering_count(&x, &all, delta, Caps::default()).unwrap();
        let n2 = covering_count(&x, &all, 2.0 * delta, Caps::default()).unwrap();
        prop_assert!(n2 <= c && c <= n1);
        prop_assert!(capacity_count(&x, &all, 2.0 * delta, Caps::default()).unwrap() <= c);
        prop_assert!(c <= x.len());
    }

    #[test]
    fn line_products_multiply(x in line(6), y in line(6), k in 1i32..7) {
        let delta = 0.5f64.powi(k);
        let cx = capacity_count(&x, &x.all_points(), delta, Caps::default()).unwrap();
        let cy = capacity_count(&y, &y.all_points(), delta, Caps::default()).unwrap();
        let xy = product(&x, &y);
        let exact = capacity_count(&xy, &xy.all_points(), delta, Caps::default()).unwrap();
        prop_assert_eq!(exact, cx * cy);
        prop_assert_eq!(line_product_capacity(&x, &y, delta).unwrap(), cx * cy);
    }

    #[test]
    fn point_csv_round_trip(x in cloud(3, 20)) {
        let mut buf = Vec::new();
        x.write_points_csv(&mut buf).unwrap();
        let back = FiniteMetricSpace::read_points_csv("cloud", buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), x.len());
        for i in 0..x.len() {
            prop_assert_eq!(back.coords(i), x.coords(i));
        }
    }

    #[test]
    fn scaling_csv_round_trip(steps in prop::collection::vec(0u64..6, 1..12)) {
        let mut count = 1u64;
        let rows: Vec<ScalingRow> = steps
            .iter()
            .enumerate()
            .map(|(k, &s)| {
                count += s;
                ScalingRow::new(0.5f64.powi(k as i32 + 1), count, Source::Exact).unwrap()
            })
            .collect();
        let report = ScalingReport::new("r", rows).unwrap();
        let text = report.to_csv_string().unwrap();
        let back = ScalingReport::read_csv("r", text.as_bytes()).unwrap();
        prop_assert_eq!(back.to_csv_string().unwrap(), text);
    }

    #[test]
    fn method_i_lemma_holds(seed in any::<u64>(), n in 1usize..=6) {
        let t = random_table(n, &mut SplitMix64::new(seed));
        prop_assert!(verify_lemma_mi(&t).ok());
    }

    #[test]
    fn log_set_covering_is_monotone(cutoff in 2u64..5000, k in 1i32..14) {
        let set = LogSequenceSet::new(cutoff).unwrap();
        let a = set.covering(0.5f64.powi(k)).unwrap();
        let b = set.covering(0.5f64.powi(k + 1)).unwrap();
        prop_assert!(a.is_exact() && b.is_exact());
        prop_assert!(a.lower <= b.lower && b.lower <= cutoff);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn z_invariants_hold(s in 0.3f64..0.95, m in 1u32..=2) {
        prop_assume!(s < m as f64);
        let z = build_z(s, m, Generator::Dyadic, 4).unwrap();
        let report = z.check_invariants();
        prop_assert!(report.ok(), "s={} m={}: {}", s, m, report.summary());
    }
}
