//! Bitset graphs with exact maximum-weight independent set and exact
//! chromatic-number solvers. These back the capacity, covering and
//! weak-packing optimizers.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bits {
    words: Vec<u64>,
}

impl Bits {
    pub fn new(n: usize) -> Self {
        Self { words: vec![0; n.div_ceil(64)] }
    }

    pub fn full(n: usize) -> Self {
        let mut b = Self::new(n);
        for i in 0..n {
            b.insert(i);
        }
        b
    }

    pub fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        self.words[i / 64] &= !(1 << (i % 64));
    }

    pub fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn first(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(k, w)| k * 64 + w.trailing_zeros() as usize)
    }

    pub fn intersect_with(&mut self, other: &Bits) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn difference_with(&mut self, other: &Bits) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    pub fn intersection_len(&self, other: &Bits) -> usize {
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(k * 64 + t)
                }
            })
        })
    }
}

/// Simple undirected graph on `0..n`.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    adj: Vec<Bits>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Self { n, adj: vec![Bits::new(n); n] }
    }

    /// Graph with an edge `{i, j}` exactly when `edge(i, j)` holds (`i < j`).
    pub fn from_fn(n: usize, mut edge: impl FnMut(usize, usize) -> bool) -> Self {
        let mut g = Self::new(n);
        for i in 0..n {
            for j in i + 1..n {
                if edge(i, j) {
                    g.add_edge(i, j);
                }
            }
        }
        g
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn add_edge(&mut self, i: usize, j: usize) {
        if i != j {
            self.adj[i].insert(j);
            self.adj[j].insert(i);
        }
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i].contains(j)
    }

    pub fn neighbors(&self, i: usize) -> &Bits {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn complement(&self) -> Graph {
        Graph::from_fn(self.n, |i, j| !self.has_edge(i, j))
    }

    pub fn is_independent(&self, set: &[usize]) -> bool {
        set.iter().enumerate().all(|(a, &i)| set[a + 1..].iter().all(|&j| i != j && !self.has_edge(i, j)))
    }

    /// Connected components, each sorted, ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut k = 0;
            while k < comp.len() {
                let v = comp[k];
                k += 1;
                for u in self.adj[v].iter() {
                    if !seen[u] {
                        seen[u] = true;
                        comp.push(u);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Induced subgraph on `vertices` (relabelled in the given order).
    pub fn induced(&self, vertices: &[usize]) -> Graph {
        let mut g = Graph::new(vertices.len());
        for (a, &i) in vertices.iter().enumerate() {
            for (b, &j) in vertices.iter().enumerate().skip(a + 1) {
                if self.has_edge(i, j) {
                    g.add_edge(a, b);
                }
            }
        }
        g
    }
}

/// Greedy maximal independent set scanning vertices in the given order.
pub fn greedy_independent_set(graph: &Graph, order: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let mut blocked = Bits::new(graph.len());
    let mut out = Vec::new();
    for v in order {
        if !blocked.contains(v) {
            out.push(v);
            blocked.insert(v);
            for u in graph.neighbors(v).iter() {
                blocked.insert(u);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Exact maximum-weight independent set. Weights must be nonnegative and
/// finite. Returns the optimum value and a sorted witness.
pub fn max_weight_independent_set(graph: &Graph, weights: &[f64]) -> (f64, Vec<usize>) {
    assert_eq!(weights.len(), graph.len());
    let mut total = 0.0;
    let mut witness = Vec::new();
    for comp in graph.components() {
        let (v, set) = solve_component(graph, weights, &comp);
        total += v;
        witness.extend(set);
    }
    witness.sort_unstable();
    (total, witness)
}

pub fn max_independent_set(graph: &Graph) -> Vec<usize> {
    max_weight_independent_set(graph, &vec![1.0; graph.len()]).1
}

/// Lexicographically smallest maximum-cardinality independent set.
pub fn canonical_max_independent_set(graph: &Graph) -> Vec<usize> {
    let target = max_independent_set(graph).len();
    let mut chosen = Vec::with_capacity(target);
    let mut available = Bits::full(graph.len());
    for v in 0..graph.len() {
        if chosen.len() == target {
            break;
        }
        if !available.contains(v) {
            continue;
        }
        let mut rest = available.clone();
        rest.remove(v);
        rest.difference_with(graph.neighbors(v));
        let rest_ids: Vec<usize> = rest.iter().filter(|&u| u > v).collect();
        let sub = graph.induced(&rest_ids);
        if 1 + chosen.len() + max_independent_set(&sub).len() == target {
            chosen.push(v);
            available = rest;
        } else {
            available.remove(v);
        }
    }
    chosen
}

struct MwisSearch<'a> {
    graph: Graph,
    weights: Vec<f64>,
    labels: &'a [usize],
}

/// Relative slack on pruning so float summation order never cuts an optimum.
const PRUNE_SLACK: f64 = 1e-12;

fn solve_component(graph: &Graph, weights: &[f64], comp: &[usize]) -> (f64, Vec<usize>) {
    if comp.len() == 1 {
        return (weights[comp[0]], comp.to_vec());
    }
    // Heavier and higher-degree vertices first: the clique-partition bound
    // then seeds each clique with its heaviest member.
    let mut order = comp.to_vec();
    order.sort_by(|&a, &b| {
        weights[b]
            .total_cmp(&weights[a])
            .then(graph.degree(b).cmp(&graph.degree(a)))
            .then(a.cmp(&b))
    });
    let sub = graph.induced(&order);
    let sub_weights: Vec<f64> = order.iter().map(|&v| weights[v]).collect();
    let greedy = {
        let set = greedy_independent_set(&sub, 0..sub.len());
        let w: f64 = set.iter().map(|&v| sub_weights[v]).sum();
        (w, set)
    };
    let search = MwisSearch { graph: sub, weights: sub_weights, labels: &order };
    let all = Bits::full(order.len());
    let (best, best_set) = search.solve(all, greedy.0 * (1.0 - 1e-9)).unwrap_or(greedy);
    let mut set: Vec<usize> = best_set.iter().map(|&v| search.labels[v]).collect();
    set.sort_unstable();
    (best, set)
}

impl MwisSearch<'_> {
    fn bound(&self, candidates: &Bits) -> f64 {
        let mut rest = candidates.clone();
        let mut total = 0.0;
        while let Some(v) = rest.first() {
            rest.remove(v);
            let mut heaviest = self.weights[v];
            let mut pool = rest.clone();
            pool.intersect_with(self.graph.neighbors(v));
            while let Some(u) = pool.first() {
                pool.remove(u);
                rest.remove(u);
                heaviest = heaviest.max(self.weights[u]);
                pool.intersect_with(self.graph.neighbors(u));
            }
            total += heaviest;
        }
        total
    }

    fn split(&self, candidates: &Bits) -> Vec<Bits> {
        let mut rest = candidates.clone();
        let mut out = Vec::new();
        while let Some(s) = rest.first() {
            let mut comp = Bits { words: vec![0; candidates.words.len()] };
            comp.insert(s);
            rest.remove(s);
            let mut frontier = vec![s];
            while let Some(v) = frontier.pop() {
                let mut next = rest.clone();
                next.intersect_with(self.graph.neighbors(v));
                for u in next.iter() {
                    rest.remove(u);
                    comp.insert(u);
                    frontier.push(u);
                }
            }
            out.push(comp);
        }
        out
    }

    fn prunes(value: f64, lower: f64) -> bool {
        value <= lower - PRUNE_SLACK * lower.abs()
    }

    /// Optimum over `candidates` if it beats `lower`, with a witness.
    fn solve(&self, mut candidates: Bits, lower: f64) -> Option<(f64, Vec<usize>)> {
        // Vertices isolated within the candidate set are always taken.
        let mut value = 0.0;
        let mut taken = Vec::new();
        for v in candidates.clone().iter() {
            if candidates.intersection_len(self.graph.neighbors(v)) == 0 {
                candidates.remove(v);
                value += self.weights[v];
                taken.push(v);
            }
        }
        if candidates.is_empty() {
            return (value > lower).then_some((value, taken));
        }
        let comps = self.split(&candidates);
        let bounds: Vec<f64> = comps.iter().map(|c| self.bound(c)).collect();
        let mut remaining: f64 = bounds.iter().sum();
        if Self::prunes(value + remaining, lower) {
            return None;
        }
        if comps.len() > 1 {
            for (comp, b) in comps.into_iter().zip(bounds) {
                remaining -= b;
                let (v, set) = self.solve(comp, lower - value - remaining)?;
                value += v;
                taken.extend(set);
            }
            return (value > lower).then_some((value, taken));
        }
        let v = candidates
            .iter()
            .max_by(|&a, &b| {
                let da = candidates.intersection_len(self.graph.neighbors(a));
                let db = candidates.intersection_len(self.graph.neighbors(b));
                da.cmp(&db).then(b.cmp(&a))
            })
            .expect("nonempty");
        let mut with = candidates.clone();
        with.remove(v);
        with.difference_with(self.graph.neighbors(v));
        let mut floor = lower - value;
        let mut best = None;
        if let Some((w, mut set)) = self.solve(with, floor - self.weights[v]) {
            set.push(v);
            floor = w + self.weights[v];
            best = Some((floor, set));
        }
        candidates.remove(v);
        if let Some(found) = self.solve(candidates, floor) {
            best = Some(found);
        }
        best.map(|(w, mut set)| {
            set.extend(taken);
            (w + value, set)
        })
    }
}

/// DSATUR greedy coloring; returns `(colors used, color per vertex)`.
pub fn dsatur_greedy(graph: &Graph) -> (usize, Vec<usize>) {
    let n = graph.len();
    let mut color = vec![usize::MAX; n];
    let mut seen: Vec<Bits> = vec![Bits::new(n.max(1)); n];
    let mut used = 0;
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| color[v] == usize::MAX)
            .max_by(|&a, &b| {
                seen[a].len().cmp(&seen[b].len()).then(graph.degree(a).cmp(&graph.degree(b))).then(b.cmp(&a))
            })
            .expect("uncolored vertex");
        let c = (0..).find(|&c| !seen[v].contains(c)).expect("free color");
        color[v] = c;
        used = used.max(c + 1);
        for u in graph.neighbors(v).iter() {
            seen[u].insert(c);
        }
    }
    (used, color)
}

/// Exact chromatic number by DSATUR branch and bound, seeded with a clique
/// lower bound and the greedy upper bound. Returns the number of colors and
/// an optimal coloring.
pub fn chromatic_number(graph: &Graph) -> (usize, Vec<usize>) {
    let n = graph.len();
    if n == 0 {
        return (0, Vec::new());
    }
    let mut colors = vec![0; n];
    let mut best = 0;
    for comp in graph.components() {
        let sub = graph.induced(&comp);
        let (k, col) = chromatic_component(&sub);
        best = best.max(k);
        for (a, &v) in comp.iter().enumerate() {
            colors[v] = col[a];
        }
    }
    (best, colors)
}

fn chromatic_component(graph: &Graph) -> (usize, Vec<usize>) {
    let (upper, greedy) = dsatur_greedy(graph);
    let clique = max_independent_set(&graph.complement());
    let lower = clique.len();
    if lower == upper {
        return (upper, greedy);
    }
    let n = graph.len();
    let mut search = ColorSearch {
        graph,
        color: vec![usize::MAX; n],
        counts: vec![vec![0u32; n]; n],
        sat: vec![0; n],
        best: upper,
        best_coloring: greedy,
        lower,
    };
    // Pre-coloring the clique is sound: its vertices need distinct colors
    // and colors are interchangeable.
    for (c, &v) in clique.iter().enumerate() {
        search.assign(v, c);
    }
    search.run(clique.len(), lower);
    (search.best, search.best_coloring)
}

struct ColorSearch<'a> {
    graph: &'a Graph,
    color: Vec<usize>,
    counts: Vec<Vec<u32>>,
    sat: Vec<usize>,
    best: usize,
    best_coloring: Vec<usize>,
    lower: usize,
}

impl ColorSearch<'_> {
    fn assign(&mut self, v: usize, c: usize) {
        self.color[v] = c;
        for u in self.graph.neighbors(v).iter() {
            if self.counts[u][c] == 0 {
                self.sat[u] += 1;
            }
            self.counts[u][c] += 1;
        }
    }

    fn unassign(&mut self, v: usize, c: usize) {
        self.color[v] = usize::MAX;
        for u in self.graph.neighbors(v).iter() {
            self.counts[u][c] -= 1;
            if self.counts[u][c] == 0 {
                self.sat[u] -= 1;
            }
        }
    }

    fn run(&mut self, colored: usize, used: usize) {
        if self.best == self.lower {
            return;
        }
        let n = self.graph.len();
        if colored == n {
            if used < self.best {
                self.best = used;
                self.best_coloring = self.color.clone();
            }
            return;
        }
        let v = (0..n)
            .filter(|&v| self.color[v] == usize::MAX)
            .max_by(|&a, &b| {
                self.sat[a].cmp(&self.sat[b]).then(self.graph.degree(a).cmp(&self.graph.degree(b))).then(b.cmp(&a))
            })
            .expect("uncolored vertex");
        for c in 0..used {
            if self.counts[v][c] == 0 {
                self.assign(v, c);
                self.run(colored + 1, used);
                self.unassign(v, c);
                if self.best == self.lower {
                    return;
                }
            }
        }
        if used + 1 < self.best {
            self.assign(v, used);
            self.run(colored + 1, used + 1);
            self.unassign(v, used);
        }
    }
}
