//! Finite metric spaces, the max-metric product and basic queries.

use std::cmp::Ordering;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Distance oracle on dense point identifiers `0..len()`.
pub trait Metric {
    fn len(&self) -> usize;

    fn dist(&self, a: usize, b: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates when the space is embedded in the real line.
    fn line(&self) -> Option<&[f64]> {
        None
    }

    fn all_points(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    /// Row-major coordinates in R^dim with the max metric.
    Embedded { dim: usize, coords: Vec<f64> },
    /// Full symmetric matrix.
    Matrix(Vec<f64>),
}

/// Immutable finite metric space.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    label: String,
    n: usize,
    repr: Repr,
}

const EXHAUSTIVE_TRIANGLE_LIMIT: usize = 64;
const SAMPLED_TRIANGLES: usize = 10_000;

impl FiniteMetricSpace {
    /// Points in R^dim under the max metric; `coords` is row-major.
    pub fn from_points(label: impl Into<String>, dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMetric("embedding dimension must be positive".into()));
        }
        if coords.len() % dim != 0 {
            return Err(Error::InvalidMetric(format!(
                "{} coordinates do not split into rows of {dim}",
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidMetric(format!("non-finite coordinate {bad}")));
        }
        let n = coords.len() / dim;
        let mut order: Vec<usize> = (0..n).collect();
        let row = |i: usize| &coords[i * dim..(i + 1) * dim];
        order.sort_by(|&a, &b| lex_cmp(row(a), row(b)));
        for w in order.windows(2) {
            if row(w[0]) == row(w[1]) {
                return Err(Error::InvalidMetric(format!(
                    "points {} and {} coincide",
                    w[0].min(w[1]),
                    w[0].max(w[1])
                )));
            }
        }
        Ok(Self { label: label.into(), n, repr: Repr::Embedded { dim, coords } })
    }

    pub fn from_line(label: impl Into<String>, xs: Vec<f64>) -> Result<Self> {
        Self::from_points(label, 1, xs)
    }

    /// Explicit distance matrix (full, row-major). Validated as a metric:
    /// the triangle inequality is checked on every triple up to 64 points
    /// and on 10,000 sampled triples above that.
    pub fn from_matrix(label: impl Into<String>, n: usize, matrix: Vec<f64>) -> Result<Self> {
        if matrix.len() != n * n {
            return Err(Error::InvalidMetric(format!(
                "matrix has {} entries, expected {}",
                matrix.len(),
                n * n
            )));
        }
        let d = |i: usize, j: usize| matrix[i * n + j];
        for i in 0..n {
            if d(i, i) != 0.0 {
                return Err(Error::InvalidMetric(format!("d({i},{i}) = {} != 0", d(i, i))));
            }
            for j in 0..i {
                let v = d(i, j);
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::InvalidMetric(format!("d({i},{j}) = {v} is not positive")));
                }
                if v != d(j, i) {
                    return Err(Error::InvalidMetric(format!("d({i},{j}) != d({j},{i})")));
                }
            }
        }
        let violates = |a: usize, b: usize, c: usize| d(a, c) > d(a, b) + d(b, c);
        if n <= EXHAUSTIVE_TRIANGLE_LIMIT {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        if violates(a, b, c) {
                            return Err(Error::InvalidMetric(format!(
                                "triangle inequality fails on ({a},{b},{c})"
                            )));
                        }
                    }
                }
            }
        } else {
            let mut rng = SplitMix64::new(n as u64);
            for _ in 0..SAMPLED_TRIANGLES {
                let (a, b, c) = (
                    rng.below(n as u64) as usize,
                    rng.below(n as u64) as usize,
                    rng.below(n as u64) as usize,
                );
                if violates(a, b, c) {
                    return Err(Error::InvalidMetric(format!(
                        "triangle inequality fails on ({a},{b},{c})"
                    )));
                }
            }
        }
        Ok(Self { label: label.into(), n, repr: Repr::Matrix(matrix) })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Embedding dimension, if the space carries coordinates.
    pub fn dim(&self) -> Option<usize> {
        match &self.repr {
            Repr::Embedded { dim, .. } => Some(*dim),
            Repr::Matrix(_) => None,
        }
    }

    pub fn coords(&self, i: usize) -> Option<&[f64]> {
        match &self.repr {
            Repr::Embedded { dim, coords } => Some(&coords[i * dim..(i + 1) * dim]),
            Repr::Matrix(_) => None,
        }
    }

    /// Restriction to the listed points, re-indexed densely in list order.
    pub fn subspace(&self, ids: &[usize]) -> Self {
        let label = format!("{}[sub]", self.label);
        match &self.repr {
            Repr::Embedded { dim, coords } => {
                let mut out = Vec::with_capacity(ids.len() * dim);
                for &i in ids {
                    out.extend_from_slice(&coords[i * dim..(i + 1) * dim]);
                }
                Self { label, n: ids.len(), repr: Repr::Embedded { dim: *dim, coords: out } }
            }
            Repr::Matrix(_) => {
                let m = ids.len();
                let mut out = vec![0.0; m * m];
                for (a, &i) in ids.iter().enumerate() {
                    for (b, &j) in ids.iter().enumerate() {
                        out[a * m + b] = self.dist(i, j);
                    }
                }
                Self { label, n: m, repr: Repr::Matrix(out) }
            }
        }
    }

    /// Writes `id,x0,...,x{m-1}` rows, floats in round-trip decimal.
    pub fn write_points_csv<W: Write>(&self, out: W) -> Result<()> {
        let Repr::Embedded { dim, coords } = &self.repr else {
            return Err(Error::InvalidMetric("space has no embedding; use the matrix format".into()));
        };
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["id".to_string()];
        header.extend((0..*dim).map(|k| format!("x{k}")));
        w.write_record(&header)?;
        for i in 0..self.n {
            let mut rec = vec![i.to_string()];
            rec.extend(coords[i * dim..(i + 1) * dim].iter().map(|x| format_float(*x)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_points_csv<R: Read>(label: impl Into<String>, input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let headers = r.headers()?.clone();
        if headers.get(0) != Some("id") || headers.len() < 2 {
            return Err(Error::Parse("point CSV header must be id,x0,...".into()));
        }
        let dim = headers.len() - 1;
        let mut coords = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let id: usize = rec[0]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad id on row {row}")))?;
            if id != row {
                return Err(Error::Parse(format!("ids must be dense and ordered; row {row} has id {id}")));
            }
            for k in 0..dim {
                coords.push(parse_float(&rec[k + 1])?);
            }
        }
        Self::from_points(label, dim, coords)
    }

    /// Lower-triangular matrix CSV: header `n=<count>`, then row `i` with
    /// `d(i,0),...,d(i,i)` (the diagonal zero included).
    pub fn write_matrix_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n={}", self.n)?;
        for i in 0..self.n {
            let row: Vec<String> = (0..=i).map(|j| format_float(self.dist(i, j))).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_matrix_csv<R: Read>(label: impl Into<String>, mut input: R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty matrix file".into()))?;
        let n: usize = header
            .trim()
            .strip_prefix("n=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad matrix header {header:?}")))?;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            let line = lines.next().ok_or_else(|| Error::Parse(format!("missing row {i}")))?;
            let vals: Vec<&str> = line.split(',').collect();
            if vals.len() != i + 1 {
                return Err(Error::Parse(format!("row {i} has {} entries, expected {}", vals.len(), i + 1)));
            }
            for (j, v) in vals.iter().enumerate() {
                let x = parse_float(v)?;
                m[i * n + j] = x;
                m[j * n + i] = x;
            }
        }
        Self::from_matrix(label, n, m)
    }
}

impl Metric for FiniteMetricSpace {
    fn len(&self) -> usize {
        self.n
    }

    fn dist(&self, a: usize, b: usize) -> f64 {
        match &self.repr {
            Repr::Embedded { dim, coords } => {
                let (x, y) = (&coords[a * dim..(a + 1) * dim], &coords[b * dim..(b + 1) * dim]);
                x.iter().zip(y).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()))
            }
            Repr::Matrix(m) => m[a * self.n + b],
        }
    }

    fn line(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Embedded { dim: 1, coords } => Some(coords),
            _ => None,
        }
    }
}

/// Cartesian product with the maximum metric. Point `(i, j)` has the
/// identifier `i * right.len() + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductSpace {
    left: FiniteMetricSpace,
    right: FiniteMetricSpace,
}

pub fn product(left: &FiniteMetricSpace, right: &FiniteMetricSpace) -> ProductSpace {
    ProductSpace { left: left.clone(), right: right.clone() }
}

impl ProductSpace {
    pub fn left(&self) -> &FiniteMetricSpace {
        &self.left
    }

    pub fn right(&self) -> &FiniteMetricSpace {
        &self.right
    }

    pub fn id(&self, i: usize, j: usize) -> usize {
        i * self.right.len() + j
    }

    pub fn pair(&self, id: usize) -> (usize, usize) {
        (id / self.right.len(), id % self.right.len())
    }

    /// Materializes the product. Embedded factors give an embedded product
    /// (concatenated coordinates reproduce the max metric exactly).
    pub fn to_space(&self) -> FiniteMetricSpace {
        let label = format!("{}x{}", self.left.label, self.right.label);
        let n = self.len();
        match (&self.left.repr, &self.right.repr) {
            (Repr::Embedded { dim: dl, coords: cl }, Repr::Embedded { dim: dr, coords: cr }) => {
                let dim = dl + dr;
                let mut coords = Vec::with_capacity(n * dim);
                for i in 0..self.left.len() {
                    for j in 0..self.right.len() {
                        coords.extend_from_slice(&cl[i * dl..(i + 1) * dl]);
                        coords.extend_from_slice(&cr[j * dr..(j + 1) * dr]);
                    }
                }
                FiniteMetricSpace { label, n, repr: Repr::Embedded { dim, coords } }
            }
            _ => {
                let mut m = vec![0.0; n * n];
                for a in 0..n {
                    for b in 0..n {
                        m[a * n + b] = self.dist(a, b);
                    }
                }
                FiniteMetricSpace { label, n, repr: Repr::Matrix(m) }
            }
        }
    }
}

impl Metric for ProductSpace {
    fn len(&self) -> usize {
        self.left.len() * self.right.len()
    }

    fn dist(&self, a: usize, b: usize) -> f64 {
        let (i, j) = self.pair(a);
        let (k, l) = self.pair(b);
        self.left.dist(i, k).max(self.right.dist(j, l))
    }
}

/// Cross section `{y : (x, y) ∈ E}` of a set of product points.
pub fn section(space: &ProductSpace, set: &[usize], x: usize) -> Vec<usize> {
    let mut out: Vec<usize> = set
        .iter()
        .map(|&id| space.pair(id))
        .filter(|&(i, _)| i == x)
        .map(|(_, j)| j)
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Largest pairwise distance; zero for singletons.
pub fn diam<M: Metric + ?Sized>(space: &M, set: &[usize]) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    if let Some(xs) = space.line() {
        let (lo, hi) = set.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            (lo.min(xs[i]), hi.max(xs[i]))
        });
        return Ok(hi - lo);
    }
    let mut best = 0.0f64;
    for (a, &i) in set.iter().enumerate() {
        for &j in &set[a + 1..] {
            best = best.max(space.dist(i, j));
        }
    }
    Ok(best)
}

/// Round-trip decimal rendering used by every file format.
pub fn format_float(x: f64) -> String {
    format!("{x:?}")
}

pub fn parse_float(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad float {s:?}")))
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> FiniteMetricSpace {
        FiniteMetricSpace::from_line("t", xs.to_vec()).unwrap()
    }

    #[test]
    fn unit_square_corners() {
        let p = product(&line(&[0.0, 1.0]), &line(&[0.0, 1.0]));
        assert_eq!(p.len(), 4);
        assert_eq!(p.dist(p.id(0, 0), p.id(1, 1)), 1.0);
        let corners = p.to_space();
        assert_eq!(diam(&corners, &corners.all_points()).unwrap(), 1.0);
    }

    #[test]
    fn product_with_point_is_isometric() {
        let x = line(&[0.0, 0.3, 2.5, 7.0]);
        let p = product(&x, &line(&[5.0]));
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(p.dist(p.id(a, 0), p.id(b, 0)), x.dist(a, b));
            }
        }
    }

    #[test]
    fn product_max_formula() {
        let p = product(&line(&[0.0, 1.0, 3.0]), &line(&[0.0, 2.0]));
        // (1,0) and (3,2)
        assert_eq!(p.dist(p.id(1, 0), p.id(2, 1)), 2.0);
    }

    #[test]
    fn sections() {
        let p = product(&line(&[0.0, 1.0]), &line(&[0.0, 2.0]));
        assert_eq!(section(&p, &p.all_points(), 1), vec![0, 1]);
        let e = [p.id(0, 0), p.id(0, 1), p.id(1, 0)];
        assert_eq!(section(&p, &e, 0), vec![0, 1]);
        let sq = product(&line(&[0.0, 1.0]), &line(&[0.0, 1.0]));
        let diagonal = [sq.id(0, 0), sq.id(1, 1)];
        assert_eq!(section(&sq, &diagonal, 0), vec![0]);
    }

    #[test]
    fn diam_cases() {
        let x = line(&[0.0, 1.0, 2.0]);
        assert_eq!(diam(&x, &[1]).unwrap(), 0.0);
        assert_eq!(diam(&x, &[0, 1, 2]).unwrap(), 2.0);
        assert!(matches!(diam(&x, &[]), Err(Error::EmptySet)));
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(FiniteMetricSpace::from_matrix("m", 2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
        assert!(FiniteMetricSpace::from_matrix("m", 2, vec![0.0, 0.0, 0.0, 0.0]).is_err());
        let bad = vec![0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0];
        assert!(matches!(FiniteMetricSpace::from_matrix("m", 3, bad), Err(Error::InvalidMetric(_))));
        assert!(FiniteMetricSpace::from_line("d", vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn csv_round_trips() {
        let x = FiniteMetricSpace::from_points("p", 2, vec![0.1, 1e-300, 3.0, -2.5]).unwrap();
        let mut buf = Vec::new();
        x.write_points_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("id,x0,x1\n"));
        let y = FiniteMetricSpace::read_points_csv("p", buf.as_slice()).unwrap();
        assert_eq!(x, y);

        let mut buf = Vec::new();
        x.write_matrix_csv(&mut buf).unwrap();
        let z = FiniteMetricSpace::read_matrix_csv("p", buf.as_slice()).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert_eq!(z.dist(a, b), x.dist(a, b));
            }
        }
    }
}
