//! Ground spaces `(X, d)`: explicit finite metric spaces and rational grids on
//! a closed interval with the standard metric.

use std::fmt;
use std::hash::Hash;

use serde::Serialize;
use thiserror::Error;

use crate::rational::Rational;

/// Largest distance power any coefficient family may use.
pub const MAX_DEGREE: usize = 32;

/// A metric space whose points can be scanned exhaustively.
///
/// For finite spaces the scan covers every point; for interval grids it covers
/// the grid, while images under a map may fall between grid points.
pub trait MetricSpace: Sync {
    type Point: Clone + Eq + Hash + fmt::Debug + Send + Sync;

    fn dist(&self, p: &Self::Point, q: &Self::Point) -> Rational;

    /// Points visited by exhaustive pair scans, in a fixed order.
    fn scan_points(&self) -> Vec<Self::Point>;

    /// Human-readable name of a point.
    fn label(&self, p: &Self::Point) -> String;

    /// True when scans only sample a continuum (results are grid evidence).
    fn is_grid(&self) -> bool;
}

/// `d(p, q)^i`, with `d^0 = 1` for every pair including `p = q`.
pub fn power_distance<S: MetricSpace>(space: &S, i: usize, p: &S::Point, q: &S::Point) -> Rational {
    debug_assert!(i <= MAX_DEGREE, "distance power {i} exceeds MAX_DEGREE");
    if i == 0 {
        return Rational::one();
    }
    space.dist(p, q).pow(i as u32)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("distance matrix row {row} has {len} entries, expected {expected}")]
    NonSquare { row: usize, len: usize, expected: usize },
    #[error("distance matrix has {rows} rows but {labels} point labels were given")]
    LabelCount { rows: usize, labels: usize },
    #[error("negative distance {value} at ({p}, {q})")]
    NegativeEntry { p: usize, q: usize, value: Rational },
    #[error("duplicate point label {0:?}")]
    DuplicateLabel(String),
    #[error("a space needs at least one point")]
    Empty,
    #[error("interval bounds must satisfy lo < hi, got [{lo}, {hi}]")]
    IntervalBounds { lo: Rational, hi: Rational },
    #[error("grid needs at least 2 points, got {0}")]
    GridCount(usize),
    #[error("not a metric: {0}")]
    Violation(MetricViolation),
}

/// A failed metric axiom with the offending indices and the compared values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MetricViolation {
    NonzeroDiagonal { point: usize, value: Rational },
    Asymmetry { p: usize, q: usize, forward: Rational, backward: Rational },
    IndistinctPoints { p: usize, q: usize },
    /// `d(from, to) > d(from, via) + d(via, to)`.
    Triangle { from: usize, via: usize, to: usize, direct: Rational, detour: Rational },
}

impl MetricViolation {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::NonzeroDiagonal { .. } => "nonzero-diagonal",
            Self::Asymmetry { .. } => "asymmetry",
            Self::IndistinctPoints { .. } => "indistinct-points",
            Self::Triangle { .. } => "triangle",
        }
    }

    /// Describe the violation using point labels.
    pub fn describe(&self, labels: &[String]) -> String {
        let l = |i: &usize| labels.get(*i).cloned().unwrap_or_else(|| format!("#{i}"));
        match self {
            Self::NonzeroDiagonal { point, value } => {
                format!("d({0}, {0}) = {value} != 0", l(point))
            }
            Self::Asymmetry { p, q, forward, backward } => {
                format!("d({}, {}) = {forward} != {backward} = d({}, {})", l(p), l(q), l(q), l(p))
            }
            Self::IndistinctPoints { p, q } => {
                format!("d({}, {}) = 0 for distinct points", l(p), l(q))
            }
            Self::Triangle { from, via, to, direct, detour } => format!(
                "triangle ({}, {}, {}): d({}, {}) = {direct} > {detour} = d({}, {}) + d({}, {})",
                l(from),
                l(via),
                l(to),
                l(from),
                l(to),
                l(from),
                l(via),
                l(via),
                l(to)
            ),
        }
    }
}

impl fmt::Display for MetricViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe(&[]))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricVerdict {
    Valid,
    Invalid(MetricViolation),
}

impl MetricVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, MetricVerdict::Valid)
    }
}

/// Check the metric axioms on a square matrix.
///
/// Axioms are checked in the order zero diagonal, symmetry, identity of
/// indiscernibles, triangle inequality; each scan is lexicographic over its
/// index tuple, so the first violation reported is deterministic.
pub fn validate_metric(matrix: &[Vec<Rational>], labels: &[String]) -> Result<MetricVerdict, MetricError> {
    let n = matrix.len();
    if labels.len() != n {
        return Err(MetricError::LabelCount { rows: n, labels: labels.len() });
    }
    for (row, entries) in matrix.iter().enumerate() {
        if entries.len() != n {
            return Err(MetricError::NonSquare { row, len: entries.len(), expected: n });
        }
    }
    for (p, row) in matrix.iter().enumerate() {
        for (q, value) in row.iter().enumerate() {
            if value.is_negative() {
                return Err(MetricError::NegativeEntry { p, q, value: value.clone() });
            }
        }
    }
    Ok(match first_violation(matrix) {
        None => MetricVerdict::Valid,
        Some(v) => MetricVerdict::Invalid(v),
    })
}

fn first_violation(m: &[Vec<Rational>]) -> Option<MetricViolation> {
    let n = m.len();
    for p in 0..n {
        if !m[p][p].is_zero() {
            return Some(MetricViolation::NonzeroDiagonal { point: p, value: m[p][p].clone() });
        }
    }
    for p in 0..n {
        for q in 0..n {
            if m[p][q] != m[q][p] {
                return Some(MetricViolation::Asymmetry {
                    p,
                    q,
                    forward: m[p][q].clone(),
                    backward: m[q][p].clone(),
                });
            }
        }
    }
    for p in 0..n {
        for q in 0..n {
            if p != q && m[p][q].is_zero() {
                return Some(MetricViolation::IndistinctPoints { p, q });
            }
        }
    }
    for from in 0..n {
        for via in 0..n {
            for to in 0..n {
                let detour = &m[from][via] + &m[via][to];
                if m[from][to] > detour {
                    return Some(MetricViolation::Triangle {
                        from,
                        via,
                        to,
                        direct: m[from][to].clone(),
                        detour,
                    });
                }
            }
        }
    }
    None
}

/// A finite metric space with labelled points; points are addressed by index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    dist: Vec<Vec<Rational>>,
}

impl FiniteMetricSpace {
    pub fn new(labels: Vec<String>, dist: Vec<Vec<Rational>>) -> Result<Self, MetricError> {
        if labels.is_empty() {
            return Err(MetricError::Empty);
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(MetricError::DuplicateLabel(l.clone()));
            }
        }
        match validate_metric(&dist, &labels)? {
            MetricVerdict::Valid => Ok(Self { labels, dist }),
            MetricVerdict::Invalid(v) => Err(MetricError::Violation(v)),
        }
    }

    /// The discrete metric: distance 1 between distinct points.
    pub fn discrete<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self, MetricError> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let n = labels.len();
        let dist = (0..n)
            .map(|p| (0..n).map(|q| if p == q { Rational::zero() } else { Rational::one() }).collect())
            .collect();
        Self::new(labels, dist)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &[Vec<Rational>] {
        &self.dist
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

impl MetricSpace for FiniteMetricSpace {
    type Point = usize;

    fn dist(&self, p: &usize, q: &usize) -> Rational {
        self.dist[*p][*q].clone()
    }

    fn scan_points(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }

    fn label(&self, p: &usize) -> String {
        self.labels[*p].clone()
    }

    fn is_grid(&self) -> bool {
        false
    }
}

/// `[lo, hi]` with `d(x, y) = |x - y|`, sampled on `grid_count` equally spaced
/// rational points (both endpoints included).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalGridSpace {
    lo: Rational,
    hi: Rational,
    grid_count: usize,
    step: Rational,
}

impl IntervalGridSpace {
    pub fn new(lo: Rational, hi: Rational, grid_count: usize) -> Result<Self, MetricError> {
        if lo >= hi {
            return Err(MetricError::IntervalBounds { lo, hi });
        }
        if grid_count < 2 {
            return Err(MetricError::GridCount(grid_count));
        }
        let step = (&hi - &lo) / Rational::from(grid_count - 1);
        Ok(Self { lo, hi, grid_count, step })
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn grid_count(&self) -> usize {
        self.grid_count
    }

    /// The `t`-th grid point `lo + t * (hi - lo) / (grid_count - 1)`.
    pub fn point(&self, t: usize) -> Rational {
        assert!(t < self.grid_count, "grid index {t} out of range");
        if t == self.grid_count - 1 {
            return self.hi.clone();
        }
        &self.lo + &(&self.step * &Rational::from(t))
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    /// Index of `x` if it is a grid point.
    pub fn grid_index(&self, x: &Rational) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let t = (x - &self.lo) / &self.step;
        if !t.is_integer() {
            return None;
        }
        t.numer_string().parse().ok()
    }
}

impl MetricSpace for IntervalGridSpace {
    type Point = Rational;

    fn dist(&self, p: &Rational, q: &Rational) -> Rational {
        (p - q).abs()
    }

    fn scan_points(&self) -> Vec<Rational> {
        (0..self.grid_count).map(|t| self.point(t)).collect()
    }

    fn label(&self, p: &Rational) -> String {
        p.to_string()
    }

    fn is_grid(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn labels(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("x{i}")).collect()
    }

    fn ex27_space() -> FiniteMetricSpace {
        FiniteMetricSpace::discrete(labels(4)).unwrap()
    }

    #[test]
    fn discrete_metric_is_valid() {
        let s = ex27_space();
        assert_eq!(validate_metric(s.matrix(), s.labels()).unwrap(), MetricVerdict::Valid);
    }

    #[test]
    fn single_point_space_is_valid() {
        let m = vec![vec![Rational::zero()]];
        assert!(validate_metric(&m, &labels(1)).unwrap().is_valid());
    }

    #[test]
    fn distance_plus_a0_is_not_a_metric() {
        // D = d + a0 with the symmetric a0 table of the four-point example
        let d = [["0", "4", "3", "2"], ["4", "0", "4", "7"], ["3", "4", "0", "3"], ["2", "7", "3", "0"]];
        let m: Vec<Vec<Rational>> = d.iter().map(|r| r.iter().map(|s| q(s)).collect()).collect();
        match validate_metric(&m, &labels(4)).unwrap() {
            MetricVerdict::Invalid(MetricViolation::Triangle { from, via, to, direct, detour }) => {
                assert_eq!((from, via, to), (1, 0, 3));
                assert_eq!(direct, Rational::from(7));
                assert_eq!(detour, Rational::from(6));
            }
            other => panic!("expected triangle violation, got {other:?}"),
        }
    }

    #[test]
    fn input_errors() {
        let m = vec![vec![Rational::zero(), Rational::one()], vec![Rational::one()]];
        assert!(matches!(validate_metric(&m, &labels(2)), Err(MetricError::NonSquare { row: 1, .. })));
        let m = vec![vec![Rational::zero(), q("-1")], vec![q("-1"), Rational::zero()]];
        assert!(matches!(validate_metric(&m, &labels(2)), Err(MetricError::NegativeEntry { .. })));
    }

    #[test]
    fn axiom_violations_in_scan_order() {
        let z = Rational::zero;
        let m = vec![vec![Rational::one(), z()], vec![z(), z()]];
        assert_eq!(
            validate_metric(&m, &labels(2)).unwrap(),
            MetricVerdict::Invalid(MetricViolation::NonzeroDiagonal { point: 0, value: Rational::one() })
        );
        let m = vec![vec![z(), Rational::one()], vec![q("2"), z()]];
        assert!(matches!(
            validate_metric(&m, &labels(2)).unwrap(),
            MetricVerdict::Invalid(MetricViolation::Asymmetry { p: 0, q: 1, .. })
        ));
        let m = vec![vec![z(), z()], vec![z(), z()]];
        assert_eq!(
            validate_metric(&m, &labels(2)).unwrap(),
            MetricVerdict::Invalid(MetricViolation::IndistinctPoints { p: 0, q: 1 })
        );
    }

    #[test]
    fn power_distance_convention() {
        let s = ex27_space();
        assert_eq!(power_distance(&s, 0, &0, &0), Rational::one());
        assert_eq!(power_distance(&s, 2, &0, &1), Rational::one());
        assert_eq!(power_distance(&s, 3, &0, &0), Rational::zero());
        let g = IntervalGridSpace::new(Rational::zero(), Rational::one(), 5).unwrap();
        assert_eq!(power_distance(&g, 1, &q("1/4"), &Rational::zero()), q("1/4"));
    }

    #[test]
    fn grid_points_and_lookup() {
        let g = IntervalGridSpace::new(Rational::zero(), Rational::one(), 1001).unwrap();
        assert_eq!(g.point(0), Rational::zero());
        assert_eq!(g.point(1000), Rational::one());
        assert_eq!(g.point(250), q("1/4"));
        assert_eq!(g.grid_index(&q("1/4")), Some(250));
        assert_eq!(g.grid_index(&q("1/3")), None);
        assert_eq!(g.grid_index(&q("2")), None);
        assert!(IntervalGridSpace::new(Rational::one(), Rational::one(), 3).is_err());
        assert!(IntervalGridSpace::new(Rational::zero(), Rational::one(), 1).is_err());
    }

    #[test]
    fn constructor_rejects_bad_spaces() {
        assert!(matches!(FiniteMetricSpace::discrete(Vec::<String>::new()), Err(MetricError::Empty)));
        assert!(matches!(FiniteMetricSpace::discrete(["a", "a"]), Err(MetricError::DuplicateLabel(_))));
    }

    use proptest::prelude::*;

    fn symmetric_zero_diagonal() -> impl Strategy<Value = Vec<Vec<Rational>>> {
        (1usize..6).prop_flat_map(|n| {
            prop::collection::vec(prop::collection::vec(1i64..8, n), n).prop_map(move |raw| {
                (0..n)
                    .map(|p| {
                        (0..n)
                            .map(|q| if p == q { Rational::zero() } else { Rational::from_integer(raw[p.min(q)][p.max(q)]) })
                            .collect()
                    })
                    .collect()
            })
        })
    }

    proptest! {
        #[test]
        fn validation_matches_triple_loop(m in symmetric_zero_diagonal()) {
            let n = m.len();
            let mut oracle = true;
            for p in 0..n {
                for q in 0..n {
                    for r in 0..n {
                        if m[p][q] > &m[p][r] + &m[r][q] {
                            oracle = false;
                        }
                    }
                }
            }
            let verdict = validate_metric(&m, &labels(n)).unwrap();
            prop_assert_eq!(verdict.is_valid(), oracle);
            if let MetricVerdict::Invalid(MetricViolation::Triangle { direct, detour, .. }) = verdict {
                prop_assert!(direct > detour);
            }
        }

        #[test]
        fn powers_are_iterated_products(i in 1usize..8, a in -20i64..20, b in -20i64..20, d in 1i64..7) {
            let g = IntervalGridSpace::new(Rational::from_integer(-20), Rational::from_integer(20), 3).unwrap();
            let (x, y) = (Rational::new(a, d), Rational::new(b, d));
            prop_assert_eq!(power_distance(&g, i, &x, &y), power_distance(&g, 1, &x, &y).pow(i as u32));
        }

        #[test]
        fn grid_points_stay_in_range(lo in -50i64..50, width in 1i64..40, den in 1i64..9, count in 2usize..60) {
            let (lo, hi) = (Rational::new(lo, den), Rational::new(lo + width, den));
            let g = IntervalGridSpace::new(lo.clone(), hi.clone(), count).unwrap();
            let pts = g.scan_points();
            prop_assert_eq!(pts.first(), Some(&lo));
            prop_assert_eq!(pts.last(), Some(&hi));
            for (t, x) in pts.iter().enumerate() {
                prop_assert!(lo <= *x && *x <= hi);
                prop_assert_eq!(g.grid_index(x), Some(t));
            }
        }
    }
}
