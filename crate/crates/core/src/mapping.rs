//! Self-maps `T: X -> X`, their orbits, and the Picard-continuity and
//! weakly-Picard properties on finite spaces.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{Expression, Var};
use crate::metricspace::{FiniteMetricSpace, IntervalGridSpace, MetricSpace};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("map table has {got} entries but the space has {expected} points")]
    WrongLength { got: usize, expected: usize },
    #[error("image of point {point} is index {image}, outside the space")]
    ImageOutOfRange { point: usize, image: usize },
    #[error("no branch covers x = {0}")]
    CoverageGap(Rational),
    #[error("branches overlap at x = {0}")]
    Overlap(Rational),
    #[error("branch domain {0} is empty")]
    EmptyBranch(String),
    #[error("branch boundary {0} is not a grid point")]
    BoundaryOffGrid(Rational),
    #[error("branch expression {0} mentions y; map branches use x alone")]
    BranchUsesY(String),
    #[error("T({x}) = {image} lies outside the space")]
    ImageOutsideSpace { x: Rational, image: Rational },
    #[error("T({x}) = {image} is not a grid point")]
    OffGrid { x: Rational, image: Rational },
    #[error("malformed interval {0:?}; expected e.g. \"[0, 1)\" or \"{{1}}\"")]
    BadInterval(String),
}

/// Evaluation of a self-map on points of a space.
pub trait Mapping<S: MetricSpace>: Sync {
    fn apply(&self, space: &S, p: &S::Point) -> Result<S::Point, MapError>;
}

/// A map on a finite set of points, given by the image index of each point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableMap {
    images: Vec<usize>,
}

impl TableMap {
    pub fn new(images: Vec<usize>, point_count: usize) -> Result<Self, MapError> {
        if images.len() != point_count {
            return Err(MapError::WrongLength { got: images.len(), expected: point_count });
        }
        if let Some((point, &image)) = images.iter().enumerate().find(|(_, &i)| i >= point_count) {
            return Err(MapError::ImageOutOfRange { point, image });
        }
        Ok(Self { images })
    }

    pub fn identity(n: usize) -> Self {
        Self { images: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn image(&self, p: usize) -> usize {
        self.images[p]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }
}

impl Mapping<FiniteMetricSpace> for TableMap {
    fn apply(&self, _space: &FiniteMetricSpace, p: &usize) -> Result<usize, MapError> {
        self.images.get(*p).copied().ok_or(MapError::ImageOutOfRange { point: *p, image: usize::MAX })
    }
}

/// An interval `lo..hi` with open or closed ends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    pub lo: Rational,
    pub lo_closed: bool,
    pub hi: Rational,
    pub hi_closed: bool,
}

impl Domain {
    pub fn contains(&self, x: &Rational) -> bool {
        let above = if self.lo_closed { x >= &self.lo } else { x > &self.lo };
        let below = if self.hi_closed { x <= &self.hi } else { x < &self.hi };
        above && below
    }

    fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    /// Parse `"[a, b)"`-style notation; `"{a}"` is the single point `a`.
    pub fn parse(text: &str) -> Result<Self, MapError> {
        let bad = || MapError::BadInterval(text.to_string());
        let t = text.trim();
        if let Some(inner) = t.strip_prefix('{').and_then(|r| r.strip_suffix('}')) {
            let v: Rational = inner.trim().parse().map_err(|_| bad())?;
            return Ok(Domain { lo: v.clone(), lo_closed: true, hi: v, hi_closed: true });
        }
        let lo_closed = match t.chars().next() {
            Some('[') => true,
            Some('(') => false,
            _ => return Err(bad()),
        };
        let hi_closed = match t.chars().last() {
            Some(']') => true,
            Some(')') => false,
            _ => return Err(bad()),
        };
        let inner = &t[1..t.len() - 1];
        let (a, b) = inner.split_once(',').ok_or_else(bad)?;
        Ok(Domain {
            lo: a.trim().parse().map_err(|_| bad())?,
            lo_closed,
            hi: b.trim().parse().map_err(|_| bad())?,
            hi_closed,
        })
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi && self.lo_closed && self.hi_closed {
            return write!(f, "{{{}}}", self.lo);
        }
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    pub domain: Domain,
    pub expr: Expression,
}

/// A map on an interval space given by expression branches in `x`.
///
/// Branches are disjoint, cover `[lo, hi]`, have grid-point boundaries, and
/// send every grid point back into `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecewiseMap {
    branches: Vec<Branch>,
}

impl PiecewiseMap {
    pub fn new(space: &IntervalGridSpace, mut branches: Vec<Branch>) -> Result<Self, MapError> {
        for b in &branches {
            if b.domain.is_empty() {
                return Err(MapError::EmptyBranch(b.domain.to_string()));
            }
            if b.expr.mentions(Var::Y) {
                return Err(MapError::BranchUsesY(b.expr.to_string()));
            }
            for end in [&b.domain.lo, &b.domain.hi] {
                if space.grid_index(end).is_none() {
                    return Err(MapError::BoundaryOffGrid(end.clone()));
                }
            }
        }
        branches.sort_by(|a, b| a.domain.lo.cmp(&b.domain.lo).then(b.domain.lo_closed.cmp(&a.domain.lo_closed)));
        let first = &branches.first().ok_or_else(|| MapError::CoverageGap(space.lo().clone()))?.domain;
        if &first.lo != space.lo() || !first.lo_closed {
            return Err(MapError::CoverageGap(space.lo().clone()));
        }
        for pair in branches.windows(2) {
            let (a, b) = (&pair[0].domain, &pair[1].domain);
            if a.hi < b.lo || (a.hi == b.lo && !a.hi_closed && !b.lo_closed) {
                return Err(MapError::CoverageGap(a.hi.clone()));
            }
            if a.hi > b.lo || (a.hi_closed && b.lo_closed) {
                return Err(MapError::Overlap(b.lo.clone()));
            }
        }
        let last = &branches[branches.len() - 1].domain;
        if &last.hi != space.hi() || !last.hi_closed {
            return Err(MapError::CoverageGap(space.hi().clone()));
        }
        let map = Self { branches };
        for x in space.scan_points() {
            let image = map.eval(&x)?;
            if !space.contains(&image) {
                return Err(MapError::ImageOutsideSpace { x, image });
            }
        }
        Ok(map)
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    fn eval(&self, x: &Rational) -> Result<Rational, MapError> {
        let branch = self
            .branches
            .iter()
            .find(|b| b.domain.contains(x))
            .ok_or_else(|| MapError::CoverageGap(x.clone()))?;
        // branch expressions never mention y (checked at construction)
        Ok(branch.expr.evaluate(x, None).expect("branch expression uses x only"))
    }

    /// The map restricted to grid points, as a table over grid indices.
    /// Fails when some grid point maps off the grid.
    pub fn to_table(&self, space: &IntervalGridSpace) -> Result<TableMap, MapError> {
        let images = (0..space.grid_count())
            .map(|t| {
                let x = space.point(t);
                let image = self.eval(&x)?;
                space.grid_index(&image).ok_or(MapError::OffGrid { x, image })
            })
            .collect::<Result<Vec<_>, _>>()?;
        TableMap::new(images, space.grid_count())
    }
}

impl Mapping<IntervalGridSpace> for PiecewiseMap {
    fn apply(&self, space: &IntervalGridSpace, x: &Rational) -> Result<Rational, MapError> {
        if !space.contains(x) {
            return Err(MapError::CoverageGap(x.clone()));
        }
        self.eval(x)
    }
}

/// Largest image jump between grid point `t` and its grid neighbours.
/// A jump that stays put under grid refinement is evidence of a
/// discontinuity at that point.
pub fn grid_jump(space: &IntervalGridSpace, map: &PiecewiseMap, t: usize) -> Result<Rational, MapError> {
    let at = map.apply(space, &space.point(t))?;
    let mut jump = Rational::zero();
    for n in [t.checked_sub(1), Some(t + 1).filter(|&n| n < space.grid_count())].into_iter().flatten() {
        let d = (&map.apply(space, &space.point(n))? - &at).abs();
        jump = jump.max(d);
    }
    Ok(jump)
}

/// The eventually periodic structure of a finite orbit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrbitDecomposition {
    pub start: usize,
    /// Points before the orbit enters its cycle.
    pub tail: Vec<usize>,
    pub cycle: Vec<usize>,
}

impl OrbitDecomposition {
    pub fn cycle_length(&self) -> usize {
        self.cycle.len()
    }

    /// The limit when the orbit is eventually constant.
    pub fn limit(&self) -> Option<usize> {
        match self.cycle.as_slice() {
            [w] => Some(*w),
            _ => None,
        }
    }
}

pub fn orbit(map: &TableMap, z0: usize) -> OrbitDecomposition {
    let mut seen_at = vec![usize::MAX; map.len()];
    let mut path = Vec::new();
    let mut z = z0;
    while seen_at[z] == usize::MAX {
        seen_at[z] = path.len();
        path.push(z);
        z = map.image(z);
    }
    let cycle = path.split_off(seen_at[z]);
    OrbitDecomposition { start: z0, tail: path, cycle }
}

pub fn fixed_points(map: &TableMap) -> Vec<usize> {
    (0..map.len()).filter(|&p| map.image(p) == p).collect()
}

/// Where the orbit of one start point ends up.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum LimitStatus {
    ConvergesTo { point: usize },
    Cycles { length: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PicardContinuity {
    pub holds: bool,
    pub per_start: Vec<LimitStatus>,
    /// `(z, w)` with `T^n z -> w` but `T(T^n z)` not tending to `Tw`.
    pub counterexample: Option<(usize, usize)>,
}

/// Picard-continuity on a finite space: for all `z, w`, if `T^n z -> w` then
/// `T(T^n z) -> Tw`. On a finite space convergence means the orbit is
/// eventually constant.
pub fn is_picard_continuous(map: &TableMap) -> PicardContinuity {
    let n = map.len();
    let mut per_start = Vec::with_capacity(n);
    let mut counterexample = None;
    for z in 0..n {
        let oz = orbit(map, z);
        per_start.push(match oz.limit() {
            Some(point) => LimitStatus::ConvergesTo { point },
            None => LimitStatus::Cycles { length: oz.cycle_length() },
        });
        let shifted = orbit(map, map.image(z));
        for w in 0..n {
            let antecedent = oz.limit() == Some(w);
            let consequent = shifted.limit() == Some(map.image(w));
            if antecedent && !consequent && counterexample.is_none() {
                counterexample = Some((z, w));
            }
        }
    }
    PicardContinuity { holds: counterexample.is_none(), per_start, counterexample }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeaklyPicard {
    pub holds: bool,
    pub fixed_points: Vec<usize>,
    /// A start whose orbit does not converge to a fixed point.
    pub witness: Option<usize>,
}

/// Fixed points exist and every orbit converges to one of them.
pub fn is_weakly_picard(map: &TableMap) -> WeaklyPicard {
    let fixed = fixed_points(map);
    let witness = (0..map.len()).find(|&z| orbit(map, z).cycle_length() != 1);
    WeaklyPicard { holds: !fixed.is_empty() && witness.is_none(), fixed_points: fixed, witness }
}
