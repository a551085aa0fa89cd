//! Certificates for the contraction classes and exhaustive verification over
//! ordered pairs of (grid) points.
//!
//! Every check is phrased as `lhs(p, q) <= lambda * rhs(p, q)` with `rhs >= 0`.
//! A pair with `rhs = 0` is vacuous when `lhs <= 0` and rules out every
//! `lambda` when `lhs > 0`. The smallest feasible `lambda` is the largest ratio
//! `lhs / rhs` over pairs with positive `rhs` (never below zero).

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{Expression, Var};
use crate::mapping::{MapError, Mapping};
use crate::metricspace::{FiniteMetricSpace, IntervalGridSpace, MetricSpace, MAX_DEGREE};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContractionError {
    #[error("coefficient family needs k + 1 = {expected} functions, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("coefficient family must have k >= 1 (at least two functions), got {0}")]
    TooFewCoefficients(usize),
    #[error("degree k = {0} exceeds the supported maximum {MAX_DEGREE}")]
    DegreeTooLarge(usize),
    #[error("a_{i} is negative ({value}) at ({p}, {q})")]
    NegativeCoefficient { i: usize, p: String, q: String, value: Rational },
    #[error("a_{i}: pair tables apply to finite spaces only")]
    TableOnInterval { i: usize },
    #[error("a_{i}: expressions apply to interval spaces only")]
    ExpressionOnFinite { i: usize },
    #[error("a_{i}: table is not {n}x{n}")]
    TableShape { i: usize, n: usize },
    #[error("a_{i} cannot be evaluated: {reason}")]
    Evaluation { i: usize, reason: String },
    #[error("lambda = {0} is not in (0, 1)")]
    LambdaRange(Rational),
    #[error("ell = {0} must be positive")]
    EllRange(Rational),
    #[error("witness index j = {j} must lie in 1..={k}")]
    WitnessIndex { j: usize, k: usize },
    #[error("witness bound A_j = {0} must be positive")]
    WitnessBound(Rational),
    #[error("L needs {expected} positive entries L_0..L_k, got {got}")]
    LArity { expected: usize, got: usize },
    #[error("L_{i} = {value} must be positive")]
    LRange { i: usize, value: Rational },
    #[error(transparent)]
    Map(#[from] MapError),
}

/// One coefficient function `a_i: X x X -> [0, inf)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Coefficient {
    Constant(Rational),
    /// Values indexed by point indices of a finite space.
    Table(Vec<Vec<Rational>>),
    /// An expression in `x` and `y` on an interval space.
    Expr(Expression),
}

/// Spaces on which coefficient functions can be evaluated.
pub trait CoefficientDomain: MetricSpace {
    fn coefficient(&self, i: usize, c: &Coefficient, p: &Self::Point, q: &Self::Point)
        -> Result<Rational, ContractionError>;
}

impl CoefficientDomain for FiniteMetricSpace {
    fn coefficient(&self, i: usize, c: &Coefficient, p: &usize, q: &usize) -> Result<Rational, ContractionError> {
        match c {
            Coefficient::Constant(v) => Ok(v.clone()),
            Coefficient::Table(t) => t
                .get(*p)
                .and_then(|row| row.get(*q))
                .cloned()
                .ok_or(ContractionError::TableShape { i, n: self.len() }),
            Coefficient::Expr(_) => Err(ContractionError::ExpressionOnFinite { i }),
        }
    }
}

impl CoefficientDomain for IntervalGridSpace {
    fn coefficient(&self, i: usize, c: &Coefficient, p: &Rational, q: &Rational) -> Result<Rational, ContractionError> {
        match c {
            Coefficient::Constant(v) => Ok(v.clone()),
            Coefficient::Table(_) => Err(ContractionError::TableOnInterval { i }),
            Coefficient::Expr(e) => {
                e.evaluate(p, Some(q)).map_err(|err| ContractionError::Evaluation { i, reason: err.to_string() })
            }
        }
    }
}

/// The family `a_0, ..., a_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientFamily {
    coefficients: Vec<Coefficient>,
}

impl CoefficientFamily {
    pub fn new(coefficients: Vec<Coefficient>) -> Result<Self, ContractionError> {
        if coefficients.len() < 2 {
            return Err(ContractionError::TooFewCoefficients(coefficients.len()));
        }
        if coefficients.len() - 1 > MAX_DEGREE {
            return Err(ContractionError::DegreeTooLarge(coefficients.len() - 1));
        }
        for (i, c) in coefficients.iter().enumerate() {
            let negative = match c {
                Coefficient::Constant(v) => v.is_negative(),
                Coefficient::Table(t) => t.iter().flatten().any(Rational::is_negative),
                Coefficient::Expr(_) => false,
            };
            if negative {
                let value = match c {
                    Coefficient::Constant(v) => v.clone(),
                    Coefficient::Table(t) => t.iter().flatten().find(|v| v.is_negative()).cloned().unwrap(),
                    Coefficient::Expr(_) => unreachable!(),
                };
                return Err(ContractionError::NegativeCoefficient { i, p: "*".into(), q: "*".into(), value });
            }
        }
        Ok(Self { coefficients })
    }

    /// Constant family `a_i = values[i]`.
    pub fn constants(values: impl IntoIterator<Item = Rational>) -> Result<Self, ContractionError> {
        Self::new(values.into_iter().map(Coefficient::Constant).collect())
    }

    pub fn k(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[Coefficient] {
        &self.coefficients
    }

    /// Check that every coefficient can be evaluated on `space`.
    pub fn check_domain<S: CoefficientDomain>(&self, space: &S) -> Result<(), ContractionError> {
        if let Some(p) = space.scan_points().first() {
            for i in 0..=self.k() {
                self.value(space, i, p, p)?;
            }
        }
        for (i, c) in self.coefficients.iter().enumerate() {
            if let Coefficient::Table(t) = c {
                let n = space.scan_points().len();
                if t.len() != n || t.iter().any(|row| row.len() != n) {
                    return Err(ContractionError::TableShape { i, n });
                }
            }
        }
        Ok(())
    }

    /// `a_i(p, q)`, rejecting negative values.
    pub fn value<S: CoefficientDomain>(
        &self,
        space: &S,
        i: usize,
        p: &S::Point,
        q: &S::Point,
    ) -> Result<Rational, ContractionError> {
        let v = space.coefficient(i, &self.coefficients[i], p, q)?;
        if v.is_negative() {
            return Err(ContractionError::NegativeCoefficient {
                i,
                p: space.label(p),
                q: space.label(q),
                value: v,
            });
        }
        Ok(v)
    }

    /// `sum_i a_i(p, q) d^i(p, q)`.
    pub fn weighted_sum<S: CoefficientDomain>(
        &self,
        space: &S,
        p: &S::Point,
        q: &S::Point,
    ) -> Result<Rational, ContractionError> {
        let d = space.dist(p, q);
        let mut power = Rational::one();
        let mut total = Rational::zero();
        for i in 0..=self.k() {
            let a = self.value(space, i, p, q)?;
            if !a.is_zero() {
                total += &a * &power;
            }
            power = &power * &d;
        }
        Ok(total)
    }
}

/// Data witnessing a polynomial contraction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolynomialCertificate {
    lambda: Rational,
    family: CoefficientFamily,
    witness_j: usize,
    witness_aj: Rational,
}

impl PolynomialCertificate {
    pub fn new(
        lambda: Rational,
        family: CoefficientFamily,
        witness_j: usize,
        witness_aj: Rational,
    ) -> Result<Self, ContractionError> {
        check_lambda(&lambda)?;
        if witness_j == 0 || witness_j > family.k() {
            return Err(ContractionError::WitnessIndex { j: witness_j, k: family.k() });
        }
        if !witness_aj.is_positive() {
            return Err(ContractionError::WitnessBound(witness_aj));
        }
        Ok(Self { lambda, family, witness_j, witness_aj })
    }

    pub fn lambda(&self) -> &Rational {
        &self.lambda
    }

    pub fn family(&self) -> &CoefficientFamily {
        &self.family
    }

    pub fn witness_j(&self) -> usize {
        self.witness_j
    }

    pub fn witness_aj(&self) -> &Rational {
        &self.witness_aj
    }

    /// The same data with a different `lambda`.
    pub fn with_lambda(&self, lambda: Rational) -> Result<Self, ContractionError> {
        Self::new(lambda, self.family.clone(), self.witness_j, self.witness_aj.clone())
    }
}

/// Polynomial certificate data plus the sequence `L_0, ..., L_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlmostPolynomialCertificate {
    base: PolynomialCertificate,
    l: Vec<Rational>,
}

impl AlmostPolynomialCertificate {
    pub fn new(base: PolynomialCertificate, l: Vec<Rational>) -> Result<Self, ContractionError> {
        let expected = base.family.k() + 1;
        if l.len() != expected {
            return Err(ContractionError::LArity { expected, got: l.len() });
        }
        if let Some((i, value)) = l.iter().enumerate().find(|(_, v)| !v.is_positive()) {
            return Err(ContractionError::LRange { i, value: value.clone() });
        }
        Ok(Self { base, l })
    }

    pub fn polynomial(&self) -> &PolynomialCertificate {
        &self.base
    }

    pub fn lambda(&self) -> &Rational {
        &self.base.lambda
    }

    pub fn family(&self) -> &CoefficientFamily {
        &self.base.family
    }

    pub fn l(&self) -> &[Rational] {
        &self.l
    }

    pub fn with_lambda(&self, lambda: Rational) -> Result<Self, ContractionError> {
        Self::new(self.base.with_lambda(lambda)?, self.l.clone())
    }
}

fn check_lambda(lambda: &Rational) -> Result<(), ContractionError> {
    if !lambda.is_positive() || *lambda >= Rational::one() {
        return Err(ContractionError::LambdaRange(lambda.clone()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Infeasible,
}

/// An ordered pair of scanned points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairWitness {
    pub p: usize,
    pub q: usize,
    pub p_label: String,
    pub q_label: String,
}

/// Outcome of checking `lhs <= lambda * rhs` at every ordered pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub status: Status,
    pub lambda: Rational,
    /// The pair with the largest `lhs / rhs`, or the first infeasible pair.
    pub worst_pair: Option<PairWitness>,
    pub lhs: Rational,
    pub rhs: Rational,
    /// `None` when some pair has `rhs = 0 < lhs`.
    pub min_feasible_lambda: Option<Rational>,
    pub pairs_checked: usize,
    /// Set for interval spaces: the check covered grid points only.
    pub grid_verified: bool,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Result of a ratio-type check (Banach, Kannan): the smallest admissible
/// constant, or unbounded when a pair with zero denominator has positive lhs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum RatioBound {
    Bounded { ratio: Rational, witness: Option<PairWitness> },
    Unbounded { witness: PairWitness },
}

impl RatioBound {
    pub fn ratio(&self) -> Option<&Rational> {
        match self {
            RatioBound::Bounded { ratio, .. } => Some(ratio),
            RatioBound::Unbounded { .. } => None,
        }
    }

    /// True when the bound exists and is strictly below `limit`.
    pub fn below(&self, limit: &Rational) -> bool {
        self.ratio().is_some_and(|r| r < limit)
    }
}

#[derive(Debug, Clone)]
struct Extreme {
    ratio: Rational,
    pair: (usize, usize),
    lhs: Rational,
    rhs: Rational,
}

#[derive(Debug, Clone, Default)]
struct ScanOutcome {
    worst: Option<Extreme>,
    infeasible: Option<Extreme>,
    pairs: usize,
}

impl ScanOutcome {
    fn record(&mut self, pair: (usize, usize), lhs: Rational, rhs: Rational) {
        self.pairs += 1;
        if rhs.is_zero() {
            if lhs.is_positive() && self.infeasible.as_ref().is_none_or(|e| pair < e.pair) {
                self.infeasible = Some(Extreme { ratio: Rational::zero(), pair, lhs, rhs });
            }
            return;
        }
        // pairs arrive in increasing order within a row, so ties keep the earlier pair
        let better = match &self.worst {
            None => true,
            Some(w) if !lhs.is_positive() && !w.ratio.is_negative() => false,
            Some(w) => lhs > &w.ratio * &rhs,
        };
        if better {
            self.worst = Some(Extreme { ratio: &lhs / &rhs, pair, lhs, rhs });
        }
    }

    fn merge(mut self, other: ScanOutcome) -> ScanOutcome {
        self.pairs += other.pairs;
        if let Some(w) = other.worst {
            self.record_extreme(w);
        }
        if let Some(inf) = other.infeasible {
            if self.infeasible.as_ref().is_none_or(|e| inf.pair < e.pair) {
                self.infeasible = Some(inf);
            }
        }
        self
    }

    fn record_extreme(&mut self, w: Extreme) {
        let better = match &self.worst {
            None => true,
            Some(cur) => w.ratio > cur.ratio || (w.ratio == cur.ratio && w.pair < cur.pair),
        };
        if better {
            self.worst = Some(w);
        }
    }

    fn min_feasible(&self) -> Option<Rational> {
        if self.infeasible.is_some() {
            return None;
        }
        Some(self.worst.as_ref().map_or_else(Rational::zero, |w| w.ratio.clone().max(Rational::zero())))
    }
}

/// Scanned points, their images, and the distinct images (by first
/// occurrence) so that image-pair quantities are computed once per pair of
/// distinct images.
struct PairScan<'a, S: MetricSpace> {
    space: &'a S,
    points: Vec<S::Point>,
    images: Vec<S::Point>,
    image_ids: Vec<usize>,
    distinct: Vec<S::Point>,
}

impl<'a, S: MetricSpace> PairScan<'a, S> {
    fn new<M: Mapping<S>>(space: &'a S, map: &M) -> Result<Self, ContractionError> {
        let points = space.scan_points();
        let images = points.iter().map(|p| map.apply(space, p)).collect::<Result<Vec<_>, _>>()?;
        let mut index: HashMap<&S::Point, usize> = HashMap::new();
        let mut distinct = Vec::new();
        let mut image_ids = Vec::with_capacity(images.len());
        for img in &images {
            let id = *index.entry(img).or_insert_with(|| {
                distinct.push(img.clone());
                distinct.len() - 1
            });
            image_ids.push(id);
        }
        Ok(Self { space, points, images, image_ids, distinct })
    }

    fn witness(&self, (p, q): (usize, usize)) -> PairWitness {
        PairWitness { p, q, p_label: self.space.label(&self.points[p]), q_label: self.space.label(&self.points[q]) }
    }

    /// `image_term(Tp, Tq)` is evaluated once per distinct image pair and then
    /// combined with per-pair data into `(lhs, rhs)`.
    fn run<I, C>(&self, image_term: I, combine: C) -> Result<ScanOutcome, ContractionError>
    where
        I: Fn(&S::Point, &S::Point) -> Result<Rational, ContractionError> + Sync,
        C: Fn(usize, usize, &Rational) -> Result<(Rational, Rational), ContractionError> + Sync,
    {
        let m = self.distinct.len();
        let table: Vec<Vec<Rational>> = (0..m)
            .into_par_iter()
            .map(|a| (0..m).map(|b| image_term(&self.distinct[a], &self.distinct[b])).collect())
            .collect::<Result<_, _>>()?;
        let n = self.points.len();
        let rows: Vec<Result<ScanOutcome, ContractionError>> = (0..n)
            .into_par_iter()
            .map(|p| {
                let mut out = ScanOutcome::default();
                for q in 0..n {
                    let term = &table[self.image_ids[p]][self.image_ids[q]];
                    let (lhs, rhs) = combine(p, q, term)?;
                    out.record((p, q), lhs, rhs);
                }
                Ok(out)
            })
            .collect();
        rows.into_iter().try_fold(ScanOutcome::default(), |acc, row| Ok(acc.merge(row?)))
    }

    fn verdict(&self, outcome: ScanOutcome, lambda: &Rational) -> Verdict {
        let min = outcome.min_feasible();
        let (status, shown) = match (&outcome.infeasible, &min) {
            (Some(inf), _) => (Status::Infeasible, Some(inf)),
            (None, Some(m)) if m <= lambda => (Status::Pass, outcome.worst.as_ref()),
            _ => (Status::Fail, outcome.worst.as_ref()),
        };
        Verdict {
            status,
            lambda: lambda.clone(),
            worst_pair: shown.map(|e| self.witness(e.pair)),
            lhs: shown.map_or_else(Rational::zero, |e| e.lhs.clone()),
            rhs: shown.map_or_else(Rational::zero, |e| e.rhs.clone()),
            min_feasible_lambda: min,
            pairs_checked: outcome.pairs,
            grid_verified: self.space.is_grid(),
        }
    }

    fn ratio_bound(&self, outcome: ScanOutcome) -> RatioBound {
        match outcome.infeasible {
            Some(inf) => RatioBound::Unbounded { witness: self.witness(inf.pair) },
            None => RatioBound::Bounded {
                ratio: outcome.min_feasible().unwrap_or_else(Rational::zero),
                witness: outcome.worst.map(|w| self.witness(w.pair)),
            },
        }
    }
}

/// `(sum_i a_i(Tp,Tq) d^i(Tp,Tq), sum_i a_i(p,q) d^i(p,q))` for one pair.
pub fn polynomial_terms<S, M>(
    space: &S,
    map: &M,
    family: &CoefficientFamily,
    p: &S::Point,
    q: &S::Point,
) -> Result<(Rational, Rational), ContractionError>
where
    S: CoefficientDomain,
    M: Mapping<S>,
{
    let (tp, tq) = (map.apply(space, p)?, map.apply(space, q)?);
    Ok((family.weighted_sum(space, &tp, &tq)?, family.weighted_sum(space, p, q)?))
}

/// `sum_i a_i(p,q) [d^i(p,q) + L_i d^i(q, Tp)]`, the right-hand side base of
/// the almost-polynomial inequality (before multiplying by `lambda`).
fn almost_rhs(
    k: usize,
    a: impl Fn(usize) -> Result<Rational, ContractionError>,
    l: &[Rational],
    d: &Rational,
    e: &Rational,
) -> Result<Rational, ContractionError> {
    let (mut dp, mut ep) = (Rational::one(), Rational::one());
    let mut total = Rational::zero();
    for (i, li) in l.iter().enumerate().take(k + 1) {
        let a = a(i)?;
        if !a.is_zero() {
            let term = if li.is_one() { &dp + &ep } else { &dp + &(li * &ep) };
            if a.is_one() {
                total += &term;
            } else {
                total += &a * &term;
            }
        }
        if i < k {
            dp = if i == 0 { d.clone() } else { &dp * d };
            ep = if i == 0 { e.clone() } else { &ep * e };
        }
    }
    Ok(total)
}

/// `sum_i a_i d^i` from a coefficient getter.
fn weighted(
    k: usize,
    a: impl Fn(usize) -> Result<Rational, ContractionError>,
    d: &Rational,
) -> Result<Rational, ContractionError> {
    let mut total = a(0)?;
    let mut power = Rational::one();
    for i in 1..=k {
        power = if i == 1 { d.clone() } else { &power * d };
        let a = a(i)?;
        if a == Rational::one() {
            total += &power;
        } else if !a.is_zero() {
            total += &a * &power;
        }
    }
    Ok(total)
}

enum PreparedCoefficient {
    Direct,
    /// `a_i(p, q) = x_part[p] + y_part[q] + mixed(p, q)`.
    Split { x_part: Vec<Rational>, y_part: Vec<Rational>, mixed: Option<Coefficient> },
}

/// A family evaluated against a fixed list of scan points. Expression terms
/// depending on one variable only are evaluated once per point.
struct PreparedFamily<'a, S: CoefficientDomain> {
    space: &'a S,
    family: &'a CoefficientFamily,
    points: &'a [S::Point],
    coefficients: Vec<PreparedCoefficient>,
}

impl<'a, S: CoefficientDomain> PreparedFamily<'a, S> {
    fn new(space: &'a S, family: &'a CoefficientFamily, points: &'a [S::Point]) -> Result<Self, ContractionError> {
        let mut coefficients = Vec::with_capacity(family.k() + 1);
        for (i, c) in family.coefficients().iter().enumerate() {
            let Coefficient::Expr(e) = c else {
                coefficients.push(PreparedCoefficient::Direct);
                continue;
            };
            let (mut xs, mut ys, mut mixed) = (Vec::new(), Vec::new(), Vec::new());
            for (scale, term) in e.additive_terms() {
                let part = Expression::Mul(Box::new(Expression::Const(scale)), Box::new(term.clone()));
                match (term.mentions(Var::X), term.mentions(Var::Y)) {
                    (_, false) => xs.push(part),
                    (false, true) => ys.push(part),
                    (true, true) => mixed.push(part),
                }
            }
            let sum = |parts: Vec<Expression>| {
                parts.into_iter().reduce(|a, b| Expression::Add(Box::new(a), Box::new(b)))
            };
            let eval = |part: &Option<Expression>| -> Result<Vec<Rational>, ContractionError> {
                match part {
                    None => Ok(vec![Rational::zero(); points.len()]),
                    Some(e) => {
                        let c = Coefficient::Expr(e.clone());
                        points.iter().map(|p| space.coefficient(i, &c, p, p)).collect()
                    }
                }
            };
            coefficients.push(PreparedCoefficient::Split {
                x_part: eval(&sum(xs))?,
                y_part: eval(&sum(ys))?,
                mixed: sum(mixed).map(Coefficient::Expr),
            });
        }
        Ok(Self { space, family, points, coefficients })
    }

    /// `a_i` at the scan points with indices `p`, `q`.
    fn value(&self, i: usize, p: usize, q: usize) -> Result<Rational, ContractionError> {
        let (pp, qq) = (&self.points[p], &self.points[q]);
        let v = match &self.coefficients[i] {
            PreparedCoefficient::Direct => return self.family.value(self.space, i, pp, qq),
            PreparedCoefficient::Split { x_part, y_part, mixed } => {
                let mut v = &x_part[p] + &y_part[q];
                if let Some(m) = mixed {
                    v += self.space.coefficient(i, m, pp, qq)?;
                }
                v
            }
        };
        if v.is_negative() {
            return Err(ContractionError::NegativeCoefficient {
                i,
                p: self.space.label(pp),
                q: self.space.label(qq),
                value: v,
            });
        }
        Ok(v)
    }
}

/// `(lhs, rhs base)` of the almost-polynomial inequality at one ordered pair.
pub fn almost_polynomial_terms<S, M>(
    space: &S,
    map: &M,
    cert: &AlmostPolynomialCertificate,
    p: &S::Point,
    q: &S::Point,
) -> Result<(Rational, Rational), ContractionError>
where
    S: CoefficientDomain,
    M: Mapping<S>,
{
    let (tp, tq) = (map.apply(space, p)?, map.apply(space, q)?);
    let family = cert.family();
    let (d, e) = (space.dist(p, q), space.dist(q, &tp));
    let rhs = almost_rhs(family.k(), |i| family.value(space, i, p, q), cert.l(), &d, &e)?;
    Ok((family.weighted_sum(space, &tp, &tq)?, rhs))
}

/// Check `sum a_i(Tx,Ty) d^i(Tx,Ty) <= lambda sum a_i(x,y) d^i(x,y)` at every
/// ordered pair, diagonal included.
pub fn verify_polynomial<S, M>(space: &S, map: &M, cert: &PolynomialCertificate) -> Result<Verdict, ContractionError>
where
    S: CoefficientDomain,
    M: Mapping<S>,
{
    let family = cert.family();
    family.check_domain(space)?;
    let scan = PairScan::new(space, map)?;
    let prepared = PreparedFamily::new(space, family, &scan.points)?;
    let outcome = scan.run(
        |tp, tq| family.weighted_sum(space, tp, tq),
        |p, q, lhs| {
            let d = space.dist(&scan.points[p], &scan.points[q]);
            Ok((lhs.clone(), weighted(family.k(), |i| prepared.value(i, p, q), &d)?))
        },
    )?;
    Ok(scan.verdict(outcome, cert.lambda()))
}

/// Check the almost-polynomial inequality with the `L_i d^i(y, Tx)` terms.
/// The scan covers ordered pairs; the inequality is not symmetric in `(x, y)`.
pub fn verify_almost_polynomial<S, M>(
    space: &S,
    map: &M,
    cert: &AlmostPolynomialCertificate,
) -> Result<Verdict, ContractionError>
where
    S: CoefficientDomain,
    M: Mapping<S>,
{
    let family = cert.family();
    family.check_domain(space)?;
    let scan = PairScan::new(space, map)?;
    let prepared = PreparedFamily::new(space, family, &scan.points)?;
    let outcome = scan.run(
        |tp, tq| family.weighted_sum(space, tp, tq),
        |p, q, lhs| {
            let (x, y) = (&scan.points[p], &scan.points[q]);
            let (d, e) = (space.dist(x, y), space.dist(y, &scan.images[p]));
            Ok((lhs.clone(), almost_rhs(family.k(), |i| prepared.value(i, p, q), cert.l(), &d, &e)?))
        },
    )?;
    Ok(scan.verdict(outcome, cert.lambda()))
}

/// Smallest Lipschitz constant: `max d(Tp,Tq) / d(p,q)` over `p != q`.
/// `T` is a Banach contraction iff this is below one.
pub fn verify_banach<S, M>(space: &S, map: &M) -> Result<RatioBound, ContractionError>
where
    S: MetricSpace,
    M: Mapping<S>,
{
    let scan = PairScan::new(space, map)?;
    let outcome = scan.run(
        |tp, tq| Ok(space.dist(tp, tq)),
        |p, q, lhs| Ok((lhs.clone(), space.dist(&scan.points[p], &scan.points[q]))),
    )?;
    Ok(scan.ratio_bound(outcome))
}

/// Smallest Kannan constant: `max d(Tp,Tq) / [d(p,Tp) + d(q,Tq)]`.
/// The Kannan condition holds iff this is below one half.
pub fn verify_kannan<S, M>(space: &S, map: &M) -> Result<RatioBound, ContractionError>
where
    S: MetricSpace,
    M: Mapping<S>,
{
    let scan = PairScan::new(space, map)?;
    let moved: Vec<Rational> = scan.points.iter().zip(&scan.images).map(|(p, tp)| space.dist(p, tp)).collect();
    let outcome = scan.run(|tp, tq| Ok(space.dist(tp, tq)), |p, q, lhs| Ok((lhs.clone(), &moved[p] + &moved[q])))?;
    Ok(scan.ratio_bound(outcome))
}

/// Check `d(Tx,Ty) <= lambda d(x,y) + ell d(y,Tx)` at every ordered pair.
///
/// The verdict reports `lhs = d(Tx,Ty) - ell d(y,Tx)` and `rhs = d(x,y)`, so
/// `min_feasible_lambda` is the smallest `lambda` that works for this `ell`.
pub fn verify_almost_contraction<S, M>(
    space: &S,
    map: &M,
    lambda: &Rational,
    ell: &Rational,
) -> Result<Verdict, ContractionError>
where
    S: MetricSpace,
    M: Mapping<S>,
{
    check_lambda(lambda)?;
    if !ell.is_positive() {
        return Err(ContractionError::EllRange(ell.clone()));
    }
    let scan = PairScan::new(space, map)?;
    let outcome = scan.run(
        |tp, tq| Ok(space.dist(tp, tq)),
        |p, q, lhs| {
            let (x, y) = (&scan.points[p], &scan.points[q]);
            Ok((lhs - &(ell * &space.dist(y, &scan.images[p])), space.dist(x, y)))
        },
    )?;
    Ok(scan.verdict(outcome, lambda))
}

/// Outcome of looking for a uniform positive lower bound on `a_j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum LowerBound {
    /// `a_j >= a_j_min > 0` at every scanned pair.
    Holds { j: usize, a_j_min: Rational, at: PairWitness, grid_evidence: bool },
    Fails { j: usize, value: Rational, at: PairWitness },
}

impl LowerBound {
    pub fn bound(&self) -> Option<&Rational> {
        match self {
            LowerBound::Holds { a_j_min, .. } => Some(a_j_min),
            LowerBound::Fails { .. } => None,
        }
    }
}

fn first_extreme(values: &[Rational], want_max: bool) -> Option<(usize, &Rational)> {
    let mut best: Option<(usize, &Rational)> = None;
    for (i, v) in values.iter().enumerate() {
        if best.is_none_or(|(_, b)| (want_max && v > b) || (!want_max && v < b)) {
            best = Some((i, v));
        }
    }
    best
}

/// Extreme value of `a_i` over ordered pairs with the lexicographically first
/// pair attaining it. Negative values anywhere are an error.
fn extreme_value<S: CoefficientDomain>(
    space: &S,
    family: &CoefficientFamily,
    i: usize,
    want_max: bool,
) -> Result<(Rational, PairWitness), ContractionError> {
    let points = space.scan_points();
    let witness = |pi: usize, qi: usize| PairWitness {
        p: pi,
        q: qi,
        p_label: space.label(&points[pi]),
        q_label: space.label(&points[qi]),
    };
    if let Coefficient::Constant(v) = &family.coefficients()[i] {
        family.value(space, i, &points[0], &points[0])?;
        return Ok((v.clone(), witness(0, 0)));
    }
    let prepared = PreparedFamily::new(space, family, &points)?;
    if let PreparedCoefficient::Split { x_part, y_part, mixed: None } = &prepared.coefficients[i] {
        // a_i(p, q) = f(p) + g(q): extremes separate, and the first pair
        // attaining the sum pairs the first attaining indices
        let (lo_p, _) = first_extreme(x_part, false).expect("spaces have at least one point");
        let (lo_q, _) = first_extreme(y_part, false).expect("spaces have at least one point");
        prepared.value(i, lo_p, lo_q)?;
        let (pi, _) = first_extreme(x_part, want_max).expect("nonempty");
        let (qi, _) = first_extreme(y_part, want_max).expect("nonempty");
        return Ok((&x_part[pi] + &y_part[qi], witness(pi, qi)));
    }
    let mut best: Option<(Rational, (usize, usize))> = None;
    for pi in 0..points.len() {
        for qi in 0..points.len() {
            let v = prepared.value(i, pi, qi)?;
            let replace = match &best {
                None => true,
                Some((b, _)) => (want_max && v > *b) || (!want_max && v < *b),
            };
            if replace {
                best = Some((v, (pi, qi)));
            }
        }
    }
    let (v, (pi, qi)) = best.expect("spaces have at least one point");
    Ok((v, witness(pi, qi)))
}

/// Exact minimum of `a_j` over ordered pairs (grid minimum on interval
/// spaces); the lower-bound condition holds iff it is positive.
pub fn check_lower_bound_condition<S: CoefficientDomain>(
    space: &S,
    family: &CoefficientFamily,
    j: usize,
) -> Result<LowerBound, ContractionError> {
    if j == 0 || j > family.k() {
        return Err(ContractionError::WitnessIndex { j, k: family.k() });
    }
    family.check_domain(space)?;
    let (min, at) = extreme_value(space, family, j, false)?;
    Ok(if min.is_positive() {
        LowerBound::Holds { j, a_j_min: min, at, grid_evidence: space.is_grid() }
    } else {
        LowerBound::Fails { j, value: min, at }
    })
}

/// Which hypotheses of the continuity criterion hold: `a_0 = 0`, each `a_i`
/// bounded above, and some `a_j` bounded below by a positive constant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContinuityHypotheses {
    pub a0_vanishes: bool,
    /// A pair where `a_0` is nonzero, if any.
    pub a0_witness: Option<PairWitness>,
    /// `B_i = max a_i` for `i = 1..=k`.
    pub upper_bounds: Vec<Rational>,
    /// The `j` with the largest positive minimum of `a_j`, and that minimum.
    pub best_lower_bound: Option<(usize, Rational)>,
    pub continuity_guaranteed: bool,
    pub grid_evidence: bool,
}

pub fn check_continuity_hypotheses<S: CoefficientDomain>(
    space: &S,
    family: &CoefficientFamily,
) -> Result<ContinuityHypotheses, ContractionError> {
    family.check_domain(space)?;
    let (a0_max, a0_at) = extreme_value(space, family, 0, true)?;
    let a0_vanishes = a0_max.is_zero();
    let upper_bounds =
        (1..=family.k()).map(|i| extreme_value(space, family, i, true).map(|(v, _)| v)).collect::<Result<_, _>>()?;
    let mut best_lower_bound: Option<(usize, Rational)> = None;
    for j in 1..=family.k() {
        if let Some(b) = check_lower_bound_condition(space, family, j)?.bound() {
            if best_lower_bound.as_ref().is_none_or(|(_, cur)| b > cur) {
                best_lower_bound = Some((j, b.clone()));
            }
        }
    }
    Ok(ContinuityHypotheses {
        a0_vanishes,
        a0_witness: (!a0_vanishes).then_some(a0_at),
        upper_bounds,
        continuity_guaranteed: a0_vanishes && best_lower_bound.is_some(),
        best_lower_bound,
        grid_evidence: space.is_grid(),
    })
}
