//! Picard iteration, the step constant `sigma_{j,0}` and the geometric
//! a-priori error bound.

use std::collections::HashSet;

use num_bigint::BigInt;
use serde::Serialize;
use thiserror::Error;

use crate::contraction::{CoefficientDomain, CoefficientFamily, ContractionError};
use crate::mapping::{MapError, Mapping};
use crate::metricspace::MetricSpace;
use crate::rational::Rational;

/// Width of the dyadic enclosure reported for `j >= 2` roots, in bits.
pub const ROOT_PRECISION_BITS: u32 = 64;

pub const DEFAULT_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PicardError {
    #[error("A_j = {0} must be positive")]
    NonPositiveAj(Rational),
    #[error("lambda = {0} is not in (0, 1)")]
    LambdaRange(Rational),
    #[error("sigma = {0} must be non-negative")]
    NegativeSigma(Rational),
    #[error("j must be at least 1")]
    ZeroJ,
    #[error("tolerance {0} must be non-negative")]
    NegativeTolerance(Rational),
    #[error("the trace has no limit to compare against")]
    NoLimit,
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Contraction(#[from] ContractionError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopRule {
    /// Stop once `d(z_n, z_{n+1}) <= tolerance` (grid spaces only; finite
    /// spaces always stop on an exact fixed point).
    pub tolerance: Rational,
    pub max_iter: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        Self { tolerance: Rational::zero(), max_iter: DEFAULT_MAX_ITER }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceStatus {
    ConvergedToFixedPoint,
    CycleDetected,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundParams {
    pub j: usize,
    pub lambda: Rational,
    pub sigma_j0: Rational,
}

/// Iterates `z_0, z_1, ...` with `z_{n+1} = T z_n`; the last iterate is the one
/// that triggered the stop (so a fixed point appears twice at the end).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PicardTrace<P> {
    pub iterates: Vec<P>,
    pub labels: Vec<String>,
    /// `step_dist[n] = d(z_n, z_{n+1})`.
    pub step_dist: Vec<Rational>,
    pub status: TraceStatus,
    pub limit: Option<P>,
    pub bound_params: Option<BoundParams>,
}

impl<P: PartialEq> PicardTrace<P> {
    /// Index of the first iterate equal to the limit.
    pub fn steps_to_limit(&self) -> Option<usize> {
        let limit = self.limit.as_ref()?;
        self.iterates.iter().position(|z| z == limit)
    }

    pub fn limit_label(&self) -> Option<&str> {
        let n = self.steps_to_limit()?;
        Some(&self.labels[n])
    }
}

/// `A_j^{-1} sum_i a_i(z_0, z_1) d^i(z_0, z_1)` with `z_1 = T z_0`.
pub fn sigma_j0<S, M>(
    space: &S,
    map: &M,
    family: &CoefficientFamily,
    a_j: &Rational,
    z0: &S::Point,
) -> Result<Rational, PicardError>
where
    S: CoefficientDomain,
    M: Mapping<S>,
{
    if !a_j.is_positive() {
        return Err(PicardError::NonPositiveAj(a_j.clone()));
    }
    let z1 = map.apply(space, z0)?;
    Ok(family.weighted_sum(space, z0, &z1)? / a_j)
}

/// Run Picard iteration from `z0`.
///
/// Finite spaces stop on an exact fixed point or a revisited point. Grid spaces
/// additionally stop once a step is within `stop.tolerance`. Both stop after
/// `stop.max_iter` steps.
pub fn iterate<S, M>(space: &S, map: &M, z0: &S::Point, stop: &StopRule) -> Result<PicardTrace<S::Point>, PicardError>
where
    S: MetricSpace,
    M: Mapping<S>,
{
    if stop.tolerance.is_negative() {
        return Err(PicardError::NegativeTolerance(stop.tolerance.clone()));
    }
    let tolerance = if space.is_grid() { stop.tolerance.clone() } else { Rational::zero() };
    let mut iterates = vec![z0.clone()];
    let mut step_dist = Vec::new();
    let mut seen: HashSet<S::Point> = HashSet::from([z0.clone()]);
    let mut status = TraceStatus::MaxIter;
    let mut limit = None;
    while step_dist.len() < stop.max_iter {
        let current = iterates.last().expect("trace is never empty");
        let next = map.apply(space, current)?;
        let d = space.dist(current, &next);
        let close = d <= tolerance;
        step_dist.push(d);
        iterates.push(next.clone());
        if close {
            status = TraceStatus::ConvergedToFixedPoint;
            limit = Some(next);
            break;
        }
        if !seen.insert(next) {
            status = TraceStatus::CycleDetected;
            break;
        }
    }
    let labels = iterates.iter().map(|z| space.label(z)).collect();
    Ok(PicardTrace { iterates, labels, step_dist, status, limit, bound_params: None })
}

/// An a-priori bound value: exact for `j = 1`, otherwise a dyadic enclosure
/// `lo <= value <= hi` of the `j`-th root together with the exact `j`-th power.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum BoundValue {
    Exact { value: Rational },
    Enclosure { lo: Rational, hi: Rational, power: Rational, j: usize },
}

impl BoundValue {
    /// Exact test of `distance <= bound`.
    pub fn admits(&self, distance: &Rational) -> bool {
        match self {
            BoundValue::Exact { value } => distance <= value,
            BoundValue::Enclosure { power, j, .. } => distance.pow(*j as u32) <= *power,
        }
    }

    /// The exact value or the lower end of the enclosure.
    pub fn lower(&self) -> &Rational {
        match self {
            BoundValue::Exact { value } => value,
            BoundValue::Enclosure { lo, .. } => lo,
        }
    }
}

impl std::fmt::Display for BoundValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundValue::Exact { value } => f.pad(&value.to_string()),
            BoundValue::Enclosure { lo, hi, .. } => {
                f.pad(&format!("~{:.12} [{} root enclosure]", lo.to_f64(), (hi - lo).to_f64()))
            }
        }
    }
}

fn check_params(j: usize, lambda: &Rational, sigma: &Rational) -> Result<(), PicardError> {
    if j == 0 {
        return Err(PicardError::ZeroJ);
    }
    if !lambda.is_positive() || *lambda >= Rational::one() {
        return Err(PicardError::LambdaRange(lambda.clone()));
    }
    if sigma.is_negative() {
        return Err(PicardError::NegativeSigma(sigma.clone()));
    }
    Ok(())
}

/// Bounds `lo <= v^(1/j) <= hi` with `hi - lo = 2^-bits`.
pub fn root_enclosure(v: &Rational, j: usize, bits: u32) -> (Rational, Rational) {
    assert!(!v.is_negative() && j >= 1);
    let scale = BigInt::from(1) << (bits as usize * j);
    let scaled = (v * &Rational::from_bigints(scale, BigInt::from(1))).floor();
    let m = scaled.nth_root(j as u32);
    let denom = BigInt::from(1) << bits as usize;
    let lo = Rational::from_bigints(m.clone(), denom.clone());
    let hi = Rational::from_bigints(m + 1, denom);
    (lo, hi)
}

/// `(sigma / (1 - lambda))^(1/j) * lambda^(n/j)`.
pub fn apriori_bound(n: usize, j: usize, lambda: &Rational, sigma: &Rational) -> Result<BoundValue, PicardError> {
    check_params(j, lambda, sigma)?;
    let power = sigma / &(Rational::one() - lambda) * lambda.pow(n as u32);
    if j == 1 {
        return Ok(BoundValue::Exact { value: power });
    }
    let (lo, hi) = root_enclosure(&power, j, ROOT_PRECISION_BITS);
    Ok(BoundValue::Enclosure { lo, hi, power, j })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundRow {
    pub n: usize,
    pub observed: Rational,
    pub bound: BoundValue,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundReport {
    pub params: BoundParams,
    pub rows: Vec<BoundRow>,
    /// Indices `n` where the observed distance exceeds the bound.
    pub violations: Vec<usize>,
    /// For `j = 1` the bound is guaranteed and a violation is an error; for
    /// larger `j` it is reported as an empirical observation only.
    pub binding: bool,
}

impl BoundReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Compare `d(z_n, limit)` with `apriori_bound(n, ...)` for every iterate.
pub fn check_bound_against_trace<S: MetricSpace>(
    space: &S,
    trace: &PicardTrace<S::Point>,
    params: &BoundParams,
) -> Result<BoundReport, PicardError> {
    let limit = trace.limit.as_ref().ok_or(PicardError::NoLimit)?;
    let mut rows = Vec::with_capacity(trace.iterates.len());
    let mut violations = Vec::new();
    for (n, z) in trace.iterates.iter().enumerate() {
        let observed = space.dist(z, limit);
        let bound = apriori_bound(n, params.j, &params.lambda, &params.sigma_j0)?;
        let holds = bound.admits(&observed);
        if !holds {
            violations.push(n);
        }
        rows.push(BoundRow { n, observed, bound, holds });
    }
    Ok(BoundReport { params: params.clone(), rows, violations, binding: params.j == 1 })
}
