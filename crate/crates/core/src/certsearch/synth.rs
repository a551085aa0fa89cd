//! Bisection on `lambda` with an exact feasibility solve at every probe.

use serde::Serialize;
use thiserror::Error;

use super::lp::{lp_feasible, Constraint, Feasibility, FeasibilityProblem, Relation};
use crate::contraction::{
    AlmostPolynomialCertificate, Coefficient, CoefficientFamily, ContractionError, PolynomialCertificate,
};
use crate::mapping::TableMap;
use crate::metricspace::{power_distance, FiniteMetricSpace, MAX_DEGREE};
use crate::rational::Rational;

/// Default bisection precision, `2^-20`.
pub fn default_lambda_tol() -> Rational {
    Rational::dyadic_unit(20)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthesisError {
    #[error("k must lie in 1..={MAX_DEGREE}, got {0}")]
    Degree(usize),
    #[error("lambda tolerance {0} must lie in (0, 1/2]")]
    Tolerance(Rational),
    #[error("map has {map} points but the space has {space}")]
    SizeMismatch { map: usize, space: usize },
    #[error(transparent)]
    Certificate(#[from] ContractionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    /// `a_0 = 0` and constant `a_1, ..., a_k`.
    Constant,
    /// One variable per value `a_i(p, q)`, diagonal included.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthesisStatus {
    Found,
    InfeasibleBelowOne,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Probe {
    pub lambda: Rational,
    pub feasible: bool,
    /// The normalized index `j*` that made the probe feasible.
    pub j_star: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthesisResult<C> {
    pub status: SynthesisStatus,
    pub lambda: Option<Rational>,
    pub certificate: Option<C>,
    pub probes: Vec<Probe>,
}

fn check_inputs(space: &FiniteMetricSpace, map: &TableMap, k: usize, tol: &Rational) -> Result<(), SynthesisError> {
    if k == 0 || k > MAX_DEGREE {
        return Err(SynthesisError::Degree(k));
    }
    if !tol.is_positive() || *tol > Rational::new(1, 2) {
        return Err(SynthesisError::Tolerance(tol.clone()));
    }
    if map.len() != space.len() {
        return Err(SynthesisError::SizeMismatch { map: map.len(), space: space.len() });
    }
    Ok(())
}

/// Bisection over `(0, 1)`: probe `1 - tol` first, then halve the bracket
/// `(lo, hi]` until it is at most `tol` wide. `solve` returns the witness for a
/// feasible probe.
fn bisect<W>(
    tol: &Rational,
    mut solve: impl FnMut(&Rational) -> Option<(usize, W)>,
) -> (Option<(Rational, W)>, Vec<Probe>) {
    let mut probes = Vec::new();
    let mut run = |lambda: Rational, probes: &mut Vec<Probe>| {
        let out = solve(&lambda);
        probes.push(Probe { lambda, feasible: out.is_some(), j_star: out.as_ref().map(|(j, _)| *j) });
        out
    };
    let top = Rational::one() - tol;
    let Some((_, mut best)) = run(top.clone(), &mut probes) else {
        return (None, probes);
    };
    let (mut lo, mut hi) = (Rational::zero(), top);
    while &hi - &lo > *tol {
        let mid = lo.midpoint(&hi);
        match run(mid.clone(), &mut probes) {
            Some((_, w)) => {
                best = w;
                hi = mid;
            }
            None => lo = mid,
        }
    }
    (Some((hi, best)), probes)
}

fn try_each_j<W>(k: usize, mut solve: impl FnMut(usize) -> Option<W>) -> Option<(usize, W)> {
    (1..=k).find_map(|j| solve(j).map(|w| (j, w)))
}

fn powers(space: &FiniteMetricSpace, k: usize, p: usize, q: usize) -> Vec<Rational> {
    (0..=k).map(|i| power_distance(space, i, &p, &q)).collect()
}

/// The rearranged polynomial inequality at one ordered pair, with one variable
/// per value `a_i(p, q)` (index `i * n^2 + p * n + q`).
fn full_problem(space: &FiniteMetricSpace, map: &TableMap, k: usize, lambda: &Rational, j_star: usize) -> FeasibilityProblem {
    let n = space.len();
    let mut problem = FeasibilityProblem::new();
    for i in 0..=k {
        for p in 0..n {
            for q in 0..n {
                problem.add_variable(format!("a{i}({},{})", space.labels()[p], space.labels()[q]));
            }
        }
    }
    let var = |i: usize, p: usize, q: usize| i * n * n + p * n + q;
    for p in 0..n {
        for q in 0..n {
            let (tp, tq) = (map.image(p), map.image(q));
            let image_pow = powers(space, k, tp, tq);
            let base_pow = powers(space, k, p, q);
            let mut terms = Vec::with_capacity(2 * (k + 1));
            for i in 0..=k {
                terms.push((var(i, tp, tq), image_pow[i].clone()));
                terms.push((var(i, p, q), -(lambda * &base_pow[i])));
            }
            problem.add(Constraint::new(terms, Relation::Le, Rational::zero()));
        }
    }
    for p in 0..n {
        for q in 0..n {
            problem.lower_bound(var(j_star, p, q), Rational::one());
        }
    }
    problem
}

/// Variables `a_1..a_k` (index `i - 1`), with `a_0 = 0`.
fn constant_problem(
    space: &FiniteMetricSpace,
    map: &TableMap,
    k: usize,
    lambda: &Rational,
    j_star: usize,
) -> FeasibilityProblem {
    let n = space.len();
    let mut problem = FeasibilityProblem::new();
    for i in 1..=k {
        problem.add_variable(format!("a{i}"));
    }
    for p in 0..n {
        for q in 0..n {
            let image_pow = powers(space, k, map.image(p), map.image(q));
            let base_pow = powers(space, k, p, q);
            let terms = (1..=k).map(|i| (i - 1, &image_pow[i] - &(lambda * &base_pow[i]))).collect();
            problem.add(Constraint::new(terms, Relation::Le, Rational::zero()));
        }
    }
    problem.lower_bound(j_star - 1, Rational::one());
    problem
}

/// Search for a polynomial-contraction certificate with the smallest `lambda`
/// reachable by bisection to within `lambda_tol`.
pub fn synthesize_polynomial(
    space: &FiniteMetricSpace,
    map: &TableMap,
    k: usize,
    mode: SearchMode,
    lambda_tol: &Rational,
) -> Result<SynthesisResult<PolynomialCertificate>, SynthesisError> {
    check_inputs(space, map, k, lambda_tol)?;
    let n = space.len();
    let (found, probes) = bisect(lambda_tol, |lambda| {
        try_each_j(k, |j| {
            let problem = match mode {
                SearchMode::Full => full_problem(space, map, k, lambda, j),
                SearchMode::Constant => constant_problem(space, map, k, lambda, j),
            };
            match lp_feasible(&problem) {
                Feasibility::Feasible(x) => Some(x),
                Feasibility::Infeasible => None,
            }
        })
        .map(|(j, x)| (j, (j, x)))
    });
    let Some((lambda, (j, x))) = found else {
        return Ok(SynthesisResult { status: SynthesisStatus::InfeasibleBelowOne, lambda: None, certificate: None, probes });
    };
    let coefficients = match mode {
        SearchMode::Full => (0..=k)
            .map(|i| Coefficient::Table((0..n).map(|p| x[i * n * n + p * n..i * n * n + (p + 1) * n].to_vec()).collect()))
            .collect(),
        SearchMode::Constant => std::iter::once(Coefficient::Constant(Rational::zero()))
            .chain(x.into_iter().map(Coefficient::Constant))
            .collect(),
    };
    let family = CoefficientFamily::new(coefficients)?;
    let certificate = PolynomialCertificate::new(lambda.clone(), family, j, Rational::one())?;
    Ok(SynthesisResult { status: SynthesisStatus::Found, lambda: Some(lambda), certificate: Some(certificate), probes })
}

/// Variables `a_1..a_k` (index `i - 1`) and `b_i = a_i L_i` (index `k + i - 1`).
fn almost_problem(
    space: &FiniteMetricSpace,
    map: &TableMap,
    k: usize,
    lambda: &Rational,
    j_star: usize,
    tol: &Rational,
    floor_a: &[usize],
) -> FeasibilityProblem {
    let n = space.len();
    let mut problem = FeasibilityProblem::new();
    for i in 1..=k {
        problem.add_variable(format!("a{i}"));
    }
    for i in 1..=k {
        problem.add_variable(format!("b{i}"));
    }
    for x in 0..n {
        for y in 0..n {
            let tx = map.image(x);
            let image_pow = powers(space, k, tx, map.image(y));
            let base_pow = powers(space, k, x, y);
            let back_pow = powers(space, k, y, tx);
            let mut terms = Vec::with_capacity(2 * k);
            for i in 1..=k {
                terms.push((i - 1, &image_pow[i] - &(lambda * &base_pow[i])));
                terms.push((k + i - 1, -(lambda * &back_pow[i])));
            }
            problem.add(Constraint::new(terms, Relation::Le, Rational::zero()));
        }
    }
    problem.lower_bound(j_star - 1, Rational::one());
    for i in 1..=k {
        problem.lower_bound(k + i - 1, tol.clone());
    }
    for &i in floor_a {
        problem.lower_bound(i - 1, tol.clone());
    }
    problem
}

/// Search for a constant-coefficient almost-polynomial certificate
/// (`a_0 = 0`, constants `a_i`, `L_i = b_i / a_i`).
///
/// A witness with some `a_i = 0` is re-solved once with `a_i >= lambda_tol`
/// for those `i`; if that fails the probe counts as infeasible.
pub fn synthesize_almost(
    space: &FiniteMetricSpace,
    map: &TableMap,
    k: usize,
    lambda_tol: &Rational,
) -> Result<SynthesisResult<AlmostPolynomialCertificate>, SynthesisError> {
    check_inputs(space, map, k, lambda_tol)?;
    let (found, probes) = bisect(lambda_tol, |lambda| {
        try_each_j(k, |j| {
            let solve = |floor: &[usize]| match lp_feasible(&almost_problem(space, map, k, lambda, j, lambda_tol, floor)) {
                Feasibility::Feasible(x) => Some(x),
                Feasibility::Infeasible => None,
            };
            let x = solve(&[])?;
            let zero: Vec<usize> = (1..=k).filter(|&i| x[i - 1].is_zero()).collect();
            if zero.is_empty() {
                Some(x)
            } else {
                solve(&zero)
            }
        })
        .map(|(j, x)| (j, (j, x)))
    });
    let Some((lambda, (j, x))) = found else {
        return Ok(SynthesisResult { status: SynthesisStatus::InfeasibleBelowOne, lambda: None, certificate: None, probes });
    };
    let a: Vec<Rational> = x[..k].to_vec();
    let l: Vec<Rational> = std::iter::once(Rational::one()).chain((0..k).map(|i| &x[k + i] / &a[i])).collect();
    let family =
        CoefficientFamily::constants(std::iter::once(Rational::zero()).chain(a))?;
    let base = PolynomialCertificate::new(lambda.clone(), family, j, Rational::one())?;
    let certificate = AlmostPolynomialCertificate::new(base, l)?;
    Ok(SynthesisResult { status: SynthesisStatus::Found, lambda: Some(lambda), certificate: Some(certificate), probes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contraction::{verify_almost_polynomial, verify_banach, verify_polynomial};
    use proptest::prelude::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn r(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    fn discrete(n: usize) -> FiniteMetricSpace {
        FiniteMetricSpace::discrete((1..=n).map(|i| format!("x{i}"))).unwrap()
    }

    fn ex27() -> (FiniteMetricSpace, TableMap) {
        (discrete(4), TableMap::new(vec![0, 2, 3, 0], 4).unwrap())
    }

    fn probes_consistent(probes: &[Probe]) -> bool {
        probes.iter().all(|a| !a.feasible || probes.iter().all(|b| b.feasible || b.lambda < a.lambda))
    }

    #[test]
    fn a0_table_is_feasible_at_three_quarters() {
        let (s, t) = ex27();
        let problem = full_problem(&s, &t, 1, &q("3/4"), 1);
        let a0 = [[0, 3, 2, 1], [3, 0, 3, 6], [2, 3, 0, 2], [1, 6, 2, 0]];
        let mut x: Vec<Rational> = a0.iter().flatten().map(|&v| r(v)).collect();
        x.extend(std::iter::repeat_n(r(1), 16));
        assert!(problem.satisfied_by(&x));
        assert!(lp_feasible(&problem).is_feasible());
    }

    #[test]
    fn full_search_on_ex27() {
        let (s, t) = ex27();
        let tol = default_lambda_tol();
        let res = synthesize_polynomial(&s, &t, 1, SearchMode::Full, &tol).unwrap();
        assert_eq!(res.status, SynthesisStatus::Found);
        let lambda = res.lambda.clone().unwrap();
        assert!(lambda <= &q("3/4") + &tol);
        let cert = res.certificate.unwrap();
        assert!(verify_polynomial(&s, &t, &cert).unwrap().passed());
        assert!(probes_consistent(&res.probes));
    }

    #[test]
    fn constant_search_on_ex27_fails() {
        let (s, t) = ex27();
        let res = synthesize_polynomial(&s, &t, 1, SearchMode::Constant, &default_lambda_tol()).unwrap();
        assert_eq!(res.status, SynthesisStatus::InfeasibleBelowOne);
        assert_eq!(res.probes.len(), 1);
        assert!(res.certificate.is_none());
    }

    #[test]
    fn constant_map_reaches_bottom_probe() {
        let s = discrete(3);
        let t = TableMap::new(vec![1, 1, 1], 3).unwrap();
        let tol = Rational::dyadic_unit(10);
        for mode in [SearchMode::Full, SearchMode::Constant] {
            for k in 1..=2 {
                let res = synthesize_polynomial(&s, &t, k, mode, &tol).unwrap();
                assert!(res.lambda.clone().unwrap() <= tol);
                assert!(verify_polynomial(&s, &t, &res.certificate.unwrap()).unwrap().passed());
            }
        }
        let res = synthesize_almost(&s, &t, 1, &tol).unwrap();
        assert!(res.lambda.clone().unwrap() <= tol);
        assert!(verify_almost_polynomial(&s, &t, &res.certificate.unwrap()).unwrap().passed());
    }

    #[test]
    fn almost_search_on_ex36() {
        let s = discrete(3);
        let t = TableMap::new(vec![0, 1, 0], 3).unwrap();
        let tol = default_lambda_tol();
        let res = synthesize_almost(&s, &t, 2, &tol).unwrap();
        assert_eq!(res.status, SynthesisStatus::Found);
        assert!(res.lambda.clone().unwrap() <= &q("2/3") + &tol);
        let cert = res.certificate.unwrap();
        assert!(cert.l().iter().all(Rational::is_positive));
        assert!(verify_almost_polynomial(&s, &t, &cert).unwrap().passed());
        assert!(probes_consistent(&res.probes));
    }

    #[test]
    fn swap_map_has_no_almost_certificate() {
        // at (x1, x2): d(Tx1, Tx2) = 1 while d(x2, Tx1) = 0, so a_1 <= lambda a_1
        let s = discrete(2);
        let t = TableMap::new(vec![1, 0], 2).unwrap();
        let res = synthesize_almost(&s, &t, 1, &default_lambda_tol()).unwrap();
        assert_eq!(res.status, SynthesisStatus::InfeasibleBelowOne);
    }

    #[test]
    fn repair_bumps_zero_coefficients() {
        // a_2 is not needed on a discrete space, so the first witness may set it to zero
        let s = discrete(3);
        let t = TableMap::new(vec![0, 1, 0], 3).unwrap();
        let res = synthesize_almost(&s, &t, 3, &Rational::dyadic_unit(8)).unwrap();
        let cert = res.certificate.unwrap();
        assert!(cert.family().coefficients().iter().skip(1).all(|c| match c {
            Coefficient::Constant(v) => v.is_positive(),
            _ => false,
        }));
        assert!(verify_almost_polynomial(&s, &t, &cert).unwrap().passed());
    }

    #[test]
    fn input_errors() {
        let (s, t) = ex27();
        assert!(synthesize_polynomial(&s, &t, 0, SearchMode::Full, &default_lambda_tol()).is_err());
        assert!(synthesize_polynomial(&s, &t, 1, SearchMode::Full, &r(0)).is_err());
        assert!(synthesize_polynomial(&s, &t, 1, SearchMode::Full, &r(1)).is_err());
        let small = TableMap::identity(2);
        assert!(synthesize_almost(&s, &small, 1, &default_lambda_tol()).is_err());
    }

    fn instance() -> impl Strategy<Value = (FiniteMetricSpace, TableMap)> {
        (2usize..5).prop_flat_map(|n| {
            (prop::collection::vec(0..n, n), prop::collection::vec(prop::collection::vec(2i64..5, n), n)).prop_map(
                move |(images, dist)| {
                    let d = (0..n)
                        .map(|p| (0..n).map(|q| if p == q { r(0) } else { r(dist[p.min(q)][p.max(q)]) }).collect())
                        .collect();
                    let labels = (0..n).map(|i| format!("p{i}")).collect();
                    (FiniteMetricSpace::new(labels, d).unwrap(), TableMap::new(images, n).unwrap())
                },
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn constant_search_tracks_banach_ratio((s, t) in instance()) {
            let tol = Rational::dyadic_unit(12);
            let ratio = verify_banach(&s, &t).unwrap().ratio().cloned().unwrap();
            let res = synthesize_polynomial(&s, &t, 1, SearchMode::Constant, &tol).unwrap();
            prop_assert!(probes_consistent(&res.probes));
            match res.status {
                SynthesisStatus::Found => {
                    let lambda = res.lambda.unwrap();
                    prop_assert!(ratio <= lambda && lambda <= &ratio + &tol);
                    prop_assert!(verify_polynomial(&s, &t, &res.certificate.unwrap()).unwrap().passed());
                }
                SynthesisStatus::InfeasibleBelowOne => prop_assert!(ratio > Rational::one() - tol),
            }
        }

        #[test]
        fn found_certificates_reverify((s, t) in instance(), k in 1usize..3) {
            let tol = Rational::dyadic_unit(8);
            let res = synthesize_polynomial(&s, &t, k, SearchMode::Full, &tol).unwrap();
            prop_assert!(probes_consistent(&res.probes));
            if let Some(cert) = res.certificate {
                prop_assert!(verify_polynomial(&s, &t, &cert).unwrap().passed());
            }
            let res = synthesize_almost(&s, &t, k, &tol).unwrap();
            prop_assert!(probes_consistent(&res.probes));
            if let Some(cert) = res.certificate {
                prop_assert!(verify_almost_polynomial(&s, &t, &cert).unwrap().passed());
            }
        }
    }
}
