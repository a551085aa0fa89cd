//! Picard iteration from every start, with the a-priori distance bound
//! checked exactly against each orbit.

use polycert::picard::{check_bound_against_trace, sigma_j0, BoundParams};
use polycert::{iterate, Coefficient, CoefficientFamily, FiniteMetricSpace, Rational, StopRule, TableMap};

fn main() {
    let space = FiniteMetricSpace::discrete(["x1", "x2", "x3", "x4"]).unwrap();
    let map = TableMap::new(vec![0, 2, 3, 0], 4).unwrap();
    let a0 = [[0, 3, 2, 1], [3, 0, 3, 6], [2, 3, 0, 2], [1, 6, 2, 0]]
        .iter()
        .map(|r| r.iter().map(|&v| Rational::from_integer(v)).collect())
        .collect();
    let family = CoefficientFamily::new(vec![Coefficient::Table(a0), Coefficient::Constant(Rational::one())]).unwrap();
    let lambda = Rational::new(3, 4);

    for z0 in 0..space.len() {
        let trace = iterate(&space, &map, &z0, &StopRule::default()).unwrap();
        let sigma = sigma_j0(&space, &map, &family, &Rational::one(), &z0).unwrap();
        let params = BoundParams { j: 1, lambda: lambda.clone(), sigma_j0: sigma.clone() };
        let report = check_bound_against_trace(&space, &trace, &params).unwrap();
        println!("{}  ->  limit {} (sigma = {sigma})", trace.labels.join(" "), trace.limit_label().unwrap());
        for row in &report.rows {
            println!("  n = {}  d = {}  bound = {}", row.n, row.observed, row.bound);
        }
        assert!(report.holds());
    }
}
