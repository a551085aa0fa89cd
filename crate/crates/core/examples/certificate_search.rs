//! Search for certificates by bisection on lambda. Each probe is an exact
//! linear feasibility problem.

use polycert::certsearch::{default_lambda_tol, synthesize_almost, synthesize_polynomial, SearchMode};
use polycert::{FiniteMetricSpace, TableMap};

fn main() {
    let tol = default_lambda_tol();
    let four = FiniteMetricSpace::discrete(["x1", "x2", "x3", "x4"]).unwrap();
    let map = TableMap::new(vec![0, 2, 3, 0], 4).unwrap();
    for mode in [SearchMode::Constant, SearchMode::Full] {
        let res = synthesize_polynomial(&four, &map, 1, mode, &tol).unwrap();
        let lambda = res.lambda.map_or("-".to_string(), |l| format!("{:.6}", l.to_f64()));
        println!("{mode:?}: {:?} after {} probes, lambda {lambda}", res.status, res.probes.len());
    }

    let three = FiniteMetricSpace::discrete(["x1", "x2", "x3"]).unwrap();
    let map = TableMap::new(vec![0, 1, 0], 3).unwrap();
    let res = synthesize_almost(&three, &map, 2, &tol).unwrap();
    let cert = res.certificate.unwrap();
    let l: Vec<String> = cert.l().iter().map(|x| x.to_string()).collect();
    println!("almost: lambda {}, L = [{}]", cert.lambda(), l.join(", "));
}
