//! Verify a polynomial-contraction certificate on a four-point space whose
//! map is not a Banach contraction, and print the per-pair terms.

use polycert::contraction::{polynomial_terms, verify_banach, verify_polynomial};
use polycert::{Coefficient, CoefficientFamily, FiniteMetricSpace, PolynomialCertificate, Rational, TableMap};

fn main() {
    let space = FiniteMetricSpace::discrete(["x1", "x2", "x3", "x4"]).unwrap();
    let map = TableMap::new(vec![0, 2, 3, 0], 4).unwrap();
    let a0 = [[0, 3, 2, 1], [3, 0, 3, 6], [2, 3, 0, 2], [1, 6, 2, 0]]
        .iter()
        .map(|r| r.iter().map(|&v| Rational::from_integer(v)).collect())
        .collect();
    let family = CoefficientFamily::new(vec![Coefficient::Table(a0), Coefficient::Constant(Rational::one())]).unwrap();
    let cert = PolynomialCertificate::new(Rational::new(3, 4), family.clone(), 1, Rational::one()).unwrap();

    println!("pair      lhs  rhs");
    for p in 0..4 {
        for q in p + 1..4 {
            let (lhs, rhs) = polynomial_terms(&space, &map, &family, &p, &q).unwrap();
            println!("(x{}, x{})  {lhs:<3}  {rhs}", p + 1, q + 1);
        }
    }

    let v = verify_polynomial(&space, &map, &cert).unwrap();
    println!("\nlambda = {}: {:?}, smallest feasible lambda {}", v.lambda, v.status, v.min_feasible_lambda.unwrap());
    println!("Lipschitz ratio: {}", verify_banach(&space, &map).unwrap().ratio().unwrap());
}
