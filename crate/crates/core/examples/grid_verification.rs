//! Check a polynomial contraction with an expression coefficient at every
//! ordered pair of a rational grid on [0, 1]. The map is discontinuous at 1.

use polycert::contraction::verify_polynomial;
use polycert::mapping::{Branch, Domain};
use polycert::{iterate, parse, Coefficient, CoefficientFamily, IntervalGridSpace, PiecewiseMap, PolynomialCertificate};
use polycert::{Rational, StopRule};

fn main() {
    let grid = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(401);
    let space = IntervalGridSpace::new(Rational::zero(), Rational::one(), grid).unwrap();
    let map = PiecewiseMap::new(
        &space,
        vec![
            Branch { domain: Domain::parse("[0, 1)").unwrap(), expr: parse("1/4").unwrap() },
            Branch { domain: Domain::parse("{1}").unwrap(), expr: parse("0").unwrap() },
        ],
    )
    .unwrap();
    let a0 = parse("(5/6)*(x*abs(x - 1/4) + y*abs(y - 1/4))").unwrap();
    let family = CoefficientFamily::new(vec![Coefficient::Expr(a0), Coefficient::Constant(Rational::one())]).unwrap();
    let cert = PolynomialCertificate::new(Rational::new(1, 2), family, 1, Rational::one()).unwrap();

    let v = verify_polynomial(&space, &map, &cert).unwrap();
    let w = v.worst_pair.as_ref().unwrap();
    println!("{} grid pairs: {:?}", v.pairs_checked, v.status);
    println!("tightest pair ({}, {}): lhs {} rhs {}", w.p_label, w.q_label, v.lhs, v.rhs);

    let trace = iterate(&space, &map, &Rational::one(), &StopRule::default()).unwrap();
    println!("orbit of 1: {}", trace.labels.join(" -> "));
}
