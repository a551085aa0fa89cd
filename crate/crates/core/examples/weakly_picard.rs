//! An almost-polynomial contraction with two fixed points: orbits converge,
//! but not all to the same limit.

use polycert::contraction::verify_almost_polynomial;
use polycert::mapping::{is_weakly_picard, orbit};
use polycert::{AlmostPolynomialCertificate, CoefficientFamily, FiniteMetricSpace, PolynomialCertificate, Rational, TableMap};

fn main() {
    let space = FiniteMetricSpace::discrete(["x1", "x2", "x3"]).unwrap();
    let map = TableMap::new(vec![0, 1, 0], 3).unwrap();
    let half = Rational::new(1, 2);
    let family = CoefficientFamily::constants([Rational::zero(), Rational::one(), Rational::one()]).unwrap();
    let base = PolynomialCertificate::new(Rational::new(2, 3), family, 1, Rational::one()).unwrap();
    let cert = AlmostPolynomialCertificate::new(base, vec![Rational::one(), half.clone(), half]).unwrap();

    let v = verify_almost_polynomial(&space, &map, &cert).unwrap();
    println!("almost-polynomial at lambda 2/3: {:?} (worst lhs/rhs = {}/{})", v.status, v.lhs, v.rhs);

    let wp = is_weakly_picard(&map);
    println!("weakly Picard: {}, fixed points {:?}", wp.holds, wp.fixed_points);
    for z in 0..3 {
        let o = orbit(&map, z);
        println!("orbit of x{}: tail {:?}, limit x{}", z + 1, o.tail, o.limit().unwrap() + 1);
    }
}
