//! Parse, evaluate and print coefficient expressions in x and y.

use polycert::{parse, Rational};

fn main() {
    let sources = ["abs(4*x^2 - 3*x + 1/2) + abs(4*y^2 - 3*y + 1/2)", "(5/6)*(x*abs(x - 1/4) + y*abs(y - 1/4))", "x*1/2"];
    let (x, y) = (Rational::new(1, 3), Rational::new(3, 4));
    for src in sources {
        let e = parse(src).unwrap();
        println!("{e}");
        println!("  at ({x}, {y}) = {}", e.evaluate(&x, Some(&y)).unwrap());
        for (scale, term) in e.additive_terms() {
            println!("  term {scale} * {term}");
        }
    }
    for bad in ["x +", "abs x", "x/2", "2^x"] {
        println!("{bad:?}: {}", parse(bad).unwrap_err());
    }
}
