//! Check the metric axioms on a distance matrix and print the first
//! violation, if any.

use polycert::metricspace::{validate_metric, MetricVerdict};
use polycert::Rational;

fn matrix(rows: &[[i64; 4]]) -> Vec<Vec<Rational>> {
    rows.iter().map(|r| r.iter().map(|&v| Rational::from_integer(v)).collect()).collect()
}

fn main() {
    let labels: Vec<String> = ["x1", "x2", "x3", "x4"].iter().map(|s| s.to_string()).collect();
    let discrete = matrix(&[[0, 1, 1, 1], [1, 0, 1, 1], [1, 1, 0, 1], [1, 1, 1, 0]]);
    // the discrete metric plus a nonnegative symmetric weight
    let weighted = matrix(&[[0, 4, 3, 2], [4, 0, 4, 7], [3, 4, 0, 3], [2, 7, 3, 0]]);

    for (name, m) in [("discrete", &discrete), ("weighted", &weighted)] {
        match validate_metric(m, &labels).expect("square matrix") {
            MetricVerdict::Valid => println!("{name}: metric"),
            MetricVerdict::Invalid(v) => println!("{name}: {} violation, {}", v.kind(), v.describe(&labels)),
        }
    }
}
