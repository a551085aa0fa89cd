//! Polynomial-contraction certificates on finite and grid-sampled metric
//! spaces: exact verification, synthesis by bisection with an exact simplex,
//! and Picard iteration with a-priori error bounds.

pub mod certsearch;
pub mod cli;
pub mod contraction;
pub mod expr;
pub mod mapping;
pub mod metricspace;
pub mod picard;
pub mod rational;

pub use contraction::{
    AlmostPolynomialCertificate, Coefficient, CoefficientFamily, PolynomialCertificate, RatioBound, Status, Verdict,
};
pub use expr::{parse, Expression};
pub use mapping::{Mapping, PiecewiseMap, TableMap};
pub use metricspace::{FiniteMetricSpace, IntervalGridSpace, MetricSpace};
pub use picard::{iterate, PicardTrace, StopRule};
pub use rational::Rational;
