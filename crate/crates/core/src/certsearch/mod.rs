//! Certificate synthesis.

pub mod lp;
pub mod synth;

pub use lp::{lp_feasible, Constraint, Feasibility, FeasibilityProblem, Relation};
pub use synth::{
    default_lambda_tol, synthesize_almost, synthesize_polynomial, Probe, SearchMode, SynthesisError,
    SynthesisResult, SynthesisStatus,
};
