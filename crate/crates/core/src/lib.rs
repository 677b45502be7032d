//! Sampling-based tests for MT-convexity and related function classes, and
//! numerical verification of Hadamard-type integral inequalities with
//! controlled quadrature error.
//!
//! A function `f` is MT-convex on `I` when it is nonnegative and
//!
//! ```text
//! f(t x + (1 - t) y) <= sqrt(t) / (2 sqrt(1 - t)) f(x) + sqrt(1 - t) / (2 sqrt(t)) f(y)
//! ```
//!
//! for all `x, y` in `I` and `t` in `(0, 1)`.
//!
//! ```
//! use mtconvex::{function, check_mt_membership, SamplePlan, theorems};
//!
//! let f = function("x^2", 0.0, 1.0).unwrap();
//! assert!(check_mt_membership(&f, &SamplePlan::default()).holds());
//! let report = theorems::verify_tau_bound(&f, 1e-10).unwrap();
//! assert!(report.margin > 0.0);
//! ```

pub mod classes;
pub mod cli;
mod demo;
pub mod expr;
pub mod falsify;
pub mod par;
pub mod quad;
pub mod report;
pub mod theorems;

pub use classes::{
    amgm_gap, check_convexity, check_midpoint_convexity, check_mt_membership,
    check_similarly_ordered, mt_coefficients, ClassId, MtCoefficients, Predicate, SamplePlan,
    Verdict, VerdictStatus, Witness, WitnessKind,
};
pub use expr::{function, Expr, FunctionSpec, Interval};
pub use falsify::{falsify_pointwise, refine_witness, SearchBudget};
pub use par::Execution;
pub use quad::{integrate, integrate_weighted, tau_substitution_check, QuadResult, Weight};
pub use theorems::{ReportStatus, TheoremId, TheoremReport};
