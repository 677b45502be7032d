//! Both sides of each Hadamard-type inequality, with a signed margin.
//!
//! Every report states `lhs <= rhs` and carries `margin = rhs - lhs` together
//! with the quadrature error attached to each side. The status rule is
//!
//! * `satisfied` when `margin >= -slack`,
//! * `violated` when `margin < -(lhs_error + rhs_error + slack)`,
//! * `inconclusive` otherwise,
//!
//! where `slack = 1e-12 (1 + |rhs|)` absorbs rounding in exact equality cases.
//! A violation is therefore never claimed from quadrature noise.
//!
//! An integral that misses its tolerance still produces a report: its error
//! estimate widens the band and `converged` is false.

use std::f64::consts::PI;

use thiserror::Error;

use crate::classes::{
    self, ClassError, Point, SamplePlan, VerdictStatus, Witness, WitnessKind, VIOLATION_RTOL,
};
use crate::expr::{FunctionSpec, Interval};
use crate::quad::{self, QuadError, QuadResult, Weight};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TheoremId {
    HhLeft,
    HhRight,
    TauBound,
    MidpointPi,
    ProductMu,
    SoProduct,
    Pachpatte,
    PachpatteMidpoint,
}

impl TheoremId {
    pub const ALL: [TheoremId; 8] = [
        TheoremId::HhLeft,
        TheoremId::HhRight,
        TheoremId::TauBound,
        TheoremId::MidpointPi,
        TheoremId::ProductMu,
        TheoremId::SoProduct,
        TheoremId::Pachpatte,
        TheoremId::PachpatteMidpoint,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TheoremId::HhLeft => "hh_left",
            TheoremId::HhRight => "hh_right",
            TheoremId::TauBound => "tau_bound",
            TheoremId::MidpointPi => "midpoint_pi",
            TheoremId::ProductMu => "product_mu",
            TheoremId::SoProduct => "so_product",
            TheoremId::Pachpatte => "pachpatte",
            TheoremId::PachpatteMidpoint => "pachpatte_midpoint",
        }
    }

    pub fn from_name(name: &str) -> Option<TheoremId> {
        TheoremId::ALL.into_iter().find(|t| t.name() == name)
    }

    /// Whether the inequality involves a second function `g`.
    pub fn needs_pair(self) -> bool {
        matches!(
            self,
            TheoremId::ProductMu
                | TheoremId::SoProduct
                | TheoremId::Pachpatte
                | TheoremId::PachpatteMidpoint
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportStatus {
    Satisfied,
    Violated,
    Inconclusive,
}

impl ReportStatus {
    pub fn name(self) -> &'static str {
        match self {
            ReportStatus::Satisfied => "satisfied",
            ReportStatus::Violated => "violated",
            ReportStatus::Inconclusive => "inconclusive",
        }
    }
}

/// Outcome of the sampled hypothesis check attached to a report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Precondition {
    NotChecked,
    Holds,
    Failed(Witness),
    Undefined(Point),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremReport {
    pub theorem: TheoremId,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub lhs_error: f64,
    pub rhs_error: f64,
    pub status: ReportStatus,
    pub evaluations: u64,
    /// Every integral behind the report met its tolerance.
    pub converged: bool,
    pub precondition: Precondition,
}

impl TheoremReport {
    pub fn new(theorem: TheoremId, lhs: Side, rhs: Side) -> TheoremReport {
        let margin = rhs.value - lhs.value;
        let slack = VIOLATION_RTOL * (1.0 + rhs.value.abs());
        let band = lhs.error + rhs.error;
        let status = if margin >= -slack {
            ReportStatus::Satisfied
        } else if margin < -(band + slack) {
            ReportStatus::Violated
        } else {
            ReportStatus::Inconclusive
        };
        TheoremReport {
            theorem,
            lhs: lhs.value,
            rhs: rhs.value,
            margin,
            lhs_error: lhs.error,
            rhs_error: rhs.error,
            status,
            evaluations: lhs.evaluations + rhs.evaluations,
            converged: lhs.converged && rhs.converged,
            precondition: Precondition::NotChecked,
        }
    }

    pub fn with_precondition(mut self, precondition: Precondition) -> TheoremReport {
        self.precondition = precondition;
        self
    }
}

/// One side of an inequality: value, absolute error and evaluation count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Side {
    pub value: f64,
    pub error: f64,
    pub evaluations: u64,
    pub converged: bool,
}

impl Side {
    fn exact(value: f64, evaluations: u64) -> Side {
        Side {
            value,
            error: 0.0,
            evaluations,
            converged: true,
        }
    }

    fn from_quad(q: QuadResult) -> Side {
        Side {
            value: q.value,
            error: q.abs_error_estimate,
            evaluations: q.evaluations,
            converged: q.converged,
        }
    }

    fn plus(self, value: f64, evaluations: u64) -> Side {
        Side {
            value: self.value + value,
            evaluations: self.evaluations + evaluations,
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TheoremError {
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("f and g must share a domain")]
    DomainMismatch,
    #[error("{0} needs a second function g")]
    MissingSecond(&'static str),
    #[error("function is undefined at x = {x}")]
    Undefined { x: f64 },
    #[error("f and g are not similarly ordered (witness x = {}, y = {})", .0.x, .0.y)]
    NotSimilarlyOrdered(Witness),
    #[error(transparent)]
    Class(#[from] ClassError),
}

/// Endpoint products of a pair of functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductTerms {
    /// `f(a) g(a) + f(b) g(b)`
    pub m: f64,
    /// `f(a) g(b) + f(b) g(a)`
    pub n: f64,
}

impl ProductTerms {
    pub fn new(f: &FunctionSpec, g: &FunctionSpec) -> ProductTerms {
        let (fa, fb, ga, gb) = (f.at_a(), f.at_b(), g.at_a(), g.at_b());
        ProductTerms {
            m: fa * ga + fb * gb,
            n: fa * gb + fb * ga,
        }
    }
}

fn eval_at(f: &FunctionSpec, x: f64) -> Result<f64, TheoremError> {
    f.eval(x).ok_or(TheoremError::Undefined { x })
}

fn same_domain(f: &FunctionSpec, g: &FunctionSpec) -> Result<Interval, TheoremError> {
    if f.domain() == g.domain() {
        Ok(f.domain())
    } else {
        Err(TheoremError::DomainMismatch)
    }
}

/// `(1/(b-a)) int_a^b f`.
fn mean(f: &FunctionSpec, tol: f64) -> Result<Side, TheoremError> {
    let q = quad::integrate(f, tol)?;
    Ok(Side::from_quad(q.scaled(1.0 / f.domain().width())))
}

/// `(1/(b-a)) int_a^b w f g`.
fn product_mean(
    f: &FunctionSpec,
    g: &FunctionSpec,
    weight: Weight,
    tol: f64,
) -> Result<Side, TheoremError> {
    let d = same_domain(f, g)?;
    let q = quad::integrate_weighted_fn(|x| Some(f.eval(x)? * g.eval(x)?), d, weight, tol)?;
    Ok(Side::from_quad(q.scaled(1.0 / d.width())))
}

fn midpoint_value(f: &FunctionSpec) -> Result<f64, TheoremError> {
    eval_at(f, f.domain().midpoint())
}

/// `f((a+b)/2) <= (1/(b-a)) int_a^b f`.
pub fn verify_hadamard_left(f: &FunctionSpec, tol: f64) -> Result<TheoremReport, TheoremError> {
    let lhs = Side::exact(midpoint_value(f)?, 1);
    Ok(TheoremReport::new(TheoremId::HhLeft, lhs, mean(f, tol)?))
}

/// `(2/(b-a)) int_a^b tau f <= (f(a) + f(b)) / 2`.
pub fn verify_tau_bound(f: &FunctionSpec, tol: f64) -> Result<TheoremReport, TheoremError> {
    let q = quad::integrate_weighted(f, Weight::Tau, tol)?;
    let lhs = Side::from_quad(q.scaled(2.0 / f.domain().width()));
    let rhs = Side::exact(0.5 * (f.at_a() + f.at_b()), 2);
    Ok(TheoremReport::new(TheoremId::TauBound, lhs, rhs))
}

/// `(pi/2) f((a+b)/2) <= f(a) + f(b)`.
pub fn verify_midpoint_pi(f: &FunctionSpec) -> Result<TheoremReport, TheoremError> {
    let lhs = Side::exact(0.5 * PI * midpoint_value(f)?, 1);
    let rhs = Side::exact(f.at_a() + f.at_b(), 2);
    Ok(TheoremReport::new(TheoremId::MidpointPi, lhs, rhs))
}

/// `(1/(b-a)) int_a^b mu f g <= M/12 + N/24`.
pub fn verify_product_mu(
    f: &FunctionSpec,
    g: &FunctionSpec,
    tol: f64,
) -> Result<TheoremReport, TheoremError> {
    let lhs = product_mean(f, g, Weight::Mu, tol)?;
    let p = ProductTerms::new(f, g);
    let rhs = Side::exact(p.m / 12.0 + p.n / 24.0, 4);
    Ok(TheoremReport::new(TheoremId::ProductMu, lhs, rhs))
}

/// `(1/(b-a)) int_a^b mu f g <= M/8` for similarly ordered `f`, `g`.
///
/// Unlike the other verifications, a failed similarly-ordered check on
/// `plan` is an error rather than a warning.
pub fn verify_so_product(
    f: &FunctionSpec,
    g: &FunctionSpec,
    plan: &SamplePlan,
    tol: f64,
) -> Result<TheoremReport, TheoremError> {
    same_domain(f, g)?;
    let so = classes::check_similarly_ordered(f, g, plan)?;
    match so.status {
        VerdictStatus::Fails => {
            return Err(TheoremError::NotSimilarlyOrdered(
                so.witness.expect("failing verdict has a witness"),
            ))
        }
        VerdictStatus::UndefinedEncountered => {
            let at = so.undefined_at.expect("undefined verdict has a location");
            return Err(TheoremError::Undefined { x: at.x });
        }
        VerdictStatus::HoldsOnSamples => {}
    }
    let lhs = product_mean(f, g, Weight::Mu, tol)?;
    let rhs = Side::exact(ProductTerms::new(f, g).m / 8.0, 4);
    Ok(TheoremReport::new(TheoremId::SoProduct, lhs, rhs))
}

/// `(1/(b-a)) int_a^b f g <= M/3 + N/6`.
pub fn verify_pachpatte(
    f: &FunctionSpec,
    g: &FunctionSpec,
    tol: f64,
) -> Result<TheoremReport, TheoremError> {
    let lhs = product_mean(f, g, Weight::None, tol)?;
    let p = ProductTerms::new(f, g);
    let rhs = Side::exact(p.m / 3.0 + p.n / 6.0, 4);
    Ok(TheoremReport::new(TheoremId::Pachpatte, lhs, rhs))
}

/// `2 f(m) g(m) <= (1/(b-a)) int_a^b f g + M/6 + N/3`, `m = (a+b)/2`.
pub fn verify_pachpatte_midpoint(
    f: &FunctionSpec,
    g: &FunctionSpec,
    tol: f64,
) -> Result<TheoremReport, TheoremError> {
    let d = same_domain(f, g)?;
    let lhs = Side::exact(
        2.0 * eval_at(f, d.midpoint())? * eval_at(g, d.midpoint())?,
        2,
    );
    let p = ProductTerms::new(f, g);
    let rhs = product_mean(f, g, Weight::None, tol)?.plus(p.m / 6.0 + p.n / 3.0, 4);
    Ok(TheoremReport::new(TheoremId::PachpatteMidpoint, lhs, rhs))
}

/// Both halves of the classical double inequality for convex `f`.
pub fn verify_classical_hh(
    f: &FunctionSpec,
    tol: f64,
) -> Result<(TheoremReport, TheoremReport), TheoremError> {
    let avg = mean(f, tol)?;
    let left = TheoremReport::new(TheoremId::HhLeft, Side::exact(midpoint_value(f)?, 1), avg);
    let right = TheoremReport::new(
        TheoremId::HhRight,
        avg,
        Side::exact(0.5 * (f.at_a() + f.at_b()), 2),
    );
    Ok((left, right))
}

/// Runs `theorem` on `f` (and `g` for product inequalities).
pub fn verify(
    theorem: TheoremId,
    f: &FunctionSpec,
    g: Option<&FunctionSpec>,
    plan: &SamplePlan,
    tol: f64,
) -> Result<TheoremReport, TheoremError> {
    let pair = || g.ok_or(TheoremError::MissingSecond(theorem.name()));
    match theorem {
        TheoremId::HhLeft => verify_hadamard_left(f, tol),
        TheoremId::HhRight => Ok(verify_classical_hh(f, tol)?.1),
        TheoremId::TauBound => verify_tau_bound(f, tol),
        TheoremId::MidpointPi => verify_midpoint_pi(f),
        TheoremId::ProductMu => verify_product_mu(f, pair()?, tol),
        TheoremId::SoProduct => verify_so_product(f, pair()?, plan, tol),
        TheoremId::Pachpatte => verify_pachpatte(f, pair()?, tol),
        TheoremId::PachpatteMidpoint => verify_pachpatte_midpoint(f, pair()?, tol),
    }
}

fn nonnegative_on_samples(f: &FunctionSpec, plan: &SamplePlan) -> Precondition {
    let d = f.domain();
    let mut worst: Option<(f64, f64)> = None;
    for x in d.grid(plan.grid_points()) {
        match f.eval(x) {
            None => return Precondition::Undefined(Point { x, y: x, t: None }),
            Some(v) if v < 0.0 && worst.is_none_or(|(_, w)| v < w) => worst = Some((x, v)),
            Some(_) => {}
        }
    }
    match worst {
        Some((x, v)) => Precondition::Failed(Witness {
            kind: WitnessKind::Negative,
            x,
            y: x,
            t: None,
            margin: -v,
        }),
        None => Precondition::Holds,
    }
}

fn from_verdict(v: classes::Verdict) -> Precondition {
    match v.status {
        VerdictStatus::HoldsOnSamples => Precondition::Holds,
        VerdictStatus::Fails => Precondition::Failed(v.witness.expect("failing verdict")),
        VerdictStatus::UndefinedEncountered => {
            Precondition::Undefined(v.undefined_at.expect("undefined verdict"))
        }
    }
}

/// Sampled hypothesis check for `theorem`: MT membership for the MT
/// inequalities, convexity (plus nonnegativity for the product forms) for
/// the classical ones. The first failing function wins.
pub fn check_precondition(
    theorem: TheoremId,
    f: &FunctionSpec,
    g: Option<&FunctionSpec>,
    plan: &SamplePlan,
) -> Precondition {
    let functions: Vec<&FunctionSpec> = if theorem.needs_pair() {
        std::iter::once(f).chain(g).collect()
    } else {
        vec![f]
    };
    for h in functions {
        let result = match theorem {
            TheoremId::HhLeft
            | TheoremId::TauBound
            | TheoremId::MidpointPi
            | TheoremId::ProductMu
            | TheoremId::SoProduct => from_verdict(classes::check_mt_membership(h, plan)),
            TheoremId::HhRight => from_verdict(classes::check_convexity(h, plan)),
            TheoremId::Pachpatte | TheoremId::PachpatteMidpoint => {
                match from_verdict(classes::check_convexity(h, plan)) {
                    Precondition::Holds => nonnegative_on_samples(h, plan),
                    other => other,
                }
            }
        };
        if result != Precondition::Holds {
            return result;
        }
    }
    Precondition::Holds
}
