//! Sampled membership tests for convex, midpoint-convex, MT-convex and
//! similarly ordered functions, plus the MT coefficient algebra.
//!
//! Every check sweeps a [`SamplePlan`] exhaustively and reports the
//! maximum-violation witness. Ties are broken towards the lexicographically
//! smallest `(x, y, t)`, so the result does not depend on how the sweep was
//! partitioned.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expr::{FunctionSpec, Interval};
use crate::par::{self, Execution};

/// Default exclusion zone around `t = 0` and `t = 1` for the MT inequality.
pub const DEFAULT_T_MARGIN: f64 = 1e-6;

/// Relative slack below which a violation is attributed to rounding.
pub const VIOLATION_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassError {
    #[error("t = {0} is outside the open interval (0, 1)")]
    TOutOfRange(f64),
    #[error("AM-GM arguments must be nonnegative (got {x}, {y})")]
    NegativeArgument { x: f64, y: f64 },
    #[error("invalid sample plan: {0}")]
    BadPlan(&'static str),
    #[error("f and g must share a domain")]
    DomainMismatch,
}

/// Weights of `f(x)` and `f(y)` in the MT inequality at parameter `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MtCoefficients {
    pub t: f64,
    pub lam: f64,
    pub mu: f64,
}

impl MtCoefficients {
    pub fn new(t: f64) -> Result<MtCoefficients, ClassError> {
        if !(t > 0.0 && t < 1.0) {
            return Err(ClassError::TOutOfRange(t));
        }
        let (st, so) = (t.sqrt(), (1.0 - t).sqrt());
        Ok(MtCoefficients {
            t,
            lam: st / (2.0 * so),
            mu: so / (2.0 * st),
        })
    }

    /// `lam + mu = 1 / (2 sqrt(t (1 - t)))`, never below 1.
    pub fn sum(&self) -> f64 {
        self.lam + self.mu
    }
}

pub fn mt_coefficients(t: f64) -> Result<MtCoefficients, ClassError> {
    MtCoefficients::new(t)
}

/// `(x + y) / 2 - sqrt(x y)`, the AM-GM gap of two nonnegative reals.
pub fn amgm_gap(x: f64, y: f64) -> Result<f64, ClassError> {
    if !(x >= 0.0 && y >= 0.0) {
        return Err(ClassError::NegativeArgument { x, y });
    }
    // (sqrt x - sqrt y)^2 / 2 avoids cancellation and is exactly zero for x == y.
    let d = x.sqrt() - y.sqrt();
    Ok(0.5 * d * d)
}

/// Discretisation of the quantifiers "for all x, y in I and t in (0, 1)".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePlan {
    grid_points: usize,
    random_samples: usize,
    seed: u64,
    t_margin: f64,
}

impl Default for SamplePlan {
    fn default() -> Self {
        SamplePlan {
            grid_points: 64,
            random_samples: 4096,
            seed: 0,
            t_margin: DEFAULT_T_MARGIN,
        }
    }
}

impl SamplePlan {
    pub fn new(
        grid_points: usize,
        random_samples: usize,
        seed: u64,
        t_margin: f64,
    ) -> Result<SamplePlan, ClassError> {
        if grid_points < 3 {
            return Err(ClassError::BadPlan("grid_points must be at least 3"));
        }
        if !(t_margin > 0.0 && t_margin < 0.5) {
            return Err(ClassError::BadPlan("t_margin must lie in (0, 1/2)"));
        }
        Ok(SamplePlan {
            grid_points,
            random_samples,
            seed,
            t_margin,
        })
    }

    pub fn grid_points(&self) -> usize {
        self.grid_points
    }

    pub fn random_samples(&self) -> usize {
        self.random_samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn t_margin(&self) -> f64 {
        self.t_margin
    }

    pub fn with_seed(mut self, seed: u64) -> SamplePlan {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassId {
    Convex,
    Midpoint,
    Mt,
    SimilarlyOrdered,
}

impl ClassId {
    pub fn name(self) -> &'static str {
        match self {
            ClassId::Convex => "convex",
            ClassId::Midpoint => "midpoint",
            ClassId::Mt => "mt",
            ClassId::SimilarlyOrdered => "so",
        }
    }

    /// Whether the quantifier ranges over `t` as well as `(x, y)`.
    pub fn uses_t(self) -> bool {
        matches!(self, ClassId::Convex | ClassId::Mt)
    }
}

/// A class predicate bound to the function(s) it is asked about.
#[derive(Debug, Clone, Copy)]
pub enum Predicate<'a> {
    Convex(&'a FunctionSpec),
    Midpoint(&'a FunctionSpec),
    Mt(&'a FunctionSpec),
    SimilarlyOrdered(&'a FunctionSpec, &'a FunctionSpec),
}

/// Coordinates at which an evaluation was undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub t: Option<f64>,
}

impl Point {
    fn key(&self) -> (f64, f64, f64) {
        (self.x, self.y, self.t.unwrap_or(0.0))
    }

    fn lex_cmp(&self, other: &Point) -> Ordering {
        let (a, b) = (self.key(), other.key());
        a.0.total_cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.total_cmp(&b.2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessKind {
    /// The defining inequality fails.
    Inequality,
    /// `f` is negative at one of the sampled points (MT class only).
    Negative,
    /// Some evaluation left the reals.
    DomainFailure,
}

impl WitnessKind {
    pub fn name(self) -> &'static str {
        match self {
            WitnessKind::Inequality => "inequality",
            WitnessKind::Negative => "negative",
            WitnessKind::DomainFailure => "domain_failure",
        }
    }
}

/// Both sides of the class inequality `lhs <= rhs` at one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub point: Point,
    pub lhs: f64,
    pub rhs: f64,
    /// Largest amount by which any requirement fails; negative means slack.
    pub violation: f64,
    pub kind: WitnessKind,
}

impl Probe {
    pub fn is_violation(&self) -> bool {
        self.violation > VIOLATION_RTOL * (1.0 + self.rhs.abs())
    }

    /// Larger violation first, then lexicographically smaller point.
    fn rank(&self, other: &Probe) -> Ordering {
        self.violation
            .total_cmp(&other.violation)
            .then_with(|| other.point.lex_cmp(&self.point))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub kind: WitnessKind,
    pub x: f64,
    pub y: f64,
    pub t: Option<f64>,
    /// Violation amount; strictly positive.
    pub margin: f64,
}

impl Witness {
    pub fn point(&self) -> Point {
        Point {
            x: self.x,
            y: self.y,
            t: self.t,
        }
    }
}

impl From<Probe> for Witness {
    fn from(p: Probe) -> Witness {
        Witness {
            kind: p.kind,
            x: p.point.x,
            y: p.point.y,
            t: p.point.t,
            margin: p.violation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictStatus {
    HoldsOnSamples,
    Fails,
    UndefinedEncountered,
}

impl VerdictStatus {
    pub fn name(self) -> &'static str {
        match self {
            VerdictStatus::HoldsOnSamples => "holds_on_samples",
            VerdictStatus::Fails => "fails",
            VerdictStatus::UndefinedEncountered => "undefined_encountered",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub class: ClassId,
    pub status: VerdictStatus,
    /// Present exactly when `status` is `Fails`.
    pub witness: Option<Witness>,
    /// The sample closest to (or furthest into) violation.
    pub extreme: Option<Probe>,
    /// First undefined location in lexicographic order.
    pub undefined_at: Option<Point>,
    pub evaluations: u64,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        self.status == VerdictStatus::HoldsOnSamples
    }
}

impl<'a> Predicate<'a> {
    pub fn class(&self) -> ClassId {
        match self {
            Predicate::Convex(_) => ClassId::Convex,
            Predicate::Midpoint(_) => ClassId::Midpoint,
            Predicate::Mt(_) => ClassId::Mt,
            Predicate::SimilarlyOrdered(..) => ClassId::SimilarlyOrdered,
        }
    }

    pub fn f(&self) -> &'a FunctionSpec {
        match *self {
            Predicate::Convex(f)
            | Predicate::Midpoint(f)
            | Predicate::Mt(f)
            | Predicate::SimilarlyOrdered(f, _) => f,
        }
    }

    pub fn domain(&self) -> Interval {
        self.f().domain()
    }

    /// Admissible range of `t`, or `None` for two-point predicates.
    pub fn t_range(&self, t_margin: f64) -> Option<(f64, f64)> {
        match self.class() {
            ClassId::Convex => Some((0.0, 1.0)),
            ClassId::Mt => Some((t_margin, 1.0 - t_margin)),
            _ => None,
        }
    }

    pub(crate) fn check_domains(&self) -> Result<(), ClassError> {
        if let Predicate::SimilarlyOrdered(f, g) = self {
            if f.domain() != g.domain() {
                return Err(ClassError::DomainMismatch);
            }
        }
        Ok(())
    }

    /// Evaluates the predicate at `(x, y, t)`. `t` is ignored by two-point
    /// predicates. Returns the point itself when an evaluation is undefined.
    pub fn probe(&self, x: f64, y: f64, t: Option<f64>) -> Result<Probe, Point> {
        let fx = self.f().eval(x);
        let fy = self.f().eval(y);
        let (gx, gy) = match self {
            Predicate::SimilarlyOrdered(_, g) => (g.eval(x), g.eval(y)),
            _ => (None, None),
        };
        self.probe_with(x, y, t, [fx, fy, gx, gy])
    }

    /// As [`Predicate::probe`] with `f(x), f(y), g(x), g(y)` supplied.
    fn probe_with(
        &self,
        x: f64,
        y: f64,
        t: Option<f64>,
        vals: [Option<f64>; 4],
    ) -> Result<Probe, Point> {
        let t = if self.class().uses_t() { t } else { None };
        let point = Point { x, y, t };
        let [fx, fy] = [vals[0].ok_or(point)?, vals[1].ok_or(point)?];
        let domain = self.domain();
        let inequality = |lhs: f64, rhs: f64| Probe {
            point,
            lhs,
            rhs,
            violation: lhs - rhs,
            kind: WitnessKind::Inequality,
        };
        let probe = match *self {
            Predicate::Convex(f) => {
                let t = t.expect("convexity probe needs t");
                let z = domain.clamp(t * x + (1.0 - t) * y);
                let fz = f.eval(z).ok_or(point)?;
                inequality(fz, t * fx + (1.0 - t) * fy)
            }
            Predicate::Midpoint(f) => {
                let fz = f.eval(domain.clamp(0.5 * (x + y))).ok_or(point)?;
                inequality(fz, 0.5 * (fx + fy))
            }
            Predicate::Mt(f) => {
                let t = t.expect("MT probe needs t");
                let c = MtCoefficients::new(t).map_err(|_| point)?;
                let z = domain.clamp(t * x + (1.0 - t) * y);
                let fz = f.eval(z).ok_or(point)?;
                let mut p = inequality(fz, c.lam * fx + c.mu * fy);
                let negativity = (-fx).max(-fy).max(-fz);
                if negativity > p.violation {
                    p.violation = negativity;
                    p.kind = WitnessKind::Negative;
                }
                p
            }
            Predicate::SimilarlyOrdered(..) => {
                let [gx, gy] = [vals[2].ok_or(point)?, vals[3].ok_or(point)?];
                inequality(0.0, (fx - fy) * (gx - gy))
            }
        };
        Ok(probe)
    }
}

/// Running state of a sweep; merging is associative and commutative.
#[derive(Debug, Clone)]
pub(crate) struct Sweep {
    pub worst_fail: Option<Probe>,
    pub extreme: Option<Probe>,
    pub undefined: Option<Point>,
}

impl Sweep {
    pub const EMPTY: Sweep = Sweep {
        worst_fail: None,
        extreme: None,
        undefined: None,
    };

    pub fn of(result: Result<Probe, Point>) -> Sweep {
        match result {
            Ok(p) => Sweep {
                worst_fail: p.is_violation().then_some(p),
                extreme: Some(p),
                undefined: None,
            },
            Err(pt) => Sweep {
                undefined: Some(pt),
                ..Sweep::EMPTY
            },
        }
    }

    pub fn merge(self, other: Sweep) -> Sweep {
        fn better(a: Option<Probe>, b: Option<Probe>) -> Option<Probe> {
            match (a, b) {
                (Some(a), Some(b)) => Some(if b.rank(&a) == Ordering::Greater {
                    b
                } else {
                    a
                }),
                (a, b) => a.or(b),
            }
        }
        let undefined = match (self.undefined, other.undefined) {
            (Some(a), Some(b)) => Some(if b.lex_cmp(&a) == Ordering::Less {
                b
            } else {
                a
            }),
            (a, b) => a.or(b),
        };
        Sweep {
            worst_fail: better(self.worst_fail, other.worst_fail),
            extreme: better(self.extreme, other.extreme),
            undefined,
        }
    }
}

/// Deterministic sample coordinates for one predicate under one plan.
#[derive(Debug, Clone)]
pub(crate) struct Samples {
    pub xs: Vec<f64>,
    pub fx: Vec<Option<f64>>,
    pub gx: Vec<Option<f64>>,
    pub ts: Vec<f64>,
    pub random: Vec<Point>,
}

impl Samples {
    /// Uniform grid of `side` points per axis plus `random` seeded samples.
    pub fn build(
        pred: &Predicate<'_>,
        side: usize,
        random: usize,
        seed: u64,
        t_margin: f64,
    ) -> Samples {
        let domain = pred.domain();
        let xs = domain.grid(side);
        let fx = pred.f().expr().eval_batch(&xs);
        let gx = match pred {
            Predicate::SimilarlyOrdered(_, g) => g.expr().eval_batch(&xs),
            _ => Vec::new(),
        };
        let t_range = pred.t_range(t_margin);
        let ts = match t_range {
            Some((lo, hi)) => Interval::new(lo, hi).expect("valid t range").grid(side),
            None => Vec::new(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let random = (0..random)
            .map(|_| {
                let x = domain.clamp(domain.a() + domain.width() * rng.random::<f64>());
                let y = domain.clamp(domain.a() + domain.width() * rng.random::<f64>());
                let t =
                    t_range.map(|(lo, hi)| (lo + (hi - lo) * rng.random::<f64>()).clamp(lo, hi));
                Point { x, y, t }
            })
            .collect();
        Samples {
            xs,
            fx,
            gx,
            ts,
            random,
        }
    }

    pub fn grid_len(&self) -> usize {
        let n = self.xs.len();
        if self.ts.is_empty() {
            n * n
        } else {
            n * n * n
        }
    }

    pub fn len(&self) -> usize {
        self.grid_len() + self.random.len()
    }

    /// Probe number `i`: grid samples first, then random ones.
    pub fn probe(&self, pred: &Predicate<'_>, i: usize) -> Result<Probe, Point> {
        let n = self.xs.len();
        let grid = self.grid_len();
        if i < grid {
            let (ix, iy, t) = if self.ts.is_empty() {
                (i / n, i % n, None)
            } else {
                (i / (n * n), (i / n) % n, Some(self.ts[i % n]))
            };
            let g = |j: usize| self.gx.get(j).copied().flatten();
            pred.probe_with(
                self.xs[ix],
                self.xs[iy],
                t,
                [self.fx[ix], self.fx[iy], g(ix), g(iy)],
            )
        } else {
            let p = self.random[i - grid];
            pred.probe(p.x, p.y, p.t)
        }
    }

    /// Function evaluations spent by probe `i`.
    pub fn cost(&self, pred: &Predicate<'_>, i: usize) -> u64 {
        let is_so = pred.class() == ClassId::SimilarlyOrdered;
        match (i < self.grid_len(), is_so) {
            // grid endpoints come from the cached values
            (true, true) => 0,
            (true, false) => 1,
            (false, true) => 4,
            (false, false) => 3,
        }
    }
}

/// Sweeps `plan` for `pred` and merges deterministically.
pub fn check_with(
    pred: Predicate<'_>,
    plan: &SamplePlan,
    exec: Execution,
) -> Result<Verdict, ClassError> {
    pred.check_domains()?;
    let samples = Samples::build(
        &pred,
        plan.grid_points,
        plan.random_samples,
        plan.seed,
        plan.t_margin,
    );
    let n = samples.len();
    let sweep = par::map_reduce(
        exec,
        n,
        Sweep::EMPTY,
        |i| Sweep::of(samples.probe(&pred, i)),
        Sweep::merge,
    );
    let cached = (samples.fx.len() + samples.gx.len()) as u64;
    let evaluations = cached + (0..n).map(|i| samples.cost(&pred, i)).sum::<u64>();
    Ok(finish(pred.class(), sweep, evaluations))
}

fn finish(class: ClassId, sweep: Sweep, evaluations: u64) -> Verdict {
    let (status, witness) = if sweep.undefined.is_some() {
        (VerdictStatus::UndefinedEncountered, None)
    } else if let Some(p) = sweep.worst_fail {
        (VerdictStatus::Fails, Some(Witness::from(p)))
    } else {
        (VerdictStatus::HoldsOnSamples, None)
    };
    Verdict {
        class,
        status,
        witness,
        extreme: sweep.extreme,
        undefined_at: sweep.undefined,
        evaluations,
    }
}

pub fn check_mt_membership(f: &FunctionSpec, plan: &SamplePlan) -> Verdict {
    check_with(Predicate::Mt(f), plan, Execution::default()).expect("single-function predicate")
}

pub fn check_convexity(f: &FunctionSpec, plan: &SamplePlan) -> Verdict {
    check_with(Predicate::Convex(f), plan, Execution::default()).expect("single-function predicate")
}

pub fn check_midpoint_convexity(f: &FunctionSpec, plan: &SamplePlan) -> Verdict {
    check_with(Predicate::Midpoint(f), plan, Execution::default())
        .expect("single-function predicate")
}

pub fn check_similarly_ordered(
    f: &FunctionSpec,
    g: &FunctionSpec,
    plan: &SamplePlan,
) -> Result<Verdict, ClassError> {
    check_with(
        Predicate::SimilarlyOrdered(f, g),
        plan,
        Execution::default(),
    )
}
