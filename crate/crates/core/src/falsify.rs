//! Counterexample search for the class predicates.
//!
//! A coarse sweep (half uniform grid, half seeded random samples) locates the
//! worst violation; coordinate-wise golden-section ascent then pushes its
//! margin up. The sweep is data-parallel and merged deterministically, the
//! refinement is sequential.

use thiserror::Error;

use crate::classes::{
    ClassError, Point, Predicate, Probe, Samples, Sweep, Witness, WitnessKind, DEFAULT_T_MARGIN,
};
use crate::par::{self, Execution};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section steps per coordinate line search.
const LINE_STEPS: usize = 48;

/// Coordinate sweeps per refinement iteration.
const SWEEPS_PER_ITER: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FalsifyError {
    #[error("search budget needs at least 27 coarse evaluations (got {0})")]
    BudgetTooSmall(usize),
    #[error("witness has no positive violation to refine")]
    NoViolation,
    #[error(transparent)]
    Class(#[from] ClassError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    coarse_evals: usize,
    refine_iters: usize,
    seed: u64,
}

impl SearchBudget {
    pub fn new(
        coarse_evals: usize,
        refine_iters: usize,
        seed: u64,
    ) -> Result<SearchBudget, FalsifyError> {
        if coarse_evals < 27 {
            return Err(FalsifyError::BudgetTooSmall(coarse_evals));
        }
        Ok(SearchBudget {
            coarse_evals,
            refine_iters,
            seed,
        })
    }

    pub fn coarse_evals(&self) -> usize {
        self.coarse_evals
    }

    pub fn refine_iters(&self) -> usize {
        self.refine_iters
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Falsification {
    pub witness: Option<Witness>,
    /// Predicate evaluations (probes), coarse and refinement together.
    pub probes: u64,
}

/// Grid side length for a predicate of the given arity under `coarse` probes.
fn grid_side(uses_t: bool, coarse: usize) -> usize {
    let half = (coarse / 2) as f64;
    let side = if uses_t { half.cbrt() } else { half.sqrt() };
    // cbrt/sqrt of a perfect power may land a hair below the integer
    ((side + 1e-9).floor() as usize).max(3)
}

pub fn falsify_pointwise(
    pred: Predicate<'_>,
    budget: &SearchBudget,
) -> Result<Falsification, FalsifyError> {
    falsify_with(pred, budget, DEFAULT_T_MARGIN, Execution::default())
}

pub fn falsify_with(
    pred: Predicate<'_>,
    budget: &SearchBudget,
    t_margin: f64,
    exec: Execution,
) -> Result<Falsification, FalsifyError> {
    pred.check_domains()?;
    let side = grid_side(pred.class().uses_t(), budget.coarse_evals);
    let grid = if pred.class().uses_t() {
        side.pow(3)
    } else {
        side * side
    };
    let random = budget.coarse_evals.saturating_sub(grid);
    let samples = Samples::build(&pred, side, random, budget.seed, t_margin);
    let n = samples.len();
    let sweep = par::map_reduce(
        exec,
        n,
        Sweep::EMPTY,
        |i| Sweep::of(samples.probe(&pred, i)),
        Sweep::merge,
    );
    let mut probes = n as u64;

    if let Some(at) = sweep.undefined {
        let witness = Witness {
            kind: WitnessKind::DomainFailure,
            x: at.x,
            y: at.y,
            t: at.t,
            margin: f64::INFINITY,
        };
        return Ok(Falsification {
            witness: Some(witness),
            probes,
        });
    }
    let Some(start) = sweep.worst_fail else {
        return Ok(Falsification {
            witness: None,
            probes,
        });
    };
    let mut search = LineSearch {
        pred,
        t_margin,
        probes: 0,
    };
    let refined = search.refine(start, budget.refine_iters);
    probes += search.probes;
    Ok(Falsification {
        witness: Some(Witness::from(refined)),
        probes,
    })
}

/// Improves a violating witness by coordinate-wise golden-section ascent.
///
/// The returned margin is never below the input margin.
pub fn refine_witness(
    pred: Predicate<'_>,
    witness: &Witness,
    iters: usize,
) -> Result<Witness, FalsifyError> {
    refine_witness_with(pred, witness, iters, DEFAULT_T_MARGIN)
}

pub fn refine_witness_with(
    pred: Predicate<'_>,
    witness: &Witness,
    iters: usize,
    t_margin: f64,
) -> Result<Witness, FalsifyError> {
    pred.check_domains()?;
    if witness.kind == WitnessKind::DomainFailure {
        return Ok(*witness);
    }
    let start = pred
        .probe(witness.x, witness.y, witness.t)
        .ok()
        .filter(Probe::is_violation)
        .ok_or(FalsifyError::NoViolation)?;
    let mut search = LineSearch {
        pred,
        t_margin,
        probes: 0,
    };
    Ok(Witness::from(search.refine(start, iters)))
}

struct LineSearch<'a> {
    pred: Predicate<'a>,
    t_margin: f64,
    probes: u64,
}

#[derive(Clone, Copy)]
enum Coord {
    X,
    Y,
    T,
}

impl<'a> LineSearch<'a> {
    fn violation(&mut self, p: Point) -> Option<Probe> {
        self.probes += 1;
        self.pred.probe(p.x, p.y, p.t).ok()
    }

    fn range(&self, c: Coord) -> (f64, f64) {
        let d = self.pred.domain();
        match c {
            Coord::X | Coord::Y => (d.a(), d.b()),
            Coord::T => self.pred.t_range(self.t_margin).expect("t coordinate"),
        }
    }

    fn moved(p: Point, c: Coord, v: f64) -> Point {
        match c {
            Coord::X => Point { x: v, ..p },
            Coord::Y => Point { y: v, ..p },
            Coord::T => Point { t: Some(v), ..p },
        }
    }

    fn refine(&mut self, start: Probe, iters: usize) -> Probe {
        let mut best = start;
        let coords: &[Coord] = if self.pred.class().uses_t() {
            &[Coord::X, Coord::Y, Coord::T]
        } else {
            &[Coord::X, Coord::Y]
        };
        for k in 0..iters {
            let shrink = 0.5f64.powi(k as i32);
            for _ in 0..SWEEPS_PER_ITER {
                for &c in coords {
                    if let Some(p) = self.line(best, c, shrink) {
                        if p.violation > best.violation {
                            best = p;
                        }
                    }
                }
            }
        }
        best
    }

    /// Golden-section maximisation along one coordinate inside a bracket of
    /// relative radius `shrink` around the current point.
    fn line(&mut self, from: Probe, c: Coord, shrink: f64) -> Option<Probe> {
        let (lo, hi) = self.range(c);
        let cur = match c {
            Coord::X => from.point.x,
            Coord::Y => from.point.y,
            Coord::T => from.point.t.expect("t coordinate"),
        };
        let r = (hi - lo) * shrink;
        let (mut a, mut b) = ((cur - r).max(lo), (cur + r).min(hi));
        let score = |p: &Option<Probe>| p.map_or(f64::NEG_INFINITY, |p| p.violation);

        let mut best: Option<Probe> = None;
        let mut consider = |cand: Option<Probe>| {
            if score(&cand) > score(&best) {
                best = cand;
            }
        };
        let at = |s: &mut Self, v: f64| s.violation(Self::moved(from.point, c, v));
        let ends = (at(self, a), at(self, b));
        consider(ends.0);
        consider(ends.1);

        let mut x1 = b - INV_PHI * (b - a);
        let mut x2 = a + INV_PHI * (b - a);
        let mut p1 = at(self, x1);
        let mut p2 = at(self, x2);
        for _ in 0..LINE_STEPS {
            if score(&p1) >= score(&p2) {
                consider(p2);
                b = x2;
                x2 = x1;
                p2 = p1;
                x1 = b - INV_PHI * (b - a);
                p1 = at(self, x1);
            } else {
                consider(p1);
                a = x1;
                x1 = x2;
                p1 = p2;
                x2 = a + INV_PHI * (b - a);
                p2 = at(self, x2);
            }
        }
        consider(p1);
        consider(p2);
        best
    }
}
