//! The built-in corpus behind `mtconvex demo`.

use crate::classes::{self, Predicate, SamplePlan};
use crate::cli::{search_record, RunOutcome, EXIT_NUMERIC, EXIT_OK};
use crate::expr::{function, FunctionSpec};
use crate::falsify::SearchBudget;
use crate::report::{emit_report, Format, Record};
use crate::theorems::{self, TheoremId};

const THEOREM_CASES: &[(TheoremId, &str, Option<&str>)] = &[
    (TheoremId::HhLeft, "1", None),
    (TheoremId::HhLeft, "x^2", None),
    (TheoremId::HhLeft, "exp(x)", None),
    (TheoremId::HhRight, "x^2", None),
    (TheoremId::HhRight, "exp(x)", None),
    (TheoremId::TauBound, "1", None),
    (TheoremId::TauBound, "x^2", None),
    (TheoremId::TauBound, "x", None),
    (TheoremId::MidpointPi, "1", None),
    (TheoremId::MidpointPi, "x^2", None),
    (TheoremId::MidpointPi, "exp(x)", None),
    (TheoremId::ProductMu, "1", Some("1")),
    (TheoremId::ProductMu, "x", Some("x")),
    (TheoremId::ProductMu, "x", Some("1-x")),
    (TheoremId::SoProduct, "x", Some("x")),
    (TheoremId::SoProduct, "x", Some("x^2")),
    (TheoremId::Pachpatte, "1", Some("1")),
    (TheoremId::Pachpatte, "x", Some("x")),
    (TheoremId::Pachpatte, "x^2", Some("x")),
    (TheoremId::PachpatteMidpoint, "1", Some("1")),
    (TheoremId::PachpatteMidpoint, "x", Some("x")),
    (TheoremId::PachpatteMidpoint, "x^2", Some("x")),
];

fn unit(src: &str) -> FunctionSpec {
    function(src, 0.0, 1.0).expect("demo corpus parses")
}

fn label(f: &str, g: Option<&str>, a: &str, b: &str) -> String {
    match g {
        Some(g) => format!("f={f}, g={g} on [{a}, {b}]"),
        None => format!("f={f} on [{a}, {b}]"),
    }
}

pub(crate) fn run_demo(plan: &SamplePlan, tol: f64, format: Format) -> RunOutcome {
    let seed = plan.seed();
    let mut records = Vec::new();
    let mut stderr = String::new();

    for &(id, f_src, g_src) in THEOREM_CASES {
        let f = unit(f_src);
        let g = g_src.map(unit);
        match theorems::verify(id, &f, g.as_ref(), plan, tol) {
            Ok(report) => records.push(Record::Theorem {
                report,
                subject: label(f_src, g_src, "0", "1"),
                seed,
            }),
            Err(e) => stderr.push_str(&format!("{}: {e}\n", id.name())),
        }
    }

    let sine = function("sin(x)", 0.0, std::f64::consts::PI).expect("demo corpus parses");
    let (sq, x2, x, one_minus_x) = (unit("sqrt(x)"), unit("x^2"), unit("x"), unit("1-x"));
    let checks = [
        (Predicate::Mt(&x2), label("x^2", None, "0", "1")),
        (Predicate::Mt(&sq), label("sqrt(x)", None, "0", "1")),
        (Predicate::Convex(&sine), label("sin(x)", None, "0", "pi")),
        (Predicate::Midpoint(&sq), label("sqrt(x)", None, "0", "1")),
        (
            Predicate::SimilarlyOrdered(&x, &one_minus_x),
            label("x", Some("1-x"), "0", "1"),
        ),
    ];
    for (pred, subject) in checks {
        match classes::check_with(pred, plan, crate::Execution::default()) {
            Ok(verdict) => records.push(Record::Class {
                verdict,
                subject,
                seed,
            }),
            Err(e) => stderr.push_str(&format!("{}: {e}\n", pred.class().name())),
        }
    }

    let searches = [
        (Predicate::Mt(&sq), 1_000, label("sqrt(x)", None, "0", "1")),
        (Predicate::Mt(&x2), 10_000, label("x^2", None, "0", "1")),
    ];
    for (pred, coarse, subject) in searches {
        let budget = SearchBudget::new(coarse, crate::cli::DEFAULT_REFINE_ITERS, seed)
            .expect("demo budgets are valid");
        match search_record(pred, &budget, subject) {
            Ok(rec) => records.push(rec),
            Err(e) => stderr.push_str(&format!("falsify: {e}\n")),
        }
    }

    RunOutcome {
        code: if stderr.is_empty() {
            EXIT_OK
        } else {
            EXIT_NUMERIC
        },
        stdout: emit_report(&records, format),
        stderr,
    }
}
