//! Command-line front end.
//!
//! Exit codes: 0 everything holds, 1 a violation or witness was found,
//! 2 usage or parse error, 3 numerical failure (undefined evaluation,
//! non-convergence, or a result inside the quadrature error band).

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::classes::{self, ClassId, Predicate, SamplePlan, VerdictStatus, WitnessKind};
use crate::expr::{function, FunctionSpec};
use crate::falsify::{self, SearchBudget};
use crate::par::Execution;
use crate::quad::DEFAULT_TOL;
use crate::report::{emit_report, Format, Record};
use crate::theorems::{self, ReportStatus, TheoremError, TheoremId};

/// Refinement rounds used by `falsify`.
pub const DEFAULT_REFINE_ITERS: usize = 10;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "mtconvex",
    version,
    about = "Test MT-convexity and verify Hadamard-type inequalities numerically"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sampled class-membership test
    Check {
        #[arg(long, value_enum)]
        class: ClassArg,
        #[command(flatten)]
        fns: FnArgs,
        #[command(flatten)]
        plan: PlanArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Evaluate both sides of one or all inequalities
    Verify {
        #[arg(long, value_parser = parse_theorem, required_unless_present = "all", conflicts_with = "all")]
        theorem: Option<TheoremId>,
        #[arg(long)]
        all: bool,
        #[command(flatten)]
        fns: FnArgs,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        plan: PlanArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Search for a counterexample witness
    Falsify {
        #[arg(long, value_enum)]
        class: ClassArg,
        #[command(flatten)]
        fns: FnArgs,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        #[arg(long, default_value_t = DEFAULT_REFINE_ITERS)]
        refine: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run the built-in corpus and print the margin table
    Demo {
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        plan: PlanArgs,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug, Args)]
struct FnArgs {
    /// Expression for f in the variable x
    #[arg(long = "fn", value_name = "EXPR", allow_hyphen_values = true)]
    f: String,
    /// Expression for g (product inequalities and `--class so`)
    #[arg(long = "gn", value_name = "EXPR", allow_hyphen_values = true)]
    g: Option<String>,
    /// Interval endpoints
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true, required = true)]
    on: Vec<f64>,
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[arg(long, default_value_t = 64)]
    grid: usize,
    #[arg(long = "rand", default_value_t = 4096)]
    random: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct OutArgs {
    #[arg(long, value_enum, default_value_t = FormatArg::Human)]
    format: FormatArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Human,
    Machine,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ClassArg {
    Convex,
    Midpoint,
    Mt,
    So,
}

impl From<ClassArg> for ClassId {
    fn from(c: ClassArg) -> ClassId {
        match c {
            ClassArg::Convex => ClassId::Convex,
            ClassArg::Midpoint => ClassId::Midpoint,
            ClassArg::Mt => ClassId::Mt,
            ClassArg::So => ClassId::SimilarlyOrdered,
        }
    }
}

fn parse_theorem(s: &str) -> Result<TheoremId, String> {
    TheoremId::from_name(s).ok_or_else(|| {
        let names: Vec<_> = TheoremId::ALL.iter().map(|t| t.name()).collect();
        format!(
            "unknown theorem `{s}` (expected one of {})",
            names.join(", ")
        )
    })
}

/// Exit code plus captured output streams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl RunOutcome {
    fn usage(msg: impl std::fmt::Display) -> RunOutcome {
        RunOutcome {
            code: EXIT_USAGE,
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
        }
    }
}

struct Subjects {
    f: FunctionSpec,
    g: Option<FunctionSpec>,
    label: String,
}

impl FnArgs {
    fn load(&self) -> Result<Subjects, RunOutcome> {
        let (a, b) = (self.on[0], self.on[1]);
        let f = function(&self.f, a, b).map_err(|e| RunOutcome::usage(format!("--fn: {e}")))?;
        let g = self
            .g
            .as_deref()
            .map(|src| function(src, a, b).map_err(|e| RunOutcome::usage(format!("--gn: {e}"))))
            .transpose()?;
        let mut label = format!("f={}", self.f);
        if let Some(src) = &self.g {
            label.push_str(&format!(", g={src}"));
        }
        label.push_str(&format!(" on [{a}, {b}]"));
        Ok(Subjects { f, g, label })
    }
}

impl PlanArgs {
    fn plan(&self) -> Result<SamplePlan, RunOutcome> {
        SamplePlan::new(self.grid, self.random, self.seed, classes::DEFAULT_T_MARGIN)
            .map_err(RunOutcome::usage)
    }
}

fn format_of(out: &OutArgs) -> Format {
    match out.format {
        FormatArg::Human => Format::Human,
        FormatArg::Machine => Format::Machine,
    }
}

fn predicate<'a>(class: ClassId, s: &'a Subjects) -> Result<Predicate<'a>, RunOutcome> {
    Ok(match class {
        ClassId::Convex => Predicate::Convex(&s.f),
        ClassId::Midpoint => Predicate::Midpoint(&s.f),
        ClassId::Mt => Predicate::Mt(&s.f),
        ClassId::SimilarlyOrdered => {
            let g =
                s.g.as_ref()
                    .ok_or_else(|| RunOutcome::usage("--class so needs --gn"))?;
            Predicate::SimilarlyOrdered(&s.f, g)
        }
    })
}

fn check_tol(tol: f64) -> Result<(), RunOutcome> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(RunOutcome::usage(format!(
            "--tol must be positive (got {tol})"
        )))
    }
}

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I) -> RunOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if e.use_stderr() {
                RunOutcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                RunOutcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    match dispatch(cli.command) {
        Ok(outcome) | Err(outcome) => outcome,
    }
}

fn dispatch(command: Command) -> Result<RunOutcome, RunOutcome> {
    match command {
        Command::Check {
            class,
            fns,
            plan,
            out,
        } => {
            let subjects = fns.load()?;
            let plan = plan.plan()?;
            let pred = predicate(class.into(), &subjects)?;
            let verdict = classes::check_with(pred, &plan, Execution::default())
                .map_err(RunOutcome::usage)?;
            let code = match verdict.status {
                VerdictStatus::HoldsOnSamples => EXIT_OK,
                VerdictStatus::Fails => EXIT_VIOLATION,
                VerdictStatus::UndefinedEncountered => EXIT_NUMERIC,
            };
            let rec = Record::Class {
                verdict,
                subject: subjects.label,
                seed: plan.seed(),
            };
            Ok(RunOutcome {
                code,
                stdout: emit_report(&[rec], format_of(&out)),
                stderr: String::new(),
            })
        }
        Command::Verify {
            theorem,
            all,
            fns,
            tol,
            plan,
            out,
        } => {
            check_tol(tol)?;
            let subjects = fns.load()?;
            let plan = plan.plan()?;
            let ids: Vec<TheoremId> = if all {
                TheoremId::ALL
                    .into_iter()
                    .filter(|t| !t.needs_pair() || subjects.g.is_some())
                    .collect()
            } else {
                let t = theorem.expect("clap enforces --theorem or --all");
                if t.needs_pair() && subjects.g.is_none() {
                    return Err(RunOutcome::usage(format!("{} needs --gn", t.name())));
                }
                vec![t]
            };
            Ok(verify_many(
                &ids,
                &subjects,
                &plan,
                tol,
                !all,
                format_of(&out),
            ))
        }
        Command::Falsify {
            class,
            fns,
            budget,
            refine,
            seed,
            out,
        } => {
            let subjects = fns.load()?;
            let budget = SearchBudget::new(budget, refine, seed).map_err(RunOutcome::usage)?;
            let pred = predicate(class.into(), &subjects)?;
            let rec =
                search_record(pred, &budget, subjects.label.clone()).map_err(RunOutcome::usage)?;
            let code = match &rec {
                Record::Search {
                    witness: Some(w), ..
                } if w.kind == WitnessKind::DomainFailure => EXIT_NUMERIC,
                Record::Search {
                    witness: Some(_), ..
                } => EXIT_VIOLATION,
                _ => EXIT_OK,
            };
            Ok(RunOutcome {
                code,
                stdout: emit_report(&[rec], format_of(&out)),
                stderr: String::new(),
            })
        }
        Command::Demo { tol, plan, out } => {
            check_tol(tol)?;
            let plan = plan.plan()?;
            Ok(crate::demo::run_demo(&plan, tol, format_of(&out)))
        }
    }
}

pub(crate) fn search_record(
    pred: Predicate<'_>,
    budget: &SearchBudget,
    subject: String,
) -> Result<Record, falsify::FalsifyError> {
    let found = falsify::falsify_pointwise(pred, budget)?;
    let sides = found
        .witness
        .filter(|w| w.kind != WitnessKind::DomainFailure)
        .and_then(|w| pred.probe(w.x, w.y, w.t).ok())
        .map(|p| (p.lhs, p.rhs));
    Ok(Record::Search {
        class: pred.class(),
        witness: found.witness,
        sides,
        probes: found.probes,
        subject,
        seed: budget.seed(),
    })
}

fn verify_many(
    ids: &[TheoremId],
    s: &Subjects,
    plan: &SamplePlan,
    tol: f64,
    single: bool,
    format: Format,
) -> RunOutcome {
    let mut records = Vec::new();
    let mut stderr = String::new();
    let mut violated = false;
    let mut numeric = false;
    for &id in ids {
        match theorems::verify(id, &s.f, s.g.as_ref(), plan, tol) {
            Ok(report) => {
                let pre = theorems::check_precondition(id, &s.f, s.g.as_ref(), plan);
                let report = report.with_precondition(pre);
                match report.status {
                    ReportStatus::Violated => violated = true,
                    ReportStatus::Inconclusive => {
                        numeric = true;
                        stderr.push_str(&format!(
                            "note: {} is inside the quadrature error band; retry with a smaller --tol\n",
                            id.name()
                        ));
                    }
                    ReportStatus::Satisfied => {}
                }
                if !report.converged {
                    numeric = true;
                    stderr.push_str(&format!(
                        "note: quadrature for {} missed --tol (error {:e}); retry with a looser --tol\n",
                        id.name(),
                        report.lhs_error + report.rhs_error
                    ));
                }
                if !matches!(pre, theorems::Precondition::Holds) {
                    stderr.push_str(&format!(
                        "warning: hypotheses of {} not confirmed on samples\n",
                        id.name()
                    ));
                }
                records.push(Record::Theorem {
                    report,
                    subject: s.label.clone(),
                    seed: plan.seed(),
                });
            }
            Err(TheoremError::NotSimilarlyOrdered(w)) => {
                stderr.push_str(&format!(
                    "{}: {} (skipped)\n",
                    id.name(),
                    TheoremError::NotSimilarlyOrdered(w)
                ));
                violated |= single;
            }
            Err(e) => {
                stderr.push_str(&format!("{}: {e}\n", id.name()));
                numeric = true;
            }
        }
    }
    let code = if violated {
        EXIT_VIOLATION
    } else if numeric {
        EXIT_NUMERIC
    } else {
        EXIT_OK
    };
    RunOutcome {
        code,
        stdout: emit_report(&records, format),
        stderr,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn go(args: &[&str]) -> RunOutcome {
        run(std::iter::once("mtconvex").chain(args.iter().copied()))
    }

    #[test]
    fn check_mt_square() {
        let r = go(&["check", "--class", "mt", "--fn", "x^2", "--on", "0", "1"]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        assert!(r.stdout.contains("holds_on_samples"));
    }

    #[test]
    fn verify_midpoint_pi_constant() {
        let r = go(&[
            "verify",
            "--theorem",
            "midpoint_pi",
            "--fn",
            "1",
            "--on",
            "0",
            "1",
            "--format",
            "machine",
        ]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        assert!(r.stdout.contains("\"lhs\": 1.5707963267948966e0"));
        assert!(r.stdout.contains("\"rhs\": 2.0000000000000000e0"));
    }

    #[test]
    fn falsify_sqrt() {
        let r = go(&[
            "falsify", "--class", "mt", "--fn", "sqrt(x)", "--on", "0", "1",
        ]);
        assert_eq!(r.code, 1, "{}", r.stderr);
        assert!(r.stdout.contains("fails"));
    }

    #[test]
    fn usage_errors() {
        assert_eq!(go(&[]).code, 2);
        assert_eq!(
            go(&["check", "--class", "mt", "--fn", "x +", "--on", "0", "1"]).code,
            2
        );
        assert_eq!(
            go(&["check", "--class", "mt", "--fn", "x", "--on", "1", "0"]).code,
            2
        );
        assert_eq!(
            go(&["check", "--class", "so", "--fn", "x", "--on", "0", "1"]).code,
            2
        );
        assert_eq!(go(&["verify", "--fn", "x", "--on", "0", "1"]).code, 2);
        assert_eq!(
            go(&["verify", "--theorem", "nope", "--fn", "x", "--on", "0", "1"]).code,
            2
        );
        assert_eq!(
            go(&[
                "verify",
                "--theorem",
                "product_mu",
                "--fn",
                "x",
                "--on",
                "0",
                "1"
            ])
            .code,
            2
        );
        assert_eq!(
            go(&["verify", "--all", "--fn", "x", "--on", "0", "1", "--tol", "0"]).code,
            2
        );
        assert_eq!(
            go(&["falsify", "--class", "mt", "--fn", "x", "--on", "0", "1", "--budget", "5"]).code,
            2
        );
        assert_eq!(go(&["--help"]).code, 0);
    }

    #[test]
    fn negative_endpoints_and_hyphen_expressions() {
        let r = go(&[
            "check", "--class", "convex", "--fn", "-x^2", "--on", "-1", "1",
        ]);
        assert_eq!(r.code, 1, "{}", r.stderr);
    }

    #[test]
    fn undefined_is_numeric_failure() {
        let r = go(&[
            "check",
            "--class",
            "midpoint",
            "--fn",
            "1/(x-0.5)",
            "--on",
            "0",
            "1",
        ]);
        assert_eq!(r.code, 3);
        assert!(r.stdout.contains("domain_failure"));
    }

    #[test]
    fn verify_all_single_and_pair() {
        let r = go(&[
            "verify", "--all", "--fn", "x^2", "--on", "0", "1", "--format", "machine",
        ]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        assert_eq!(r.stdout.matches("theorem_id").count(), 4);
        let r = go(&[
            "verify", "--all", "--fn", "x", "--gn", "x^2", "--on", "0", "1", "--format", "machine",
        ]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        assert_eq!(r.stdout.matches("theorem_id").count(), 8);
    }

    #[test]
    fn so_product_precondition() {
        let args = ["--fn", "x", "--gn", "1-x", "--on", "0", "1"];
        let mut single = vec!["verify", "--theorem", "so_product"];
        single.extend(args);
        let r = go(&single);
        assert_eq!(r.code, 1);
        assert!(r.stderr.contains("not similarly ordered"));
        let mut all = vec!["verify", "--all"];
        all.extend(args);
        let r = go(&all);
        assert_eq!(r.code, 0, "{}", r.stderr);
        assert!(r.stderr.contains("skipped"));
    }

    #[test]
    fn out_of_class_violation_exits_one() {
        let r = go(&[
            "verify",
            "--theorem",
            "midpoint_pi",
            "--fn",
            "sqrt(x)",
            "--on",
            "0",
            "1",
        ]);
        assert_eq!(r.code, 1);
        assert!(r.stderr.contains("warning"));
        assert!(r.stdout.contains("precondition failed"));
    }
}
