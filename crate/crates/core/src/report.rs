//! Machine (JSON) and human (aligned table) renderings of results.
//!
//! Every number is written with 17 significant digits so the machine form
//! parses back to the identical `f64`. Non-finite values are written as the
//! strings `"inf"`, `"-inf"` and `"nan"`.

use std::fmt::Write as _;

use crate::classes::{ClassId, Verdict, VerdictStatus, Witness};
use crate::theorems::{Precondition, TheoremReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Human,
    Machine,
}

/// One row of output.
#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    Theorem {
        report: TheoremReport,
        subject: String,
        seed: u64,
    },
    Class {
        verdict: Verdict,
        subject: String,
        seed: u64,
    },
    /// A counterexample search; `lhs`/`rhs` are taken at the witness.
    Search {
        class: ClassId,
        witness: Option<Witness>,
        sides: Option<(f64, f64)>,
        probes: u64,
        subject: String,
        seed: u64,
    },
}

/// Flat view shared by both formats.
struct Row<'a> {
    id_key: &'static str,
    id: &'static str,
    lhs: Option<f64>,
    rhs: Option<f64>,
    margin: Option<f64>,
    lhs_error: f64,
    rhs_error: f64,
    status: &'static str,
    witness: Option<Witness>,
    evals: u64,
    seed: u64,
    subject: &'a str,
    precondition: Option<&'static str>,
}

impl Record {
    fn row(&self) -> Row<'_> {
        match self {
            Record::Theorem {
                report,
                subject,
                seed,
            } => {
                let (pre, witness) = match report.precondition {
                    Precondition::NotChecked => ("not_checked", None),
                    Precondition::Holds => ("holds", None),
                    Precondition::Failed(w) => ("failed", Some(w)),
                    Precondition::Undefined(p) => (
                        "undefined",
                        Some(Witness {
                            kind: crate::classes::WitnessKind::DomainFailure,
                            x: p.x,
                            y: p.y,
                            t: p.t,
                            margin: f64::INFINITY,
                        }),
                    ),
                };
                Row {
                    id_key: "theorem_id",
                    id: report.theorem.name(),
                    lhs: Some(report.lhs),
                    rhs: Some(report.rhs),
                    margin: Some(report.margin),
                    lhs_error: report.lhs_error,
                    rhs_error: report.rhs_error,
                    status: report.status.name(),
                    witness,
                    evals: report.evaluations,
                    seed: *seed,
                    subject,
                    precondition: Some(pre),
                }
            }
            Record::Class {
                verdict,
                subject,
                seed,
            } => {
                let witness = match verdict.status {
                    VerdictStatus::UndefinedEncountered => verdict.undefined_at.map(|p| Witness {
                        kind: crate::classes::WitnessKind::DomainFailure,
                        x: p.x,
                        y: p.y,
                        t: p.t,
                        margin: f64::INFINITY,
                    }),
                    _ => verdict.witness,
                };
                let ex = verdict.extreme;
                Row {
                    id_key: "class_id",
                    id: verdict.class.name(),
                    lhs: ex.map(|p| p.lhs),
                    rhs: ex.map(|p| p.rhs),
                    margin: ex.map(|p| p.rhs - p.lhs),
                    lhs_error: 0.0,
                    rhs_error: 0.0,
                    status: verdict.status.name(),
                    witness,
                    evals: verdict.evaluations,
                    seed: *seed,
                    subject,
                    precondition: None,
                }
            }
            Record::Search {
                class,
                witness,
                sides,
                probes,
                subject,
                seed,
            } => Row {
                id_key: "class_id",
                id: class.name(),
                lhs: sides.map(|s| s.0),
                rhs: sides.map(|s| s.1),
                margin: sides.map(|s| s.1 - s.0),
                lhs_error: 0.0,
                rhs_error: 0.0,
                status: if witness.is_some() {
                    VerdictStatus::Fails.name()
                } else {
                    VerdictStatus::HoldsOnSamples.name()
                },
                witness: *witness,
                evals: *probes,
                seed: *seed,
                subject,
                precondition: None,
            },
        }
    }
}

/// Decimal rendering with 17 significant digits.
pub fn number(v: f64) -> String {
    if v.is_nan() {
        "\"nan\"".into()
    } else if v.is_infinite() {
        if v > 0.0 { "\"inf\"" } else { "\"-inf\"" }.into()
    } else {
        format!("{v:.16e}")
    }
}

fn opt_number(v: Option<f64>) -> String {
    v.map_or_else(|| "null".into(), number)
}

fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn witness_json(w: &Witness) -> String {
    format!(
        "{{\"kind\": {}, \"x\": {}, \"y\": {}, \"t\": {}, \"margin\": {}}}",
        json_string(w.kind.name()),
        number(w.x),
        number(w.y),
        opt_number(w.t),
        number(w.margin)
    )
}

fn machine(records: &[Record]) -> String {
    if records.is_empty() {
        return "[]\n".into();
    }
    let mut out = String::from("[\n");
    for (i, rec) in records.iter().enumerate() {
        let r = rec.row();
        let witness = r
            .witness
            .as_ref()
            .map_or_else(|| "null".into(), witness_json);
        let precondition = r.precondition.map_or_else(|| "null".into(), json_string);
        let _ = write!(
            out,
            "  {{\"{}\": {}, \"lhs\": {}, \"rhs\": {}, \"margin\": {}, \"lhs_error\": {}, \
             \"rhs_error\": {}, \"status\": {}, \"witness\": {}, \"evals\": {}, \"seed\": {}, \
             \"subject\": {}, \"precondition\": {}}}",
            r.id_key,
            json_string(r.id),
            opt_number(r.lhs),
            opt_number(r.rhs),
            opt_number(r.margin),
            number(r.lhs_error),
            number(r.rhs_error),
            json_string(r.status),
            witness,
            r.evals,
            r.seed,
            json_string(r.subject),
            precondition,
        );
        out.push_str(if i + 1 < records.len() { ",\n" } else { "\n" });
    }
    out.push_str("]\n");
    out
}

fn plain(v: Option<f64>) -> String {
    match v {
        None => "-".into(),
        Some(v) if v.is_finite() => format!("{v:.16e}"),
        Some(v) => format!("{v}"),
    }
}

fn witness_cell(w: &Option<Witness>) -> String {
    match w {
        None => "-".into(),
        Some(w) => {
            let t =
                w.t.map_or_else(String::new, |t| format!(", t={}", plain(Some(t))));
            format!(
                "{} (x={}, y={}{}) by {}",
                w.kind.name(),
                plain(Some(w.x)),
                plain(Some(w.y)),
                t,
                plain(Some(w.margin))
            )
        }
    }
}

fn human(records: &[Record]) -> String {
    if records.is_empty() {
        return "no reports\n".into();
    }
    let header = [
        "id", "subject", "lhs", "rhs", "margin", "error", "status", "witness",
    ];
    let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for rec in records {
        let r = rec.row();
        let mut status = r.status.to_string();
        if let Some(pre) = r
            .precondition
            .filter(|p| *p != "holds" && *p != "not_checked")
        {
            let _ = write!(status, " (precondition {pre})");
        }
        rows.push(vec![
            r.id.to_string(),
            r.subject.to_string(),
            plain(r.lhs),
            plain(r.rhs),
            plain(r.margin),
            plain(Some(r.lhs_error + r.rhs_error)),
            status,
            witness_cell(&r.witness),
        ]);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub fn emit_report(records: &[Record], format: Format) -> String {
    match format {
        Format::Human => human(records),
        Format::Machine => machine(records),
    }
}
