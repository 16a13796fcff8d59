use std::fmt::Write;

use serde_json::{json, Value};

use super::engine::{Blocking, EstimandIdentification, IdentifyOutcome};

/// One line per step, `<formula>    (<justification>)`, then the blocking
/// reason if the derivation stopped short.
pub fn render_trace(outcome: &IdentifyOutcome) -> String {
    let mut out = String::new();
    for step in &outcome.trace().steps {
        let _ = writeln!(out, "{}    ({})", step.after, step.justification);
    }
    match outcome {
        IdentifyOutcome::Identified { .. } => {}
        IdentifyOutcome::NotIdentifiable { reason, .. } => {
            let _ = writeln!(out, "BLOCKED: {reason}");
        }
        IdentifyOutcome::PartiallyIdentified { reason, .. } => {
            if let Blocking::CrossWorld { term, .. } = reason {
                let _ = writeln!(out, "REMAINING CROSS-WORLD TERM: {term}");
            }
        }
    }
    out
}

/// Human-readable report for both terms of the contrast.
pub fn render_report(r: &EstimandIdentification) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "estimand: {}", r.estimand.contrast);
    let _ = writeln!(out, "strategy: {}", r.estimand.contrast.name);
    for outcome in [&r.left, &r.right] {
        let _ = writeln!(out, "\nterm {}", outcome.trace().term);
        out.push_str(&render_trace(outcome));
    }
    out.push('\n');
    match (&r.combined, r.verdict()) {
        (Some(f), _) => {
            let _ = writeln!(out, "identified: {f}");
        }
        (None, "partially_identified") => {
            out.push_str("partially identified: a cross-world term remains\n");
        }
        _ => {
            out.push_str(
                "not identifiable by sequential conditioning: no adjustment set blocks every backdoor path\n",
            );
        }
    }
    out
}

fn reason_json(reason: &Blocking) -> Value {
    match reason {
        Blocking::OpenBackdoor { ie, term, witness } => json!({
            "kind": "open_backdoor",
            "ie": ie,
            "term": term,
            "witness": witness,
            "path": witness.to_string(),
        }),
        Blocking::CrossWorld { term, stratum } => json!({
            "kind": "cross_world",
            "term": term,
            "stratum": stratum,
        }),
    }
}

pub fn outcome_json(outcome: &IdentifyOutcome) -> Value {
    let trace = outcome.trace();
    let steps: Vec<Value> = trace
        .steps
        .iter()
        .map(|s| {
            json!({
                "rule": s.rule.name(),
                "premise": s.premise.as_ref().map(|p| json!({
                    "x": p.x, "y": p.y, "z": p.z, "text": p.to_string(),
                })),
                "formula": s.after.to_string(),
                "justification": s.justification,
            })
        })
        .collect();
    let (formula, reason) = match outcome {
        IdentifyOutcome::Identified { formula, .. } => (Some(formula.to_string()), None),
        IdentifyOutcome::NotIdentifiable { reason, .. } => (None, Some(reason_json(reason))),
        IdentifyOutcome::PartiallyIdentified {
            formula, reason, ..
        } => (Some(formula.to_string()), Some(reason_json(reason))),
    };
    json!({
        "term": trace.term.to_string(),
        "steps": steps,
        "outcome": outcome.tag(),
        "formula": formula,
        "reason": reason,
    })
}

pub fn report_json(r: &EstimandIdentification) -> Value {
    json!({
        "estimand": r.estimand.contrast.to_string(),
        "strategy": r.estimand.contrast.name,
        "verdict": r.verdict(),
        "terms": [outcome_json(&r.left), outcome_json(&r.right)],
        "combined": r.combined.as_ref().map(|f| f.to_string()),
    })
}
