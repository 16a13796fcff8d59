//! Identification of counterfactual means from the observed distribution.

mod engine;
pub mod formula;
mod trace;

pub use engine::{
    identify_estimand, identify_term, Blocking, DerivationStep, DerivationTrace,
    EstimandIdentification, Identifier, IdentifyOutcome, Premise, Rule,
};
pub use formula::{Event, Formula, Term};
pub use trace::{outcome_json, render_report, render_trace, report_json};
