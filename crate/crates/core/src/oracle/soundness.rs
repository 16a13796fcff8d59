use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{
    enumerate, eval_formula, random_scm, true_estimand, ObservedDistribution, OracleError, ScmSpec,
};
use crate::dsl::StudySpec;
use crate::estimand::{CompiledEstimand, CounterfactualMean};
use crate::graph::InterventionContext;
use crate::identify::{identify_estimand, Event, Formula, Term};
use crate::scalar::Scalar;

/// Identified formula against ground truth for one model.
#[derive(Clone, Debug, PartialEq)]
pub struct SoundnessReport<S> {
    pub seed: Option<u64>,
    pub verdict: &'static str,
    pub identified: bool,
    pub true_value: S,
    pub formula_value: Option<S>,
    /// The unadjusted contrast of observed means at the same levels.
    pub naive_value: S,
    /// `formula - truth` when identified, `naive - truth` otherwise.
    pub gap: S,
}

impl<S: Scalar> SoundnessReport<S> {
    /// An identified formula that misses the truth.
    pub fn is_engine_bug(&self) -> bool {
        self.identified && !self.gap.is_negligible()
    }
}

fn naive_mean(m: &CounterfactualMean) -> Formula {
    let mut given = Vec::new();
    if let Some(s) = &m.stratum {
        given.push(Event {
            term: Term::Observed(s.var.clone()),
            value: s.value.clone(),
        });
    }
    for (var, level) in m.context.iter() {
        given.push(Event {
            term: Term::Observed(var.clone()),
            value: level.clone(),
        });
    }
    Formula::expectation(Term::Observed(m.outcome.clone()), given)
}

/// `E[Y | stratum, A=a, M=m] - E[Y | stratum, A=a', M=m]` over observed
/// variables, with no adjustment.
pub fn naive_formula(c: &CompiledEstimand) -> Formula {
    Formula::Difference(
        Box::new(naive_mean(&c.contrast.left)),
        Box::new(naive_mean(&c.contrast.right)),
    )
}

fn worlds(c: &CompiledEstimand) -> Vec<InterventionContext> {
    let mut out = Vec::new();
    for m in [&c.contrast.left, &c.contrast.right] {
        out.push(m.context.clone());
        if let Some(s) = &m.stratum {
            out.push(s.context.clone());
        }
    }
    out
}

pub fn check_soundness<S: Scalar>(
    study: &StudySpec,
    scm: &ScmSpec,
    cap: u128,
) -> Result<SoundnessReport<S>, OracleError> {
    let ident = identify_estimand(study);
    let c = &ident.estimand;
    let table = enumerate::<S>(&c.graph, scm, &worlds(c), cap)?;
    let truth = true_estimand(&table, &c.contrast)?;
    let dist = ObservedDistribution::from_table(&table);
    let bindings = BTreeMap::new();
    let naive = eval_formula(&dist, &naive_formula(c), &bindings)?;
    let formula_value = ident
        .combined
        .as_ref()
        .map(|f| eval_formula(&dist, f, &bindings))
        .transpose()?;
    let gap = match &formula_value {
        Some(v) => v.clone() - truth.clone(),
        None => naive.clone() - truth.clone(),
    };
    Ok(SoundnessReport {
        seed: None,
        verdict: ident.verdict(),
        identified: ident.combined.is_some(),
        true_value: truth,
        formula_value,
        naive_value: naive,
        gap,
    })
}

/// Soundness over random models for `seeds`, in seed order.
pub fn run_battery<S: Scalar>(
    study: &StudySpec,
    seeds: std::ops::Range<u64>,
    cap: u128,
) -> Vec<Result<SoundnessReport<S>, OracleError>> {
    let graph = study.graph();
    let supports = study.supports();
    seeds
        .into_par_iter()
        .map(|seed| {
            let scm = random_scm(graph, seed, supports);
            check_soundness(study, &scm, cap).map(|r| SoundnessReport {
                seed: Some(seed),
                ..r
            })
        })
        .collect()
}
