//! Sequential conditioning: randomization, covariate stratification, one
//! conditioning step per split intercurrent event, then consistency.
//!
//! This schema is sound but not complete. `NotIdentifiable` means no
//! adjustment set drawn from the candidate pool makes every split event
//! ignorable, not that no identifying formula exists.

use std::collections::BTreeMap;
use std::fmt;

use crate::dsep::{d_separated, open_paths, DSepError, DSepQuery, LabeledPath};
use crate::dsl::StudySpec;
use crate::estimand::{compile, CompiledEstimand, CounterfactualMean};
use crate::graph::{CausalGraph, InterventionContext, Role, Value, VarName};
use crate::swig::{split, Swig};

use super::formula::{Event, Formula, Term};

/// A d-separation statement over node labels of the symbolic SWIG.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Premise {
    pub x: Vec<String>,
    pub y: Vec<String>,
    pub z: Vec<String>,
}

impl Premise {
    pub fn holds(&self, g: &CausalGraph) -> Result<bool, DSepError> {
        d_separated(g, &DSepQuery::from_labels(g, &self.x, &self.y, &self.z)?)
    }
}

impl fmt::Display for Premise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ⊥ {}", self.x.join(", "), self.y.join(", "))?;
        if !self.z.is_empty() {
            write!(f, " | {}", self.z.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rule {
    Definition,
    RandomizationConditioning,
    CovariateStratification { adjust: Vec<VarName> },
    IeConditioning { ie: VarName },
    Consistency { vars: Vec<VarName> },
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::Definition => "definition",
            Rule::RandomizationConditioning => "randomization",
            Rule::CovariateStratification { .. } => "stratification",
            Rule::IeConditioning { .. } => "ie_conditioning",
            Rule::Consistency { .. } => "consistency",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivationStep {
    pub rule: Rule,
    pub premise: Option<Premise>,
    pub before: Formula,
    pub after: Formula,
    pub justification: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivationTrace {
    pub term: CounterfactualMean,
    pub steps: Vec<DerivationStep>,
}

impl DerivationTrace {
    /// Formula after the last step.
    pub fn current(&self) -> &Formula {
        &self
            .steps
            .last()
            .expect("trace starts with a definition")
            .after
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Blocking {
    /// No adjustment set separates `term` from the split event `ie`.
    OpenBackdoor {
        ie: String,
        term: String,
        witness: LabeledPath,
    },
    /// The stratum lives in another intervention world than the term.
    CrossWorld { term: String, stratum: String },
}

impl fmt::Display for Blocking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Blocking::OpenBackdoor { witness, .. } => write!(f, "open backdoor path {witness}"),
            Blocking::CrossWorld { term, stratum } => {
                write!(f, "cross-world stratum {stratum} in {term}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IdentifyOutcome {
    Identified {
        formula: Formula,
        trace: DerivationTrace,
    },
    NotIdentifiable {
        trace: DerivationTrace,
        reason: Blocking,
    },
    PartiallyIdentified {
        formula: Formula,
        trace: DerivationTrace,
        reason: Blocking,
    },
}

impl IdentifyOutcome {
    pub fn trace(&self) -> &DerivationTrace {
        match self {
            IdentifyOutcome::Identified { trace, .. }
            | IdentifyOutcome::NotIdentifiable { trace, .. }
            | IdentifyOutcome::PartiallyIdentified { trace, .. } => trace,
        }
    }

    pub fn formula(&self) -> Option<&Formula> {
        match self {
            IdentifyOutcome::Identified { formula, .. } => Some(formula),
            _ => None,
        }
    }

    pub fn is_identified(&self) -> bool {
        matches!(self, IdentifyOutcome::Identified { .. })
    }

    pub fn tag(&self) -> &'static str {
        match self {
            IdentifyOutcome::Identified { .. } => "identified",
            IdentifyOutcome::NotIdentifiable { .. } => "not_identifiable",
            IdentifyOutcome::PartiallyIdentified { .. } => "partially_identified",
        }
    }
}

/// Both terms of the contrast and their difference when both identify.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EstimandIdentification {
    pub estimand: CompiledEstimand,
    pub left: IdentifyOutcome,
    pub right: IdentifyOutcome,
    pub combined: Option<Formula>,
}

impl EstimandIdentification {
    /// Worst of the two outcomes: not identifiable, then partial, then identified.
    pub fn verdict(&self) -> &'static str {
        let tags = [self.left.tag(), self.right.tag()];
        ["not_identifiable", "partially_identified", "identified"]
            .into_iter()
            .find(|t| tags.contains(t))
            .expect("two tags")
    }
}

/// Identification context for one study: compiled estimand plus the SWIG
/// with every split variable at its symbolic level.
#[derive(Clone, Debug)]
pub struct Identifier {
    compiled: CompiledEstimand,
    swig: Swig,
    treatment: VarName,
}

impl Identifier {
    pub fn new(study: &StudySpec) -> Self {
        let compiled = compile(study).expect("study specs compile by construction");
        let swig = split(&compiled.graph, &compiled.symbolic_interventions())
            .expect("split set is drawn from observed study variables");
        Identifier {
            compiled,
            swig,
            treatment: study.treatment().clone(),
        }
    }

    pub fn compiled(&self) -> &CompiledEstimand {
        &self.compiled
    }

    /// The general SWIG that premises and witnesses refer to.
    pub fn swig(&self) -> &Swig {
        &self.swig
    }

    fn label(&self, var: &VarName) -> String {
        self.swig
            .potential_outcome_label(var)
            .expect("variable is in the study graph")
    }

    /// Context of `var` in the world `world`.
    fn world_context(&self, var: &VarName, world: &InterventionContext) -> InterventionContext {
        self.swig
            .context_of(var)
            .expect("variable is in the study graph")
            .instantiate(world)
    }

    fn split_ies(&self) -> Vec<(VarName, Value)> {
        self.compiled
            .split_set
            .iter()
            .filter(|(v, _)| *v != self.treatment)
            .cloned()
            .collect()
    }

    /// Adjustment candidates: observed, boxed, pre-treatment covariates.
    fn candidate_pool(&self) -> Vec<VarName> {
        let g = self.swig.graph();
        g.nodes()
            .filter(|(_, n)| {
                !n.is_fixed()
                    && n.context().is_some_and(|c| c.is_empty())
                    && n.attrs.observed
                    && n.attrs.conditioned
                    && !matches!(
                        n.attrs.role,
                        Role::Treatment | Role::Intercurrent | Role::Outcome | Role::Derived
                    )
            })
            .map(|(_, n)| n.var().clone())
            .collect()
    }

    fn holds(&self, p: &Premise) -> bool {
        p.holds(self.swig.graph())
            .expect("premise labels come from the SWIG")
    }

    pub fn identify_term(&self, term: &CounterfactualMean) -> IdentifyOutcome {
        let world = &term.context;
        let target = Term::new(term.outcome.clone(), world.clone());
        let mut given = Vec::new();
        let mut same_world_stratum = None;
        let mut cross_world = false;
        if let Some(s) = &term.stratum {
            given.push(Event {
                term: Term::new(s.var.clone(), s.context.clone()),
                value: s.value.clone(),
            });
            if s.is_counterfactual() {
                if self.world_context(&s.var, world).unifies_with(&s.context) {
                    same_world_stratum = Some(self.label(&s.var));
                } else {
                    cross_world = true;
                }
            }
        }
        let definition = Formula::expectation(target.clone(), given.clone());
        let mut trace = DerivationTrace {
            term: term.clone(),
            steps: vec![DerivationStep {
                rule: Rule::Definition,
                premise: None,
                before: definition.clone(),
                after: definition,
                justification: "definition".into(),
            }],
        };
        let term_label = self.label(&term.outcome);
        let treatment_label = self.label(&self.treatment);

        // randomization
        let mut y = vec![term_label.clone()];
        y.extend(same_world_stratum.clone());
        let premise = Premise {
            x: y,
            y: vec![treatment_label.clone()],
            z: vec![],
        };
        if !self.holds(&premise) {
            let witness = self.witness(&treatment_label, &term_label, &[]);
            return IdentifyOutcome::NotIdentifiable {
                reason: Blocking::OpenBackdoor {
                    ie: treatment_label,
                    term: term_label,
                    witness,
                },
                trace,
            };
        }
        let level = world
            .get(&self.treatment)
            .cloned()
            .unwrap_or_else(|| Value::Symbolic(self.treatment.level_symbol()));
        given.push(Event {
            term: Term::Observed(self.treatment.clone()),
            value: level,
        });
        self.push_step(
            &mut trace,
            Rule::RandomizationConditioning,
            Some(premise.clone()),
            Formula::expectation(target.clone(), given.clone()),
            format!("randomization: {premise}"),
        );

        let ies = self.split_ies();
        if !ies.is_empty() {
            let mut base_z = vec![treatment_label.clone()];
            base_z.extend(same_world_stratum.clone());
            let Some(adjust) = self.adjustment_set(&term_label, &ies, &base_z) else {
                let reason = self.blocking(&term_label, &ies, &base_z);
                return IdentifyOutcome::NotIdentifiable { trace, reason };
            };
            let mut sum_over = Vec::new();
            if !adjust.is_empty() {
                for z in &adjust {
                    given.push(Event {
                        term: Term::Observed(z.clone()),
                        value: Value::Symbolic(z.level_symbol()),
                    });
                }
                sum_over = adjust.clone();
                let labels: Vec<String> = adjust.iter().map(|v| self.label(v)).collect();
                let premise = Premise {
                    x: labels.clone(),
                    y: vec![treatment_label.clone()],
                    z: vec![],
                };
                debug_assert!(self.holds(&premise));
                self.push_step(
                    &mut trace,
                    Rule::CovariateStratification {
                        adjust: adjust.clone(),
                    },
                    Some(premise),
                    wrap_sum(
                        &sum_over,
                        Formula::expectation(target.clone(), given.clone()),
                    ),
                    format!("stratification over {{{}}}", labels.join(", ")),
                );
            }
            let mut z = base_z.clone();
            z.extend(adjust.iter().map(|v| self.label(v)));
            for (ie, level) in &ies {
                let ie_label = self.label(ie);
                let premise = Premise {
                    x: vec![term_label.clone()],
                    y: vec![ie_label.clone()],
                    z: z.clone(),
                };
                debug_assert!(self.holds(&premise));
                given.push(Event {
                    term: Term::new(ie.clone(), self.world_context(ie, world)),
                    value: level.clone(),
                });
                self.push_step(
                    &mut trace,
                    Rule::IeConditioning { ie: ie.clone() },
                    Some(premise.clone()),
                    wrap_sum(
                        &sum_over,
                        Formula::expectation(target.clone(), given.clone()),
                    ),
                    premise.to_string(),
                );
                z.push(ie_label);
            }
        }

        let before = trace.current().clone();
        let (after, vars) = apply_consistency(&before);
        if !vars.is_empty() {
            self.push_step(
                &mut trace,
                Rule::Consistency { vars },
                None,
                after.clone(),
                "consistency".into(),
            );
        }
        if after.is_identified() {
            IdentifyOutcome::Identified {
                formula: after,
                trace,
            }
        } else {
            let stratum = term
                .stratum
                .as_ref()
                .map(|s| s.to_string())
                .unwrap_or_default();
            debug_assert!(cross_world, "only cross-world strata survive consistency");
            IdentifyOutcome::PartiallyIdentified {
                reason: Blocking::CrossWorld {
                    term: after.to_string(),
                    stratum,
                },
                formula: after,
                trace,
            }
        }
    }

    fn push_step(
        &self,
        trace: &mut DerivationTrace,
        rule: Rule,
        premise: Option<Premise>,
        after: Formula,
        justification: String,
    ) {
        let before = trace.current().clone();
        trace.steps.push(DerivationStep {
            rule,
            premise,
            before,
            after,
            justification,
        });
    }

    fn ie_premises_hold(
        &self,
        term: &str,
        ies: &[(VarName, Value)],
        z: &[String],
    ) -> Option<usize> {
        let mut z = z.to_vec();
        for (i, (ie, _)) in ies.iter().enumerate() {
            let ie_label = self.label(ie);
            let p = Premise {
                x: vec![term.to_string()],
                y: vec![ie_label.clone()],
                z: z.clone(),
            };
            if !self.holds(&p) {
                return Some(i);
            }
            z.push(ie_label);
        }
        None
    }

    /// Smallest, then lexicographically first, subset of the candidate pool
    /// that makes every split event ignorable.
    fn adjustment_set(
        &self,
        term: &str,
        ies: &[(VarName, Value)],
        base_z: &[String],
    ) -> Option<Vec<VarName>> {
        let pool = self.candidate_pool();
        for size in 0..=pool.len() {
            for subset in combinations(&pool, size) {
                let mut z = base_z.to_vec();
                z.extend(subset.iter().map(|v| self.label(v)));
                if self.ie_premises_hold(term, ies, &z).is_none() {
                    return Some(subset);
                }
            }
        }
        None
    }

    /// Witness for the first event still confounded after adjusting for the
    /// whole pool.
    fn blocking(&self, term: &str, ies: &[(VarName, Value)], base_z: &[String]) -> Blocking {
        let mut z = base_z.to_vec();
        z.extend(self.candidate_pool().iter().map(|v| self.label(v)));
        let failing = self
            .ie_premises_hold(term, ies, &z)
            .expect("no adjustment set works, so the full pool fails");
        z.extend(ies[..failing].iter().map(|(v, _)| self.label(v)));
        let ie_label = self.label(&ies[failing].0);
        let witness = self.witness(&ie_label, term, &z);
        Blocking::OpenBackdoor {
            ie: ie_label,
            term: term.to_string(),
            witness,
        }
    }

    fn witness(&self, x: &str, y: &str, z: &[String]) -> LabeledPath {
        let g = self.swig.graph();
        let q = DSepQuery::from_labels(g, &[x.to_string()], &[y.to_string()], z)
            .expect("labels come from the SWIG");
        let paths = open_paths(g, &q, 1).expect("valid query");
        paths
            .first()
            .expect("a connected query has an open path")
            .to_labeled(g)
    }

    pub fn identify_estimand(&self) -> EstimandIdentification {
        let left = self.identify_term(&self.compiled.contrast.left);
        let right = self.identify_term(&self.compiled.contrast.right);
        let combined = match (left.formula(), right.formula()) {
            (Some(l), Some(r)) => Some(Formula::Difference(
                Box::new(l.clone()),
                Box::new(r.clone()),
            )),
            _ => None,
        };
        EstimandIdentification {
            estimand: self.compiled.clone(),
            left,
            right,
            combined,
        }
    }

    /// Re-check every premise in `trace` against the SWIG.
    pub fn verify(&self, trace: &DerivationTrace) -> Result<(), String> {
        for step in &trace.steps {
            if let Some(p) = &step.premise {
                match p.holds(self.swig.graph()) {
                    Ok(true) => {}
                    Ok(false) => return Err(format!("premise {p} does not hold")),
                    Err(e) => return Err(format!("premise {p}: {e}")),
                }
            }
        }
        Ok(())
    }
}

pub fn identify_term(study: &StudySpec, term: &CounterfactualMean) -> IdentifyOutcome {
    Identifier::new(study).identify_term(term)
}

pub fn identify_estimand(study: &StudySpec) -> EstimandIdentification {
    Identifier::new(study).identify_estimand()
}

fn wrap_sum(over: &[VarName], body: Formula) -> Formula {
    if over.is_empty() {
        body
    } else {
        Formula::Sum {
            over: over.to_vec(),
            body: Box::new(body),
        }
    }
}

fn combinations<T: Clone>(pool: &[T], k: usize) -> Vec<Vec<T>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..pool.len() {
        if pool.len() - i < k {
            break;
        }
        for mut rest in combinations(&pool[i + 1..], k - 1) {
            rest.insert(0, pool[i].clone());
            out.push(rest);
        }
    }
    out
}

/// Replace potential outcomes by observed variables wherever every
/// intervened variable is conditioned, as observed, at its intervention
/// level. Repeats until nothing changes.
fn apply_consistency(f: &Formula) -> (Formula, Vec<VarName>) {
    let mut replaced = Vec::new();
    let out = f.map_expectations(&mut |target, given| {
        let mut given = given.to_vec();
        let mut target = target.clone();
        loop {
            let observed: BTreeMap<&VarName, &Value> = given
                .iter()
                .filter(|e| !e.term.is_counterfactual())
                .map(|e| (e.term.var(), &e.value))
                .collect();
            let settled = |t: &Term| {
                t.context().is_some_and(|ctx| {
                    ctx.iter()
                        .all(|(v, level)| observed.get(v).is_some_and(|o| *o == level))
                })
            };
            let mut changed = None;
            if let Some(i) = given.iter().position(|e| settled(&e.term)) {
                changed = Some(given[i].term.var().clone());
                given[i].term = Term::Observed(given[i].term.var().clone());
            } else if settled(&target) {
                changed = Some(target.var().clone());
                target = Term::Observed(target.var().clone());
            }
            match changed {
                Some(v) => {
                    if !replaced.contains(&v) {
                        replaced.push(v);
                    }
                }
                None => break,
            }
        }
        Formula::Expectation { target, given }
    });
    (out, replaced)
}
