//! Intercurrent-event strategies compiled into a contrast of counterfactual
//! means, the set of nodes to split, and derived composite outcomes.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::dsl::StudySpec;
use crate::graph::{
    potential_outcome_label, CausalGraph, CompositeRule, GraphError, InterventionContext,
    NodeAttrs, NodeKind, Value, VarName,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EstimandError {
    #[error("conflicting strategies for `{0}`")]
    ConflictingStrategies(String),
    #[error("composite strategy for `{ie}`: {reason}")]
    CompositeNonBinary { ie: String, reason: String },
    #[error("at most one principal stratum strategy is supported")]
    MultiplePrincipalStrata,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StrategyTag {
    TreatmentPolicy,
    Hypothetical(Value),
    Composite {
        failure: Value,
    },
    PrincipalStratum {
        var: VarName,
        under: Value,
        equals: Value,
    },
}

impl fmt::Display for StrategyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyTag::TreatmentPolicy => f.write_str("treatment_policy"),
            StrategyTag::Hypothetical(v) => write!(f, "hypothetical({v})"),
            StrategyTag::Composite { failure } => write!(f, "composite(failure={failure})"),
            StrategyTag::PrincipalStratum { var, under, equals } => {
                write!(f, "principal_stratum({var}({under})={equals})")
            }
        }
    }
}

/// `var(context) = value`; an empty context is an observed-variable event.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StratumEvent {
    pub var: VarName,
    pub context: InterventionContext,
    pub value: Value,
}

impl StratumEvent {
    pub fn is_counterfactual(&self) -> bool {
        !self.context.is_empty()
    }
}

impl fmt::Display for StratumEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}={}",
            potential_outcome_label(&self.var, &self.context),
            self.value
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CounterfactualMean {
    pub outcome: VarName,
    pub context: InterventionContext,
    pub stratum: Option<StratumEvent>,
}

impl fmt::Display for CounterfactualMean {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "E[{}",
            potential_outcome_label(&self.outcome, &self.context)
        )?;
        if let Some(s) = &self.stratum {
            write!(f, "|{s}")?;
        }
        f.write_str("]")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EstimandContrast {
    pub name: String,
    pub left: CounterfactualMean,
    pub right: CounterfactualMean,
}

impl fmt::Display for EstimandContrast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} - {}", self.left, self.right)
    }
}

/// A composite outcome added by the compiler.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivedNode {
    pub name: VarName,
    pub rule: CompositeRule,
    pub support: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompiledEstimand {
    pub contrast: EstimandContrast,
    /// Treatment at its symbolic level, then hypothetical IEs at their levels.
    pub split_set: InterventionContext,
    pub derived: Vec<DerivedNode>,
    /// The study graph plus derived nodes.
    pub graph: CausalGraph,
    /// Target of the contrast: the declared outcome or the last derived node.
    pub outcome: VarName,
    pub supports: BTreeMap<VarName, Vec<i64>>,
}

impl CompiledEstimand {
    /// The split set with every level replaced by its variable's symbol;
    /// the graph that premises and witnesses are read from.
    pub fn symbolic_interventions(&self) -> InterventionContext {
        self.split_set
            .iter()
            .map(|(v, _)| (v.clone(), Value::Symbolic(v.level_symbol())))
            .collect()
    }
}

pub fn compile(spec: &StudySpec) -> Result<CompiledEstimand, EstimandError> {
    let treatment = spec.treatment();
    let decl = spec.estimand_decl();

    let mut split_set = InterventionContext::new();
    split_set.push(treatment.clone(), Value::Symbolic(treatment.level_symbol()))?;
    let mut hypothetical = Vec::new();
    let mut composites = Vec::new();
    let mut stratum = None;
    for (ie, tag) in spec.strategies() {
        match tag {
            StrategyTag::TreatmentPolicy => {}
            StrategyTag::Hypothetical(level) => {
                split_set.push(ie.clone(), level.clone())?;
                hypothetical.push((ie.clone(), level.clone()));
            }
            StrategyTag::Composite { failure } => composites.push((ie.clone(), failure.clone())),
            StrategyTag::PrincipalStratum { var, under, equals } => {
                if stratum.is_some() {
                    return Err(EstimandError::MultiplePrincipalStrata);
                }
                let context =
                    InterventionContext::from_pairs([(treatment.clone(), under.clone())])?;
                stratum = Some(StratumEvent {
                    var: var.clone(),
                    context,
                    value: equals.clone(),
                });
            }
        }
    }

    let mut supports = spec.supports().clone();
    let mut nodes: Vec<(NodeKind, NodeAttrs)> = spec
        .graph()
        .nodes()
        .map(|(_, n)| (n.kind.clone(), n.attrs.clone()))
        .collect();
    let mut edges: Vec<(usize, usize)> = spec
        .graph()
        .edges()
        .iter()
        .map(|&(u, v)| (u.index(), v.index()))
        .collect();
    let mut index_of: BTreeMap<VarName, usize> = spec
        .graph()
        .nodes()
        .map(|(id, n)| (n.var().clone(), id.index()))
        .collect();
    let mut outcome = spec.outcome().clone();
    let mut derived = Vec::new();
    for (ie, failure) in composites {
        let ie_support = &supports[&ie];
        if ie_support.as_slice() != [0, 1] {
            return Err(EstimandError::CompositeNonBinary {
                ie: ie.to_string(),
                reason: format!("the event must take values [0, 1], not {ie_support:?}"),
            });
        }
        let source_support = &supports[&outcome];
        let f = failure.as_int().expect("DSL levels are integers");
        let binary = source_support.len() <= 2;
        if !binary && !source_support.contains(&f) {
            return Err(EstimandError::CompositeNonBinary {
                ie: ie.to_string(),
                reason: format!(
                    "outcome `{outcome}` is not binary and failure value {f} is outside its support"
                ),
            });
        }
        let name = fresh_name(&index_of);
        let rule = CompositeRule {
            source: outcome.clone(),
            event: ie.clone(),
            failure,
        };
        let mut support = source_support.clone();
        if !support.contains(&f) {
            support.push(f);
            support.sort_unstable();
        }
        let at = nodes.len();
        nodes.push((
            NodeKind::plain(name.clone()),
            NodeAttrs::derived(rule.clone()),
        ));
        edges.push((index_of[&ie], at));
        edges.push((index_of[&outcome], at));
        index_of.insert(name.clone(), at);
        supports.insert(name.clone(), support.clone());
        derived.push(DerivedNode {
            name: name.clone(),
            rule,
            support,
        });
        outcome = name;
    }
    let graph = if derived.is_empty() {
        spec.graph().clone()
    } else {
        CausalGraph::from_parts(nodes, edges)?
    };

    let mean = |level: i64| {
        let mut context = InterventionContext::new();
        context
            .push(treatment.clone(), Value::Int(level))
            .expect("fresh context");
        for (ie, value) in &hypothetical {
            context
                .push(ie.clone(), value.clone())
                .expect("distinct IEs");
        }
        CounterfactualMean {
            outcome: outcome.clone(),
            context,
            stratum: stratum.clone(),
        }
    };
    let name = contrast_name(spec);
    Ok(CompiledEstimand {
        contrast: EstimandContrast {
            name,
            left: mean(decl.left),
            right: mean(decl.right),
        },
        split_set,
        derived,
        graph,
        outcome,
        supports,
    })
}

fn fresh_name(taken: &BTreeMap<VarName, usize>) -> VarName {
    let base = VarName::new("U").expect("valid name");
    if !taken.contains_key(&base) {
        return base;
    }
    (1..)
        .map(|i| VarName::new(format!("U{i}")).expect("valid name"))
        .find(|n| !taken.contains_key(n))
        .expect("unbounded")
}

fn contrast_name(spec: &StudySpec) -> String {
    let tags: Vec<&StrategyTag> = spec.strategies().values().collect();
    let any = |f: fn(&StrategyTag) -> bool| tags.iter().any(|t| f(t));
    if any(|t| matches!(t, StrategyTag::PrincipalStratum { .. })) {
        "principal_stratum"
    } else if any(|t| matches!(t, StrategyTag::Composite { .. })) {
        "composite"
    } else if any(|t| matches!(t, StrategyTag::Hypothetical(_))) {
        "hypothetical"
    } else {
        "treatment_policy"
    }
    .to_string()
}
