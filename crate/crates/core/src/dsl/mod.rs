//! The `.swg` trial-spec format.
//!
//! ```text
//! study itt {
//!   node A { role: treatment };
//!   node M { role: intercurrent };
//!   node Y { role: outcome };
//!   edges { A -> M; A -> Y; M -> Y; }
//!   strategy { M: treatment_policy; }
//!   estimand { mean_difference(Y; A=1 vs A=0) }
//! }
//! ```

mod lexer;
mod parser;
mod print;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::estimand::{compile, EstimandError, StrategyTag};
use crate::graph::{build_graph, CausalGraph, GraphError, NodeAttrs, Role, Value, VarName};
use crate::oracle::{ScmError, ScmSpec};

pub use parser::parse;
pub use print::serialize;

/// Grammar revision reported by `--version`.
pub const GRAMMAR_VERSION: u32 = 1;

/// Identifiers that cannot name a variable.
pub const RESERVED: &[&str] = &["noise", "if", "then", "else", "table", "min", "max"];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Error)]
#[error("{line}:{column}: {message}{}", expected_suffix(.expected))]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub expected: Vec<String>,
}

fn expected_suffix(expected: &[String]) -> String {
    match expected {
        [] => String::new(),
        [one] => format!(" (expected {one})"),
        many => format!(" (expected one of {})", many.join(", ")),
    }
}

/// A well-formed spec that violates a study invariant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Error)]
#[error("{line}:{column}: {message}")]
pub struct SemanticError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("semantic error at {0}")]
    Semantic(#[from] SemanticError),
}

impl DslError {
    pub fn position(&self) -> (usize, usize) {
        match self {
            DslError::Parse(e) => (e.line, e.column),
            DslError::Semantic(e) => (e.line, e.column),
        }
    }
}

/// Invariant violations found when assembling a [`StudySpec`].
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("`{0}` is a reserved word")]
    ReservedName(String),
    #[error("no node has role {0}")]
    MissingRole(Role),
    #[error("both `{first}` and `{second}` have role {role}")]
    DuplicateRole {
        role: Role,
        first: String,
        second: String,
    },
    #[error("treatment `{0}` must have no parents")]
    TreatmentHasParents(String),
    #[error("{role} `{name}` must be observed")]
    Unobserved { name: String, role: Role },
    #[error("node `{0}`: role latent requires observed: false")]
    LatentObserved(String),
    #[error("node `{0}`: cannot adjust for an unobserved node")]
    AdjustUnobserved(String),
    #[error("node `{0}`: role derived is reserved for compiler-generated nodes")]
    DerivedDeclared(String),
    #[error("node `{0}`: values must be non-empty and distinct")]
    BadValues(String),
    #[error("strategy target `{0}` must have role intercurrent")]
    StrategyTarget(String),
    #[error("intercurrent event `{0}` has no strategy")]
    MissingStrategy(String),
    #[error("level {value} is not among the values of `{var}`")]
    LevelOutsideSupport { var: String, value: Value },
    #[error("principal stratum for `{ie}` must be defined by `{ie}` itself, not `{var}`")]
    PrincipalStratumVar { ie: String, var: String },
    #[error("estimand outcome `{0}` must have role outcome")]
    EstimandOutcome(String),
    #[error("estimand treatment `{0}` must have role treatment")]
    EstimandTreatment(String),
    #[error("estimand compares level {0} with itself")]
    EstimandLevels(i64),
    #[error(transparent)]
    Estimand(#[from] EstimandError),
    #[error("scm: {0}")]
    Scm(#[from] ScmError),
}

impl SpecError {
    /// Variable the error is about, for locating it in source text.
    pub fn subject(&self) -> Option<&str> {
        match self {
            SpecError::Graph(GraphError::DuplicateName(n))
            | SpecError::Graph(GraphError::UnknownEndpoint(n))
            | SpecError::ReservedName(n)
            | SpecError::DuplicateRole { second: n, .. }
            | SpecError::TreatmentHasParents(n)
            | SpecError::Unobserved { name: n, .. }
            | SpecError::LatentObserved(n)
            | SpecError::AdjustUnobserved(n)
            | SpecError::DerivedDeclared(n)
            | SpecError::BadValues(n)
            | SpecError::StrategyTarget(n)
            | SpecError::MissingStrategy(n)
            | SpecError::LevelOutsideSupport { var: n, .. }
            | SpecError::PrincipalStratumVar { ie: n, .. }
            | SpecError::EstimandOutcome(n)
            | SpecError::EstimandTreatment(n) => Some(n),
            SpecError::Estimand(EstimandError::ConflictingStrategies(n))
            | SpecError::Estimand(EstimandError::CompositeNonBinary { ie: n, .. }) => Some(n),
            SpecError::Scm(
                ScmError::MissingVariable(n)
                | ScmError::UnexpectedVariable(n)
                | ScmError::ParentMismatch { var: n, .. }
                | ScmError::IncompleteTable { var: n, .. }
                | ScmError::StrayRow { var: n, .. }
                | ScmError::OutOfSupport { var: n, .. }
                | ScmError::BadNoise { var: n, .. }
                | ScmError::Eval { var: n, .. },
            ) => Some(n),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeDecl {
    pub name: VarName,
    pub role: Role,
    pub observed: bool,
    pub adjust: bool,
    /// Sorted, distinct.
    pub values: Vec<i64>,
}

impl NodeDecl {
    /// A declaration with the defaults for `role`.
    pub fn new(name: VarName, role: Role) -> Self {
        NodeDecl {
            name,
            role,
            observed: role != Role::Latent,
            adjust: false,
            values: vec![0, 1],
        }
    }

    pub fn adjust(mut self, adjust: bool) -> Self {
        self.adjust = adjust;
        self
    }

    pub fn values(mut self, values: Vec<i64>) -> Self {
        self.values = values;
        self
    }

    pub fn observed(mut self, observed: bool) -> Self {
        self.observed = observed;
        self
    }

    /// Role used when none is written.
    pub fn default_role(observed: bool) -> Role {
        if observed {
            Role::Covariate
        } else {
            Role::Latent
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EstimandDecl {
    pub outcome: VarName,
    pub treatment: VarName,
    pub left: i64,
    pub right: i64,
}

/// A validated study: graph, strategies, estimand and optional SCM.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StudySpec {
    name: String,
    nodes: BTreeMap<VarName, NodeDecl>,
    edges: BTreeSet<(VarName, VarName)>,
    strategies: BTreeMap<VarName, StrategyTag>,
    estimand: EstimandDecl,
    scm: Option<ScmSpec>,
    graph: CausalGraph,
    supports: BTreeMap<VarName, Vec<i64>>,
    treatment: VarName,
    outcome: VarName,
}

impl StudySpec {
    pub fn new(
        name: impl Into<String>,
        nodes: Vec<NodeDecl>,
        edges: Vec<(VarName, VarName)>,
        strategies: BTreeMap<VarName, StrategyTag>,
        estimand: EstimandDecl,
        scm: Option<ScmSpec>,
    ) -> Result<Self, SpecError> {
        let mut decls = BTreeMap::new();
        for decl in nodes {
            if RESERVED.contains(&decl.name.as_str()) {
                return Err(SpecError::ReservedName(decl.name.to_string()));
            }
            if decls.contains_key(&decl.name) {
                return Err(GraphError::DuplicateName(decl.name.to_string()).into());
            }
            decls.insert(decl.name.clone(), decl);
        }
        let mut treatment: Option<VarName> = None;
        let mut outcome: Option<VarName> = None;
        for decl in decls.values() {
            let name = decl.name.to_string();
            if decl.values.is_empty() || decl.values.windows(2).any(|w| w[0] >= w[1]) {
                return Err(SpecError::BadValues(name));
            }
            match decl.role {
                Role::Derived => return Err(SpecError::DerivedDeclared(name)),
                Role::Latent if decl.observed => return Err(SpecError::LatentObserved(name)),
                Role::Treatment | Role::Outcome | Role::Intercurrent if !decl.observed => {
                    return Err(SpecError::Unobserved {
                        name,
                        role: decl.role,
                    })
                }
                _ => {}
            }
            if decl.adjust && !decl.observed {
                return Err(SpecError::AdjustUnobserved(name));
            }
            for (role, slot) in [
                (Role::Treatment, &mut treatment),
                (Role::Outcome, &mut outcome),
            ] {
                if decl.role == role {
                    if let Some(first) = slot {
                        return Err(SpecError::DuplicateRole {
                            role,
                            first: first.to_string(),
                            second: name.clone(),
                        });
                    }
                    *slot = Some(decl.name.clone());
                }
            }
        }
        let treatment = treatment.ok_or(SpecError::MissingRole(Role::Treatment))?;
        let outcome = outcome.ok_or(SpecError::MissingRole(Role::Outcome))?;

        let node_attrs: Vec<(VarName, NodeAttrs)> = decls
            .values()
            .map(|d| {
                let attrs = NodeAttrs::new(d.role)
                    .observed(d.observed)
                    .conditioned(d.adjust);
                (d.name.clone(), attrs)
            })
            .collect();
        let edge_list: Vec<(VarName, VarName)> = edges.clone();
        let graph = build_graph(&node_attrs, &edge_list)?;
        let edges: BTreeSet<(VarName, VarName)> = edges.into_iter().collect();
        let t_id = graph.random(&treatment).expect("declared");
        if !graph.parents(t_id).is_empty() {
            return Err(SpecError::TreatmentHasParents(treatment.to_string()));
        }

        let support_of = |v: &VarName| &decls[v].values;
        let check_level = |var: &VarName, value: &Value| match value {
            Value::Int(x) if support_of(var).contains(x) => Ok(()),
            _ => Err(SpecError::LevelOutsideSupport {
                var: var.to_string(),
                value: value.clone(),
            }),
        };
        for (ie, tag) in &strategies {
            match decls.get(ie) {
                Some(d) if d.role == Role::Intercurrent => {}
                _ => return Err(SpecError::StrategyTarget(ie.to_string())),
            }
            match tag {
                StrategyTag::TreatmentPolicy => {}
                StrategyTag::Hypothetical(level) => check_level(ie, level)?,
                StrategyTag::Composite { failure } => {
                    if failure.as_int().is_none() {
                        return Err(SpecError::LevelOutsideSupport {
                            var: outcome.to_string(),
                            value: failure.clone(),
                        });
                    }
                }
                StrategyTag::PrincipalStratum { var, under, equals } => {
                    if var != ie {
                        return Err(SpecError::PrincipalStratumVar {
                            ie: ie.to_string(),
                            var: var.to_string(),
                        });
                    }
                    check_level(&treatment, under)?;
                    check_level(ie, equals)?;
                }
            }
        }
        for decl in decls.values() {
            if decl.role == Role::Intercurrent && !strategies.contains_key(&decl.name) {
                return Err(SpecError::MissingStrategy(decl.name.to_string()));
            }
        }

        if decls.get(&estimand.outcome).map(|d| d.role) != Some(Role::Outcome) {
            return Err(SpecError::EstimandOutcome(estimand.outcome.to_string()));
        }
        if decls.get(&estimand.treatment).map(|d| d.role) != Some(Role::Treatment) {
            return Err(SpecError::EstimandTreatment(estimand.treatment.to_string()));
        }
        if estimand.left == estimand.right {
            return Err(SpecError::EstimandLevels(estimand.left));
        }
        check_level(&treatment, &Value::Int(estimand.left))?;
        check_level(&treatment, &Value::Int(estimand.right))?;

        let supports: BTreeMap<VarName, Vec<i64>> = decls
            .iter()
            .map(|(k, d)| (k.clone(), d.values.clone()))
            .collect();
        let spec = StudySpec {
            name: name.into(),
            nodes: decls,
            edges,
            strategies,
            estimand,
            scm,
            graph,
            supports,
            treatment,
            outcome,
        };
        if let Some(scm) = &spec.scm {
            scm.validate(&spec.parent_map(), &spec.supports)?;
        }
        compile(&spec)?;
        Ok(spec)
    }

    /// Copy with a different SCM, revalidated.
    pub fn with_scm(&self, scm: Option<ScmSpec>) -> Result<Self, SpecError> {
        if let Some(s) = &scm {
            s.validate(&self.parent_map(), &self.supports)?;
        }
        Ok(StudySpec {
            scm,
            ..self.clone()
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeDecl> {
        self.nodes.values()
    }

    pub fn node(&self, name: &VarName) -> Option<&NodeDecl> {
        self.nodes.get(name)
    }

    pub fn edges(&self) -> &BTreeSet<(VarName, VarName)> {
        &self.edges
    }

    pub fn strategies(&self) -> &BTreeMap<VarName, StrategyTag> {
        &self.strategies
    }

    pub fn estimand_decl(&self) -> &EstimandDecl {
        &self.estimand
    }

    pub fn scm(&self) -> Option<&ScmSpec> {
        self.scm.as_ref()
    }

    pub fn graph(&self) -> &CausalGraph {
        &self.graph
    }

    pub fn supports(&self) -> &BTreeMap<VarName, Vec<i64>> {
        &self.supports
    }

    pub fn treatment(&self) -> &VarName {
        &self.treatment
    }

    pub fn outcome(&self) -> &VarName {
        &self.outcome
    }

    /// Sorted graph parents of every declared variable.
    pub fn parent_map(&self) -> BTreeMap<VarName, Vec<VarName>> {
        self.nodes
            .keys()
            .map(|v| {
                let id = self.graph.random(v).expect("declared");
                let mut ps: Vec<VarName> = self
                    .graph
                    .parents(id)
                    .iter()
                    .map(|&p| self.graph.node(p).var().clone())
                    .collect();
                ps.sort();
                (v.clone(), ps)
            })
            .collect()
    }
}

impl fmt::Display for StudySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize(self))
    }
}
