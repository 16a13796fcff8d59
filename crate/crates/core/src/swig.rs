//! Node-splitting: a DAG plus an ordered intervention context becomes a
//! single-world intervention graph.
//!
//! Each intervened variable `X` becomes a random half `X` that keeps the
//! incoming edges and a fixed half `x` that takes over the outgoing edges.
//! Every random node is relabeled with the interventions whose fixed half is
//! one of its ancestors, in the declared intervention order.

use std::collections::BTreeSet;

use serde_json::json;
use thiserror::Error;

use crate::graph::{
    CausalGraph, GraphError, InterventionContext, NodeAttrs, NodeId, NodeKind, VarName,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SwigError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("cannot intervene on unobserved node `{0}`")]
    LatentIntervention(String),
    #[error("`{0}` is already split")]
    AlreadySplit(String),
    #[error("node `{0}` already carries an intervention context; split the original DAG instead")]
    NotPlainDag(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A single-world intervention graph together with the DAG it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Swig {
    graph: CausalGraph,
    interventions: InterventionContext,
    source: CausalGraph,
}

pub fn split(dag: &CausalGraph, interventions: &InterventionContext) -> Result<Swig, SwigError> {
    for (_, node) in dag.nodes() {
        if let NodeKind::Fixed { var, .. } = &node.kind {
            if interventions.contains(var) {
                return Err(SwigError::AlreadySplit(var.to_string()));
            }
        }
    }
    for (_, node) in dag.nodes() {
        let plain = match &node.kind {
            NodeKind::Fixed { .. } => false,
            NodeKind::Random { context, .. } => context.is_empty(),
        };
        if !plain {
            return Err(SwigError::NotPlainDag(node.label().to_string()));
        }
    }

    let n = dag.len();
    // indices 0..n are the random halves (in `dag` id order), n.. the fixed halves
    let mut fixed_of: Vec<Option<usize>> = vec![None; n];
    for (k, (var, _)) in interventions.iter().enumerate() {
        let id = dag
            .random(var)
            .ok_or_else(|| SwigError::UnknownVariable(var.to_string()))?;
        if dag.node(id).attrs.is_latent() {
            return Err(SwigError::LatentIntervention(var.to_string()));
        }
        fixed_of[id.index()] = Some(n + k);
    }

    let edges: Vec<(usize, usize)> = dag
        .edges()
        .iter()
        .map(|&(u, v)| (fixed_of[u.index()].unwrap_or(u.index()), v.index()))
        .collect();

    let total = n + interventions.len();
    let mut children = vec![Vec::new(); total];
    for &(u, v) in &edges {
        children[u].push(v);
    }
    // which fixed halves reach each random node
    let mut reached_by: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for k in 0..interventions.len() {
        let mut stack = vec![n + k];
        let mut seen = BTreeSet::new();
        while let Some(u) = stack.pop() {
            for &v in &children[u] {
                if seen.insert(v) {
                    reached_by[v].insert(k);
                    stack.push(v);
                }
            }
        }
    }

    let mut parts = Vec::with_capacity(total);
    for (id, node) in dag.nodes() {
        let reach = &reached_by[id.index()];
        let mut k = 0;
        let context = interventions.restrict(|_| {
            let keep = reach.contains(&k);
            k += 1;
            keep
        });
        parts.push((
            NodeKind::Random {
                base: node.var().clone(),
                context,
            },
            node.attrs.clone(),
        ));
    }
    for (var, value) in interventions.iter() {
        let source = &dag.node(dag.random(var).expect("checked above")).attrs;
        let attrs = NodeAttrs {
            observed: true,
            conditioned: false,
            deterministic: None,
            role: source.role,
        };
        parts.push((
            NodeKind::Fixed {
                var: var.clone(),
                value: value.clone(),
            },
            attrs,
        ));
    }
    let graph = CausalGraph::from_parts(parts, edges)?;
    Ok(Swig {
        graph,
        interventions: interventions.clone(),
        source: dag.clone(),
    })
}

impl Swig {
    pub fn graph(&self) -> &CausalGraph {
        &self.graph
    }

    pub fn interventions(&self) -> &InterventionContext {
        &self.interventions
    }

    pub fn source(&self) -> &CausalGraph {
        &self.source
    }

    pub fn random_node(&self, base: &VarName) -> Result<NodeId, SwigError> {
        self.graph
            .random(base)
            .ok_or_else(|| SwigError::UnknownVariable(base.to_string()))
    }

    /// Context carried by the random half of `base`.
    pub fn context_of(&self, base: &VarName) -> Result<&InterventionContext, SwigError> {
        let id = self.random_node(base)?;
        Ok(self.graph.node(id).context().expect("random node"))
    }

    pub fn potential_outcome_label(&self, base: &VarName) -> Result<String, SwigError> {
        let id = self.random_node(base)?;
        Ok(self.graph.label(id).to_string())
    }

    /// Graph JSON plus the `interventions` array.
    pub fn to_json(&self) -> String {
        let mut value = self.graph.json_value();
        let interventions: Vec<_> = self
            .interventions
            .iter()
            .map(|(v, x)| json!([v, x]))
            .collect();
        value["interventions"] = json!(interventions);
        let mut text = serde_json::to_string_pretty(&value).expect("swig JSON");
        text.push('\n');
        text
    }
}
