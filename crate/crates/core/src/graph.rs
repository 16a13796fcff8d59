//! Labeled DAGs shared by plain causal graphs and single-world intervention
//! graphs.
//!
//! A node is either a *random* node (a variable, possibly carrying an
//! intervention context such as `Y(a,m=0)`) or a *fixed* node (the
//! intervened half of a split variable, such as `a`). Node identity inside a
//! graph is the rendered label; [`NodeId`]s index nodes in label order, which
//! gives every traversal in the crate a byte-stable iteration order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("invalid variable name `{0}`: expected a letter followed by letters, digits or `_`")]
    InvalidName(String),
    #[error("duplicate node `{0}`")]
    DuplicateName(String),
    #[error("edge endpoint `{0}` is not a declared node")]
    UnknownEndpoint(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("graph has a cycle: {}", .witness.join(" -> "))]
    Cycle { witness: Vec<String> },
    #[error("node `{node}` has inconsistent attributes: {reason}")]
    InvalidAttributes { node: String, reason: String },
    #[error("fixed node `{0}` has no matching random node")]
    DanglingFixed(String),
    #[error("fixed node `{0}` has incoming edges")]
    FixedHasParents(String),
    #[error("`{0}` is assigned twice in one intervention context")]
    DuplicateIntervention(String),
    #[error("malformed graph JSON: {0}")]
    Json(String),
}

/// A variable name: a letter followed by letters, digits or underscores.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct VarName(String);

impl VarName {
    pub fn new(name: impl Into<String>) -> Result<Self, GraphError> {
        let name = name.into();
        let mut chars = name.chars();
        let valid = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
        if valid {
            Ok(VarName(name))
        } else {
            Err(GraphError::InvalidName(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The lower-case symbol naming this variable's intervention level
    /// (`A` becomes `a`, `M3` becomes `m3`).
    pub fn level_symbol(&self) -> String {
        self.0.to_ascii_lowercase()
    }
}

impl TryFrom<String> for VarName {
    type Error = GraphError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        VarName::new(value)
    }
}

impl From<VarName> for String {
    fn from(value: VarName) -> Self {
        value.0
    }
}

impl FromStr for VarName {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VarName::new(s)
    }
}

impl fmt::Display for VarName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A level a variable can be set to or observed at.
///
/// `Symbolic` levels stand for an arbitrary fixed value, as in the general
/// graph drawn for "any `a`".
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Symbolic(String),
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            Value::Symbolic(_) => None,
        }
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(self, Value::Symbolic(_))
    }

    /// Symbolic levels unify with anything; concrete levels only with themselves.
    pub fn unifies_with(&self, other: &Value) -> bool {
        self.is_symbolic() || other.is_symbolic() || self == other
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Symbolic(s) => f.write_str(s),
        }
    }
}

/// Ordered assignment of levels to intervened variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InterventionContext(Vec<(VarName, Value)>);

impl InterventionContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I>(pairs: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (VarName, Value)>,
    {
        let mut ctx = Self::new();
        for (var, value) in pairs {
            ctx.push(var, value)?;
        }
        Ok(ctx)
    }

    pub fn push(&mut self, var: VarName, value: Value) -> Result<(), GraphError> {
        if self.contains(&var) {
            return Err(GraphError::DuplicateIntervention(var.to_string()));
        }
        self.0.push((var, value));
        Ok(())
    }

    pub fn get(&self, var: &VarName) -> Option<&Value> {
        self.0
            .iter()
            .find(|(v, _)| v == var)
            .map(|(_, value)| value)
    }

    pub fn contains(&self, var: &VarName) -> bool {
        self.get(var).is_some()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(VarName, Value)> {
        self.0.iter()
    }

    pub fn vars(&self) -> impl Iterator<Item = &VarName> {
        self.0.iter().map(|(v, _)| v)
    }

    /// Copy with `var` set to `value`, keeping its position if already present.
    pub fn with_value(&self, var: &VarName, value: Value) -> Self {
        let mut out = self.clone();
        match out.0.iter_mut().find(|(v, _)| v == var) {
            Some(slot) => slot.1 = value,
            None => out.0.push((var.clone(), value)),
        }
        out
    }

    pub fn restrict(&self, mut keep: impl FnMut(&VarName) -> bool) -> Self {
        InterventionContext(self.0.iter().filter(|(v, _)| keep(v)).cloned().collect())
    }

    /// Replace every symbolic level by the concrete level `concrete` assigns
    /// to the same variable, when it has one.
    pub fn instantiate(&self, concrete: &InterventionContext) -> Self {
        InterventionContext(
            self.0
                .iter()
                .map(|(var, value)| match (value, concrete.get(var)) {
                    (Value::Symbolic(_), Some(c)) => (var.clone(), c.clone()),
                    _ => (var.clone(), value.clone()),
                })
                .collect(),
        )
    }

    /// Two contexts describe the same world when they assign the same
    /// variables and every pair of levels unifies.
    pub fn unifies_with(&self, other: &InterventionContext) -> bool {
        self.len() == other.len()
            && self
                .iter()
                .all(|(var, value)| other.get(var).is_some_and(|o| value.unifies_with(o)))
    }

    /// `a=1,m3=0`; symbolic levels render bare (`a,m3`).
    pub fn render_items(&self) -> String {
        self.0
            .iter()
            .map(|(var, value)| match value {
                Value::Symbolic(s) => s.clone(),
                Value::Int(v) => format!("{}={v}", var.level_symbol()),
            })
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl FromIterator<(VarName, Value)> for InterventionContext {
    /// Later duplicates overwrite earlier ones.
    fn from_iter<T: IntoIterator<Item = (VarName, Value)>>(iter: T) -> Self {
        let mut ctx = InterventionContext::new();
        for (var, value) in iter {
            ctx = ctx.with_value(&var, value);
        }
        ctx
    }
}

/// Canonical potential-outcome label, `Y(a,m3=0)`, or the bare name for an
/// empty context.
pub fn potential_outcome_label(base: &VarName, context: &InterventionContext) -> String {
    if context.is_empty() {
        base.to_string()
    } else {
        format!("{base}({})", context.render_items())
    }
}

/// Label of the fixed half of a split node: the bare symbol for symbolic
/// levels (`a`), `var=level` otherwise (`a=1`).
pub fn fixed_label(var: &VarName, value: &Value) -> String {
    match value {
        Value::Symbolic(s) => s.clone(),
        Value::Int(v) => format!("{}={v}", var.level_symbol()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Treatment,
    Intercurrent,
    Outcome,
    Covariate,
    Latent,
    Derived,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Treatment => "treatment",
            Role::Intercurrent => "intercurrent",
            Role::Outcome => "outcome",
            Role::Covariate => "covariate",
            Role::Latent => "latent",
            Role::Derived => "derived",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "treatment" => Role::Treatment,
            "intercurrent" => Role::Intercurrent,
            "outcome" => Role::Outcome,
            "covariate" => Role::Covariate,
            "latent" => Role::Latent,
            "derived" => Role::Derived,
            other => return Err(format!("unknown role `{other}`")),
        })
    }
}

/// Composite outcome: `target = source` when `event` is 0, else `failure`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompositeRule {
    pub source: VarName,
    pub event: VarName,
    pub failure: Value,
}

impl CompositeRule {
    pub fn apply(&self, source: i64, event: i64, failure: i64) -> i64 {
        if event == 0 {
            source
        } else {
            failure
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeAttrs {
    pub observed: bool,
    pub conditioned: bool,
    pub deterministic: Option<CompositeRule>,
    pub role: Role,
}

impl NodeAttrs {
    /// Attributes for `role`; latent nodes start unobserved.
    pub fn new(role: Role) -> Self {
        NodeAttrs {
            observed: role != Role::Latent,
            conditioned: false,
            deterministic: None,
            role,
        }
    }

    pub fn conditioned(mut self, conditioned: bool) -> Self {
        self.conditioned = conditioned;
        self
    }

    pub fn observed(mut self, observed: bool) -> Self {
        self.observed = observed;
        self
    }

    pub fn derived(rule: CompositeRule) -> Self {
        NodeAttrs {
            observed: true,
            conditioned: false,
            deterministic: Some(rule),
            role: Role::Derived,
        }
    }

    pub fn is_latent(&self) -> bool {
        !self.observed
    }

    fn check(&self) -> Result<(), String> {
        if self.role == Role::Latent && self.observed {
            return Err("role latent requires observed: false".into());
        }
        if !self.observed && self.conditioned {
            return Err("an unobserved node cannot be conditioned on".into());
        }
        if self.deterministic.is_some() && self.role != Role::Derived {
            return Err("only derived nodes carry a deterministic rule".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Random {
        base: VarName,
        context: InterventionContext,
    },
    Fixed {
        var: VarName,
        value: Value,
    },
}

impl NodeKind {
    pub fn plain(base: VarName) -> Self {
        NodeKind::Random {
            base,
            context: InterventionContext::new(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            NodeKind::Random { base, context } => potential_outcome_label(base, context),
            NodeKind::Fixed { var, value } => fixed_label(var, value),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Node {
    pub kind: NodeKind,
    pub attrs: NodeAttrs,
    label: String,
}

impl Node {
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Underlying variable for random and fixed nodes alike.
    pub fn var(&self) -> &VarName {
        match &self.kind {
            NodeKind::Random { base, .. } => base,
            NodeKind::Fixed { var, .. } => var,
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self.kind, NodeKind::Fixed { .. })
    }

    pub fn context(&self) -> Option<&InterventionContext> {
        match &self.kind {
            NodeKind::Random { context, .. } => Some(context),
            NodeKind::Fixed { .. } => None,
        }
    }
}

/// Index of a node within one graph. Ids follow label order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub(crate) u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Immutable, validated DAG.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CausalGraph {
    nodes: Vec<Node>,
    edges: Vec<(NodeId, NodeId)>,
    parents: Vec<Vec<NodeId>>,
    children: Vec<Vec<NodeId>>,
    by_label: BTreeMap<String, NodeId>,
}

/// Build a plain DAG of random nodes from names and named edges.
pub fn build_graph(
    nodes: &[(VarName, NodeAttrs)],
    edges: &[(VarName, VarName)],
) -> Result<CausalGraph, GraphError> {
    let mut position = BTreeMap::new();
    for (i, (name, _)) in nodes.iter().enumerate() {
        if position.insert(name.clone(), i).is_some() {
            return Err(GraphError::DuplicateName(name.to_string()));
        }
    }
    let lookup = |v: &VarName| {
        position
            .get(v)
            .copied()
            .ok_or_else(|| GraphError::UnknownEndpoint(v.to_string()))
    };
    let edge_ix = edges
        .iter()
        .map(|(u, v)| Ok((lookup(u)?, lookup(v)?)))
        .collect::<Result<Vec<_>, GraphError>>()?;
    let parts = nodes
        .iter()
        .map(|(name, attrs)| (NodeKind::plain(name.clone()), attrs.clone()))
        .collect();
    CausalGraph::from_parts(parts, edge_ix)
}

impl CausalGraph {
    /// Validate and assemble a graph. `edges` index into `nodes`; duplicates
    /// collapse.
    pub fn from_parts(
        nodes: Vec<(NodeKind, NodeAttrs)>,
        edges: Vec<(usize, usize)>,
    ) -> Result<Self, GraphError> {
        let labels: Vec<String> = nodes.iter().map(|(k, _)| k.label()).collect();
        let mut order: Vec<usize> = (0..nodes.len()).collect();
        order.sort_by(|&a, &b| labels[a].cmp(&labels[b]));
        let mut remap = vec![0u32; nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new as u32;
        }

        let mut by_label = BTreeMap::new();
        let mut bases = BTreeSet::new();
        for (i, (kind, attrs)) in nodes.iter().enumerate() {
            if by_label
                .insert(labels[i].clone(), NodeId(remap[i]))
                .is_some()
            {
                return Err(GraphError::DuplicateName(labels[i].clone()));
            }
            if let NodeKind::Random { base, .. } = kind {
                if !bases.insert(base.clone()) {
                    return Err(GraphError::DuplicateName(base.to_string()));
                }
            }
            attrs
                .check()
                .map_err(|reason| GraphError::InvalidAttributes {
                    node: labels[i].clone(),
                    reason,
                })?;
        }
        let mut fixed_vars = BTreeSet::new();
        for (kind, _) in &nodes {
            if let NodeKind::Fixed { var, .. } = kind {
                if !bases.contains(var) {
                    return Err(GraphError::DanglingFixed(var.to_string()));
                }
                if !fixed_vars.insert(var.clone()) {
                    return Err(GraphError::DuplicateName(kind.label()));
                }
            }
        }

        let mut sorted_nodes: Vec<Option<Node>> = vec![None; nodes.len()];
        for (i, ((kind, attrs), label)) in nodes.into_iter().zip(labels).enumerate() {
            sorted_nodes[remap[i] as usize] = Some(Node { kind, attrs, label });
        }
        let nodes: Vec<Node> = sorted_nodes.into_iter().map(Option::unwrap).collect();

        let n = nodes.len();
        let mut edge_set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::UnknownNode(format!("#{}", u.max(v))));
            }
            edge_set.insert((NodeId(remap[u]), NodeId(remap[v])));
        }
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(u, v) in &edge_set {
            if nodes[v.index()].is_fixed() {
                return Err(GraphError::FixedHasParents(nodes[v.index()].label.clone()));
            }
            children[u.index()].push(v);
            parents[v.index()].push(u);
        }
        let graph = CausalGraph {
            nodes,
            edges: edge_set.into_iter().collect(),
            parents,
            children,
            by_label,
        };
        if let Some(witness) = graph.find_cycle() {
            return Err(GraphError::Cycle { witness });
        }
        Ok(graph)
    }

    fn find_cycle(&self) -> Option<Vec<String>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let mut mark = vec![Mark::New; self.len()];
        for root in self.node_ids() {
            if mark[root.index()] != Mark::New {
                continue;
            }
            // iterative DFS; `path` mirrors the active stack
            let mut stack: Vec<(NodeId, usize)> = vec![(root, 0)];
            let mut path = vec![root];
            mark[root.index()] = Mark::Active;
            while let Some(&mut (u, ref mut next)) = stack.last_mut() {
                if let Some(&v) = self.children[u.index()].get(*next) {
                    *next += 1;
                    match mark[v.index()] {
                        Mark::Active => {
                            let start = path.iter().position(|&p| p == v).unwrap();
                            let mut witness: Vec<String> = path[start..]
                                .iter()
                                .map(|&p| self.label(p).to_string())
                                .collect();
                            witness.push(self.label(v).to_string());
                            return Some(witness);
                        }
                        Mark::New => {
                            mark[v.index()] = Mark::Active;
                            stack.push((v, 0));
                            path.push(v);
                        }
                        Mark::Done => {}
                    }
                } else {
                    mark[u.index()] = Mark::Done;
                    stack.pop();
                    path.pop();
                }
            }
        }
        None
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (NodeId(i as u32), n))
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.nodes[id.index()].label
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, from: NodeId, to: NodeId) -> bool {
        self.edges.binary_search(&(from, to)).is_ok()
    }

    pub fn parents(&self, id: NodeId) -> &[NodeId] {
        &self.parents[id.index()]
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.children[id.index()]
    }

    pub fn id_of(&self, label: &str) -> Option<NodeId> {
        self.by_label.get(label).copied()
    }

    pub fn require(&self, label: &str) -> Result<NodeId, GraphError> {
        self.id_of(label)
            .ok_or_else(|| GraphError::UnknownNode(label.to_string()))
    }

    /// The random node whose base variable is `var`.
    pub fn random(&self, var: &VarName) -> Option<NodeId> {
        self.nodes().find_map(|(id, n)| match &n.kind {
            NodeKind::Random { base, .. } if base == var => Some(id),
            _ => None,
        })
    }

    /// The fixed half of `var`, if `var` has been split.
    pub fn fixed(&self, var: &VarName) -> Option<NodeId> {
        self.nodes().find_map(|(id, n)| match &n.kind {
            NodeKind::Fixed { var: v, .. } if v == var => Some(id),
            _ => None,
        })
    }

    pub fn has_fixed_nodes(&self) -> bool {
        self.nodes.iter().any(Node::is_fixed)
    }

    fn check(&self, id: NodeId) -> Result<(), GraphError> {
        if id.index() < self.len() {
            Ok(())
        } else {
            Err(GraphError::UnknownNode(format!("#{}", id.0)))
        }
    }

    fn reach<'a>(
        &'a self,
        start: NodeId,
        step: impl Fn(NodeId) -> &'a [NodeId],
    ) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &v in step(u) {
                if seen.insert(v) {
                    stack.push(v);
                }
            }
        }
        seen.remove(&start);
        seen
    }

    /// Proper ancestors of `id`.
    pub fn ancestors(&self, id: NodeId) -> Result<BTreeSet<NodeId>, GraphError> {
        self.check(id)?;
        Ok(self.reach(id, |u| self.parents(u)))
    }

    /// Proper descendants of `id`.
    pub fn descendants(&self, id: NodeId) -> Result<BTreeSet<NodeId>, GraphError> {
        self.check(id)?;
        Ok(self.reach(id, |u| self.children(u)))
    }

    /// Kahn layers: each layer holds the nodes whose parents all sit in
    /// earlier layers, in label order.
    pub fn layers(&self) -> Vec<Vec<NodeId>> {
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut current: Vec<NodeId> = self
            .node_ids()
            .filter(|id| indegree[id.index()] == 0)
            .collect();
        let mut layers = Vec::new();
        while !current.is_empty() {
            let mut next = Vec::new();
            for &u in &current {
                for &v in self.children(u) {
                    indegree[v.index()] -= 1;
                    if indegree[v.index()] == 0 {
                        next.push(v);
                    }
                }
            }
            next.sort();
            layers.push(std::mem::replace(&mut current, next));
        }
        layers
    }

    pub fn topological_order(&self) -> Vec<NodeId> {
        self.layers().into_iter().flatten().collect()
    }

    /// Canonical JSON: sorted keys, pretty-printed, newline-terminated.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.json_value()).expect("graph JSON");
        text.push('\n');
        text
    }

    pub(crate) fn json_value(&self) -> serde_json::Value {
        let nodes: Vec<_> = self
            .nodes
            .iter()
            .map(|n| {
                let (kind, context, value) = match &n.kind {
                    NodeKind::Random { context, .. } => (
                        "random",
                        context
                            .iter()
                            .map(|(v, x)| json!([v, x]))
                            .collect::<Vec<_>>(),
                        serde_json::Value::Null,
                    ),
                    NodeKind::Fixed { value, .. } => ("fixed", Vec::new(), json!(value)),
                };
                json!({
                    "name": n.var(),
                    "label": n.label,
                    "kind": kind,
                    "context": context,
                    "value": value,
                    "attrs": n.attrs,
                })
            })
            .collect();
        let edges: Vec<_> = self
            .edges
            .iter()
            .map(|&(u, v)| json!([self.label(u), self.label(v)]))
            .collect();
        json!({ "nodes": nodes, "edges": edges })
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| GraphError::Json(e.to_string()))?;
        Self::from_json_value(&value)
    }

    pub(crate) fn from_json_value(value: &serde_json::Value) -> Result<Self, GraphError> {
        #[derive(Deserialize)]
        struct JsonNode {
            name: VarName,
            kind: String,
            #[serde(default)]
            context: Vec<(VarName, Value)>,
            value: Option<Value>,
            attrs: NodeAttrs,
        }
        #[derive(Deserialize)]
        struct JsonGraph {
            nodes: Vec<JsonNode>,
            edges: Vec<(String, String)>,
        }
        let raw: JsonGraph =
            serde_json::from_value(value.clone()).map_err(|e| GraphError::Json(e.to_string()))?;
        let mut parts = Vec::with_capacity(raw.nodes.len());
        for node in raw.nodes {
            let kind = match (node.kind.as_str(), node.value) {
                ("random", _) => NodeKind::Random {
                    base: node.name,
                    context: InterventionContext::from_pairs(node.context)?,
                },
                ("fixed", Some(value)) => NodeKind::Fixed {
                    var: node.name,
                    value,
                },
                (other, _) => return Err(GraphError::Json(format!("bad node kind `{other}`"))),
            };
            parts.push((kind, node.attrs));
        }
        let position: BTreeMap<String, usize> = parts
            .iter()
            .enumerate()
            .map(|(i, (k, _))| (k.label(), i))
            .collect();
        let edges = raw
            .edges
            .iter()
            .map(|(u, v)| {
                let find = |l: &String| {
                    position
                        .get(l)
                        .copied()
                        .ok_or_else(|| GraphError::UnknownEndpoint(l.clone()))
                };
                Ok((find(u)?, find(v)?))
            })
            .collect::<Result<Vec<_>, GraphError>>()?;
        CausalGraph::from_parts(parts, edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> VarName {
        VarName::new(s).unwrap()
    }

    fn dag(nodes: &[(&str, Role)], edges: &[(&str, &str)]) -> Result<CausalGraph, GraphError> {
        let nodes: Vec<_> = nodes
            .iter()
            .map(|(n, r)| (v(n), NodeAttrs::new(*r)))
            .collect();
        let edges: Vec<_> = edges.iter().map(|(a, b)| (v(a), v(b))).collect();
        build_graph(&nodes, &edges)
    }

    fn mediated() -> CausalGraph {
        dag(
            &[
                ("A", Role::Treatment),
                ("M", Role::Intercurrent),
                ("Y", Role::Outcome),
            ],
            &[("A", "M"), ("A", "Y"), ("M", "Y")],
        )
        .unwrap()
    }

    fn labels(g: &CausalGraph, ids: impl IntoIterator<Item = NodeId>) -> Vec<String> {
        ids.into_iter().map(|id| g.label(id).to_string()).collect()
    }

    #[test]
    fn var_names_are_validated() {
        assert!(VarName::new("M_3").is_ok());
        assert!(VarName::new("3M").is_err());
        assert!(VarName::new("").is_err());
        assert!(VarName::new("a-b").is_err());
        assert_ne!(v("y"), v("Y"));
    }

    #[test]
    fn mediated_graph_builds() {
        let g = mediated();
        assert_eq!(g.len(), 3);
        assert_eq!(g.edge_count(), 3);
        let y = g.require("Y").unwrap();
        assert_eq!(labels(&g, g.ancestors(y).unwrap()), ["A", "M"]);
        let a = g.require("A").unwrap();
        assert!(g.ancestors(a).unwrap().is_empty());
    }

    #[test]
    fn single_node_graph() {
        let g = dag(&[("A", Role::Treatment)], &[]).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(labels(&g, g.topological_order()), ["A"]);
    }

    #[test]
    fn two_cycle_reports_witness() {
        let err = dag(
            &[("A", Role::Treatment), ("M", Role::Intercurrent)],
            &[("A", "M"), ("M", "A")],
        )
        .unwrap_err();
        assert_eq!(
            err,
            GraphError::Cycle {
                witness: vec!["A".into(), "M".into(), "A".into()]
            }
        );
    }

    #[test]
    fn self_loop_is_a_cycle() {
        let err = dag(&[("A", Role::Covariate)], &[("A", "A")]).unwrap_err();
        assert!(matches!(err, GraphError::Cycle { witness } if witness == ["A", "A"]));
    }

    #[test]
    fn construction_errors() {
        let dup = dag(&[("A", Role::Treatment), ("A", Role::Outcome)], &[]);
        assert_eq!(dup.unwrap_err(), GraphError::DuplicateName("A".into()));
        let unknown = dag(&[("A", Role::Treatment)], &[("A", "Y")]);
        assert_eq!(
            unknown.unwrap_err(),
            GraphError::UnknownEndpoint("Y".into())
        );
        let bad = build_graph(
            &[(v("U"), NodeAttrs::new(Role::Latent).conditioned(true))],
            &[],
        );
        assert!(matches!(bad, Err(GraphError::InvalidAttributes { .. })));
    }

    #[test]
    fn topological_orders() {
        assert_eq!(
            labels(&mediated(), mediated().topological_order()),
            ["A", "M", "Y"]
        );
        let g = dag(
            &[
                ("Y", Role::Outcome),
                ("B", Role::Covariate),
                ("A", Role::Treatment),
            ],
            &[("A", "Y"), ("B", "Y")],
        )
        .unwrap();
        assert_eq!(labels(&g, g.topological_order()), ["A", "B", "Y"]);
        let adjusted = dag(
            &[
                ("A", Role::Treatment),
                ("C", Role::Covariate),
                ("M", Role::Intercurrent),
                ("Y", Role::Outcome),
            ],
            &[("C", "M"), ("C", "Y"), ("A", "M"), ("A", "Y"), ("M", "Y")],
        )
        .unwrap();
        assert_eq!(
            labels(&adjusted, adjusted.topological_order()),
            ["A", "C", "M", "Y"]
        );
    }

    #[test]
    fn unknown_node_id_is_rejected() {
        let g = mediated();
        assert!(matches!(
            g.ancestors(NodeId(17)),
            Err(GraphError::UnknownNode(_))
        ));
    }

    #[test]
    fn labels_render_contexts() {
        let ctx = InterventionContext::from_pairs([
            (v("A"), Value::Symbolic("a".into())),
            (v("M3"), Value::Int(0)),
        ])
        .unwrap();
        assert_eq!(potential_outcome_label(&v("Y"), &ctx), "Y(a,m3=0)");
        assert_eq!(fixed_label(&v("A"), &Value::Int(1)), "a=1");
        assert_eq!(fixed_label(&v("M3"), &Value::Symbolic("m3".into())), "m3");
        assert!(InterventionContext::from_pairs([
            (v("A"), Value::Int(0)),
            (v("A"), Value::Int(1)),
        ])
        .is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = mediated();
        let text = g.to_json();
        assert!(text.ends_with('\n'));
        assert_eq!(CausalGraph::from_json(&text).unwrap(), g);
        // keys sorted
        let attrs = text.find("\"attrs\"").unwrap();
        let name = text.find("\"name\"").unwrap();
        assert!(attrs < name);
    }

    #[test]
    fn fixed_nodes_cannot_have_parents() {
        let parts = vec![
            (NodeKind::plain(v("A")), NodeAttrs::new(Role::Treatment)),
            (
                NodeKind::Fixed {
                    var: v("A"),
                    value: Value::Symbolic("a".into()),
                },
                NodeAttrs::new(Role::Treatment),
            ),
        ];
        let err = CausalGraph::from_parts(parts, vec![(0, 1)]).unwrap_err();
        assert_eq!(err, GraphError::FixedHasParents("a".into()));
    }
}
