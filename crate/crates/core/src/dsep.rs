//! d-separation on DAGs and SWIGs.
//!
//! The boolean query is the linear-time reachability ("Bayes-ball")
//! procedure. Witness paths come from a separate bounded path enumeration,
//! which doubles as a cross-check of the reachability answer in tests.
//!
//! Fixed nodes are constants: they never carry the ball, so every path
//! through one is blocked and a fixed endpoint is separated from everything.
//! Fixed nodes in a conditioning set are ignored.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{CausalGraph, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DSepError {
    #[error("node `{0}` appears in more than one query set")]
    OverlappingSets(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DSepQuery {
    pub x: BTreeSet<NodeId>,
    pub y: BTreeSet<NodeId>,
    pub z: BTreeSet<NodeId>,
}

impl DSepQuery {
    pub fn new(
        x: impl IntoIterator<Item = NodeId>,
        y: impl IntoIterator<Item = NodeId>,
        z: impl IntoIterator<Item = NodeId>,
    ) -> Self {
        DSepQuery {
            x: x.into_iter().collect(),
            y: y.into_iter().collect(),
            z: z.into_iter().collect(),
        }
    }

    /// Resolve node labels against `g`.
    pub fn from_labels<S: AsRef<str>>(
        g: &CausalGraph,
        x: &[S],
        y: &[S],
        z: &[S],
    ) -> Result<Self, DSepError> {
        let resolve = |set: &[S]| {
            set.iter()
                .map(|l| {
                    g.id_of(l.as_ref())
                        .ok_or_else(|| DSepError::UnknownNode(l.as_ref().to_string()))
                })
                .collect::<Result<BTreeSet<_>, _>>()
        };
        Ok(DSepQuery {
            x: resolve(x)?,
            y: resolve(y)?,
            z: resolve(z)?,
        })
    }

    fn validate(&self, g: &CausalGraph) -> Result<(), DSepError> {
        for id in self.x.iter().chain(&self.y).chain(&self.z) {
            if id.index() >= g.len() {
                return Err(DSepError::UnknownNode(format!("#{}", id.index())));
            }
        }
        let overlap = self
            .x
            .intersection(&self.y)
            .chain(self.x.intersection(&self.z))
            .chain(self.y.intersection(&self.z))
            .next();
        match overlap {
            Some(&id) => Err(DSepError::OverlappingSets(g.label(id).to_string())),
            None => Ok(()),
        }
    }

    /// Render as `X ⊥ Y | Z` with labels in sorted order.
    pub fn render(&self, g: &CausalGraph) -> String {
        let join = |s: &BTreeSet<NodeId>| {
            s.iter()
                .map(|&id| g.label(id))
                .collect::<Vec<_>>()
                .join(", ")
        };
        if self.z.is_empty() {
            format!("{} ⊥ {}", join(&self.x), join(&self.y))
        } else {
            format!("{} ⊥ {} | {}", join(&self.x), join(&self.y), join(&self.z))
        }
    }
}

/// Random conditioning nodes plus all of their ancestors.
fn conditioned_ancestry(g: &CausalGraph, z: &BTreeSet<NodeId>) -> Vec<bool> {
    let mut mark = vec![false; g.len()];
    let mut stack: Vec<NodeId> = z
        .iter()
        .copied()
        .filter(|&id| !g.node(id).is_fixed())
        .collect();
    for &id in &stack {
        mark[id.index()] = true;
    }
    while let Some(u) = stack.pop() {
        for &p in g.parents(u) {
            if !mark[p.index()] {
                mark[p.index()] = true;
                stack.push(p);
            }
        }
    }
    mark
}

pub fn d_separated(g: &CausalGraph, q: &DSepQuery) -> Result<bool, DSepError> {
    q.validate(g)?;
    let in_z = |id: NodeId| q.z.contains(&id) && !g.node(id).is_fixed();
    let anc = conditioned_ancestry(g, &q.z);

    // (node, arrived_from_child)
    let mut visited = vec![[false; 2]; g.len()];
    let mut queue: Vec<(NodeId, bool)> =
        q.x.iter()
            .copied()
            .filter(|&id| !g.node(id).is_fixed())
            .map(|id| (id, true))
            .collect();
    while let Some((v, up)) = queue.pop() {
        let slot = &mut visited[v.index()][up as usize];
        if *slot {
            continue;
        }
        *slot = true;
        let node = g.node(v);
        if node.is_fixed() {
            continue;
        }
        if !in_z(v) && q.y.contains(&v) {
            return Ok(false);
        }
        if up {
            if !in_z(v) {
                queue.extend(g.parents(v).iter().map(|&p| (p, true)));
                queue.extend(g.children(v).iter().map(|&c| (c, false)));
            }
        } else {
            if !in_z(v) {
                queue.extend(g.children(v).iter().map(|&c| (c, false)));
            }
            if anc[v.index()] {
                queue.extend(g.parents(v).iter().map(|&p| (p, true)));
            }
        }
    }
    Ok(true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Open,
    Blocked,
}

/// A path between the query sets with its blocking status.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathWitness {
    pub nodes: Vec<NodeId>,
    /// Colliders on the path; on an open path each is in, or has a
    /// descendant in, the conditioning set.
    pub colliders_opened: Vec<NodeId>,
    pub verdict: Verdict,
}

impl PathWitness {
    /// Label-level copy that no longer borrows the graph.
    pub fn to_labeled(&self, g: &CausalGraph) -> LabeledPath {
        let nodes = self
            .nodes
            .iter()
            .map(|&id| g.label(id).to_string())
            .collect();
        let forward = self
            .nodes
            .windows(2)
            .map(|w| g.has_edge(w[0], w[1]))
            .collect();
        LabeledPath { nodes, forward }
    }

    pub fn render(&self, g: &CausalGraph) -> String {
        self.to_labeled(g).to_string()
    }
}

/// A path as labels plus edge orientations; `forward[i]` is true when the
/// edge points from `nodes[i]` to `nodes[i + 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LabeledPath {
    pub nodes: Vec<String>,
    pub forward: Vec<bool>,
}

impl fmt::Display for LabeledPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, node) in self.nodes.iter().enumerate() {
            if i > 0 {
                f.write_str(if self.forward[i - 1] { " -> " } else { " <- " })?;
            }
            f.write_str(node)?;
        }
        Ok(())
    }
}

/// Classify an arbitrary path (consecutive nodes must be adjacent).
pub fn classify_path(g: &CausalGraph, path: &[NodeId], z: &BTreeSet<NodeId>) -> PathWitness {
    let anc = conditioned_ancestry(g, z);
    let mut colliders = Vec::new();
    let mut open = path.iter().all(|&id| !g.node(id).is_fixed());
    for w in path.windows(3) {
        let (prev, mid, next) = (w[0], w[1], w[2]);
        let collider = g.has_edge(prev, mid) && g.has_edge(next, mid);
        if collider {
            colliders.push(mid);
            open &= anc[mid.index()];
        } else {
            open &= !z.contains(&mid);
        }
    }
    PathWitness {
        nodes: path.to_vec(),
        colliders_opened: colliders,
        verdict: if open {
            Verdict::Open
        } else {
            Verdict::Blocked
        },
    }
}

/// Up to `limit` open paths, shortest first, ties broken by label sequence.
/// Empty exactly when the query is d-separated.
pub fn open_paths(
    g: &CausalGraph,
    q: &DSepQuery,
    limit: usize,
) -> Result<Vec<PathWitness>, DSepError> {
    if d_separated(g, q)? || limit == 0 {
        return Ok(Vec::new());
    }
    let anc = conditioned_ancestry(g, &q.z);
    let endpoints: BTreeSet<NodeId> = q.x.union(&q.y).copied().collect();
    let neighbours: Vec<Vec<NodeId>> = g
        .node_ids()
        .map(|id| {
            let mut n: Vec<NodeId> = g
                .parents(id)
                .iter()
                .chain(g.children(id))
                .copied()
                .collect();
            n.sort_by(|a, b| g.label(*a).cmp(g.label(*b)));
            n
        })
        .collect();

    struct Search<'a> {
        g: &'a CausalGraph,
        q: &'a DSepQuery,
        anc: &'a [bool],
        endpoints: &'a BTreeSet<NodeId>,
        neighbours: &'a [Vec<NodeId>],
        found: Vec<Vec<NodeId>>,
    }

    impl Search<'_> {
        // `path` ends at a node whose status as an interior node is decided
        // once the next hop is known.
        fn extend(&mut self, path: &mut Vec<NodeId>, on_path: &mut [bool], remaining: usize) {
            let last = *path.last().unwrap();
            for &next in &self.neighbours[last.index()] {
                if on_path[next.index()] || self.g.node(next).is_fixed() {
                    continue;
                }
                if path.len() >= 2 && !self.interior_open(path[path.len() - 2], last, next) {
                    continue;
                }
                if self.q.y.contains(&next) {
                    if remaining == 1 {
                        let mut done = path.clone();
                        done.push(next);
                        self.found.push(done);
                    }
                    continue;
                }
                if remaining == 1 || self.endpoints.contains(&next) {
                    continue;
                }
                path.push(next);
                on_path[next.index()] = true;
                self.extend(path, on_path, remaining - 1);
                on_path[next.index()] = false;
                path.pop();
            }
        }

        fn interior_open(&self, prev: NodeId, mid: NodeId, next: NodeId) -> bool {
            let collider = self.g.has_edge(prev, mid) && self.g.has_edge(next, mid);
            if collider {
                self.anc[mid.index()]
            } else {
                !self.q.z.contains(&mid)
            }
        }
    }

    let mut search = Search {
        g,
        q,
        anc: &anc,
        endpoints: &endpoints,
        neighbours: &neighbours,
        found: Vec::new(),
    };
    let starts: Vec<NodeId> =
        q.x.iter()
            .copied()
            .filter(|&id| !g.node(id).is_fixed())
            .collect();
    for hops in 1..g.len() {
        for &start in &starts {
            let mut path = vec![start];
            let mut on_path = vec![false; g.len()];
            on_path[start.index()] = true;
            search.extend(&mut path, &mut on_path, hops);
        }
        if search.found.len() >= limit {
            break;
        }
    }
    let mut found = search.found;
    found.sort_by(|a, b| {
        a.len().cmp(&b.len()).then_with(|| {
            let la: Vec<&str> = a.iter().map(|&id| g.label(id)).collect();
            let lb: Vec<&str> = b.iter().map(|&id| g.label(id)).collect();
            la.cmp(&lb)
        })
    });
    found.truncate(limit);
    Ok(found
        .into_iter()
        .map(|p| classify_path(g, &p, &q.z))
        .collect())
}
