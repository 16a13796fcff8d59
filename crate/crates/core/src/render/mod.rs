//! TikZ and DOT markup for DAGs and SWIGs.

mod dot;
mod tikz;

use std::collections::{BTreeMap, BTreeSet};

pub use dot::to_dot;
pub use tikz::to_tikz;

use crate::graph::{CausalGraph, NodeId, VarName};

#[derive(Clone, Debug, PartialEq)]
pub struct RenderStyle {
    pub fixed_color: String,
    pub edge_color: String,
    pub latent_fill: String,
    pub layer_gap: f64,
    pub row_gap: f64,
    /// Offset of a fixed half from its random half.
    pub split_gap: f64,
}

impl Default for RenderStyle {
    fn default() -> Self {
        RenderStyle {
            fixed_color: "red".into(),
            edge_color: "blue".into(),
            latent_fill: "gray!40".into(),
            layer_gap: 2.5,
            row_gap: 1.5,
            split_gap: 0.75,
        }
    }
}

/// Extra marks keyed by node label: boxed nodes and label suffixes, as for
/// a principal stratum `M(a=1)=0`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Annotations {
    pub boxed: BTreeSet<String>,
    pub suffix: BTreeMap<String, String>,
}

impl Annotations {
    pub fn stratum(label: impl Into<String>, value: impl std::fmt::Display) -> Self {
        let label = label.into();
        Annotations {
            boxed: BTreeSet::from([label.clone()]),
            suffix: BTreeMap::from([(label, format!("={value}"))]),
        }
    }
}

pub(crate) fn node_label(g: &CausalGraph, id: NodeId, notes: &Annotations) -> String {
    let label = g.label(id);
    match notes.suffix.get(label) {
        Some(s) => format!("{label}{s}"),
        None => label.to_string(),
    }
}

/// Column of every node: longest path to it in the graph where each
/// split pair is one variable.
pub(crate) fn var_layers(g: &CausalGraph) -> BTreeMap<VarName, usize> {
    let mut parents: BTreeMap<VarName, BTreeSet<VarName>> = BTreeMap::new();
    for (_, n) in g.nodes() {
        parents.entry(n.var().clone()).or_default();
    }
    for &(u, v) in g.edges() {
        let (a, b) = (g.node(u).var(), g.node(v).var());
        if a != b {
            parents.get_mut(b).expect("seeded").insert(a.clone());
        }
    }
    let mut layer: BTreeMap<VarName, usize> = BTreeMap::new();
    while layer.len() < parents.len() {
        let before = layer.len();
        for (v, ps) in &parents {
            if layer.contains_key(v) {
                continue;
            }
            if ps.iter().all(|p| layer.contains_key(p)) {
                let l = ps.iter().map(|p| layer[p] + 1).max().unwrap_or(0);
                layer.insert(v.clone(), l);
            }
        }
        assert!(layer.len() > before, "graph-core graphs are acyclic");
    }
    layer
}

/// Position of every node: layers left to right, conditioned and latent
/// variables above the main row, others stacked below it.
pub(crate) fn layout(g: &CausalGraph, style: &RenderStyle, notes: &Annotations) -> Vec<(f64, f64)> {
    let layers = var_layers(g);
    let raised = |id: NodeId| {
        let n = g.node(id);
        n.attrs.conditioned || n.attrs.is_latent() || notes.boxed.contains(g.label(id))
    };
    let mut row: BTreeMap<VarName, f64> = BTreeMap::new();
    let mut above: BTreeMap<usize, usize> = BTreeMap::new();
    let mut below: BTreeMap<usize, usize> = BTreeMap::new();
    for (id, n) in g.nodes() {
        if n.is_fixed() || row.contains_key(n.var()) {
            continue;
        }
        let l = layers[n.var()];
        let y = if raised(id) {
            let k = above.entry(l).or_insert(0);
            *k += 1;
            *k as f64 * style.row_gap
        } else {
            let k = below.entry(l).or_insert(0);
            let y = 0.0 - *k as f64 * style.row_gap;
            *k += 1;
            y
        };
        row.insert(n.var().clone(), y);
    }
    g.nodes()
        .map(|(_, n)| {
            let x = layers[n.var()] as f64 * style.layer_gap;
            let y = row.get(n.var()).copied().unwrap_or(0.0);
            if n.is_fixed() {
                (x + style.split_gap, y)
            } else {
                (x, y)
            }
        })
        .collect()
}
