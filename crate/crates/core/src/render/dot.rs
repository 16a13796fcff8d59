use std::fmt::Write;

use super::{node_label, Annotations, RenderStyle};
use crate::graph::CausalGraph;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// A `digraph`; each split pair shares a same-rank cluster.
pub fn to_dot(g: &CausalGraph, style: &RenderStyle, notes: &Annotations) -> String {
    let mut out = String::from("digraph swig {\n  rankdir=LR;\n");
    for (id, n) in g.nodes() {
        let mut attrs = vec![format!("label={}", quote(&node_label(g, id, notes)))];
        if n.is_fixed() {
            attrs.push(format!(
                "shape=circle, color={0}, fontcolor={0}",
                style.fixed_color
            ));
        } else if n.attrs.is_latent() {
            attrs.push("shape=circle, style=filled, fillcolor=gray".into());
        } else if n.attrs.conditioned || notes.boxed.contains(g.label(id)) {
            attrs.push("shape=box".into());
        } else if n.context().is_some_and(|c| c.is_empty()) || g.fixed(n.var()).is_some() {
            attrs.push("shape=circle".into());
        } else {
            attrs.push("shape=plaintext".into());
        }
        let _ = writeln!(out, "  n{} [{}];", id.index(), attrs.join(", "));
    }
    let mut k = 0;
    for (id, n) in g.nodes() {
        if !n.is_fixed() {
            continue;
        }
        if let Some(r) = g.random(n.var()) {
            let _ = writeln!(
                out,
                "  subgraph cluster_split_{k} {{ rank=same; style=invis; n{}; n{}; }}",
                r.index(),
                id.index()
            );
            k += 1;
        }
    }
    for &(u, v) in g.edges() {
        let _ = writeln!(
            out,
            "  n{} -> n{} [color={}];",
            u.index(),
            v.index(),
            style.edge_color
        );
    }
    out.push_str("}\n");
    out
}
