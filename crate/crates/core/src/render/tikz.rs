use std::fmt::Write;

use super::{layout, node_label, var_layers, Annotations, RenderStyle};
use crate::graph::{CausalGraph, NodeId};

fn escape(label: &str) -> String {
    label.replace('_', "\\_")
}

fn shape(g: &CausalGraph, id: NodeId, style: &RenderStyle, notes: &Annotations) -> Option<String> {
    let n = g.node(id);
    if n.is_fixed() {
        return Some(format!(
            "shape=semicircle, draw, shape border rotate=270, color={}, inner sep=0.5mm",
            style.fixed_color
        ));
    }
    if g.fixed(n.var()).is_some() {
        return Some("shape=semicircle, draw, shape border rotate=90, inner sep=1.5mm".into());
    }
    if n.attrs.is_latent() {
        return Some(format!("shape=circle, draw, fill={}", style.latent_fill));
    }
    if n.attrs.conditioned || notes.boxed.contains(g.label(id)) {
        return Some("shape=rectangle, draw".into());
    }
    if n.context().is_some_and(|c| c.is_empty()) {
        return Some("shape=circle, draw".into());
    }
    None
}

/// A `tikzpicture` block. Needs `\usetikzlibrary{arrows,shapes.geometric}`.
pub fn to_tikz(g: &CausalGraph, style: &RenderStyle, notes: &Annotations) -> String {
    let pos = layout(g, style, notes);
    let layers = var_layers(g);
    let mut out = String::from("\\begin{tikzpicture}[->,>=stealth']\n");
    for (id, _) in g.nodes() {
        let (x, y) = pos[id.index()];
        let label = escape(&node_label(g, id, notes));
        let opts = shape(g, id, style, notes)
            .map(|s| format!("[{s}]"))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "\\node{opts} (n{}) at ({x},{y}) {{${label}$}};",
            id.index()
        );
    }
    out.push_str("\\path\n");
    for &(u, v) in g.edges() {
        let span = layers[g.node(v).var()].abs_diff(layers[g.node(u).var()]);
        let bend = if span > 1 { "bend left, " } else { "" };
        let _ = writeln!(
            out,
            "  (n{}) edge [{bend}very thick, color={}] (n{})",
            u.index(),
            style.edge_color,
            v.index()
        );
    }
    out.push_str("  ;\n\\end{tikzpicture}\n");
    out
}
