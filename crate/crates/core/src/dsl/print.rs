//! Canonical text form.

use std::fmt::Write;

use super::{NodeDecl, StudySpec};
use crate::graph::Role;
use crate::oracle::{Mechanism, ScmVariable};

pub fn serialize(spec: &StudySpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "study {} {{", spec.name());
    for decl in spec.nodes() {
        let _ = writeln!(out, "  node {}{};", decl.name, attrs(decl));
    }
    out.push_str("  edges {\n");
    for (from, to) in spec.edges() {
        let _ = writeln!(out, "    {from} -> {to};");
    }
    out.push_str("  }\n");
    if !spec.strategies().is_empty() {
        out.push_str("  strategy {\n");
        for (ie, tag) in spec.strategies() {
            let _ = writeln!(out, "    {ie}: {tag};");
        }
        out.push_str("  }\n");
    }
    let e = spec.estimand_decl();
    let _ = writeln!(
        out,
        "  estimand {{ mean_difference({}; {t}={} vs {t}={}) }}",
        e.outcome,
        e.left,
        e.right,
        t = e.treatment
    );
    if let Some(scm) = spec.scm() {
        out.push_str("  scm {\n");
        for (name, var) in &scm.variables {
            let _ = writeln!(out, "    {name} := {}{};", mechanism(var), noise(var));
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

fn attrs(decl: &NodeDecl) -> String {
    let mut items = Vec::new();
    let write_role = decl.role != NodeDecl::default_role(decl.observed);
    if write_role {
        items.push(format!("role: {}", decl.role));
    }
    // what the parser would assume if `observed` were left out
    let implied = !write_role || decl.role != Role::Latent;
    if decl.observed != implied {
        items.push(format!("observed: {}", decl.observed));
    }
    if decl.adjust {
        items.push("adjust: true".to_string());
    }
    if decl.values != [0, 1] {
        let vs: Vec<String> = decl.values.iter().map(i64::to_string).collect();
        items.push(format!("values: [{}]", vs.join(", ")));
    }
    if items.is_empty() {
        String::new()
    } else {
        format!(" {{ {} }}", items.join(", "))
    }
}

fn mechanism(var: &ScmVariable) -> String {
    match &var.mechanism {
        Mechanism::Expr(e) => e.to_string(),
        Mechanism::Table(rows) => {
            let header: Vec<&str> = var.parents.iter().map(|p| p.as_str()).collect();
            let mut s = format!("table({}) {{\n", header.join(", "));
            let n = rows.len();
            for (i, (key, value)) in rows.iter().enumerate() {
                let ks: Vec<String> = key.iter().map(i64::to_string).collect();
                let sep = if i + 1 < n { "," } else { "" };
                let _ = writeln!(s, "      [{}]: {value}{sep}", ks.join(", "));
            }
            s.push_str("    }");
            s
        }
    }
}

fn noise(var: &ScmVariable) -> String {
    if var.noise == ScmVariable::degenerate_noise() {
        return String::new();
    }
    let items: Vec<String> = var.noise.iter().map(|(v, p)| format!("{v}: {p}")).collect();
    format!(" ~ {{{}}}", items.join(", "))
}
