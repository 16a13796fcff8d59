#![allow(dead_code)]

use std::collections::BTreeMap;

use swigc_core::graph::{build_graph, CausalGraph, NodeAttrs, Role, VarName};

pub fn v(s: &str) -> VarName {
    VarName::new(s).unwrap()
}

/// DAG on `V0..Vn` with an edge `Vi -> Vj` (i < j) for every set bit.
pub fn dag(n: usize, bits: &[bool]) -> CausalGraph {
    let names: Vec<VarName> = (0..n).map(|i| v(&format!("V{i}"))).collect();
    let nodes: Vec<_> = names
        .iter()
        .map(|name| (name.clone(), NodeAttrs::new(Role::Covariate)))
        .collect();
    let mut edges = Vec::new();
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            if bits.get(k).copied().unwrap_or(false) {
                edges.push((names[i].clone(), names[j].clone()));
            }
            k += 1;
        }
    }
    build_graph(&nodes, &edges).unwrap()
}

pub fn binary_supports(g: &CausalGraph) -> BTreeMap<VarName, Vec<i64>> {
    g.nodes()
        .map(|(_, n)| (n.var().clone(), vec![0, 1]))
        .collect()
}

pub fn spec_text(name: &str) -> String {
    std::fs::read_to_string(format!("{}/specs/{name}.swg", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

pub const EXAMPLES: &[&str] = &[
    "simplest",
    "itt",
    "hypothetical_unobserved",
    "hypothetical_adjusted",
    "composite",
    "principal_stratum",
    "chronic_pain",
];

/// Study with treatment A, outcome Y, boxed or unboxed covariates `C*`
/// and intercurrent events `M*` whose strategies are picked by `ies`.
pub fn study_text(covariates: &[bool], ies: &[u8], bits: &[bool]) -> String {
    let mut s =
        String::from("study gen {\n node A { role: treatment };\n node Y { role: outcome };\n");
    for (i, adjust) in covariates.iter().enumerate() {
        s += &format!(" node C{i} {{ adjust: {adjust} }};\n");
    }
    for i in 0..ies.len() {
        s += &format!(" node M{i} {{ role: intercurrent }};\n");
    }
    s += " edges { A -> Y;";
    let mut k = 0;
    let mut bit = || {
        k += 1;
        bits.get(k - 1).copied().unwrap_or(false)
    };
    for i in 0..ies.len() {
        if bit() {
            s += &format!(" A -> M{i};");
        }
        s += &format!(" M{i} -> Y;");
        for j in 0..i {
            if bit() {
                s += &format!(" M{j} -> M{i};");
            }
        }
    }
    for i in 0..covariates.len() {
        if bit() {
            s += &format!(" C{i} -> Y;");
        }
        for j in 0..ies.len() {
            if bit() {
                s += &format!(" C{i} -> M{j};");
            }
        }
    }
    s += " }\n";
    if !ies.is_empty() {
        s += " strategy {";
        for (i, tag) in ies.iter().enumerate() {
            let t = match tag {
                0 => "treatment_policy",
                1 => "hypothetical(0)",
                2 => "hypothetical(1)",
                _ => "treatment_policy",
            };
            s += &format!(" M{i}: {t};");
        }
        s += " }\n";
    }
    s + " estimand { mean_difference(Y; A=1 vs A=0) }\n}\n"
}
