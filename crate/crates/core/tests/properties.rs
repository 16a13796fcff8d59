mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use common::{dag, spec_text, study_text, v, EXAMPLES};
use swigc_core::dsep::{d_separated, open_paths, DSepQuery};
use swigc_core::graph::{CausalGraph, InterventionContext, NodeId, Value};
use swigc_core::identify::{identify_estimand, render_report};
use swigc_core::{parse, serialize, split};

fn graph_strategy() -> impl Strategy<Value = (usize, Vec<bool>)> {
    (2usize..7).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(any::<bool>(), n * (n - 1) / 2),
        )
    })
}

fn subset(g: &CausalGraph, mask: u32) -> BTreeSet<NodeId> {
    g.node_ids()
        .filter(|id| mask & (1 << id.index()) != 0)
        .collect()
}

proptest! {
    #[test]
    fn topological_order_respects_edges((n, bits) in graph_strategy()) {
        let g = dag(n, &bits);
        let order = g.topological_order();
        prop_assert_eq!(order.len(), g.len());
        let rank: Vec<usize> = {
            let mut r = vec![0; g.len()];
            for (k, id) in order.iter().enumerate() { r[id.index()] = k; }
            r
        };
        for &(a, b) in g.edges() {
            prop_assert!(rank[a.index()] < rank[b.index()]);
        }
    }

    #[test]
    fn ancestors_and_descendants_are_dual((n, bits) in graph_strategy()) {
        let g = dag(n, &bits);
        for u in g.node_ids() {
            for w in g.node_ids() {
                let up = g.ancestors(u).unwrap().contains(&w);
                let down = g.descendants(w).unwrap().contains(&u);
                prop_assert_eq!(up, down);
            }
        }
    }

    #[test]
    fn dsep_is_symmetric_and_witnessed(
        (n, bits) in graph_strategy(),
        xm in 1u32..128, ym in 1u32..128, zm in 0u32..128,
    ) {
        let g = dag(n, &bits);
        let x = subset(&g, xm);
        let y: BTreeSet<_> = subset(&g, ym).difference(&x).copied().collect();
        let z: BTreeSet<_> = subset(&g, zm).difference(&x).copied().filter(|i| !y.contains(i)).collect();
        prop_assume!(!x.is_empty() && !y.is_empty());
        let q = DSepQuery { x: x.clone(), y: y.clone(), z: z.clone() };
        let r = DSepQuery { x: y, y: x, z };
        let sep = d_separated(&g, &q).unwrap();
        prop_assert_eq!(sep, d_separated(&g, &r).unwrap());
        prop_assert_eq!(sep, open_paths(&g, &q, 1).unwrap().is_empty());
    }

    #[test]
    fn splitting_keeps_every_edge((n, bits) in graph_strategy(), mask in 0u32..128) {
        let g = dag(n, &bits);
        let ctx: InterventionContext = g
            .nodes()
            .filter(|(id, _)| mask & (1 << id.index()) != 0)
            .map(|(_, node)| (node.var().clone(), Value::Int(0)))
            .collect();
        let s = split(&g, &ctx).unwrap();
        prop_assert_eq!(s.graph().edge_count(), g.edge_count());
        prop_assert_eq!(s.graph().len(), g.len() + ctx.len());
        for (id, node) in s.graph().nodes() {
            if node.is_fixed() {
                prop_assert!(s.graph().parents(id).is_empty());
            }
        }
    }

    #[test]
    fn random_studies_round_trip(
        covariates in prop::collection::vec(any::<bool>(), 0..3),
        ies in prop::collection::vec(0u8..4, 0..3),
        edge_bits in prop::collection::vec(any::<bool>(), 12),
    ) {
        let text = study_text(&covariates, &ies, &edge_bits);
        let spec = parse(&text).unwrap();
        let printed = serialize(&spec);
        prop_assert_eq!(&parse(&printed).unwrap(), &spec);
        prop_assert_eq!(serialize(&parse(&printed).unwrap()), printed);
    }

    #[test]
    fn identification_is_deterministic(
        covariates in prop::collection::vec(any::<bool>(), 0..3),
        ies in prop::collection::vec(0u8..4, 0..3),
        edge_bits in prop::collection::vec(any::<bool>(), 12),
    ) {
        let spec = parse(&study_text(&covariates, &ies, &edge_bits)).unwrap();
        let a = identify_estimand(&spec);
        let b = identify_estimand(&parse(&serialize(&spec)).unwrap());
        prop_assert_eq!(render_report(&a), render_report(&b));
    }

    /// A latent common cause of a hypothetical IE and the outcome defeats
    /// identification whatever else the graph holds.
    #[test]
    fn latent_confounding_is_never_identified(
        covariates in prop::collection::vec(any::<bool>(), 0..3),
        edge_bits in prop::collection::vec(any::<bool>(), 12),
    ) {
        let mut text = study_text(&covariates, &[1], &edge_bits);
        let at = text.find("edges {").unwrap();
        text.insert_str(at, "node L { observed: false };\n");
        let at = text.find("edges {").unwrap() + "edges {".len();
        text.insert_str(at, " L -> M0; L -> Y;");
        let spec = parse(&text).unwrap();
        let r = identify_estimand(&spec);
        prop_assert!(!r.left.is_identified());
        prop_assert!(!r.right.is_identified());
    }
}

#[test]
fn example_specs_are_print_fixpoints() {
    for name in EXAMPLES {
        let spec = parse(&spec_text(name)).unwrap();
        let printed = serialize(&spec);
        assert_eq!(parse(&printed).unwrap(), spec, "{name}");
        assert_eq!(serialize(&parse(&printed).unwrap()), printed, "{name}");
    }
}

#[test]
fn fixed_nodes_are_ignored_when_conditioned() {
    let g = dag(2, &[true]);
    let ctx: InterventionContext = [(v("V0"), Value::Int(1))].into_iter().collect();
    let s = split(&g, &ctx).unwrap();
    let q = DSepQuery::from_labels(s.graph(), &["V0"], &["V1(v0=1)"], &["v0=1"]).unwrap();
    assert!(d_separated(s.graph(), &q).unwrap());
}
