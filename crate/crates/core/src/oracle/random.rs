use std::collections::BTreeMap;

use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{cartesian, Mechanism, ScmSpec, ScmVariable};
use crate::graph::{CausalGraph, VarName};
use crate::scalar::Scalar;

/// A random model over the non-derived nodes of `graph`, deterministic in
/// `seed`. Every parent configuration reaches every value of the child's
/// support, so all observed events have positive probability.
///
/// Supports should stay small (four values or fewer); table sizes grow with
/// the product of parent supports.
pub fn random_scm(
    graph: &CausalGraph,
    seed: u64,
    supports: &BTreeMap<VarName, Vec<i64>>,
) -> ScmSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scm = ScmSpec::default();
    let mut nodes: Vec<_> = graph
        .nodes()
        .filter(|(_, n)| !n.is_fixed() && n.attrs.deterministic.is_none())
        .collect();
    nodes.sort_by(|a, b| a.1.var().cmp(b.1.var()));
    for (id, node) in nodes {
        let mut parents: Vec<VarName> = graph
            .parents(id)
            .iter()
            .map(|&p| graph.node(p).var().clone())
            .collect();
        parents.sort();
        let support = supports[node.var()].clone();
        let size = support.len() + rng.random_range(0..=1);
        let raw: Vec<i64> = (0..size).map(|_| rng.random_range(1..=6)).collect();
        let total: i64 = raw.iter().sum();
        let noise: Vec<(i64, BigRational)> = raw
            .iter()
            .enumerate()
            .map(|(k, &w)| (k as i64, BigRational::from_ratio(w, total)))
            .collect();
        let parent_supports: Vec<&[i64]> = parents.iter().map(|p| supports[p].as_slice()).collect();
        let mut rows = BTreeMap::new();
        for combo in cartesian(&parent_supports) {
            let mut outputs = support.clone();
            outputs.shuffle(&mut rng);
            while outputs.len() < size {
                outputs.push(support[rng.random_range(0..support.len())]);
            }
            for (k, out) in outputs.into_iter().enumerate() {
                let mut key = combo.clone();
                key.push(k as i64);
                rows.insert(key, out);
            }
        }
        scm.variables.insert(
            node.var().clone(),
            ScmVariable {
                parents,
                support,
                mechanism: Mechanism::Table(rows),
                noise,
            },
        );
    }
    scm
}
