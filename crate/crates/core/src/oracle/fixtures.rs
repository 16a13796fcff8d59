//! Fixed models with hand-written mechanisms.

use std::collections::BTreeMap;

use num_rational::BigRational;

use super::{Mechanism, ScmSpec, ScmVariable};
use crate::dsl::{parse, StudySpec};
use crate::estimand::{CounterfactualMean, EstimandContrast};
use crate::graph::{CausalGraph, InterventionContext, NodeAttrs, NodeKind, Role, Value, VarName};
use crate::scalar::Scalar;

pub const CONFOUNDED: &str = include_str!("../../specs/hypothetical_unobserved.swg");

/// Binary model where U drives both M and Y.
pub fn confounded() -> StudySpec {
    parse(CONFOUNDED).expect("fixture parses")
}

/// Per unit: A, Y(a=0), Y(a=1).
pub const FIVE_UNITS: [(i64, i64, i64); 5] = [
    (1, 60, 52),
    (0, 45, 37),
    (1, 46, 38),
    (1, 75, 67),
    (0, 21, 15),
];

fn name(s: &str) -> VarName {
    VarName::new(s).expect("valid name")
}

/// The five-unit God's Table as a model: a latent unit index, uniform over
/// 1..=5, drives both A and Y. A is therefore not randomized, which no
/// study spec allows, so the graph is built directly.
pub fn five_units() -> (CausalGraph, ScmSpec) {
    let graph = CausalGraph::from_parts(
        vec![
            (NodeKind::plain(name("A")), NodeAttrs::new(Role::Treatment)),
            (NodeKind::plain(name("UNIT")), NodeAttrs::new(Role::Latent)),
            (NodeKind::plain(name("Y")), NodeAttrs::new(Role::Outcome)),
        ],
        vec![(1, 0), (1, 2), (0, 2)],
    )
    .expect("acyclic");
    let units: Vec<i64> = (1..=5).collect();
    let mut a_rows = BTreeMap::new();
    let mut y_rows = BTreeMap::new();
    let mut y_support = Vec::new();
    for (&(a, y0, y1), &u) in FIVE_UNITS.iter().zip(&units) {
        a_rows.insert(vec![u, 0], a);
        y_rows.insert(vec![0, u, 0], y0);
        y_rows.insert(vec![1, u, 0], y1);
        y_support.extend([y0, y1]);
    }
    y_support.sort_unstable();
    let mut scm = ScmSpec::default();
    scm.variables.insert(
        name("UNIT"),
        ScmVariable {
            parents: vec![],
            support: units.clone(),
            mechanism: Mechanism::Expr(super::Expr::Noise),
            noise: units
                .iter()
                .map(|&u| (u, BigRational::from_ratio(1, 5)))
                .collect(),
        },
    );
    scm.variables.insert(
        name("A"),
        ScmVariable {
            parents: vec![name("UNIT")],
            support: vec![0, 1],
            mechanism: Mechanism::Table(a_rows),
            noise: ScmVariable::degenerate_noise(),
        },
    );
    scm.variables.insert(
        name("Y"),
        ScmVariable {
            parents: vec![name("A"), name("UNIT")],
            support: y_support,
            mechanism: Mechanism::Table(y_rows),
            noise: ScmVariable::degenerate_noise(),
        },
    );
    (graph, scm)
}

/// `E[Y(a=1)] - E[Y(a=0)]`.
pub fn ate_contrast() -> EstimandContrast {
    let mean = |level| CounterfactualMean {
        outcome: name("Y"),
        context: InterventionContext::from_pairs([(name("A"), Value::Int(level))])
            .expect("one var"),
        stratum: None,
    };
    EstimandContrast {
        name: "treatment_policy".into(),
        left: mean(1),
        right: mean(0),
    }
}
