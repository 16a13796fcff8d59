//! Finite structural causal models.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use super::expr::{Expr, ExprError};
use crate::graph::VarName;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScmError {
    #[error("scm has no mechanism for `{0}`")]
    MissingVariable(String),
    #[error("scm defines `{0}`, which is not a modelled variable")]
    UnexpectedVariable(String),
    #[error("mechanism for `{var}` reads {found:?} but its graph parents are {expected:?}")]
    ParentMismatch {
        var: String,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("table for `{var}` has no row for {key:?}")]
    IncompleteTable { var: String, key: Vec<i64> },
    #[error("table for `{var}` has a row {key:?} outside the declared supports")]
    StrayRow { var: String, key: Vec<i64> },
    #[error("mechanism for `{var}` yields {value}, outside its support {support:?}")]
    OutOfSupport {
        var: String,
        value: i64,
        support: Vec<i64>,
    },
    #[error("noise for `{var}`: {reason}")]
    BadNoise { var: String, reason: String },
    #[error("mechanism for `{var}` at parents {parents:?}, noise {noise}: {source}")]
    Eval {
        var: String,
        parents: Vec<i64>,
        noise: i64,
        source: ExprError,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mechanism {
    /// Keyed by parent values (in `parents` order) followed by the noise value.
    Table(BTreeMap<Vec<i64>, i64>),
    Expr(Expr),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScmVariable {
    /// Sorted by name.
    pub parents: Vec<VarName>,
    pub support: Vec<i64>,
    pub mechanism: Mechanism,
    /// Sorted by noise value; probabilities positive and summing to one.
    pub noise: Vec<(i64, BigRational)>,
}

impl ScmVariable {
    pub fn degenerate_noise() -> Vec<(i64, BigRational)> {
        vec![(0, BigRational::one())]
    }

    /// Structural value; assumes the variable validated.
    pub fn eval(&self, parents: &[i64], noise: i64) -> Result<i64, ExprError> {
        match &self.mechanism {
            Mechanism::Table(rows) => {
                let mut key = parents.to_vec();
                key.push(noise);
                Ok(rows[&key])
            }
            Mechanism::Expr(e) => {
                let env =
                    |v: &VarName| self.parents.iter().position(|p| p == v).map(|i| parents[i]);
                e.eval(&env, noise)
            }
        }
    }
}

/// One mechanism and noise distribution per non-derived variable.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ScmSpec {
    pub variables: BTreeMap<VarName, ScmVariable>,
}

/// Every combination of values drawn from `supports`, in lexicographic order.
pub(crate) fn cartesian(supports: &[&[i64]]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for support in supports {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                support.iter().map(move |&v| {
                    let mut next = prefix.clone();
                    next.push(v);
                    next
                })
            })
            .collect();
    }
    out
}

impl ScmSpec {
    /// Check the model against graph parents and declared supports: every
    /// mechanism total, every output inside its support, noise a distribution.
    pub fn validate(
        &self,
        parents: &BTreeMap<VarName, Vec<VarName>>,
        supports: &BTreeMap<VarName, Vec<i64>>,
    ) -> Result<(), ScmError> {
        for name in parents.keys() {
            if !self.variables.contains_key(name) {
                return Err(ScmError::MissingVariable(name.to_string()));
            }
        }
        for (name, var) in &self.variables {
            let expected = parents
                .get(name)
                .ok_or_else(|| ScmError::UnexpectedVariable(name.to_string()))?;
            validate_noise(name, &var.noise)?;
            let mismatch = |found: Vec<String>| ScmError::ParentMismatch {
                var: name.to_string(),
                expected: expected.iter().map(|v| v.to_string()).collect(),
                found,
            };
            let expected_set: BTreeSet<&VarName> = expected.iter().collect();
            match &var.mechanism {
                Mechanism::Table(_) => {
                    if var.parents != *expected {
                        return Err(mismatch(
                            var.parents.iter().map(|v| v.to_string()).collect(),
                        ));
                    }
                }
                Mechanism::Expr(e) => {
                    let mut used = Vec::new();
                    e.variables(&mut used);
                    if var.parents != *expected || used.iter().any(|v| !expected_set.contains(v)) {
                        used.sort();
                        return Err(mismatch(used.iter().map(|v| v.to_string()).collect()));
                    }
                }
            }
            let parent_supports: Vec<&[i64]> = var
                .parents
                .iter()
                .map(|p| supports.get(p).map(Vec::as_slice).unwrap_or(&[]))
                .collect();
            let support = &var.support;
            let combos = cartesian(&parent_supports);
            if let Mechanism::Table(rows) = &var.mechanism {
                let expected_rows = combos.len() * var.noise.len();
                if rows.len() != expected_rows {
                    for key in rows.keys() {
                        let (ps, n) = key.split_at(key.len().saturating_sub(1));
                        let in_support = key.len() == var.parents.len() + 1
                            && ps.iter().zip(&parent_supports).all(|(v, s)| s.contains(v))
                            && var.noise.iter().any(|(x, _)| *x == n[0]);
                        if !in_support {
                            return Err(ScmError::StrayRow {
                                var: name.to_string(),
                                key: key.clone(),
                            });
                        }
                    }
                }
            }
            for combo in &combos {
                for (noise, _) in &var.noise {
                    if let Mechanism::Table(rows) = &var.mechanism {
                        let mut key = combo.clone();
                        key.push(*noise);
                        if !rows.contains_key(&key) {
                            return Err(ScmError::IncompleteTable {
                                var: name.to_string(),
                                key,
                            });
                        }
                    }
                    let value = var.eval(combo, *noise).map_err(|source| ScmError::Eval {
                        var: name.to_string(),
                        parents: combo.clone(),
                        noise: *noise,
                        source,
                    })?;
                    if !support.contains(&value) {
                        return Err(ScmError::OutOfSupport {
                            var: name.to_string(),
                            value,
                            support: support.clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Number of joint noise configurations, saturating.
    pub fn row_count(&self) -> u128 {
        self.variables
            .values()
            .fold(1u128, |acc, v| acc.saturating_mul(v.noise.len() as u128))
    }
}

fn validate_noise(name: &VarName, noise: &[(i64, BigRational)]) -> Result<(), ScmError> {
    let bad = |reason: &str| ScmError::BadNoise {
        var: name.to_string(),
        reason: reason.to_string(),
    };
    if noise.is_empty() {
        return Err(bad("empty support"));
    }
    if noise.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(bad("values must be distinct and ascending"));
    }
    if noise.iter().any(|(_, p)| !p.is_positive()) {
        return Err(bad("probabilities must be positive"));
    }
    let total: BigRational = noise
        .iter()
        .map(|(_, p)| p.clone())
        .fold(BigRational::zero(), |a, b| a + b);
    if !total.is_one() {
        return Err(bad(&format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::expr::BinOp;
    use crate::scalar::Scalar;

    fn v(s: &str) -> VarName {
        VarName::new(s).unwrap()
    }

    fn half() -> Vec<(i64, BigRational)> {
        vec![
            (0, BigRational::from_ratio(1, 2)),
            (1, BigRational::from_ratio(1, 2)),
        ]
    }

    type Fixture = (
        ScmSpec,
        BTreeMap<VarName, Vec<VarName>>,
        BTreeMap<VarName, Vec<i64>>,
    );

    fn two_var() -> Fixture {
        let mut scm = ScmSpec::default();
        scm.variables.insert(
            v("A"),
            ScmVariable {
                parents: vec![],
                support: vec![0, 1],
                mechanism: Mechanism::Expr(Expr::Noise),
                noise: half(),
            },
        );
        let rows = cartesian(&[&[0, 1], &[0]])
            .into_iter()
            .map(|k| (k.clone(), 1 - k[0]))
            .collect();
        scm.variables.insert(
            v("Y"),
            ScmVariable {
                parents: vec![v("A")],
                support: vec![0, 1],
                mechanism: Mechanism::Table(rows),
                noise: ScmVariable::degenerate_noise(),
            },
        );
        let parents = BTreeMap::from([(v("A"), vec![]), (v("Y"), vec![v("A")])]);
        let supports = BTreeMap::from([(v("A"), vec![0, 1]), (v("Y"), vec![0, 1])]);
        (scm, parents, supports)
    }

    #[test]
    fn valid_model_passes() {
        let (scm, parents, supports) = two_var();
        scm.validate(&parents, &supports).unwrap();
        assert_eq!(scm.row_count(), 2);
        assert_eq!(scm.variables[&v("Y")].eval(&[1], 0), Ok(0));
    }

    #[test]
    fn missing_rows_and_bad_outputs_are_reported() {
        let (mut scm, parents, supports) = two_var();
        if let Mechanism::Table(rows) = &mut scm.variables.get_mut(&v("Y")).unwrap().mechanism {
            rows.remove(&vec![1, 0]);
        }
        assert!(matches!(
            scm.validate(&parents, &supports),
            Err(ScmError::IncompleteTable { .. })
        ));

        let (mut scm, parents, supports) = two_var();
        scm.variables.get_mut(&v("A")).unwrap().mechanism = Mechanism::Expr(Expr::Binary(
            BinOp::Add,
            Box::new(Expr::Noise),
            Box::new(Expr::Int(1)),
        ));
        assert!(matches!(
            scm.validate(&parents, &supports),
            Err(ScmError::OutOfSupport { value: 2, .. })
        ));
    }

    #[test]
    fn noise_must_be_a_distribution() {
        let (mut scm, parents, supports) = two_var();
        scm.variables.get_mut(&v("A")).unwrap().noise = vec![
            (0, BigRational::from_ratio(1, 2)),
            (1, BigRational::from_ratio(1, 3)),
        ];
        assert!(matches!(
            scm.validate(&parents, &supports),
            Err(ScmError::BadNoise { .. })
        ));
    }

    #[test]
    fn expression_reading_non_parent_rejected() {
        let (mut scm, parents, supports) = two_var();
        scm.variables.get_mut(&v("A")).unwrap().mechanism = Mechanism::Expr(Expr::Var(v("Y")));
        assert!(matches!(
            scm.validate(&parents, &supports),
            Err(ScmError::ParentMismatch { .. })
        ));
    }
}
