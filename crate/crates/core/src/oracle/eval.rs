use std::collections::BTreeMap;

use super::{GodTable, OracleError};
use crate::estimand::{CounterfactualMean, EstimandContrast};
use crate::graph::{Value, VarName};
use crate::identify::{Event, Formula, Term};
use crate::scalar::Scalar;

/// Joint law of the observed variables. Potential outcomes are not
/// representable here, so formulas evaluated against it cannot peek at them.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservedDistribution<S> {
    vars: Vec<VarName>,
    cells: BTreeMap<Vec<i64>, S>,
}

impl<S: Scalar> ObservedDistribution<S> {
    pub fn from_table(t: &GodTable<S>) -> Self {
        let cols: Vec<usize> = (0..t.vars().len())
            .filter(|&i| t.is_observed(&t.vars()[i]))
            .collect();
        let vars = cols.iter().map(|&i| t.vars()[i].clone()).collect();
        let mut cells: BTreeMap<Vec<i64>, S> = BTreeMap::new();
        for row in t.rows() {
            let key: Vec<i64> = cols.iter().map(|&i| row.values[0][i]).collect();
            let cell = cells.entry(key).or_insert_with(S::zero);
            *cell = cell.clone() + row.weight.clone();
        }
        ObservedDistribution { vars, cells }
    }

    pub fn vars(&self) -> &[VarName] {
        &self.vars
    }

    pub fn cells(&self) -> impl Iterator<Item = (&[i64], &S)> {
        self.cells.iter().map(|(k, p)| (k.as_slice(), p))
    }

    fn column(&self, var: &VarName) -> Result<usize, OracleError> {
        self.vars
            .binary_search(var)
            .map_err(|_| OracleError::UnknownVariable(var.to_string()))
    }

    /// `P(events)`.
    pub fn probability(&self, events: &[(VarName, i64)]) -> Result<S, OracleError> {
        let cols = events
            .iter()
            .map(|(v, x)| self.column(v).map(|c| (c, *x)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self
            .cells
            .iter()
            .filter(|(k, _)| cols.iter().all(|&(c, x)| k[c] == x))
            .fold(S::zero(), |acc, (_, p)| acc + p.clone()))
    }
}

fn observed(term: &Term) -> Result<&VarName, OracleError> {
    match term {
        Term::Observed(v) => Ok(v),
        t => Err(OracleError::NotIdentified(t.to_string())),
    }
}

fn resolve(value: &Value, bindings: &BTreeMap<String, i64>) -> Result<i64, OracleError> {
    match value {
        Value::Int(x) => Ok(*x),
        Value::Symbolic(s) => bindings
            .get(s)
            .copied()
            .ok_or_else(|| OracleError::UnboundSymbol(s.clone())),
    }
}

/// Evaluate an identified formula. `bindings` maps level symbols (`a`, `c`)
/// to integers; sums bind their own variables.
pub fn eval_formula<S: Scalar>(
    dist: &ObservedDistribution<S>,
    f: &Formula,
    bindings: &BTreeMap<String, i64>,
) -> Result<S, OracleError> {
    match f {
        Formula::Expectation { target, given } => {
            let y = dist.column(observed(target)?)?;
            let events = given
                .iter()
                .map(|Event { term, value }| {
                    Ok((dist.column(observed(term)?)?, resolve(value, bindings)?))
                })
                .collect::<Result<Vec<_>, OracleError>>()?;
            let mut mass = S::zero();
            let mut total = S::zero();
            for (k, p) in &dist.cells {
                if events.iter().all(|&(c, x)| k[c] == x) {
                    mass = mass + p.clone();
                    total = total + p.clone() * S::from_int(k[y]);
                }
            }
            if mass.is_zero() {
                let shown: Vec<String> = given
                    .iter()
                    .zip(&events)
                    .map(|(e, (_, x))| format!("{}={x}", e.term))
                    .collect();
                return Err(OracleError::ZeroProbabilityCondition(shown.join(",")));
            }
            Ok(total / mass)
        }
        Formula::Sum { over, body } => {
            let cols = over
                .iter()
                .map(|v| dist.column(v))
                .collect::<Result<Vec<_>, _>>()?;
            let mut weights: BTreeMap<Vec<i64>, S> = BTreeMap::new();
            for (k, p) in &dist.cells {
                let key: Vec<i64> = cols.iter().map(|&c| k[c]).collect();
                let w = weights.entry(key).or_insert_with(S::zero);
                *w = w.clone() + p.clone();
            }
            let mut inner = bindings.clone();
            let mut total = S::zero();
            for (levels, p) in weights {
                for (v, x) in over.iter().zip(&levels) {
                    inner.insert(v.level_symbol(), *x);
                }
                total = total + eval_formula(dist, body, &inner)? * p;
            }
            Ok(total)
        }
        Formula::Difference(l, r) => {
            Ok(eval_formula(dist, l, bindings)? - eval_formula(dist, r, bindings)?)
        }
    }
}

fn mean<S: Scalar>(t: &GodTable<S>, m: &CounterfactualMean) -> Result<S, OracleError> {
    let target = Term::new(m.outcome.clone(), m.context.clone());
    let mut events = Vec::new();
    if let Some(s) = &m.stratum {
        let value = s
            .value
            .as_int()
            .ok_or_else(|| OracleError::UnboundSymbol(s.value.to_string()))?;
        events.push((Term::new(s.var.clone(), s.context.clone()), value));
    }
    t.conditional_mean(&target, &events)?.ok_or_else(|| {
        OracleError::EmptyStratum(
            m.stratum
                .as_ref()
                .map(|s| s.to_string())
                .unwrap_or_default(),
        )
    })
}

/// The contrast computed from potential outcomes directly.
pub fn true_estimand<S: Scalar>(t: &GodTable<S>, e: &EstimandContrast) -> Result<S, OracleError> {
    Ok(mean(t, &e.left)? - mean(t, &e.right)?)
}
