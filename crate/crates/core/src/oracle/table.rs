//! God's Tables: every unit's value in every enumerated world.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use rayon::prelude::*;

use super::{OracleError, ScmError, ScmSpec, ScmVariable};
use crate::graph::{potential_outcome_label, CausalGraph, InterventionContext, VarName};
use crate::identify::Term;
use crate::scalar::Scalar;

pub const DEFAULT_ROW_CAP: u128 = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct GodRow<S> {
    /// One noise value per model variable, in name order.
    pub noise: Vec<i64>,
    pub weight: S,
    /// `values[world][var]`: natural value of each variable in each world.
    pub values: Vec<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GodTable<S> {
    vars: Vec<VarName>,
    observed: Vec<bool>,
    noise_vars: Vec<VarName>,
    parents: Vec<Vec<usize>>,
    worlds: Vec<InterventionContext>,
    rows: Vec<GodRow<S>>,
}

enum Step<'a> {
    Scm {
        name: VarName,
        var: &'a ScmVariable,
        parents: Vec<usize>,
        noise: usize,
    },
    Derived {
        source: usize,
        event: usize,
        failure: i64,
    },
}

fn as_map(ctx: &InterventionContext) -> BTreeMap<&VarName, &crate::graph::Value> {
    ctx.iter().map(|(v, x)| (v, x)).collect()
}

/// Enumerate every joint noise configuration of `scm` over the plain DAG
/// `graph` (derived nodes included). World 0 is always the factual world;
/// `worlds` are appended after it, duplicates dropped.
pub fn enumerate<S: Scalar>(
    graph: &CausalGraph,
    scm: &ScmSpec,
    worlds: &[InterventionContext],
    cap: u128,
) -> Result<GodTable<S>, OracleError> {
    let vars: Vec<VarName> = graph.nodes().map(|(_, n)| n.var().clone()).collect();
    let index: BTreeMap<&VarName, usize> = vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let parent_names = |i: usize| -> Vec<VarName> {
        let id = graph.node_ids().nth(i).expect("index in range");
        let mut ps: Vec<VarName> = graph
            .parents(id)
            .iter()
            .map(|&p| graph.node(p).var().clone())
            .collect();
        ps.sort();
        ps
    };

    let mut parent_map = BTreeMap::new();
    let mut supports = BTreeMap::new();
    for (i, (_, node)) in graph.nodes().enumerate() {
        if node.attrs.deterministic.is_none() {
            parent_map.insert(vars[i].clone(), parent_names(i));
        }
    }
    for (name, var) in &scm.variables {
        supports.insert(name.clone(), var.support.clone());
    }
    scm.validate(&parent_map, &supports)?;
    let rows = scm.row_count();
    if rows > cap {
        return Err(OracleError::SupportTooLarge { rows, cap });
    }

    let noise_vars: Vec<VarName> = scm.variables.keys().cloned().collect();
    let noise_index: BTreeMap<&VarName, usize> =
        noise_vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut plan = Vec::new();
    for id in graph.topological_order() {
        let node = graph.node(id);
        let i = index[node.var()];
        let step = match &node.attrs.deterministic {
            Some(rule) => Step::Derived {
                source: index[&rule.source],
                event: index[&rule.event],
                failure: rule.failure.as_int().ok_or_else(|| {
                    OracleError::SymbolicWorld(format!("failure value {}", rule.failure))
                })?,
            },
            None => {
                let var = &scm.variables[node.var()];
                Step::Scm {
                    name: node.var().clone(),
                    parents: var.parents.iter().map(|p| index[p]).collect(),
                    noise: noise_index[node.var()],
                    var,
                }
            }
        };
        plan.push((i, step));
    }

    let mut all_worlds = vec![InterventionContext::new()];
    for w in worlds {
        if !all_worlds.iter().any(|x| as_map(x) == as_map(w)) {
            all_worlds.push(w.clone());
        }
    }
    let mut clamps = Vec::new();
    for w in &all_worlds {
        let mut clamp = vec![None; vars.len()];
        for (var, value) in w.iter() {
            let i = *index
                .get(var)
                .ok_or_else(|| OracleError::UnknownVariable(var.to_string()))?;
            clamp[i] = Some(
                value
                    .as_int()
                    .ok_or_else(|| OracleError::SymbolicWorld(w.render_items()))?,
            );
        }
        clamps.push(clamp);
    }

    let noise_dists: Vec<&[(i64, num_rational::BigRational)]> =
        scm.variables.values().map(|v| v.noise.as_slice()).collect();
    let count = rows as u64;
    let table_rows: Vec<GodRow<S>> = (0..count)
        .into_par_iter()
        .map(|k| {
            let mut rest = k;
            let mut picks = vec![0usize; noise_dists.len()];
            for (slot, dist) in picks.iter_mut().zip(&noise_dists).rev() {
                *slot = (rest % dist.len() as u64) as usize;
                rest /= dist.len() as u64;
            }
            let noise: Vec<i64> = picks
                .iter()
                .zip(&noise_dists)
                .map(|(&p, d)| d[p].0)
                .collect();
            let weight = picks
                .iter()
                .zip(&noise_dists)
                .fold(S::one(), |acc, (&p, d)| acc * S::from_rational(&d[p].1));
            let values = clamps
                .iter()
                .map(|clamp| evaluate(&plan, clamp, &noise, vars.len()))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(GodRow {
                noise,
                weight,
                values,
            })
        })
        .collect::<Result<_, OracleError>>()?;

    let observed = graph.nodes().map(|(_, n)| n.attrs.observed).collect();
    let parents = graph
        .node_ids()
        .map(|id| graph.parents(id).iter().map(|p| p.index()).collect())
        .collect();
    Ok(GodTable {
        vars,
        observed,
        noise_vars,
        parents,
        worlds: all_worlds,
        rows: table_rows,
    })
}

fn evaluate(
    plan: &[(usize, Step<'_>)],
    clamp: &[Option<i64>],
    noise: &[i64],
    n: usize,
) -> Result<Vec<i64>, OracleError> {
    let mut values = vec![0i64; n];
    let seen = |values: &[i64], p: usize| clamp[p].unwrap_or(values[p]);
    for (i, step) in plan {
        values[*i] = match step {
            Step::Scm {
                name,
                var,
                parents,
                noise: k,
            } => {
                let ps: Vec<i64> = parents.iter().map(|&p| seen(&values, p)).collect();
                var.eval(&ps, noise[*k]).map_err(|source| {
                    OracleError::Scm(ScmError::Eval {
                        var: name.to_string(),
                        parents: ps.clone(),
                        noise: noise[*k],
                        source,
                    })
                })?
            }
            Step::Derived {
                source,
                event,
                failure,
            } => {
                if seen(&values, *event) == 0 {
                    seen(&values, *source)
                } else {
                    *failure
                }
            }
        };
    }
    Ok(values)
}

impl<S: Scalar> GodTable<S> {
    pub fn vars(&self) -> &[VarName] {
        &self.vars
    }

    pub fn worlds(&self) -> &[InterventionContext] {
        &self.worlds
    }

    pub fn rows(&self) -> &[GodRow<S>] {
        &self.rows
    }

    pub fn noise_vars(&self) -> &[VarName] {
        &self.noise_vars
    }

    pub fn is_observed(&self, var: &VarName) -> bool {
        self.var_index(var).is_some_and(|i| self.observed[i])
    }

    pub(crate) fn var_index(&self, var: &VarName) -> Option<usize> {
        self.vars.binary_search(var).ok()
    }

    /// Column of `term`: the world index and variable index holding it.
    /// A potential outcome only depends on interventions upstream of its
    /// variable, so any world that agrees there will do.
    pub fn locate(&self, term: &Term) -> Result<(usize, usize), OracleError> {
        let var = term.var();
        let i = self
            .var_index(var)
            .ok_or_else(|| OracleError::UnknownVariable(var.to_string()))?;
        let empty = InterventionContext::new();
        let ctx = term.context().unwrap_or(&empty);
        if let Some(w) = self.worlds.iter().position(|w| as_map(w) == as_map(ctx)) {
            return Ok((w, i));
        }
        let want = self.effective(i, ctx);
        self.worlds
            .iter()
            .position(|w| self.effective(i, w) == want)
            .map(|w| (w, i))
            .ok_or_else(|| OracleError::MissingWorld(term.to_string()))
    }

    /// The part of `ctx` that can reach variable `i`: interventions on
    /// ancestors with a directed path to `i` that avoids every other
    /// intervened variable.
    fn effective(&self, i: usize, ctx: &InterventionContext) -> InterventionContext {
        let mut hit = BTreeSet::new();
        let mut seen = BTreeSet::new();
        let mut stack: Vec<usize> = self.parents[i].clone();
        while let Some(u) = stack.pop() {
            if !seen.insert(u) {
                continue;
            }
            if ctx.get(&self.vars[u]).is_some() {
                hit.insert(&self.vars[u]);
            } else {
                stack.extend(&self.parents[u]);
            }
        }
        ctx.restrict(|v| hit.contains(v))
    }

    pub fn value(&self, row: &GodRow<S>, term: &Term) -> Result<i64, OracleError> {
        let (w, i) = self.locate(term)?;
        Ok(row.values[w][i])
    }

    /// `E[target | events]` over all rows, or `None` when the conditioning
    /// event has probability zero.
    pub fn conditional_mean(
        &self,
        target: &Term,
        events: &[(Term, i64)],
    ) -> Result<Option<S>, OracleError> {
        let t = self.locate(target)?;
        let cols = events
            .iter()
            .map(|(term, v)| self.locate(term).map(|c| (c, *v)))
            .collect::<Result<Vec<_>, _>>()?;
        let mut mass = S::zero();
        let mut total = S::zero();
        for row in &self.rows {
            if cols.iter().all(|&((w, i), v)| row.values[w][i] == v) {
                mass = mass + row.weight.clone();
                total = total + row.weight.clone() * S::from_int(row.values[t.0][t.1]);
            }
        }
        Ok(if mass.is_zero() {
            None
        } else {
            Some(total / mass)
        })
    }

    /// Whether `x` and `y` are exactly independent given `z` in the joint
    /// law of the listed columns.
    pub fn conditionally_independent(
        &self,
        x: &[Term],
        y: &[Term],
        z: &[Term],
    ) -> Result<bool, OracleError> {
        let cols = |ts: &[Term]| {
            ts.iter()
                .map(|t| self.locate(t))
                .collect::<Result<Vec<_>, _>>()
        };
        let (xc, yc, zc) = (cols(x)?, cols(y)?, cols(z)?);
        let read = |row: &GodRow<S>, cs: &[(usize, usize)]| -> Vec<i64> {
            cs.iter().map(|&(w, i)| row.values[w][i]).collect()
        };
        type Joint<S> = BTreeMap<(Vec<i64>, Vec<i64>, Vec<i64>), S>;
        let mut joint: Joint<S> = BTreeMap::new();
        for row in &self.rows {
            let key = (read(row, &xc), read(row, &yc), read(row, &zc));
            let cell = joint.entry(key).or_insert_with(S::zero);
            *cell = cell.clone() + row.weight.clone();
        }
        let mut pz: BTreeMap<&Vec<i64>, S> = BTreeMap::new();
        let mut pxz: BTreeMap<(&Vec<i64>, &Vec<i64>), S> = BTreeMap::new();
        let mut pyz: BTreeMap<(&Vec<i64>, &Vec<i64>), S> = BTreeMap::new();
        for ((xv, yv, zv), p) in &joint {
            for (m, k) in [(&mut pxz, (xv, zv)), (&mut pyz, (yv, zv))] {
                let e = m.entry(k).or_insert_with(S::zero);
                *e = e.clone() + p.clone();
            }
            let e = pz.entry(zv).or_insert_with(S::zero);
            *e = e.clone() + p.clone();
        }
        for ((xv, zv), pxv) in &pxz {
            for ((yv, zv2), pyv) in &pyz {
                if zv2 != zv {
                    continue;
                }
                let pxyz = joint
                    .get(&((*xv).clone(), (*yv).clone(), (*zv).clone()))
                    .cloned()
                    .unwrap_or_else(S::zero);
                let lhs = pxyz * pz[zv].clone();
                let rhs = pxv.clone() * pyv.clone();
                if !(lhs - rhs).is_negligible() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Column headers: distinct potential outcomes of the non-factual
    /// worlds, then every variable as observed.
    pub fn column_labels(&self) -> Vec<(String, usize, usize)> {
        let mut out: Vec<(String, usize, usize)> = Vec::new();
        for (w, world) in self.worlds.iter().enumerate().skip(1) {
            for (i, var) in self.vars.iter().enumerate() {
                let ctx = self.effective(i, world);
                if ctx.is_empty() {
                    continue;
                }
                let label = potential_outcome_label(var, &ctx);
                if !out.iter().any(|(l, _, _)| *l == label) {
                    out.push((label, w, i));
                }
            }
        }
        for (i, var) in self.vars.iter().enumerate() {
            out.push((var.to_string(), 0, i));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let cols = self.column_labels();
        let mut out = String::from("row,weight");
        for (label, _, _) in &cols {
            let _ = write!(out, ",{label}");
        }
        out.push('\n');
        for (k, row) in self.rows.iter().enumerate() {
            let _ = write!(out, "{},{}", k + 1, row.weight);
            for (_, w, i) in &cols {
                let _ = write!(out, ",{}", row.values[*w][*i]);
            }
            out.push('\n');
        }
        out
    }
}
