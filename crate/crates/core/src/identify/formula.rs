use std::fmt;

use crate::graph::{potential_outcome_label, InterventionContext, Value, VarName};

/// A variable as observed, or a potential outcome under an intervention.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Observed(VarName),
    Counterfactual {
        base: VarName,
        context: InterventionContext,
    },
}

impl Term {
    /// Empty contexts collapse to the observed variable.
    pub fn new(base: VarName, context: InterventionContext) -> Self {
        if context.is_empty() {
            Term::Observed(base)
        } else {
            Term::Counterfactual { base, context }
        }
    }

    pub fn var(&self) -> &VarName {
        match self {
            Term::Observed(v) => v,
            Term::Counterfactual { base, .. } => base,
        }
    }

    pub fn context(&self) -> Option<&InterventionContext> {
        match self {
            Term::Observed(_) => None,
            Term::Counterfactual { context, .. } => Some(context),
        }
    }

    pub fn is_counterfactual(&self) -> bool {
        matches!(self, Term::Counterfactual { .. })
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Observed(v) => write!(f, "{v}"),
            Term::Counterfactual { base, context } => {
                f.write_str(&potential_outcome_label(base, context))
            }
        }
    }
}

/// `term = value`; a symbolic value is bound by an enclosing sum or by the
/// caller.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    pub term: Term,
    pub value: Value,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.term, self.value)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    /// `E[target | given]`.
    Expectation {
        target: Term,
        given: Vec<Event>,
    },
    /// `Σ_z body · P(Z=z)`; inside `body` each variable in `over` is bound
    /// to its level symbol.
    Sum {
        over: Vec<VarName>,
        body: Box<Formula>,
    },
    Difference(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn expectation(target: Term, given: Vec<Event>) -> Self {
        Formula::Expectation { target, given }
    }

    /// No potential outcome remains.
    pub fn is_identified(&self) -> bool {
        self.counterfactual_terms().is_empty()
    }

    pub fn counterfactual_terms(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        self.visit_terms(&mut |t| {
            if t.is_counterfactual() && !out.contains(&t) {
                out.push(t);
            }
        });
        out
    }

    fn visit_terms<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        match self {
            Formula::Expectation { target, given } => {
                f(target);
                for e in given {
                    f(&e.term);
                }
            }
            Formula::Sum { body, .. } => body.visit_terms(f),
            Formula::Difference(l, r) => {
                l.visit_terms(f);
                r.visit_terms(f);
            }
        }
    }

    /// Apply `f` to every expectation.
    pub fn map_expectations(&self, f: &mut impl FnMut(&Term, &[Event]) -> Formula) -> Formula {
        match self {
            Formula::Expectation { target, given } => f(target, given),
            Formula::Sum { over, body } => Formula::Sum {
                over: over.clone(),
                body: Box::new(body.map_expectations(f)),
            },
            Formula::Difference(l, r) => Formula::Difference(
                Box::new(l.map_expectations(f)),
                Box::new(r.map_expectations(f)),
            ),
        }
    }

    /// Expectation nodes in reading order.
    pub fn expectations(&self) -> Vec<(&Term, &[Event])> {
        match self {
            Formula::Expectation { target, given } => vec![(target, given.as_slice())],
            Formula::Sum { body, .. } => body.expectations(),
            Formula::Difference(l, r) => {
                let mut out = l.expectations();
                out.extend(r.expectations());
                out
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Expectation { target, given } => {
                write!(f, "E[{target}")?;
                for (i, e) in given.iter().enumerate() {
                    f.write_str(if i == 0 { "|" } else { "," })?;
                    write!(f, "{e}")?;
                }
                f.write_str("]")
            }
            Formula::Sum { over, body } => {
                let symbols: Vec<String> = over.iter().map(|v| v.level_symbol()).collect();
                let events: Vec<String> = over
                    .iter()
                    .map(|v| format!("{v}={}", v.level_symbol()))
                    .collect();
                if symbols.len() == 1 {
                    write!(f, "Σ_{} ", symbols[0])?;
                } else {
                    write!(f, "Σ_{{{}}} ", symbols.join(","))?;
                }
                write!(f, "{body}·P({})", events.join(","))
            }
            Formula::Difference(l, r) => write!(f, "{l} - {r}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> VarName {
        VarName::new(s).unwrap()
    }

    fn ctx(pairs: &[(&str, i64)]) -> InterventionContext {
        InterventionContext::from_pairs(pairs.iter().map(|(k, x)| (v(k), Value::Int(*x)))).unwrap()
    }

    #[test]
    fn renders_adjustment_formula() {
        let body = Formula::expectation(
            Term::Observed(v("Y")),
            vec![
                Event {
                    term: Term::Observed(v("A")),
                    value: Value::Int(1),
                },
                Event {
                    term: Term::Observed(v("C")),
                    value: Value::Symbolic("c".into()),
                },
                Event {
                    term: Term::Observed(v("M")),
                    value: Value::Int(0),
                },
            ],
        );
        let f = Formula::Sum {
            over: vec![v("C")],
            body: Box::new(body),
        };
        assert_eq!(f.to_string(), "Σ_c E[Y|A=1,C=c,M=0]·P(C=c)");
        assert!(f.is_identified());
    }

    #[test]
    fn counterfactual_terms_are_detected() {
        let f = Formula::expectation(
            Term::Observed(v("Y")),
            vec![
                Event {
                    term: Term::new(v("M"), ctx(&[("A", 1)])),
                    value: Value::Int(0),
                },
                Event {
                    term: Term::Observed(v("A")),
                    value: Value::Int(0),
                },
            ],
        );
        assert_eq!(f.to_string(), "E[Y|M(a=1)=0,A=0]");
        assert!(!f.is_identified());
        assert_eq!(
            Term::new(v("Y"), InterventionContext::new()),
            Term::Observed(v("Y"))
        );
    }

    #[test]
    fn joint_sums() {
        let body = Formula::expectation(Term::Observed(v("Y")), vec![]);
        let f = Formula::Sum {
            over: vec![v("C"), v("D")],
            body: Box::new(body),
        };
        assert_eq!(f.to_string(), "Σ_{c,d} E[Y]·P(C=c,D=d)");
    }
}
