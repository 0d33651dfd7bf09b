//! Events compiled against a fixed frame into propositional circuits over
//! pair indices. Modal operators unfold into conjunctions/disjunctions over
//! successors (or predecessors for the converse operators).

use std::collections::BTreeSet;

use crate::formula::Formula;
use crate::model::{Layout, ModelError, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Circuit {
    Const(bool),
    Atom { pair: usize, value: Value },
    Not(Box<Circuit>),
    And(Vec<Circuit>),
    Or(Vec<Circuit>),
}

impl Circuit {
    pub fn eval(&self, vals: &[Value]) -> bool {
        match self {
            Circuit::Const(b) => *b,
            Circuit::Atom { pair, value } => vals[*pair] == *value,
            Circuit::Not(c) => !c.eval(vals),
            Circuit::And(cs) => cs.iter().all(|c| c.eval(vals)),
            Circuit::Or(cs) => cs.iter().any(|c| c.eval(vals)),
        }
    }

    pub fn pairs(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut BTreeSet<usize>) {
        match self {
            Circuit::Const(_) => {}
            Circuit::Atom { pair, .. } => {
                out.insert(*pair);
            }
            Circuit::Not(c) => c.collect(out),
            Circuit::And(cs) | Circuit::Or(cs) => cs.iter().for_each(|c| c.collect(out)),
        }
    }
}

/// Compiles an event evaluated at `world`. Fails on interventions and on
/// unknown variables or worlds.
pub(crate) fn compile(layout: &Layout, world: usize, f: &Formula) -> Result<Circuit, ModelError> {
    let rec = |g: &Formula, w: usize| compile(layout, w, g);
    Ok(match f {
        Formula::True => Circuit::Const(true),
        Formula::False => Circuit::Const(false),
        Formula::Local { var, value } => Circuit::Atom {
            pair: layout.pair(layout.var(var)?, world),
            value: *value,
        },
        Formula::Global {
            var,
            world: w,
            value,
        } => Circuit::Atom {
            pair: layout.pair(layout.var(var)?, layout.world(w)?),
            value: *value,
        },
        Formula::Not(a) => Circuit::Not(Box::new(rec(a, world)?)),
        Formula::And(a, b) => Circuit::And(vec![rec(a, world)?, rec(b, world)?]),
        Formula::Or(a, b) => Circuit::Or(vec![rec(a, world)?, rec(b, world)?]),
        Formula::Implies(a, b) => {
            Circuit::Or(vec![Circuit::Not(Box::new(rec(a, world)?)), rec(b, world)?])
        }
        Formula::Box(a) => Circuit::And(
            layout.succ[world]
                .iter()
                .map(|&s| rec(a, s))
                .collect::<Result<_, _>>()?,
        ),
        Formula::Dia(a) => Circuit::Or(
            layout.succ[world]
                .iter()
                .map(|&s| rec(a, s))
                .collect::<Result<_, _>>()?,
        ),
        Formula::ConvBox(a) => Circuit::And(
            layout.pred[world]
                .iter()
                .map(|&s| rec(a, s))
                .collect::<Result<_, _>>()?,
        ),
        Formula::ConvDia(a) => Circuit::Or(
            layout.pred[world]
                .iter()
                .map(|&s| rec(a, s))
                .collect::<Result<_, _>>()?,
        ),
        Formula::Intervene { .. } => return Err(ModelError::NotAnEvent(f.to_string())),
    })
}
