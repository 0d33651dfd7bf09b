//! Abstract syntax of the hybrid modal causal language.
//!
//! One enum covers both events and causal formulas; an event is a formula
//! without interventions. Intervention bodies are always events, which the
//! smart constructor [`Formula::intervene`] and the parser enforce.

use std::fmt;

use crate::model::{Intervention, Value};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    /// `X=x`, read at the evaluation world.
    Local { var: String, value: Value },
    /// `X@w=x`, read at world `w` wherever it is evaluated.
    Global { var: String, world: String, value: Value },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Box(Box<Formula>),
    Dia(Box<Formula>),
    /// Box over the converse relation.
    ConvBox(Box<Formula>),
    /// Diamond over the converse relation.
    ConvDia(Box<Formula>),
    Intervene {
        intervention: Intervention,
        body: Box<Formula>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("intervention body must be an event, found a nested intervention")]
pub struct NestedIntervention;

impl Formula {
    pub fn local(var: impl Into<String>, value: Value) -> Self {
        Formula::Local {
            var: var.into(),
            value,
        }
    }

    pub fn global(var: impl Into<String>, world: impl Into<String>, value: Value) -> Self {
        Formula::Global {
            var: var.into(),
            world: world.into(),
            value,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::and(
            Formula::implies(a.clone(), b.clone()),
            Formula::implies(b, a),
        )
    }

    pub fn boxed(f: Formula) -> Self {
        Formula::Box(Box::new(f))
    }

    pub fn dia(f: Formula) -> Self {
        Formula::Dia(Box::new(f))
    }

    pub fn conv_box(f: Formula) -> Self {
        Formula::ConvBox(Box::new(f))
    }

    pub fn conv_dia(f: Formula) -> Self {
        Formula::ConvDia(Box::new(f))
    }

    /// `[Y <- y] body`; fails when `body` itself contains an intervention.
    pub fn intervene(intervention: Intervention, body: Formula) -> Result<Self, NestedIntervention> {
        if !body.is_event() {
            return Err(NestedIntervention);
        }
        Ok(Formula::Intervene {
            intervention,
            body: Box::new(body),
        })
    }

    /// Conjunction of all items, `true` when empty.
    pub fn conjunction(items: impl IntoIterator<Item = Formula>) -> Self {
        let mut items = items.into_iter();
        match items.next() {
            None => Formula::True,
            Some(first) => items.fold(first, Formula::and),
        }
    }

    /// True when the formula contains no intervention.
    pub fn is_event(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Local { .. } | Formula::Global { .. } => true,
            Formula::Not(a)
            | Formula::Box(a)
            | Formula::Dia(a)
            | Formula::ConvBox(a)
            | Formula::ConvDia(a) => a.is_event(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.is_event() && b.is_event()
            }
            Formula::Intervene { .. } => false,
        }
    }

    /// Rewrites derived operators into the core connectives
    /// (`true`, atoms, `!`, `&`, `box`, `cbox`, interventions):
    /// `dia a = !box !a`, `a | b = !(!a & !b)`, `a -> b = !(a & !b)`,
    /// `false = !true`.
    pub fn normalize(&self) -> Formula {
        match self {
            Formula::True | Formula::Local { .. } | Formula::Global { .. } => self.clone(),
            Formula::False => Formula::not(Formula::True),
            Formula::Not(a) => Formula::not(a.normalize()),
            Formula::And(a, b) => Formula::and(a.normalize(), b.normalize()),
            Formula::Or(a, b) => Formula::not(Formula::and(
                Formula::not(a.normalize()),
                Formula::not(b.normalize()),
            )),
            Formula::Implies(a, b) => {
                Formula::not(Formula::and(a.normalize(), Formula::not(b.normalize())))
            }
            Formula::Box(a) => Formula::boxed(a.normalize()),
            Formula::Dia(a) => Formula::not(Formula::boxed(Formula::not(a.normalize()))),
            Formula::ConvBox(a) => Formula::conv_box(a.normalize()),
            Formula::ConvDia(a) => Formula::not(Formula::conv_box(Formula::not(a.normalize()))),
            Formula::Intervene { intervention, body } => Formula::Intervene {
                intervention: intervention.clone(),
                body: Box::new(body.normalize()),
            },
        }
    }

    /// Number of connectives (atoms and constants count zero).
    pub fn depth(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Local { .. } | Formula::Global { .. } => 0,
            Formula::Not(a)
            | Formula::Box(a)
            | Formula::Dia(a)
            | Formula::ConvBox(a)
            | Formula::ConvDia(a) => 1 + a.depth(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                1 + a.depth().max(b.depth())
            }
            Formula::Intervene { body, .. } => 1 + body.depth(),
        }
    }

    fn is_binary(&self) -> bool {
        matches!(
            self,
            Formula::And(..) | Formula::Or(..) | Formula::Implies(..)
        )
    }

    fn fmt_nested(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_binary() {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

/// Canonical text. Every binary subformula is parenthesized except at the top
/// level and directly inside a modal operator's own parentheses.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Local { var, value } => write!(f, "{var}={value}"),
            Formula::Global { var, world, value } => write!(f, "{var}@{world}={value}"),
            Formula::Not(a) => {
                write!(f, "!")?;
                a.fmt_nested(f)
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                let op = match self {
                    Formula::And(..) => "&",
                    Formula::Or(..) => "|",
                    _ => "->",
                };
                a.fmt_nested(f)?;
                write!(f, " {op} ")?;
                b.fmt_nested(f)
            }
            Formula::Box(a) => write!(f, "box({a})"),
            Formula::Dia(a) => write!(f, "dia({a})"),
            Formula::ConvBox(a) => write!(f, "cbox({a})"),
            Formula::ConvDia(a) => write!(f, "cdia({a})"),
            Formula::Intervene { intervention, body } => {
                write!(f, "[")?;
                for (i, (at, v)) in intervention.assignments().iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{at} := {v}")?;
                }
                write!(f, "] ")?;
                body.fmt_nested(f)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VarAt;

    #[test]
    fn prints_canonical_forms() {
        assert_eq!(Formula::boxed(Formula::local("p", 1)).to_string(), "box(p=1)");
        assert_eq!(Formula::global("p", "w3", 1).to_string(), "p@w3=1");
        assert_eq!(Formula::dia(Formula::True).to_string(), "dia(true)");
        let f = Formula::and(
            Formula::local("a", 1),
            Formula::or(Formula::local("b", 0), Formula::not(Formula::local("c", 1))),
        );
        assert_eq!(f.to_string(), "a=1 & (b=0 | !c=1)");
        let i = Intervention::new([(VarAt::new("p", "w3"), 0)]).unwrap();
        let g = Formula::intervene(i, Formula::not(Formula::local("q", 1))).unwrap();
        assert_eq!(g.to_string(), "[p@w3 := 0] !q=1");
    }

    #[test]
    fn nested_intervention_rejected_by_constructor() {
        let inner = Formula::intervene(Intervention::empty(), Formula::True).unwrap();
        assert_eq!(
            Formula::intervene(Intervention::empty(), inner),
            Err(NestedIntervention)
        );
    }

    #[test]
    fn normalize_expands_derived_operators() {
        let a = Formula::local("a", 1);
        assert_eq!(
            Formula::dia(a.clone()).normalize(),
            Formula::not(Formula::boxed(Formula::not(a.clone())))
        );
        let b = Formula::local("b", 0);
        assert_eq!(
            Formula::or(a.clone(), b.clone()).normalize(),
            Formula::not(Formula::and(Formula::not(a), Formula::not(b)))
        );
    }

    #[test]
    fn depth_counts_connectives() {
        assert_eq!(Formula::local("a", 1).depth(), 0);
        assert_eq!(
            Formula::boxed(Formula::and(Formula::True, Formula::not(Formula::False))).depth(),
            3
        );
    }
}
