//! Sufficient causes of a single-world model, quantified either over all
//! contexts or over the contexts nearby the actual one.
//!
//! The nearby variant lifts the model to a causal Kripke model whose worlds
//! are contexts and whose relation is the nearby relation; SC3 then reads
//! `box [Y <- y] event` at the actual context.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::cause::{self, Candidate, CauseError, Definition, EventPairs, SearchBudget};
use crate::formula::Formula;
use crate::model::{
    product, Context, Equation, Intervention, Model, ModelError, Signature, TableEquation, Value,
    VarAt, VarDecl, VarKind,
};
use crate::semantics::Setting;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SufficiencyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Cause(#[from] CauseError),
    #[error("{0}")]
    Invalid(String),
}

/// How contexts are related.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Nearby {
    /// Ordered pairs of context names.
    Pairs(Vec<(String, String)>),
    /// Contexts whose exogenous vectors differ in at most `k` positions.
    Hamming(usize),
}

impl FromStr for Nearby {
    type Err = String;

    /// `hamming:K`, or `a>b,b>c` for explicit pairs.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(k) = s.strip_prefix("hamming:") {
            return k
                .parse()
                .map(Nearby::Hamming)
                .map_err(|_| format!("bad hamming distance `{k}`"));
        }
        let mut pairs = Vec::new();
        for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            let (a, b) = item
                .split_once('>')
                .ok_or_else(|| format!("expected `from>to`, found `{item}`"))?;
            pairs.push((a.trim().to_string(), b.trim().to_string()));
        }
        Ok(Nearby::Pairs(pairs))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// SC3 over every listed context.
    Global,
    /// SC3 over the contexts nearby the actual one.
    Local,
}

impl FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "global" => Ok(Scope::Global),
            "local" => Ok(Scope::Local),
            other => Err(format!("unknown scope `{other}` (expected global or local)")),
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::Global => "global",
            Scope::Local => "local",
        })
    }
}

/// A single-world model with a finite set of named, pairwise distinct
/// contexts and a nearby relation between them.
#[derive(Clone, Debug)]
pub struct ContextSpace {
    base: Model,
    names: Vec<String>,
    contexts: Vec<Context>,
    nearby: BTreeSet<(usize, usize)>,
}

fn base_world(base: &Model) -> Result<&str, SufficiencyError> {
    match base.worlds() {
        [w] if base.relation().is_empty() => Ok(w),
        _ => Err(SufficiencyError::Invalid(
            "sufficiency needs a single-world model with an empty relation".into(),
        )),
    }
}

fn exogenous_vector(base: &Model, ctx: &Context) -> Vec<Value> {
    base.exogenous_pairs()
        .iter()
        .map(|at| ctx.get(at).expect("context is total"))
        .collect()
}

impl ContextSpace {
    /// `reflexive` adds `(u, u)` for every context.
    pub fn new(
        base: Model,
        contexts: Vec<(String, Context)>,
        nearby: &Nearby,
        reflexive: bool,
    ) -> Result<ContextSpace, SufficiencyError> {
        base_world(&base)?;
        let mut names = Vec::new();
        let mut ctxs: Vec<Context> = Vec::new();
        for (name, ctx) in contexts {
            if !ctx.fits(&base) {
                return Err(SufficiencyError::Invalid(format!(
                    "context `{name}` was built for a different model"
                )));
            }
            if names.contains(&name) {
                return Err(SufficiencyError::Invalid(format!("context name `{name}` repeated")));
            }
            if let Some(i) = ctxs.iter().position(|c| *c == ctx) {
                return Err(SufficiencyError::Invalid(format!(
                    "contexts `{}` and `{name}` are identical",
                    names[i]
                )));
            }
            names.push(name);
            ctxs.push(ctx);
        }
        if ctxs.is_empty() {
            return Err(SufficiencyError::Invalid("no contexts".into()));
        }
        let mut space = ContextSpace {
            base,
            names,
            contexts: ctxs,
            nearby: BTreeSet::new(),
        };
        space.nearby = match nearby {
            Nearby::Pairs(pairs) => pairs
                .iter()
                .map(|(a, b)| Ok((space.index(a)?, space.index(b)?)))
                .collect::<Result<_, SufficiencyError>>()?,
            Nearby::Hamming(k) => {
                let vectors: Vec<Vec<Value>> = space
                    .contexts
                    .iter()
                    .map(|c| exogenous_vector(&space.base, c))
                    .collect();
                let n = vectors.len();
                (0..n)
                    .flat_map(|i| (0..n).map(move |j| (i, j)))
                    .filter(|&(i, j)| {
                        i != j && vectors[i].iter().zip(&vectors[j]).filter(|(a, b)| a != b).count() <= *k
                    })
                    .collect()
            }
        };
        if reflexive {
            space.nearby.extend((0..space.contexts.len()).map(|i| (i, i)));
        }
        Ok(space)
    }

    /// Every assignment of the exogenous variables, named `u0`, `u1`, ... in
    /// lexicographic order of the exogenous vector.
    pub fn exhaustive(base: Model, nearby: &Nearby, reflexive: bool) -> Result<ContextSpace, SufficiencyError> {
        base_world(&base)?;
        let exo = base.exogenous_pairs();
        let ranges: Vec<Vec<Value>> = exo
            .iter()
            .map(|at| base.range(at).map(<[Value]>::to_vec))
            .collect::<Result<_, _>>()?;
        let refs: Vec<&[Value]> = ranges.iter().map(Vec::as_slice).collect();
        let contexts = product(&refs)
            .enumerate()
            .map(|(i, values)| {
                let ctx = Context::new(&base, exo.iter().cloned().zip(values))?;
                Ok((format!("u{i}"), ctx))
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        ContextSpace::new(base, contexts, nearby, reflexive)
    }

    pub fn base(&self) -> &Model {
        &self.base
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn context(&self, name: &str) -> Result<&Context, SufficiencyError> {
        Ok(&self.contexts[self.index(name)?])
    }

    /// Name of the listed context equal to `ctx`.
    pub fn find(&self, ctx: &Context) -> Option<&str> {
        self.contexts
            .iter()
            .position(|c| c == ctx)
            .map(|i| self.names[i].as_str())
    }

    pub fn nearby(&self) -> Vec<(String, String)> {
        self.nearby
            .iter()
            .map(|&(a, b)| (self.names[a].clone(), self.names[b].clone()))
            .collect()
    }

    fn index(&self, name: &str) -> Result<usize, SufficiencyError> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| SufficiencyError::Invalid(format!("unknown context `{name}`")))
    }
}

/// Rewrites global atoms at `world` to local atoms. Modal operators and
/// interventions are rejected: the base model has no frame of its own.
fn localize(f: &Formula, world: &str) -> Result<Formula, SufficiencyError> {
    let rec = |g: &Formula| localize(g, world);
    Ok(match f {
        Formula::True | Formula::False | Formula::Local { .. } => f.clone(),
        Formula::Global { var, world: w, value } => {
            if w != world {
                return Err(ModelError::Dangling(format!("{var}@{w}")).into());
            }
            Formula::local(var.clone(), *value)
        }
        Formula::Not(a) => Formula::not(rec(a)?),
        Formula::And(a, b) => Formula::and(rec(a)?, rec(b)?),
        Formula::Or(a, b) => Formula::or(rec(a)?, rec(b)?),
        Formula::Implies(a, b) => Formula::implies(rec(a)?, rec(b)?),
        Formula::Box(_) | Formula::Dia(_) | Formula::ConvBox(_) | Formula::ConvDia(_) | Formula::Intervene { .. } => {
            return Err(SufficiencyError::Invalid(format!(
                "`{f}` is not propositional; sufficiency works on single-world models"
            )))
        }
    })
}

/// The causal Kripke model over the listed contexts: one world per context,
/// the base equations copied to every world, the nearby relation as `R`,
/// and a lifted context giving each world its own exogenous values.
pub fn lift_to_kripke(space: &ContextSpace) -> Result<(Model, Context), SufficiencyError> {
    let base = &space.base;
    let bw = base_world(base)?;
    let mut signature = Signature::new();
    for decl in base.signature().vars() {
        signature.add(VarDecl::new(
            decl.name.clone(),
            decl.kind,
            decl.range_at(bw).iter().copied(),
        ))?;
    }
    let mut equations = Vec::new();
    for decl in base.signature().endogenous() {
        let eq = base
            .equation(&VarAt::new(decl.name.clone(), bw))?
            .ok_or_else(|| ModelError::MissingEquation(VarAt::new(decl.name.clone(), bw)))?;
        for w in &space.names {
            let lifted = match eq {
                Equation::Constant(v) => Equation::Constant(*v),
                Equation::Formula(f) => Equation::Formula(localize(f, bw)?),
                Equation::Table(t) => Equation::Table(TableEquation {
                    parents: t.parents.iter().map(|p| VarAt::new(p.var.clone(), w.clone())).collect(),
                    rows: t.rows.clone(),
                }),
            };
            equations.push((VarAt::new(decl.name.clone(), w.clone()), lifted));
        }
    }
    let model = Model::build(signature, space.names.clone(), space.nearby(), equations)?;
    let mut assignments = Vec::new();
    for (name, ctx) in space.names.iter().zip(&space.contexts) {
        for decl in base.signature().exogenous() {
            let v = ctx.get(&VarAt::new(decl.name.clone(), bw)).expect("context is total");
            assignments.push((VarAt::new(decl.name.clone(), name.clone()), v));
        }
    }
    let context = Context::new(&model, assignments)?;
    Ok((model, context))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SufficiencyVerdict {
    pub sufficient: bool,
    pub scope: Scope,
    pub definition: Definition,
    pub candidate: Candidate,
    pub sc1: bool,
    pub sc2: bool,
    /// Conjuncts that are part of an actual cause (SC2 evidence).
    pub sc2_parts: Vec<String>,
    pub sc3: bool,
    /// Contexts in the quantification domain where `[X <- x] event` fails.
    pub sc3_failures: Vec<String>,
    /// `None` when SC1-SC3 already fail.
    pub minimal: Option<bool>,
    pub smaller: Option<Candidate>,
}

struct Checker<'a> {
    space: &'a ContextSpace,
    bw: &'a str,
    u: usize,
    event: Formula,
    scope: Scope,
    definition: Definition,
    budget: SearchBudget,
    lifted: Option<Setting>,
}

impl Checker<'_> {
    fn setting(&self, i: usize) -> Result<Setting, SufficiencyError> {
        Ok(Setting::new(self.space.base.clone(), self.space.contexts[i].clone())?)
    }

    fn sc1(&self, candidate: &Candidate) -> Result<bool, SufficiencyError> {
        Ok(cause::check_ac1(&self.setting(self.u)?, self.bw, candidate, &self.event)?)
    }

    fn sc2(&self, candidate: &Candidate) -> Result<Vec<String>, SufficiencyError> {
        let setting = self.setting(self.u)?;
        let parts = cause::parts_of_causes(&setting, self.bw, &self.event, self.definition, self.budget, EventPairs::Include)?;
        Ok(candidate
            .conjuncts()
            .iter()
            .filter(|(at, v)| parts.contains(&(at.clone(), *v)))
            .map(|(at, v)| format!("{at}={v}"))
            .collect())
    }

    fn sc3(&self, candidate: &Candidate) -> Result<Vec<String>, SufficiencyError> {
        let mut failures = Vec::new();
        match self.scope {
            Scope::Global => {
                let i = Intervention::new(candidate.conjuncts().iter().cloned())?;
                let f = Formula::intervene(i, self.event.clone()).expect("events carry no interventions");
                for (k, name) in self.space.names.iter().enumerate() {
                    if !self.setting(k)?.satisfies(self.bw, &f)? {
                        failures.push(name.clone());
                    }
                }
            }
            Scope::Local => {
                let lifted = self.lifted.as_ref().expect("lifted model built for local scope");
                let f = lifted_intervention(self.space, candidate, &self.event)?;
                let u = &self.space.names[self.u];
                for w in lifted.model().successors(u)? {
                    if !lifted.satisfies(&w, &f)? {
                        failures.push(w);
                    }
                }
                // the failures computed per successor are exactly what box reads
                debug_assert_eq!(
                    failures.is_empty(),
                    lifted.satisfies(u, &Formula::boxed(f.clone())).unwrap_or(false)
                );
            }
        }
        Ok(failures)
    }

    fn sc123(&self, candidate: &Candidate) -> Result<bool, SufficiencyError> {
        Ok(self.sc1(candidate)? && !self.sc2(candidate)?.is_empty() && self.sc3(candidate)?.is_empty())
    }
}

/// `[Y <- y] event` on the lifted model, with `Y = X x W`.
fn lifted_intervention(
    space: &ContextSpace,
    candidate: &Candidate,
    event: &Formula,
) -> Result<Formula, SufficiencyError> {
    let items = candidate.conjuncts().iter().flat_map(|(at, v)| {
        space
            .names
            .iter()
            .map(move |w| (VarAt::new(at.var.clone(), w.clone()), *v))
    });
    let i = Intervention::new(items)?;
    Ok(Formula::intervene(i, event.clone()).expect("events carry no interventions"))
}

/// SC3-local read directly as `box [Y <- y] event` at `u` on the lifted model.
pub fn sc3_local_box(
    space: &ContextSpace,
    u: &str,
    conjunction: &Candidate,
    event: &Formula,
) -> Result<bool, SufficiencyError> {
    let bw = base_world(&space.base)?;
    let event = localize(event, bw)?;
    let (model, ctx) = lift_to_kripke(space)?;
    let lifted = Setting::new(model, ctx)?;
    let f = lifted_intervention(space, conjunction, &event)?;
    Ok(lifted.satisfies(u, &Formula::boxed(f))?)
}

/// Decides whether `conjunction` (atoms at the base world) is a sufficient
/// cause of `event` in context `u`.
pub fn is_sufficient_cause(
    space: &ContextSpace,
    u: &str,
    conjunction: &Candidate,
    event: &Formula,
    scope: Scope,
    definition: Definition,
    budget: SearchBudget,
) -> Result<SufficiencyVerdict, SufficiencyError> {
    let bw = base_world(&space.base)?;
    for (at, _) in conjunction.conjuncts() {
        if at.world != bw {
            return Err(ModelError::Dangling(at.to_string()).into());
        }
        if space.base.kind(&at.var) != Some(VarKind::Endogenous) {
            return Err(CauseError::InvalidCandidate(format!("{at} is not endogenous")).into());
        }
    }
    let lifted = match scope {
        Scope::Local => {
            let (model, ctx) = lift_to_kripke(space)?;
            Some(Setting::new(model, ctx)?)
        }
        Scope::Global => None,
    };
    let checker = Checker {
        space,
        bw,
        u: space.index(u)?,
        event: localize(event, bw)?,
        scope,
        definition,
        budget,
        lifted,
    };
    let sc1 = checker.sc1(conjunction)?;
    let sc2_parts = checker.sc2(conjunction)?;
    let sc3_failures = checker.sc3(conjunction)?;
    let sc2 = !sc2_parts.is_empty();
    let sc3 = sc3_failures.is_empty();
    let mut verdict = SufficiencyVerdict {
        sufficient: false,
        scope,
        definition,
        candidate: conjunction.clone(),
        sc1,
        sc2,
        sc2_parts,
        sc3,
        sc3_failures,
        minimal: None,
        smaller: None,
    };
    if !(sc1 && sc2 && sc3) {
        return Ok(verdict);
    }
    let atoms = conjunction.conjuncts();
    for mask in 1..(1u64 << atoms.len()) - 1 {
        let sub = Candidate::new(
            atoms
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, a)| a.clone()),
        )?;
        if checker.sc123(&sub)? {
            verdict.minimal = Some(false);
            verdict.smaller = Some(sub);
            return Ok(verdict);
        }
    }
    verdict.minimal = Some(true);
    verdict.sufficient = true;
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::parser::parse;

    fn conjunctive() -> Model {
        corpus::load("forest-fire-conjunctive").unwrap().model
    }

    fn cand(items: &[(&str, Value)]) -> Candidate {
        Candidate::new(items.iter().map(|(v, x)| (VarAt::new(*v, "w"), *x))).unwrap()
    }

    #[test]
    fn hamming_one_on_two_binary_inputs() {
        let space = ContextSpace::exhaustive(conjunctive(), &Nearby::Hamming(1), true).unwrap();
        assert_eq!(space.names().len(), 4);
        let (model, ctx) = lift_to_kripke(&space).unwrap();
        assert_eq!(model.worlds().len(), 4);
        assert_eq!(model.relation().len(), 12);
        assert!(ctx.fits(&model));
        let irreflexive = ContextSpace::exhaustive(conjunctive(), &Nearby::Hamming(1), false).unwrap();
        assert_eq!(irreflexive.nearby().len(), 8);
    }

    #[test]
    fn one_context_lifts_to_single_world() {
        let base = conjunctive();
        let ctx = corpus::load("forest-fire-conjunctive").unwrap().contexts["both"].clone();
        let space = ContextSpace::new(base, vec![("only".into(), ctx)], &Nearby::Pairs(vec![]), false).unwrap();
        let (model, _) = lift_to_kripke(&space).unwrap();
        assert_eq!(model.worlds(), ["only"]);
        assert!(model.relation().is_empty());
    }

    #[test]
    fn duplicate_contexts_rejected() {
        let loaded = corpus::load("forest-fire-conjunctive").unwrap();
        let c = loaded.contexts["both"].clone();
        let err = ContextSpace::new(
            loaded.model.clone(),
            vec![("a".into(), c.clone()), ("b".into(), c)],
            &Nearby::Hamming(0),
            true,
        );
        assert!(matches!(err, Err(SufficiencyError::Invalid(_))));
    }

    #[test]
    fn lifted_worlds_reproduce_base_valuations() {
        let space = ContextSpace::exhaustive(conjunctive(), &Nearby::Hamming(1), true).unwrap();
        let (model, ctx) = lift_to_kripke(&space).unwrap();
        let lifted = model.evaluate(&ctx);
        for name in space.names() {
            let base = space.base().evaluate(space.context(name).unwrap());
            assert_eq!(lifted.value("F", name), base.value("F", "w"));
        }
    }

    #[test]
    fn conjunctive_both_inputs_sufficient() {
        let space = ContextSpace::exhaustive(conjunctive(), &Nearby::Hamming(1), true).unwrap();
        let u = space.names().last().unwrap().clone(); // L=1, M=1
        let f = parse("F=1").unwrap();
        let v = is_sufficient_cause(
            &space,
            &u,
            &cand(&[("L", 1), ("M", 1)]),
            &f,
            Scope::Global,
            Definition::Updated,
            SearchBudget::default(),
        )
        .unwrap();
        assert!(v.sufficient, "{v:?}");
        let single = is_sufficient_cause(&space, &u, &cand(&[("L", 1)]), &f, Scope::Global, Definition::Updated, SearchBudget::default())
            .unwrap();
        assert!(single.sc1 && single.sc2 && !single.sc3);
        let f_false = is_sufficient_cause(&space, "u0", &cand(&[("L", 1), ("M", 1)]), &f, Scope::Global, Definition::Updated, SearchBudget::default())
            .unwrap();
        assert!(!f_false.sc1 && !f_false.sufficient);
    }

    #[test]
    fn nearby_parse() {
        assert_eq!("hamming:2".parse::<Nearby>().unwrap(), Nearby::Hamming(2));
        assert_eq!(
            "a>b, b>a".parse::<Nearby>().unwrap(),
            Nearby::Pairs(vec![("a".into(), "b".into()), ("b".into(), "a".into())])
        );
        assert!("a-b".parse::<Nearby>().is_err());
    }

    #[test]
    fn modal_models_rejected() {
        let m = corpus::load("umbrella").unwrap().model;
        assert!(ContextSpace::exhaustive(m, &Nearby::Hamming(1), true).is_err());
    }
}
