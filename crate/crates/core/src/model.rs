//! Causal Kripke models.
//!
//! A model is a signature (exogenous and endogenous variables with per-world
//! ranges), a finite set of worlds, an accessibility relation and one
//! structural equation per endogenous `(variable, world)` pair. Models are
//! validated at construction: every reference must resolve, every produced
//! value must lie in its range and the dependency graph over pairs must be
//! acyclic. All evaluation goes through a fixed topological order.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{self, Circuit};
use crate::formula::Formula;

/// Values taken by variables. Ranges are finite sets of these.
pub type Value = i64;

/// A variable restricted to one world, written `X@w` in formulas.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarAt {
    pub var: String,
    pub world: String,
}

impl VarAt {
    pub fn new(var: impl Into<String>, world: impl Into<String>) -> Self {
        VarAt {
            var: var.into(),
            world: world.into(),
        }
    }
}

impl fmt::Display for VarAt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.var, self.world)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Exogenous,
    Endogenous,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("cyclic dependency: {}", render_cycle(.cycle))]
    Cycle { cycle: Vec<VarAt> },
    #[error("range error: {0}")]
    Range(String),
    #[error("unknown reference: {0}")]
    Dangling(String),
    #[error("no structural equation for endogenous {0}")]
    MissingEquation(VarAt),
    #[error("intervention sets {0} more than once")]
    DuplicateTarget(VarAt),
    #[error("invalid signature: {0}")]
    Signature(String),
    #[error("invalid equation for {target}: {reason}")]
    Equation { target: VarAt, reason: String },
    #[error("`{0}` is not an event (interventions are not allowed here)")]
    NotAnEvent(String),
}

fn render_cycle(cycle: &[VarAt]) -> String {
    let mut parts: Vec<String> = cycle.iter().map(ToString::to_string).collect();
    if let Some(first) = cycle.first() {
        parts.push(first.to_string());
    }
    parts.join(" -> ")
}

/// Declaration of one variable: its kind, its default range and optional
/// per-world range overrides.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub kind: VarKind,
    pub range: Vec<Value>,
    pub world_ranges: BTreeMap<String, Vec<Value>>,
}

impl VarDecl {
    pub fn exogenous(name: impl Into<String>, range: impl IntoIterator<Item = Value>) -> Self {
        Self::new(name, VarKind::Exogenous, range)
    }

    pub fn endogenous(name: impl Into<String>, range: impl IntoIterator<Item = Value>) -> Self {
        Self::new(name, VarKind::Endogenous, range)
    }

    pub fn new(
        name: impl Into<String>,
        kind: VarKind,
        range: impl IntoIterator<Item = Value>,
    ) -> Self {
        VarDecl {
            name: name.into(),
            kind,
            range: normalize_range(range),
            world_ranges: BTreeMap::new(),
        }
    }

    /// Overrides the range at a single world.
    pub fn with_range_at(
        mut self,
        world: impl Into<String>,
        range: impl IntoIterator<Item = Value>,
    ) -> Self {
        self.world_ranges.insert(world.into(), normalize_range(range));
        self
    }

    pub fn range_at(&self, world: &str) -> &[Value] {
        self.world_ranges
            .get(world)
            .map(Vec::as_slice)
            .unwrap_or(&self.range)
    }
}

fn normalize_range(range: impl IntoIterator<Item = Value>) -> Vec<Value> {
    let set: BTreeSet<Value> = range.into_iter().collect();
    set.into_iter().collect()
}

/// Exogenous and endogenous variables with their ranges.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    vars: Vec<VarDecl>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable. Names are unique across both kinds, which keeps the
    /// exogenous and endogenous sets disjoint.
    pub fn add(&mut self, decl: VarDecl) -> Result<&mut Self, ModelError> {
        if self.vars.iter().any(|v| v.name == decl.name) {
            return Err(ModelError::Signature(format!(
                "variable `{}` declared twice",
                decl.name
            )));
        }
        if !is_identifier(&decl.name) || crate::parser::is_keyword(&decl.name) {
            return Err(ModelError::Signature(format!(
                "`{}` is not a valid variable name",
                decl.name
            )));
        }
        self.vars.push(decl);
        Ok(self)
    }

    pub fn with(mut self, decl: VarDecl) -> Result<Self, ModelError> {
        self.add(decl)?;
        Ok(self)
    }

    pub fn vars(&self) -> &[VarDecl] {
        &self.vars
    }

    pub fn get(&self, name: &str) -> Option<&VarDecl> {
        self.vars.iter().find(|v| v.name == name)
    }

    pub fn exogenous(&self) -> impl Iterator<Item = &VarDecl> {
        self.vars.iter().filter(|v| v.kind == VarKind::Exogenous)
    }

    pub fn endogenous(&self) -> impl Iterator<Item = &VarDecl> {
        self.vars.iter().filter(|v| v.kind == VarKind::Endogenous)
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

pub(crate) fn is_world_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

/// Explicit finite table over a declared parent list. Keys list parent values
/// in parent order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableEquation {
    pub parents: Vec<VarAt>,
    pub rows: BTreeMap<Vec<Value>, Value>,
}

/// A structural equation for one endogenous pair.
#[derive(Clone, Debug, PartialEq)]
pub enum Equation {
    Constant(Value),
    Table(TableEquation),
    /// Event evaluated at the target's world; the target range must be
    /// `{0, 1}`. Parents are the pairs the event reads.
    Formula(Formula),
}

/// Names, ranges and the Kripke frame, shared between a model, the models
/// obtained from it by intervention, and every context and valuation.
#[derive(Debug, PartialEq, Eq)]
pub(crate) struct Layout {
    pub vars: Vec<String>,
    pub kinds: Vec<VarKind>,
    pub var_index: HashMap<String, usize>,
    pub worlds: Vec<String>,
    pub world_index: HashMap<String, usize>,
    /// Range per pair index, sorted ascending.
    pub ranges: Vec<Vec<Value>>,
    pub relation: BTreeSet<(usize, usize)>,
    pub succ: Vec<Vec<usize>>,
    pub pred: Vec<Vec<usize>>,
}

impl Layout {
    pub fn pair(&self, var: usize, world: usize) -> usize {
        var * self.worlds.len() + world
    }

    pub fn n_pairs(&self) -> usize {
        self.vars.len() * self.worlds.len()
    }

    pub fn var_of(&self, pair: usize) -> usize {
        pair / self.worlds.len()
    }

    pub fn world_of(&self, pair: usize) -> usize {
        pair % self.worlds.len()
    }

    pub fn kind_of(&self, pair: usize) -> VarKind {
        self.kinds[self.var_of(pair)]
    }

    pub fn var_at(&self, pair: usize) -> VarAt {
        VarAt::new(
            self.vars[self.var_of(pair)].clone(),
            self.worlds[self.world_of(pair)].clone(),
        )
    }

    pub fn world(&self, name: &str) -> Result<usize, ModelError> {
        self.world_index
            .get(name)
            .copied()
            .ok_or_else(|| ModelError::Dangling(format!("world `{name}`")))
    }

    pub fn var(&self, name: &str) -> Result<usize, ModelError> {
        self.var_index
            .get(name)
            .copied()
            .ok_or_else(|| ModelError::Dangling(format!("variable `{name}`")))
    }

    pub fn resolve(&self, at: &VarAt) -> Result<usize, ModelError> {
        Ok(self.pair(self.var(&at.var)?, self.world(&at.world)?))
    }

    /// Ordering key used for deterministic traversal: world name first, then
    /// variable name.
    pub fn sort_key(&self, pair: usize) -> (&str, &str) {
        (
            self.worlds[self.world_of(pair)].as_str(),
            self.vars[self.var_of(pair)].as_str(),
        )
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Compiled {
    Const(Value),
    Table {
        parents: Vec<usize>,
        strides: Vec<usize>,
        /// For each parent, its range (to find a value's position).
        ranges: Vec<Vec<Value>>,
        outputs: Vec<Value>,
    },
    Circuit(Circuit),
}

impl Compiled {
    fn eval(&self, vals: &[Value]) -> Value {
        match self {
            Compiled::Const(v) => *v,
            Compiled::Table {
                parents,
                strides,
                ranges,
                outputs,
            } => {
                let mut idx = 0;
                for ((p, stride), range) in parents.iter().zip(strides).zip(ranges) {
                    let pos = range
                        .binary_search(&vals[*p])
                        .expect("table parent value outside its range");
                    idx += pos * stride;
                }
                outputs[idx]
            }
            Compiled::Circuit(c) => Value::from(c.eval(vals)),
        }
    }

    pub(crate) fn parents(&self) -> BTreeSet<usize> {
        match self {
            Compiled::Const(_) => BTreeSet::new(),
            Compiled::Table { parents, .. } => parents.iter().copied().collect(),
            Compiled::Circuit(c) => c.pairs(),
        }
    }
}

/// A validated, recursive causal Kripke model.
#[derive(Clone, Debug)]
pub struct Model {
    pub(crate) layout: Arc<Layout>,
    signature: Arc<Signature>,
    equations: Vec<Option<Equation>>,
    pub(crate) compiled: Vec<Option<Compiled>>,
    /// Endogenous pair indices in evaluation order.
    pub(crate) order: Vec<usize>,
}

impl Model {
    /// Validates and builds a model. Every endogenous pair needs exactly one
    /// equation; the dependency graph must be acyclic.
    pub fn build(
        signature: Signature,
        worlds: impl IntoIterator<Item = impl Into<String>>,
        relation: impl IntoIterator<Item = (impl Into<String>, impl Into<String>)>,
        equations: impl IntoIterator<Item = (VarAt, Equation)>,
    ) -> Result<Model, ModelError> {
        let worlds: Vec<String> = worlds.into_iter().map(Into::into).collect();
        if worlds.is_empty() {
            return Err(ModelError::Signature("a model needs at least one world".into()));
        }
        let mut world_index = HashMap::new();
        for (i, w) in worlds.iter().enumerate() {
            if !is_world_name(w) {
                return Err(ModelError::Signature(format!("`{w}` is not a valid world name")));
            }
            if world_index.insert(w.clone(), i).is_some() {
                return Err(ModelError::Signature(format!("world `{w}` listed twice")));
            }
        }
        for decl in signature.vars() {
            for w in decl.world_ranges.keys() {
                if !world_index.contains_key(w) {
                    return Err(ModelError::Dangling(format!(
                        "world `{w}` in range of `{}`",
                        decl.name
                    )));
                }
            }
        }

        let nw = worlds.len();
        let mut vars = Vec::new();
        let mut kinds = Vec::new();
        let mut var_index = HashMap::new();
        let mut ranges = Vec::new();
        for (i, decl) in signature.vars().iter().enumerate() {
            vars.push(decl.name.clone());
            kinds.push(decl.kind);
            var_index.insert(decl.name.clone(), i);
            for w in &worlds {
                let r = decl.range_at(w);
                if r.is_empty() {
                    return Err(ModelError::Range(format!("empty range for {}@{}", decl.name, w)));
                }
                ranges.push(r.to_vec());
            }
        }

        let mut rel = BTreeSet::new();
        for (a, b) in relation {
            let (a, b) = (a.into(), b.into());
            let ia = *world_index
                .get(&a)
                .ok_or_else(|| ModelError::Dangling(format!("world `{a}` in relation")))?;
            let ib = *world_index
                .get(&b)
                .ok_or_else(|| ModelError::Dangling(format!("world `{b}` in relation")))?;
            rel.insert((ia, ib));
        }
        let mut succ = vec![Vec::new(); nw];
        let mut pred = vec![Vec::new(); nw];
        for &(a, b) in &rel {
            succ[a].push(b);
            pred[b].push(a);
        }

        let layout = Arc::new(Layout {
            vars,
            kinds,
            var_index,
            worlds,
            world_index,
            ranges,
            relation: rel,
            succ,
            pred,
        });

        let n = layout.n_pairs();
        let mut eqs: Vec<Option<Equation>> = vec![None; n];
        for (target, eq) in equations {
            let idx = layout.resolve(&target)?;
            if layout.kind_of(idx) != VarKind::Endogenous {
                return Err(ModelError::Equation {
                    target,
                    reason: "exogenous variables have no structural equation".into(),
                });
            }
            if eqs[idx].is_some() {
                return Err(ModelError::Equation {
                    target,
                    reason: "equation given twice".into(),
                });
            }
            eqs[idx] = Some(eq);
        }
        let mut compiled = vec![None; n];
        for idx in 0..n {
            if layout.kind_of(idx) != VarKind::Endogenous {
                continue;
            }
            let eq = eqs[idx]
                .as_ref()
                .ok_or_else(|| ModelError::MissingEquation(layout.var_at(idx)))?;
            compiled[idx] = Some(compile_equation(&layout, idx, eq)?);
        }

        let order = topological_order(&layout, &compiled)?;
        Ok(Model {
            layout,
            signature: Arc::new(signature),
            equations: eqs,
            compiled,
            order,
        })
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn worlds(&self) -> &[String] {
        &self.layout.worlds
    }

    pub fn relation(&self) -> Vec<(String, String)> {
        self.layout
            .relation
            .iter()
            .map(|&(a, b)| (self.layout.worlds[a].clone(), self.layout.worlds[b].clone()))
            .collect()
    }

    pub fn successors(&self, world: &str) -> Result<Vec<String>, ModelError> {
        let w = self.layout.world(world)?;
        Ok(self.layout.succ[w]
            .iter()
            .map(|&s| self.layout.worlds[s].clone())
            .collect())
    }

    pub fn has_world(&self, world: &str) -> bool {
        self.layout.world_index.contains_key(world)
    }

    pub fn kind(&self, var: &str) -> Option<VarKind> {
        self.layout.var_index.get(var).map(|&i| self.layout.kinds[i])
    }

    pub fn range(&self, at: &VarAt) -> Result<&[Value], ModelError> {
        Ok(&self.layout.ranges[self.layout.resolve(at)?])
    }

    pub fn equation(&self, at: &VarAt) -> Result<Option<&Equation>, ModelError> {
        Ok(self.equations[self.layout.resolve(at)?].as_ref())
    }

    /// Endogenous pairs ordered by (world, variable).
    pub fn endogenous_pairs(&self) -> Vec<VarAt> {
        self.sorted_pairs(VarKind::Endogenous)
            .into_iter()
            .map(|p| self.layout.var_at(p))
            .collect()
    }

    pub fn exogenous_pairs(&self) -> Vec<VarAt> {
        self.sorted_pairs(VarKind::Exogenous)
            .into_iter()
            .map(|p| self.layout.var_at(p))
            .collect()
    }

    /// `seeds` and every pair they transitively depend on.
    pub(crate) fn ancestors(&self, seeds: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<usize> = seeds.into_iter().collect();
        while let Some(p) = stack.pop() {
            if !seen.insert(p) {
                continue;
            }
            if let Some(c) = &self.compiled[p] {
                stack.extend(c.parents().into_iter().filter(|q| !seen.contains(q)));
            }
        }
        seen
    }

    pub(crate) fn sorted_pairs(&self, kind: VarKind) -> Vec<usize> {
        let mut pairs: Vec<usize> = (0..self.layout.n_pairs())
            .filter(|&p| self.layout.kind_of(p) == kind)
            .collect();
        pairs.sort_by(|&a, &b| self.layout.sort_key(a).cmp(&self.layout.sort_key(b)));
        pairs
    }

    /// Evaluation order of endogenous pairs.
    pub fn evaluation_order(&self) -> Vec<VarAt> {
        self.order.iter().map(|&p| self.layout.var_at(p)).collect()
    }

    /// The unique valuation determined by `context`.
    pub fn evaluate(&self, context: &Context) -> Valuation {
        let mut out = Vec::new();
        self.eval_into(&context.values, None, &mut out);
        Valuation {
            layout: self.layout.clone(),
            values: out,
        }
    }

    /// Evaluates with optional per-pair overrides. `overrides`, when given,
    /// has one entry per pair; `Some(v)` pins the pair to `v`.
    pub(crate) fn eval_into(
        &self,
        context: &[Value],
        overrides: Option<&[Option<Value>]>,
        out: &mut Vec<Value>,
    ) {
        out.clear();
        out.extend_from_slice(context);
        for &p in &self.order {
            let pinned = overrides.and_then(|o| o[p]);
            out[p] = match pinned {
                Some(v) => v,
                None => self.compiled[p]
                    .as_ref()
                    .expect("endogenous pair without equation")
                    .eval(out),
            };
        }
    }

    pub(crate) fn resolve_intervention(
        &self,
        intervention: &Intervention,
    ) -> Result<Vec<(usize, Value)>, ModelError> {
        intervention
            .assignments()
            .iter()
            .map(|(at, v)| {
                let idx = self.layout.resolve(at)?;
                if self.layout.kind_of(idx) != VarKind::Endogenous {
                    return Err(ModelError::Dangling(format!(
                        "{at} is exogenous and cannot be intervened on"
                    )));
                }
                if self.layout.ranges[idx].binary_search(v).is_err() {
                    return Err(ModelError::Range(format!("{v} is not in the range of {at}")));
                }
                Ok((idx, *v))
            })
            .collect()
    }

    /// The model with each targeted equation replaced by a constant.
    pub fn intervene(&self, intervention: &Intervention) -> Result<Model, ModelError> {
        let resolved = self.resolve_intervention(intervention)?;
        let mut model = self.clone();
        for (idx, v) in resolved {
            model.equations[idx] = Some(Equation::Constant(v));
            model.compiled[idx] = Some(Compiled::Const(v));
        }
        Ok(model)
    }

    /// Direct causes of an endogenous pair: the declared parents on which
    /// the equation actually depends, found by varying one parent at a time
    /// over every assignment of the declared parents.
    pub fn parents(&self, at: &VarAt) -> Result<BTreeSet<VarAt>, ModelError> {
        let idx = self.layout.resolve(at)?;
        let compiled = self.compiled[idx]
            .as_ref()
            .ok_or_else(|| ModelError::Dangling(format!("{at} is not endogenous")))?;
        let declared: Vec<usize> = compiled.parents().into_iter().collect();
        let ranges: Vec<&[Value]> = declared
            .iter()
            .map(|&p| self.layout.ranges[p].as_slice())
            .collect();
        let mut vals: Vec<Value> = (0..self.layout.n_pairs())
            .map(|p| self.layout.ranges[p][0])
            .collect();
        let mut found = BTreeSet::new();
        for assignment in product(&ranges) {
            for (&p, &v) in declared.iter().zip(&assignment) {
                vals[p] = v;
            }
            let base = compiled.eval(&vals);
            for (i, &p) in declared.iter().enumerate() {
                if found.contains(&p) {
                    continue;
                }
                let original = vals[p];
                for &alt in ranges[i] {
                    if alt == original {
                        continue;
                    }
                    vals[p] = alt;
                    let changed = compiled.eval(&vals) != base;
                    vals[p] = original;
                    if changed {
                        found.insert(p);
                        break;
                    }
                }
            }
        }
        Ok(found.into_iter().map(|p| self.layout.var_at(p)).collect())
    }
}

/// Cartesian product of ranges in lexicographic order (last index fastest).
pub(crate) fn product(ranges: &[&[Value]]) -> impl Iterator<Item = Vec<Value>> {
    let ranges: Vec<Vec<Value>> = ranges.iter().map(|r| r.to_vec()).collect();
    let mut positions = vec![0usize; ranges.len()];
    let mut done = ranges.iter().any(|r| r.is_empty());
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let item: Vec<Value> = positions
            .iter()
            .zip(&ranges)
            .map(|(&i, r)| r[i])
            .collect();
        let mut k = positions.len();
        loop {
            if k == 0 {
                done = true;
                break;
            }
            k -= 1;
            positions[k] += 1;
            if positions[k] < ranges[k].len() {
                break;
            }
            positions[k] = 0;
        }
        Some(item)
    })
}

fn compile_equation(layout: &Layout, target: usize, eq: &Equation) -> Result<Compiled, ModelError> {
    let target_at = || layout.var_at(target);
    let range = &layout.ranges[target];
    match eq {
        Equation::Constant(v) => {
            if range.binary_search(v).is_err() {
                return Err(ModelError::Range(format!(
                    "constant {v} is not in the range of {}",
                    target_at()
                )));
            }
            Ok(Compiled::Const(*v))
        }
        Equation::Formula(f) => {
            if range.as_slice() != [0, 1] {
                return Err(ModelError::Equation {
                    target: target_at(),
                    reason: "formula equations need the range {0, 1}".into(),
                });
            }
            let circuit = circuit::compile(layout, layout.world_of(target), f)?;
            if circuit.pairs().contains(&target) {
                return Err(ModelError::Cycle {
                    cycle: vec![target_at()],
                });
            }
            Ok(Compiled::Circuit(circuit))
        }
        Equation::Table(table) => {
            let mut parents = Vec::new();
            for p in &table.parents {
                let idx = layout.resolve(p)?;
                if idx == target {
                    return Err(ModelError::Cycle {
                        cycle: vec![target_at()],
                    });
                }
                if parents.contains(&idx) {
                    return Err(ModelError::Equation {
                        target: target_at(),
                        reason: format!("parent {p} listed twice"),
                    });
                }
                parents.push(idx);
            }
            let ranges: Vec<Vec<Value>> =
                parents.iter().map(|&p| layout.ranges[p].clone()).collect();
            let mut strides = vec![1usize; parents.len()];
            for i in (0..parents.len().saturating_sub(1)).rev() {
                strides[i] = strides[i + 1] * ranges[i + 1].len();
            }
            let size: usize = ranges.iter().map(Vec::len).product();
            let mut outputs: Vec<Option<Value>> = vec![None; size];
            for (key, out) in &table.rows {
                if key.len() != parents.len() {
                    return Err(ModelError::Equation {
                        target: target_at(),
                        reason: format!(
                            "row {key:?} has {} entries, expected {}",
                            key.len(),
                            parents.len()
                        ),
                    });
                }
                let mut idx = 0;
                for (i, v) in key.iter().enumerate() {
                    let pos = ranges[i].binary_search(v).map_err(|_| {
                        ModelError::Range(format!(
                            "table key {v} is not in the range of {}",
                            table.parents[i]
                        ))
                    })?;
                    idx += pos * strides[i];
                }
                if range.binary_search(out).is_err() {
                    return Err(ModelError::Range(format!(
                        "table output {out} is not in the range of {}",
                        target_at()
                    )));
                }
                outputs[idx] = Some(*out);
            }
            let outputs = outputs
                .into_iter()
                .enumerate()
                .map(|(i, o)| {
                    o.ok_or_else(|| {
                        let mut rem = i;
                        let key: Vec<Value> = strides
                            .iter()
                            .zip(&ranges)
                            .map(|(s, r)| {
                                let v = r[rem / s];
                                rem %= s;
                                v
                            })
                            .collect();
                        ModelError::Equation {
                            target: target_at(),
                            reason: format!("table has no row for {key:?}"),
                        }
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Compiled::Table {
                parents,
                strides,
                ranges,
                outputs,
            })
        }
    }
}

/// Kahn's algorithm over endogenous pairs, ties broken by (world, variable).
fn topological_order(layout: &Layout, compiled: &[Option<Compiled>]) -> Result<Vec<usize>, ModelError> {
    let n = layout.n_pairs();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut indegree = vec![0usize; n];
    let endo: Vec<usize> = (0..n)
        .filter(|&p| layout.kind_of(p) == VarKind::Endogenous)
        .collect();
    for &p in &endo {
        let c = compiled[p].as_ref().expect("compiled endogenous equation");
        for parent in c.parents() {
            if layout.kind_of(parent) == VarKind::Endogenous {
                children[parent].push(p);
                indegree[p] += 1;
            }
        }
    }
    let mut ready: BinaryHeap<Reverse<((&str, &str), usize)>> = endo
        .iter()
        .filter(|&&p| indegree[p] == 0)
        .map(|&p| Reverse((layout.sort_key(p), p)))
        .collect();
    let mut order = Vec::with_capacity(endo.len());
    while let Some(Reverse((_, p))) = ready.pop() {
        order.push(p);
        for &c in &children[p] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse((layout.sort_key(c), c)));
            }
        }
    }
    if order.len() == endo.len() {
        return Ok(order);
    }
    let stuck: BTreeSet<usize> = endo.into_iter().filter(|&p| indegree[p] > 0).collect();
    Err(ModelError::Cycle {
        cycle: find_cycle(layout, compiled, &stuck),
    })
}

/// Walks parent links inside the unresolved set until a pair repeats.
fn find_cycle(layout: &Layout, compiled: &[Option<Compiled>], stuck: &BTreeSet<usize>) -> Vec<VarAt> {
    let Some(&start) = stuck.iter().next() else {
        return Vec::new();
    };
    let mut path = vec![start];
    let mut seen = HashMap::from([(start, 0usize)]);
    let mut current = start;
    loop {
        let next = compiled[current]
            .as_ref()
            .map(Compiled::parents)
            .unwrap_or_default()
            .into_iter()
            .find(|p| stuck.contains(p));
        let Some(next) = next else {
            return path.iter().map(|&p| layout.var_at(p)).collect();
        };
        if let Some(&pos) = seen.get(&next) {
            // path runs child -> parent; reverse so the cycle reads parent -> child
            let mut cycle: Vec<VarAt> = path[pos..].iter().map(|&p| layout.var_at(p)).collect();
            cycle.reverse();
            return cycle;
        }
        seen.insert(next, path.len());
        path.push(next);
        current = next;
    }
}

/// Values of every exogenous pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Context {
    pub(crate) layout: Arc<Layout>,
    /// Dense over all pairs; endogenous slots are placeholders.
    pub(crate) values: Vec<Value>,
}

impl Context {
    pub fn new(
        model: &Model,
        assignments: impl IntoIterator<Item = (VarAt, Value)>,
    ) -> Result<Context, ModelError> {
        let layout = model.layout.clone();
        let n = layout.n_pairs();
        let mut values: Vec<Option<Value>> = vec![None; n];
        for (at, v) in assignments {
            let idx = layout.resolve(&at)?;
            if layout.kind_of(idx) != VarKind::Exogenous {
                return Err(ModelError::Dangling(format!(
                    "{at} is endogenous; contexts only set exogenous variables"
                )));
            }
            if layout.ranges[idx].binary_search(&v).is_err() {
                return Err(ModelError::Range(format!("{v} is not in the range of {at}")));
            }
            if values[idx].replace(v).is_some() {
                return Err(ModelError::Range(format!("{at} assigned twice in context")));
            }
        }
        let values = (0..n)
            .map(|p| match layout.kind_of(p) {
                VarKind::Endogenous => Ok(layout.ranges[p][0]),
                VarKind::Exogenous => values[p].ok_or_else(|| {
                    ModelError::Range(format!("context leaves {} unassigned", layout.var_at(p)))
                }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Context { layout, values })
    }

    pub fn get(&self, at: &VarAt) -> Option<Value> {
        let idx = self.layout.resolve(at).ok()?;
        (self.layout.kind_of(idx) == VarKind::Exogenous).then(|| self.values[idx])
    }

    /// Exogenous assignments ordered by (world, variable).
    pub fn assignments(&self) -> Vec<(VarAt, Value)> {
        let mut out: Vec<usize> = (0..self.layout.n_pairs())
            .filter(|&p| self.layout.kind_of(p) == VarKind::Exogenous)
            .collect();
        out.sort_by(|&a, &b| self.layout.sort_key(a).cmp(&self.layout.sort_key(b)));
        out.into_iter()
            .map(|p| (self.layout.var_at(p), self.values[p]))
            .collect()
    }

    /// Whether this context was built for `model` (same variables, worlds
    /// and frame).
    pub fn fits(&self, model: &Model) -> bool {
        Arc::ptr_eq(&self.layout, &model.layout) || self.layout == model.layout
    }
}

/// Value of every pair, exogenous and endogenous, under one context.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Valuation {
    pub(crate) layout: Arc<Layout>,
    pub(crate) values: Vec<Value>,
}

impl Valuation {
    pub fn get(&self, at: &VarAt) -> Option<Value> {
        let idx = self.layout.resolve(at).ok()?;
        Some(self.values[idx])
    }

    pub fn value(&self, var: &str, world: &str) -> Option<Value> {
        self.get(&VarAt::new(var, world))
    }

    /// Endogenous variables equal to 1 at `world`, sorted by name.
    pub fn true_at(&self, world: &str) -> Vec<String> {
        let Ok(w) = self.layout.world(world) else {
            return Vec::new();
        };
        let mut out: Vec<String> = (0..self.layout.vars.len())
            .filter(|&v| self.layout.kinds[v] == VarKind::Endogenous)
            .filter(|&v| self.values[self.layout.pair(v, w)] == 1)
            .map(|v| self.layout.vars[v].clone())
            .collect();
        out.sort();
        out
    }

    /// All pairs ordered by (world, variable).
    pub fn entries(&self) -> Vec<(VarAt, Value)> {
        let mut pairs: Vec<usize> = (0..self.layout.n_pairs()).collect();
        pairs.sort_by(|&a, &b| self.layout.sort_key(a).cmp(&self.layout.sort_key(b)));
        pairs
            .into_iter()
            .map(|p| (self.layout.var_at(p), self.values[p]))
            .collect()
    }
}

/// Assignment of values to distinct endogenous pairs, `[Y <- y]`. May be
/// empty.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Intervention {
    assignments: Vec<(VarAt, Value)>,
}

impl Intervention {
    pub fn new(assignments: impl IntoIterator<Item = (VarAt, Value)>) -> Result<Self, ModelError> {
        let assignments: Vec<(VarAt, Value)> = assignments.into_iter().collect();
        let mut seen = BTreeSet::new();
        for (at, _) in &assignments {
            if !seen.insert(at) {
                return Err(ModelError::DuplicateTarget(at.clone()));
            }
        }
        Ok(Intervention { assignments })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn assignments(&self) -> &[(VarAt, Value)] {
        &self.assignments
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }
}
