//! Actual causes in causal Kripke settings under the original, updated and
//! modified definitions.
//!
//! The exhaustive search runs on pair indices with pinned-value overrides
//! and never rebuilds models. The single-witness checks (`check_*`) go
//! through [`Setting::satisfies`] with explicit intervention formulas, so a
//! reported witness can be re-verified along an independent path.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::circuit::{self, Circuit};
use crate::formula::Formula;
use crate::model::{product, Intervention, ModelError, Value, VarAt, VarKind};
use crate::semantics::Setting;

/// Above this many endogenous pairs the contingency size must be capped
/// explicitly.
pub const EXHAUSTIVE_PAIR_LIMIT: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Definition {
    Original,
    Updated,
    Modified,
}

impl Definition {
    pub const ALL: [Definition; 3] = [Definition::Original, Definition::Updated, Definition::Modified];
}

impl fmt::Display for Definition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Definition::Original => "original",
            Definition::Updated => "updated",
            Definition::Modified => "modified",
        })
    }
}

impl FromStr for Definition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" | "o" => Ok(Definition::Original),
            "updated" | "u" => Ok(Definition::Updated),
            "modified" | "m" => Ok(Definition::Modified),
            other => Err(format!(
                "unknown definition `{other}` (expected original, updated or modified)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Box,
    Dia,
}

impl FromStr for Modality {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "box" => Ok(Modality::Box),
            "dia" => Ok(Modality::Dia),
            other => Err(format!("unknown modality `{other}` (expected box or dia)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CauseError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid candidate: {0}")]
    InvalidCandidate(String),
    #[error("search budget exceeded: {0}")]
    SearchBudgetExceeded(String),
    #[error(
        "{pairs} endogenous pairs exceed the exhaustive limit of {EXHAUSTIVE_PAIR_LIMIT}; \
         set a contingency cap"
    )]
    BudgetRequired { pairs: usize },
}

fn serialize_assignments<S: Serializer>(items: &[(VarAt, Value)], s: S) -> Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Item<'a> {
        var: &'a str,
        world: &'a str,
        value: Value,
    }
    let mut seq = s.serialize_seq(Some(items.len()))?;
    for (at, value) in items {
        seq.serialize_element(&Item {
            var: &at.var,
            world: &at.world,
            value: *value,
        })?;
    }
    seq.end()
}

fn fmt_assignments(items: &[(VarAt, Value)], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if items.is_empty() {
        return write!(f, "(none)");
    }
    for (i, (at, v)) in items.iter().enumerate() {
        if i > 0 {
            write!(f, " & ")?;
        }
        write!(f, "{at}={v}")?;
    }
    Ok(())
}

/// A conjunction `Y = y` of atoms over distinct endogenous pairs.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Candidate {
    #[serde(serialize_with = "serialize_assignments")]
    conjuncts: Vec<(VarAt, Value)>,
}

impl Candidate {
    pub fn new(conjuncts: impl IntoIterator<Item = (VarAt, Value)>) -> Result<Self, CauseError> {
        let conjuncts: Vec<(VarAt, Value)> = conjuncts.into_iter().collect();
        if conjuncts.is_empty() {
            return Err(CauseError::InvalidCandidate("empty conjunction".into()));
        }
        let mut seen = BTreeSet::new();
        for (at, _) in &conjuncts {
            if !seen.insert(at) {
                return Err(CauseError::InvalidCandidate(format!("{at} appears twice")));
            }
        }
        Ok(Candidate { conjuncts })
    }

    pub fn single(at: VarAt, value: Value) -> Self {
        Candidate {
            conjuncts: vec![(at, value)],
        }
    }

    pub fn conjuncts(&self) -> &[(VarAt, Value)] {
        &self.conjuncts
    }

    pub fn len(&self) -> usize {
        self.conjuncts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conjuncts.is_empty()
    }

    pub fn contains(&self, at: &VarAt, value: Value) -> bool {
        self.conjuncts.iter().any(|(a, v)| a == at && *v == value)
    }

    fn targets(&self) -> Vec<VarAt> {
        self.conjuncts.iter().map(|(a, _)| a.clone()).collect()
    }
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_assignments(&self.conjuncts, f)
    }
}

/// Caps on the exhaustive search. `None` means unbounded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchBudget {
    /// Largest contingency set `N` tried.
    pub max_contingency: Option<usize>,
    /// Largest number of intervened evaluations before giving up.
    pub max_evaluations: Option<u64>,
}

/// Evidence for AC2: the contingency `N = n`, the alternative setting `y'`
/// of the candidate, and (original/updated) the actual values `z*` of
/// `Z = (V x W) \ N`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub definition: Definition,
    #[serde(serialize_with = "serialize_assignments")]
    pub contingency: Vec<(VarAt, Value)>,
    #[serde(serialize_with = "serialize_assignments")]
    pub alternative: Vec<(VarAt, Value)>,
    #[serde(serialize_with = "serialize_assignments")]
    pub actual_z: Vec<(VarAt, Value)>,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N = ")?;
        fmt_assignments(&self.contingency, f)?;
        write!(f, "; y' = ")?;
        fmt_assignments(&self.alternative, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClauseStatus {
    Pass,
    Fail,
    Inconclusive,
    /// Not evaluated because an earlier clause already decided the verdict.
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CauseVerdict {
    pub outcome: Outcome,
    pub definition: Definition,
    pub candidate: Candidate,
    pub ac1: ClauseStatus,
    pub ac2: ClauseStatus,
    pub ac3: ClauseStatus,
    pub witness: Option<Witness>,
    /// A strict sub-conjunction satisfying AC1 and AC2 (AC3 failure).
    pub smaller_cause: Option<Candidate>,
    pub reason: Option<String>,
    pub evaluations: u64,
}

impl CauseVerdict {
    pub fn holds(&self) -> bool {
        self.outcome == Outcome::Holds
    }
}

/// Search aborted because the evaluation cap was reached.
#[derive(Debug)]
struct Exhausted;

/// Internal AC2 search result over pair indices.
enum Ac2 {
    Found(RawWitness),
    /// `complete` is false when the contingency cap cut the search short.
    Missing { complete: bool },
}

struct RawWitness {
    contingency: Vec<(usize, Value)>,
    alternative: Vec<Value>,
}

struct Search<'a> {
    setting: &'a Setting,
    event: Circuit,
    /// Endogenous pairs ordered by (world, variable).
    endo: Vec<usize>,
    /// Endogenous pairs the event can depend on, in the same order. Pairs
    /// outside this set never change the event under any intervention, so
    /// contingencies and restorations range over it alone.
    relevant: Vec<usize>,
    /// Pairs the event reads directly.
    event_pairs: BTreeSet<usize>,
    budget: SearchBudget,
    evaluations: u64,
    overrides: Vec<Option<Value>>,
    scratch: Vec<Value>,
}

impl<'a> Search<'a> {
    fn new(
        setting: &'a Setting,
        world: &str,
        event: &Formula,
        budget: SearchBudget,
    ) -> Result<Self, CauseError> {
        let model = setting.model();
        let layout = &model.layout;
        let w = layout.world(world)?;
        let event = circuit::compile(layout, w, event)?;
        let endo = model.sorted_pairs(VarKind::Endogenous);
        let event_pairs = event.pairs();
        let ancestors = model.ancestors(event_pairs.iter().copied());
        let relevant: Vec<usize> = endo.iter().copied().filter(|p| ancestors.contains(p)).collect();
        if relevant.len() > EXHAUSTIVE_PAIR_LIMIT && budget.max_contingency.is_none() {
            return Err(CauseError::BudgetRequired { pairs: relevant.len() });
        }
        Ok(Search {
            setting,
            event,
            endo,
            relevant,
            event_pairs,
            budget,
            evaluations: 0,
            overrides: vec![None; layout.n_pairs()],
            scratch: Vec::new(),
        })
    }

    fn actual(&self, pair: usize) -> Value {
        self.setting.valuation().values[pair]
    }

    fn range(&self, pair: usize) -> &[Value] {
        &self.setting.model().layout.ranges[pair]
    }

    fn event_holds_actually(&self) -> bool {
        self.event.eval(&self.setting.valuation().values)
    }

    /// Evaluates the event under the current overrides.
    fn holds(&mut self) -> Result<bool, Exhausted> {
        if let Some(cap) = self.budget.max_evaluations {
            if self.evaluations >= cap {
                return Err(Exhausted);
            }
        }
        self.evaluations += 1;
        let model = self.setting.model();
        model.eval_into(
            &self.setting.context().values,
            Some(&self.overrides),
            &mut self.scratch,
        );
        Ok(self.event.eval(&self.scratch))
    }

    fn pin(&mut self, pairs: &[usize], values: &[Value]) {
        for (&p, &v) in pairs.iter().zip(values) {
            self.overrides[p] = Some(v);
        }
    }

    fn pin_actual(&mut self, pairs: &[usize]) {
        for &p in pairs {
            self.overrides[p] = Some(self.actual(p));
        }
    }

    fn clear(&mut self) {
        self.overrides.iter_mut().for_each(|o| *o = None);
    }

    fn resolve_candidate(&self, candidate: &Candidate) -> Result<Vec<(usize, Value)>, CauseError> {
        let model = self.setting.model();
        let layout = &model.layout;
        candidate
            .conjuncts()
            .iter()
            .map(|(at, v)| {
                let p = layout.resolve(at)?;
                if layout.kind_of(p) != VarKind::Endogenous {
                    return Err(CauseError::InvalidCandidate(format!("{at} is exogenous")));
                }
                if layout.ranges[p].binary_search(v).is_err() {
                    return Err(CauseError::InvalidCandidate(format!(
                        "{v} is not in the range of {at}"
                    )));
                }
                Ok((p, *v))
            })
            .collect()
    }

    fn ac1(&self, candidate: &[(usize, Value)]) -> bool {
        self.event_holds_actually() && candidate.iter().all(|&(p, v)| self.actual(p) == v)
    }

    /// AC2 for the actual-valued conjunction over `ys` under `def`.
    fn ac2(&mut self, def: Definition, ys: &[usize]) -> Result<Ac2, Exhausted> {
        let rest: Vec<usize> = self.relevant.iter().copied().filter(|p| !ys.contains(p)).collect();
        let cap = self
            .budget
            .max_contingency
            .map_or(rest.len(), |c| c.min(rest.len()));
        let y_actual: Vec<Value> = ys.iter().map(|&p| self.actual(p)).collect();
        let y_ranges: Vec<Vec<Value>> = ys.iter().map(|&p| self.range(p).to_vec()).collect();
        let y_range_refs: Vec<&[Value]> = y_ranges.iter().map(Vec::as_slice).collect();
        let alternatives: Vec<Vec<Value>> = product(&y_range_refs).filter(|y| *y != y_actual).collect();

        for size in 0..=cap {
            for picked in combinations(rest.len(), size) {
                let ns: Vec<usize> = picked.iter().map(|&i| rest[i]).collect();
                let zs: Vec<usize> = rest.iter().copied().filter(|p| !ns.contains(p)).collect();
                match def {
                    Definition::Modified => {
                        let n_actual: Vec<Value> = ns.iter().map(|&p| self.actual(p)).collect();
                        for alt in &alternatives {
                            self.clear();
                            self.pin(ys, alt);
                            self.pin(&ns, &n_actual);
                            if !self.holds()? {
                                self.clear();
                                return Ok(Ac2::Found(RawWitness {
                                    contingency: ns.iter().copied().zip(n_actual).collect(),
                                    alternative: alt.clone(),
                                }));
                            }
                        }
                    }
                    Definition::Original | Definition::Updated => {
                        let n_ranges: Vec<Vec<Value>> =
                            ns.iter().map(|&p| self.range(p).to_vec()).collect();
                        let n_refs: Vec<&[Value]> = n_ranges.iter().map(Vec::as_slice).collect();
                        for n in product(&n_refs) {
                            let mut flipping = None;
                            for alt in &alternatives {
                                self.clear();
                                self.pin(ys, alt);
                                self.pin(&ns, &n);
                                if !self.holds()? {
                                    flipping = Some(alt);
                                    break;
                                }
                            }
                            // AC2b does not depend on y', so one flipping alternative suffices
                            let Some(alt) = flipping else { continue };
                            if self.ac2b(def, ys, &y_actual, &ns, &n, &zs)? {
                                self.clear();
                                return Ok(Ac2::Found(RawWitness {
                                    contingency: ns.iter().copied().zip(n.iter().copied()).collect(),
                                    alternative: alt.clone(),
                                }));
                            }
                        }
                    }
                }
            }
        }
        self.clear();
        Ok(Ac2::Missing {
            complete: cap == rest.len(),
        })
    }

    /// AC2b: with `Y` at its actual values, the event survives every partial
    /// restoration `Z' <- z*` of `Z \ Y` (and, for the updated definition,
    /// every sub-contingency `N' <- n`).
    fn ac2b(
        &mut self,
        def: Definition,
        ys: &[usize],
        y_actual: &[Value],
        ns: &[usize],
        n: &[Value],
        zs: &[usize],
    ) -> Result<bool, Exhausted> {
        let n_subsets: u64 = match def {
            Definition::Updated => 1u64 << ns.len(),
            _ => 1,
        };
        let full_n = (1u64 << ns.len()) - 1;
        for z_mask in 0..(1u64 << zs.len()) {
            for n_sub in 0..n_subsets {
                let n_mask = if def == Definition::Updated { n_sub } else { full_n };
                self.clear();
                self.pin(ys, y_actual);
                for (i, (&p, &v)) in ns.iter().zip(n).enumerate() {
                    if n_mask >> i & 1 == 1 {
                        self.overrides[p] = Some(v);
                    }
                }
                let restored: Vec<usize> = zs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| z_mask >> i & 1 == 1)
                    .map(|(_, &p)| p)
                    .collect();
                self.pin_actual(&restored);
                if !self.holds()? {
                    self.clear();
                    return Ok(false);
                }
            }
        }
        self.clear();
        Ok(true)
    }

    fn witness(&self, def: Definition, ys: &[usize], raw: &RawWitness) -> Witness {
        let layout = &self.setting.model().layout;
        let contingency: Vec<(VarAt, Value)> = raw
            .contingency
            .iter()
            .map(|&(p, v)| (layout.var_at(p), v))
            .collect();
        let alternative = ys
            .iter()
            .zip(&raw.alternative)
            .map(|(&p, &v)| (layout.var_at(p), v))
            .collect();
        let actual_z = match def {
            Definition::Modified => Vec::new(),
            _ => self
                .endo
                .iter()
                .filter(|p| !raw.contingency.iter().any(|(q, _)| q == *p))
                .map(|&p| (layout.var_at(p), self.actual(p)))
                .collect(),
        };
        Witness {
            definition: def,
            contingency,
            alternative,
            actual_z,
        }
    }
}

/// Lexicographic `k`-subsets of `0..n`.
fn combinations(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut current: Option<Vec<usize>> = (k <= n).then(|| (0..k).collect());
    std::iter::from_fn(move || {
        let out = current.clone()?;
        let mut next = out.clone();
        let mut i = k;
        let advanced = loop {
            if i == 0 {
                break false;
            }
            i -= 1;
            if next[i] < n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                break true;
            }
        };
        current = advanced.then_some(next);
        Some(out)
    })
}

fn require_event(event: &Formula) -> Result<(), CauseError> {
    if event.is_event() {
        Ok(())
    } else {
        Err(ModelError::NotAnEvent(event.to_string()).into())
    }
}

/// Decides whether `candidate` is an actual cause of `event` at `world`.
/// A verdict with outcome `Inconclusive` is returned when a budget cap cut
/// the search short before a decision.
pub fn is_cause(
    setting: &Setting,
    world: &str,
    candidate: &Candidate,
    event: &Formula,
    definition: Definition,
    budget: SearchBudget,
) -> Result<CauseVerdict, CauseError> {
    require_event(event)?;
    let mut search = Search::new(setting, world, event, budget)?;
    let resolved = search.resolve_candidate(candidate)?;
    let mut verdict = CauseVerdict {
        outcome: Outcome::Fails,
        definition,
        candidate: candidate.clone(),
        ac1: ClauseStatus::Fail,
        ac2: ClauseStatus::Skipped,
        ac3: ClauseStatus::Skipped,
        witness: None,
        smaller_cause: None,
        reason: None,
        evaluations: 0,
    };
    if !search.ac1(&resolved) {
        verdict.reason = Some(if search.event_holds_actually() {
            "AC1: a conjunct differs from its actual value".into()
        } else {
            format!("AC1: the event does not hold at {world}")
        });
        return Ok(verdict);
    }
    verdict.ac1 = ClauseStatus::Pass;
    let ys: Vec<usize> = resolved.iter().map(|&(p, _)| p).collect();

    let inconclusive = |mut v: CauseVerdict, search: &Search, why: &str| {
        v.outcome = Outcome::Inconclusive;
        v.reason = Some(why.to_string());
        v.evaluations = search.evaluations;
        v
    };

    match search.ac2(definition, &ys) {
        Err(Exhausted) => {
            verdict.ac2 = ClauseStatus::Inconclusive;
            return Ok(inconclusive(verdict, &search, "evaluation budget exhausted during AC2"));
        }
        Ok(Ac2::Missing { complete }) => {
            verdict.evaluations = search.evaluations;
            if complete {
                verdict.ac2 = ClauseStatus::Fail;
                verdict.reason = Some("AC2: no witness exists".into());
                return Ok(verdict);
            }
            verdict.ac2 = ClauseStatus::Inconclusive;
            let cap = budget.max_contingency.unwrap_or_default();
            return Ok(inconclusive(
                verdict,
                &search,
                &format!("AC2: no witness with |N| <= {cap}; larger contingencies not searched"),
            ));
        }
        Ok(Ac2::Found(raw)) => {
            verdict.ac2 = ClauseStatus::Pass;
            verdict.witness = Some(search.witness(definition, &ys, &raw));
        }
    }

    // AC3: no strict nonempty sub-conjunction satisfies AC1 and AC2.
    // Sub-conjunctions inherit AC1 from the candidate.
    let mut undecided = false;
    for size in 1..ys.len() {
        for picked in combinations(ys.len(), size) {
            let sub: Vec<usize> = picked.iter().map(|&i| ys[i]).collect();
            match search.ac2(definition, &sub) {
                Err(Exhausted) => {
                    verdict.ac3 = ClauseStatus::Inconclusive;
                    return Ok(inconclusive(verdict, &search, "evaluation budget exhausted during AC3"));
                }
                Ok(Ac2::Found(_)) => {
                    let layout = &setting.model().layout;
                    verdict.ac3 = ClauseStatus::Fail;
                    verdict.smaller_cause = Some(Candidate {
                        conjuncts: picked
                            .iter()
                            .map(|&i| (layout.var_at(ys[i]), resolved[i].1))
                            .collect(),
                    });
                    verdict.reason = Some("AC3: a strict sub-conjunction satisfies AC1 and AC2".into());
                    verdict.evaluations = search.evaluations;
                    return Ok(verdict);
                }
                Ok(Ac2::Missing { complete }) => undecided |= !complete,
            }
        }
    }
    if undecided {
        verdict.ac3 = ClauseStatus::Inconclusive;
        return Ok(inconclusive(
            verdict,
            &search,
            "AC3: a sub-conjunction could not be ruled out within the contingency cap",
        ));
    }
    verdict.ac3 = ClauseStatus::Pass;
    verdict.outcome = Outcome::Holds;
    verdict.evaluations = search.evaluations;
    Ok(verdict)
}

/// Whether [`find_causes_with`] considers the pairs the event reads
/// directly. Such a pair is trivially a cause of an event that only states
/// its own value, so the default leaves them out.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EventPairs {
    #[default]
    Exclude,
    Include,
}

/// Every actual cause with at most `max_conjuncts` conjuncts over pairs
/// other than the ones the event reads, in size-then-lexicographic order
/// over (world, variable).
pub fn find_causes(
    setting: &Setting,
    world: &str,
    event: &Formula,
    definition: Definition,
    max_conjuncts: usize,
    budget: SearchBudget,
) -> Result<Vec<Candidate>, CauseError> {
    find_causes_with(setting, world, event, definition, max_conjuncts, budget, EventPairs::Exclude)
}

pub fn find_causes_with(
    setting: &Setting,
    world: &str,
    event: &Formula,
    definition: Definition,
    max_conjuncts: usize,
    budget: SearchBudget,
    event_pairs: EventPairs,
) -> Result<Vec<Candidate>, CauseError> {
    require_event(event)?;
    if max_conjuncts == 0 {
        return Err(CauseError::InvalidCandidate("max_conjuncts must be at least 1".into()));
    }
    let mut search = Search::new(setting, world, event, budget)?;
    if !search.event_holds_actually() {
        return Ok(Vec::new());
    }
    // a pair the event cannot depend on never satisfies AC2 on its own and
    // is dropped by AC3 from any larger conjunction
    let endo: Vec<usize> = search
        .relevant
        .iter()
        .copied()
        .filter(|p| event_pairs == EventPairs::Include || !search.event_pairs.contains(p))
        .collect();
    let layout = &setting.model().layout;
    let mut passing: Vec<Vec<usize>> = Vec::new();
    let mut causes = Vec::new();
    for size in 1..=max_conjuncts.min(endo.len()) {
        for picked in combinations(endo.len(), size) {
            if passing
                .iter()
                .any(|p| p.iter().all(|i| picked.binary_search(i).is_ok()))
            {
                continue;
            }
            let ys: Vec<usize> = picked.iter().map(|&i| endo[i]).collect();
            match search.ac2(definition, &ys) {
                Err(Exhausted) => {
                    return Err(CauseError::SearchBudgetExceeded(format!(
                        "evaluation cap reached after {} evaluations",
                        search.evaluations
                    )))
                }
                Ok(Ac2::Missing { complete: true }) => {}
                Ok(Ac2::Missing { complete: false }) => {
                    return Err(CauseError::SearchBudgetExceeded(format!(
                        "AC2 for {} is undecided within the contingency cap",
                        ys.iter()
                            .map(|&p| layout.var_at(p).to_string())
                            .collect::<Vec<_>>()
                            .join(", ")
                    )))
                }
                Ok(Ac2::Found(_)) => {
                    causes.push(Candidate {
                        conjuncts: ys
                            .iter()
                            .map(|&p| (layout.var_at(p), search.actual(p)))
                            .collect(),
                    });
                    passing.push(picked);
                }
            }
        }
    }
    Ok(causes)
}

/// Whether `(X, w) = x` is a conjunct of some cause with at most
/// `max_conjuncts` conjuncts (all endogenous pairs when `None`).
pub fn part_of_cause(
    setting: &Setting,
    world: &str,
    atom: (&VarAt, Value),
    event: &Formula,
    definition: Definition,
    max_conjuncts: Option<usize>,
    budget: SearchBudget,
) -> Result<bool, CauseError> {
    let (at, value) = atom;
    let actual = setting
        .valuation()
        .get(at)
        .ok_or_else(|| ModelError::Dangling(at.to_string()))?;
    if actual != value {
        return Ok(false);
    }
    let max = max_conjuncts.unwrap_or_else(|| setting.model().endogenous_pairs().len());
    let causes = find_causes_with(setting, world, event, definition, max.max(1), budget, EventPairs::Include)?;
    Ok(causes.iter().any(|c| c.contains(at, value)))
}

/// Atoms that are part of some cause (exhaustive over all conjunction sizes).
pub fn parts_of_causes(
    setting: &Setting,
    world: &str,
    event: &Formula,
    definition: Definition,
    budget: SearchBudget,
    event_pairs: EventPairs,
) -> Result<BTreeSet<(VarAt, Value)>, CauseError> {
    let max = setting.model().endogenous_pairs().len().max(1);
    Ok(find_causes_with(setting, world, event, definition, max, budget, event_pairs)?
        .into_iter()
        .flat_map(|c| c.conjuncts)
        .collect())
}

/// The conjunction of `(X, w') = x` over successors `w'` of `world` where
/// `X = x` holds, or `None` when no successor qualifies.
pub fn possibility_candidate(
    setting: &Setting,
    world: &str,
    variable: &str,
    value: Value,
) -> Result<Option<Candidate>, CauseError> {
    let model = setting.model();
    if model.kind(variable) != Some(VarKind::Endogenous) {
        return Err(CauseError::InvalidCandidate(format!(
            "`{variable}` is not an endogenous variable"
        )));
    }
    let conjuncts: Vec<(VarAt, Value)> = model
        .successors(world)?
        .into_iter()
        .map(|w| VarAt::new(variable, w))
        .filter(|at| setting.valuation().get(at) == Some(value))
        .map(|at| (at, value))
        .collect();
    Ok((!conjuncts.is_empty()).then_some(Candidate { conjuncts }))
}

fn decided(verdict: CauseVerdict) -> Result<bool, CauseError> {
    match verdict.outcome {
        Outcome::Holds => Ok(true),
        Outcome::Fails => Ok(false),
        Outcome::Inconclusive => Err(CauseError::SearchBudgetExceeded(
            verdict.reason.unwrap_or_default(),
        )),
    }
}

/// "The possibility of X = x" is a cause of the event: the conjunction over
/// qualifying successors is a cause under the modified definition. False
/// when no successor qualifies.
pub fn possibility_is_cause(
    setting: &Setting,
    world: &str,
    variable: &str,
    value: Value,
    event: &Formula,
    budget: SearchBudget,
) -> Result<bool, CauseError> {
    match possibility_candidate(setting, world, variable, value)? {
        None => Ok(false),
        Some(c) => decided(is_cause(setting, world, &c, event, Definition::Modified, budget)?),
    }
}

/// "The certainty of X = x" is a cause: `(X, w') = x` is a modified cause
/// for every successor `w'`. False when `world` has no successors.
pub fn certainty_is_cause(
    setting: &Setting,
    world: &str,
    variable: &str,
    value: Value,
    event: &Formula,
    budget: SearchBudget,
) -> Result<bool, CauseError> {
    let successors = setting.model().successors(world)?;
    if successors.is_empty() {
        return Ok(false);
    }
    for w in successors {
        let c = Candidate::single(VarAt::new(variable, w), value);
        if !decided(is_cause(setting, world, &c, event, Definition::Modified, budget)?)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `box cause` / `dia cause`: the candidate is a cause at all / some
/// successors of `world`.
pub fn modal_cause_check(
    setting: &Setting,
    world: &str,
    modality: Modality,
    candidate: &Candidate,
    event: &Formula,
    definition: Definition,
    budget: SearchBudget,
) -> Result<bool, CauseError> {
    for w in setting.model().successors(world)? {
        let here = decided(is_cause(setting, &w, candidate, event, definition, budget)?)?;
        match (modality, here) {
            (Modality::Dia, true) => return Ok(true),
            (Modality::Box, false) => return Ok(false),
            _ => {}
        }
    }
    Ok(modality == Modality::Box)
}

// Single-witness checks through the satisfaction relation.

fn intervention(items: impl IntoIterator<Item = (VarAt, Value)>) -> Result<Intervention, CauseError> {
    Ok(Intervention::new(items)?)
}

fn intervened(i: Intervention, body: Formula) -> Formula {
    Formula::intervene(i, body).expect("event bodies contain no interventions")
}

fn check_witness_shape(candidate: &Candidate, witness: &Witness) -> Result<(), CauseError> {
    let targets = candidate.targets();
    let alt_targets: Vec<VarAt> = witness.alternative.iter().map(|(a, _)| a.clone()).collect();
    if alt_targets != targets {
        return Err(CauseError::InvalidCandidate(
            "witness alternative does not match the candidate's targets".into(),
        ));
    }
    if witness.contingency.iter().any(|(a, _)| targets.contains(a)) {
        return Err(CauseError::InvalidCandidate(
            "contingency overlaps the candidate".into(),
        ));
    }
    Ok(())
}

pub fn check_ac1(
    setting: &Setting,
    world: &str,
    candidate: &Candidate,
    event: &Formula,
) -> Result<bool, CauseError> {
    require_event(event)?;
    if !setting.satisfies(world, event)? {
        return Ok(false);
    }
    for (at, v) in candidate.conjuncts() {
        if !setting.satisfies(&at.world, &Formula::local(at.var.clone(), *v))? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `[Y <- y', N <- n] !event` at `world`.
pub fn check_ac2a(
    setting: &Setting,
    world: &str,
    candidate: &Candidate,
    event: &Formula,
    witness: &Witness,
) -> Result<bool, CauseError> {
    require_event(event)?;
    check_witness_shape(candidate, witness)?;
    let i = intervention(
        witness
            .alternative
            .iter()
            .chain(&witness.contingency)
            .cloned(),
    )?;
    Ok(setting.satisfies(world, &intervened(i, Formula::not(event.clone())))?)
}

/// Endogenous pairs outside the candidate and the contingency, with their
/// actual values.
fn z_minus_y(setting: &Setting, candidate: &Candidate, witness: &Witness) -> Vec<(VarAt, Value)> {
    let targets = candidate.targets();
    setting
        .model()
        .endogenous_pairs()
        .into_iter()
        .filter(|p| !targets.contains(p) && !witness.contingency.iter().any(|(a, _)| a == p))
        .map(|p| {
            let v = setting.valuation().get(&p).expect("endogenous pair has a value");
            (p, v)
        })
        .collect()
}

fn ac2b_check(
    setting: &Setting,
    world: &str,
    candidate: &Candidate,
    event: &Formula,
    witness: &Witness,
    sub_contingencies: bool,
) -> Result<bool, CauseError> {
    require_event(event)?;
    check_witness_shape(candidate, witness)?;
    let zs = z_minus_y(setting, candidate, witness);
    let ns = &witness.contingency;
    let n_masks: u64 = if sub_contingencies { 1 << ns.len() } else { 1 };
    for z_mask in 0..(1u64 << zs.len()) {
        for n_sub in 0..n_masks {
            let n_mask = if sub_contingencies { n_sub } else { u64::MAX };
            let items = candidate
                .conjuncts()
                .iter()
                .cloned()
                .chain(
                    ns.iter()
                        .enumerate()
                        .filter(|(i, _)| n_mask >> i & 1 == 1)
                        .map(|(_, a)| a.clone()),
                )
                .chain(
                    zs.iter()
                        .enumerate()
                        .filter(|(i, _)| z_mask >> i & 1 == 1)
                        .map(|(_, a)| a.clone()),
                );
            let f = intervened(intervention(items)?, event.clone());
            if !setting.satisfies(world, &f)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// For every `Z' ⊆ Z \ Y`: `[Y <- y, N <- n, Z' <- z*] event`. The values
/// `z*` are read from the valuation, so the clause's guard always holds.
pub fn check_ac2b_original(
    setting: &Setting,
    world: &str,
    candidate: &Candidate,
    event: &Formula,
    witness: &Witness,
) -> Result<bool, CauseError> {
    ac2b_check(setting, world, candidate, event, witness, false)
}

/// As [`check_ac2b_original`], additionally over every `N' ⊆ N`.
pub fn check_ac2b_updated(
    setting: &Setting,
    world: &str,
    candidate: &Candidate,
    event: &Formula,
    witness: &Witness,
) -> Result<bool, CauseError> {
    ac2b_check(setting, world, candidate, event, witness, true)
}

/// `[Y <- y', N <- n*] !event` with `n*` the actual values of `contingency`.
pub fn check_ac2a_modified(
    setting: &Setting,
    world: &str,
    candidate: &Candidate,
    event: &Formula,
    contingency: &[VarAt],
    alternative: &[Value],
) -> Result<bool, CauseError> {
    require_event(event)?;
    if alternative.len() != candidate.len() {
        return Err(CauseError::InvalidCandidate(
            "alternative setting has the wrong length".into(),
        ));
    }
    let targets = candidate.targets();
    if contingency.iter().any(|a| targets.contains(a)) {
        return Err(CauseError::InvalidCandidate(
            "contingency overlaps the candidate".into(),
        ));
    }
    let mut items: Vec<(VarAt, Value)> = targets.into_iter().zip(alternative.iter().copied()).collect();
    for at in contingency {
        let v = setting
            .valuation()
            .get(at)
            .ok_or_else(|| ModelError::Dangling(at.to_string()))?;
        items.push((at.clone(), v));
    }
    Ok(setting.satisfies(world, &intervened(intervention(items)?, Formula::not(event.clone())))?)
}

/// Re-checks a witness along the satisfaction path for its definition.
pub fn verify_witness(
    setting: &Setting,
    world: &str,
    candidate: &Candidate,
    event: &Formula,
    witness: &Witness,
) -> Result<bool, CauseError> {
    Ok(match witness.definition {
        Definition::Modified => {
            let ns: Vec<VarAt> = witness.contingency.iter().map(|(a, _)| a.clone()).collect();
            let alt: Vec<Value> = witness.alternative.iter().map(|(_, v)| *v).collect();
            let actual_ok = witness
                .contingency
                .iter()
                .all(|(a, v)| setting.valuation().get(a) == Some(*v));
            actual_ok && check_ac2a_modified(setting, world, candidate, event, &ns, &alt)?
        }
        Definition::Original => {
            check_ac2a(setting, world, candidate, event, witness)?
                && check_ac2b_original(setting, world, candidate, event, witness)?
        }
        Definition::Updated => {
            check_ac2a(setting, world, candidate, event, witness)?
                && check_ac2b_updated(setting, world, candidate, event, witness)?
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::parser::parse;

    fn setting(name: &str, ctx: &str) -> Setting {
        corpus::load(name).unwrap().setting(ctx).unwrap()
    }

    fn atom(var: &str, world: &str, v: Value) -> Candidate {
        Candidate::single(VarAt::new(var, world), v)
    }

    fn witness(def: Definition, n: &[(&str, &str, Value)], alt: &[(&str, &str, Value)]) -> Witness {
        Witness {
            definition: def,
            contingency: n.iter().map(|(a, w, v)| (VarAt::new(*a, *w), *v)).collect(),
            alternative: alt.iter().map(|(a, w, v)| (VarAt::new(*a, *w), *v)).collect(),
            actual_z: Vec::new(),
        }
    }

    #[test]
    fn combinations_are_lexicographic() {
        let all: Vec<Vec<usize>> = combinations(4, 2).collect();
        assert_eq!(
            all,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        assert_eq!(combinations(3, 0).collect::<Vec<_>>(), vec![Vec::<usize>::new()]);
        assert_eq!(combinations(2, 3).count(), 0);
    }

    #[test]
    fn umbrella_ac1() {
        let s = setting("umbrella", "t");
        let q = parse("q=1").unwrap();
        assert!(check_ac1(&s, "w0", &atom("p", "w3", 1), &q).unwrap());
        assert!(!check_ac1(&s, "w0", &atom("p", "w3", 0), &q).unwrap());
        assert!(!check_ac1(&s, "w1", &atom("p", "w3", 1), &q).unwrap());
    }

    #[test]
    fn umbrella_single_witness_checks() {
        let s = setting("umbrella", "t");
        let q = parse("q=1").unwrap();
        let c = atom("p", "w3", 1);
        let w = witness(Definition::Original, &[], &[("p", "w3", 0)]);
        assert!(check_ac2a(&s, "w0", &c, &q, &w).unwrap());
        assert!(check_ac2b_original(&s, "w0", &c, &q, &w).unwrap());
        assert!(check_ac2b_updated(&s, "w0", &c, &q, &w).unwrap());
        let same = witness(Definition::Original, &[], &[("p", "w3", 1)]);
        assert!(!check_ac2a(&s, "w0", &c, &q, &same).unwrap());
        assert!(check_ac2a_modified(&s, "w0", &c, &q, &[VarAt::new("r", "w3")], &[0]).unwrap());
    }

    #[test]
    fn empty_restoration_family_reduces_to_plain_intervention() {
        // single-world, single endogenous pair: Z \ Y and N are both empty
        let src = r#"
worlds = ["w"]
[exogenous.U]
[endogenous.X]
equation = "U=1"
[contexts.t]
U = 1
"#;
        let s = crate::modelfile::ModelFile::load(src).unwrap().setting("t").unwrap();
        let ev = parse("X=1").unwrap();
        let c = atom("X", "w", 1);
        let w = witness(Definition::Original, &[], &[("X", "w", 0)]);
        let direct = s
            .satisfies("w", &parse("[X@w := 1] X=1").unwrap())
            .unwrap();
        assert_eq!(check_ac2b_original(&s, "w", &c, &ev, &w).unwrap(), direct);
    }

    #[test]
    fn umbrella_causes_under_every_definition() {
        let s = setting("umbrella", "t");
        let q = parse("q=1").unwrap();
        for def in Definition::ALL {
            for var in ["p", "r"] {
                let v = is_cause(&s, "w0", &atom(var, "w3", 1), &q, def, SearchBudget::default()).unwrap();
                assert!(v.holds(), "{var} under {def}: {v:?}");
                let w = v.witness.as_ref().unwrap();
                assert!(verify_witness(&s, "w0", &v.candidate, &q, w).unwrap());
            }
        }
    }

    #[test]
    fn robot_fails_ac1_at_w1() {
        let s = setting("robot", "t");
        let r = parse("r=1").unwrap();
        let v = is_cause(&s, "w1", &atom("p", "w0", 1), &r, Definition::Original, SearchBudget::default())
            .unwrap();
        assert_eq!(v.outcome, Outcome::Fails);
        assert_eq!(v.ac1, ClauseStatus::Fail);
        assert_eq!(v.ac2, ClauseStatus::Skipped);
    }

    #[test]
    fn conjunction_fails_ac3_when_a_part_suffices() {
        let s = setting("umbrella", "t");
        let q = parse("q=1").unwrap();
        let c = Candidate::new([(VarAt::new("p", "w3"), 1), (VarAt::new("r", "w3"), 1)]).unwrap();
        let v = is_cause(&s, "w0", &c, &q, Definition::Original, SearchBudget::default()).unwrap();
        assert_eq!(v.outcome, Outcome::Fails);
        assert_eq!(v.ac2, ClauseStatus::Pass);
        assert_eq!(v.ac3, ClauseStatus::Fail);
        assert_eq!(v.smaller_cause, Some(atom("p", "w3", 1)));
    }

    #[test]
    fn evaluation_cap_yields_inconclusive_not_false() {
        let s = setting("stalemate-revisited", "t");
        let r = parse("r=1").unwrap();
        let budget = SearchBudget {
            max_contingency: None,
            max_evaluations: Some(3),
        };
        let v = is_cause(&s, "w0", &atom("p1", "w1", 1), &r, Definition::Original, budget).unwrap();
        assert_eq!(v.outcome, Outcome::Inconclusive);
        assert!(matches!(
            find_causes(&s, "w0", &r, Definition::Original, 1, budget),
            Err(CauseError::SearchBudgetExceeded(_))
        ));
    }

    #[test]
    fn contingency_cap_without_witness_is_inconclusive() {
        // (p1,w1)=1 needs (p2,w1) in the contingency under the original definition
        let s = setting("stalemate-revisited", "t");
        let r = parse("r=1").unwrap();
        let budget = SearchBudget {
            max_contingency: Some(0),
            max_evaluations: None,
        };
        let v = is_cause(&s, "w0", &atom("p1", "w1", 1), &r, Definition::Original, budget).unwrap();
        assert_eq!(v.outcome, Outcome::Inconclusive);
        assert_eq!(v.ac2, ClauseStatus::Inconclusive);
    }

    #[test]
    fn invalid_candidates_rejected() {
        let s = setting("umbrella", "t");
        let q = parse("q=1").unwrap();
        assert!(Candidate::new([]).is_err());
        let exo = atom("U1", "w0", 0);
        assert!(matches!(
            is_cause(&s, "w0", &exo, &q, Definition::Original, SearchBudget::default()),
            Err(CauseError::InvalidCandidate(_))
        ));
        let not_event = parse("[p@w3 := 0] q=1").unwrap();
        assert!(matches!(
            is_cause(&s, "w0", &atom("p", "w3", 1), &not_event, Definition::Original, SearchBudget::default()),
            Err(CauseError::Model(ModelError::NotAnEvent(_)))
        ));
    }

    #[test]
    fn part_of_cause_rejects_non_actual_atoms() {
        let s = setting("stalemate-revisited", "t");
        let r = parse("r=1").unwrap();
        assert!(!part_of_cause(
            &s,
            "w0",
            (&VarAt::new("p1", "w1"), 0),
            &r,
            Definition::Original,
            None,
            SearchBudget::default()
        )
        .unwrap());
    }

    #[test]
    fn possibility_without_qualifying_successor_is_false() {
        let s = setting("umbrella", "t");
        let q = parse("q=1").unwrap();
        // w1 has no successors
        assert!(!possibility_is_cause(&s, "w1", "p", 1, &q, SearchBudget::default()).unwrap());
        assert_eq!(possibility_candidate(&s, "w1", "p", 1).unwrap(), None);
        // event false at w1
        assert!(!possibility_is_cause(&s, "w0", "p", 1, &parse("q=0").unwrap(), SearchBudget::default()).unwrap());
        assert!(!certainty_is_cause(&s, "w1", "p", 1, &q, SearchBudget::default()).unwrap());
    }
}
