//! The `causalmk` command line.
//!
//! Exit codes: 0 when the query was answered (whatever the verdict), 1 for
//! usage and syntax errors, 2 for model errors, 3 when a search budget ran
//! out before a verdict.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value as Json};

use crate::axioms::{self, ModelGenSpec};
use crate::cause::{
    self, Candidate, CauseError, CauseVerdict, ClauseStatus, Definition, EventPairs, Modality, Outcome,
    SearchBudget,
};
use crate::corpus;
use crate::formula::Formula;
use crate::model::{ModelError, Value, VarAt};
use crate::modelfile::{FileError, LoadedModel, ModelFile};
use crate::parser::{parse, parse_conjunction, ParseError};
use crate::semantics::Setting;
use crate::sufficiency::{self, ContextSpace, Nearby, Scope, SufficiencyError};

#[derive(Parser, Debug)]
#[command(name = "causalmk", version, about = "Actual causality in causal Kripke models")]
struct Cli {
    /// Print a machine-readable JSON record instead of the text report.
    #[arg(long, global = true)]
    json: bool,
    /// Stop a cause search after this many intervened evaluations.
    #[arg(long, global = true, value_name = "N")]
    budget: Option<u64>,
    /// Largest contingency set tried by cause searches.
    #[arg(long, global = true, value_name = "K")]
    contingency: Option<usize>,
    /// Seed for the random generators used by `axioms`.
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether a formula holds at a world.
    Sat(SatArgs),
    /// Print the valuation of a context.
    Eval(EvalArgs),
    /// Decide whether a conjunction is an actual cause of an event.
    Cause(CauseArgs),
    /// List every actual cause up to a given size.
    Causes(CausesArgs),
    /// Decide whether an atom is part of some actual cause.
    Part(PartArgs),
    /// Is the possibility of X=x a cause (modified definition)?
    Possibility(ModalValueArgs),
    /// Is the certainty of X=x a cause (modified definition)?
    Certainty(ModalValueArgs),
    /// Decide box/dia cause over the successors of a world.
    Modalcause(ModalCauseArgs),
    /// Decide whether a conjunction is a sufficient cause (single-world models).
    Suffcause(SuffArgs),
    /// Check the axiom schemes on a model or on generated models.
    Axioms(AxiomArgs),
    /// List the bundled models, print one, or export them all.
    Corpus(CorpusArgs),
}

#[derive(Args, Debug)]
struct Target {
    /// Model file, or the name of a bundled model.
    model: String,
    #[arg(long)]
    context: String,
}

#[derive(Args, Debug)]
struct SatArgs {
    #[command(flatten)]
    target: Target,
    #[arg(long)]
    world: String,
    #[arg(long)]
    formula: String,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    target: Target,
    /// Only this world.
    #[arg(long)]
    world: Option<String>,
}

#[derive(Args, Debug)]
struct CauseArgs {
    #[command(flatten)]
    target: Target,
    #[arg(long)]
    world: String,
    /// Conjunction of atoms; local atoms refer to --world.
    #[arg(long)]
    candidate: String,
    #[arg(long)]
    event: String,
    #[arg(long = "def", default_value = "modified")]
    definition: Definition,
}

#[derive(Args, Debug)]
struct CausesArgs {
    #[command(flatten)]
    target: Target,
    #[arg(long)]
    world: String,
    #[arg(long)]
    event: String,
    #[arg(long = "def", default_value = "modified")]
    definition: Definition,
    /// Largest number of conjuncts.
    #[arg(long = "max", default_value_t = 1)]
    max_conjuncts: usize,
    /// Also consider the pairs the event itself reads.
    #[arg(long)]
    include_event_pairs: bool,
}

#[derive(Args, Debug)]
struct PartArgs {
    #[command(flatten)]
    target: Target,
    #[arg(long)]
    world: String,
    /// A single atom; a local atom refers to --world.
    #[arg(long)]
    atom: String,
    #[arg(long)]
    event: String,
    #[arg(long = "def", default_value = "modified")]
    definition: Definition,
    /// Largest cause size searched (default: all endogenous pairs).
    #[arg(long = "max")]
    max_conjuncts: Option<usize>,
}

#[derive(Args, Debug)]
struct ModalValueArgs {
    #[command(flatten)]
    target: Target,
    #[arg(long)]
    world: String,
    #[arg(long)]
    variable: String,
    #[arg(long)]
    value: Value,
    #[arg(long)]
    event: String,
}

#[derive(Args, Debug)]
struct ModalCauseArgs {
    #[command(flatten)]
    target: Target,
    #[arg(long)]
    world: String,
    #[arg(long)]
    modality: Modality,
    /// Conjunction of atoms; local atoms refer to --world.
    #[arg(long)]
    candidate: String,
    #[arg(long)]
    event: String,
    #[arg(long = "def", default_value = "modified")]
    definition: Definition,
}

#[derive(Args, Debug)]
struct SuffArgs {
    #[command(flatten)]
    target: Target,
    #[arg(long)]
    candidate: String,
    #[arg(long)]
    event: String,
    #[arg(long, default_value = "global")]
    scope: Scope,
    /// `hamming:K` or explicit pairs `u0>u1,u1>u0` over the generated
    /// context names.
    #[arg(long, default_value = "hamming:1")]
    nearby: Nearby,
    /// Do not add (u, u) to the nearby relation.
    #[arg(long)]
    irreflexive: bool,
    #[arg(long = "def", default_value = "updated")]
    definition: Definition,
}

#[derive(Args, Debug)]
struct AxiomArgs {
    /// Check one model instead of generated ones.
    model: Option<String>,
    #[arg(long)]
    context: Option<String>,
    /// Number of generated models.
    #[arg(long, default_value_t = 100)]
    models: usize,
    /// Instances per scheme and model.
    #[arg(long, default_value_t = 20)]
    instances: usize,
}

#[derive(Args, Debug)]
struct CorpusArgs {
    /// Print this bundled model.
    name: Option<String>,
    /// Write every bundled model into this directory.
    #[arg(long, value_name = "DIR")]
    export: Option<String>,
}

enum Failure {
    Usage(String),
    Model(String),
    Budget(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Model(_) => 2,
            Failure::Budget(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Model(m) | Failure::Budget(m) => m,
        }
    }
}

impl From<FileError> for Failure {
    fn from(e: FileError) -> Self {
        if e.is_syntax() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Model(e.to_string())
        }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure::Model(e.to_string())
    }
}

impl From<CauseError> for Failure {
    fn from(e: CauseError) -> Self {
        match e {
            CauseError::Model(m) => m.into(),
            CauseError::InvalidCandidate(_) => Failure::Usage(e.to_string()),
            CauseError::SearchBudgetExceeded(_) | CauseError::BudgetRequired { .. } => {
                Failure::Budget(e.to_string())
            }
        }
    }
}

impl From<SufficiencyError> for Failure {
    fn from(e: SufficiencyError) -> Self {
        match e {
            SufficiencyError::Model(m) => m.into(),
            SufficiencyError::Cause(c) => c.into(),
            SufficiencyError::Invalid(m) => Failure::Usage(m),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

/// A parse error rendered with the offending text and a caret.
fn syntax(flag: &str, text: &str, e: ParseError) -> Failure {
    let col = text[..e.offset().min(text.len())].chars().count();
    Failure::Usage(format!("--{flag}: {e}\n  {text}\n  {}^", " ".repeat(col)))
}

fn formula_arg(flag: &str, text: &str) -> Result<Formula, Failure> {
    parse(text).map_err(|e| syntax(flag, text, e))
}

fn candidate_arg(flag: &str, text: &str, world: &str) -> Result<Candidate, Failure> {
    let atoms = parse_conjunction(text, Some(world)).map_err(|e| syntax(flag, text, e))?;
    Ok(Candidate::new(atoms)?)
}

fn load_model(spec: &str) -> Result<LoadedModel, Failure> {
    let path = Path::new(spec);
    if path.exists() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("{spec}: {e}")))?;
        return ModelFile::load(&text).map_err(|e| match Failure::from(e) {
            Failure::Usage(m) => Failure::Usage(format!("{spec}: {m}")),
            Failure::Model(m) => Failure::Model(format!("{spec}: {m}")),
            other => other,
        });
    }
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or(spec);
    match corpus::source(name) {
        Some(_) => Ok(corpus::load(name)?),
        None => Err(Failure::Usage(format!(
            "{spec}: no such file and no bundled model of that name (try `causalmk corpus`)"
        ))),
    }
}

fn setting(target: &Target) -> Result<(LoadedModel, Setting), Failure> {
    let loaded = load_model(&target.model)?;
    let s = loaded.setting(&target.context)?;
    Ok((loaded, s))
}

fn assignments_json(items: &[(VarAt, Value)]) -> Json {
    Json::Array(
        items
            .iter()
            .map(|(at, v)| json!({"var": at.var, "world": at.world, "value": v}))
            .collect(),
    )
}

fn status(s: ClauseStatus) -> &'static str {
    match s {
        ClauseStatus::Pass => "pass",
        ClauseStatus::Fail => "fail",
        ClauseStatus::Inconclusive => "inconclusive",
        ClauseStatus::Skipped => "skipped",
    }
}

fn outcome(o: Outcome) -> &'static str {
    match o {
        Outcome::Holds => "holds",
        Outcome::Fails => "fails",
        Outcome::Inconclusive => "inconclusive",
    }
}

fn verdict_json(v: &CauseVerdict) -> Json {
    json!({
        "outcome": outcome(v.outcome),
        "definition": v.definition.to_string(),
        "candidate": v.candidate.to_string(),
        "clauses": {"ac1": status(v.ac1), "ac2": status(v.ac2), "ac3": status(v.ac3)},
        "witness": v.witness.as_ref().map(|w| json!({
            "contingency": assignments_json(&w.contingency),
            "alternative": assignments_json(&w.alternative),
        })),
        "smaller_cause": v.smaller_cause.as_ref().map(ToString::to_string),
        "reason": v.reason,
        "evaluations": v.evaluations,
    })
}

fn verdict_text(v: &CauseVerdict, event: &str, world: &str) -> String {
    let mut s = format!(
        "{} {} a cause of {event} at {world} ({}): {}\n  AC1 {}, AC2 {}, AC3 {}\n",
        v.candidate,
        match v.outcome {
            Outcome::Holds => "is",
            Outcome::Fails => "is not",
            Outcome::Inconclusive => "may be",
        },
        v.definition,
        outcome(v.outcome),
        status(v.ac1),
        status(v.ac2),
        status(v.ac3),
    );
    if let Some(w) = &v.witness {
        let _ = writeln!(s, "  witness: {w}");
    }
    if let Some(c) = &v.smaller_cause {
        let _ = writeln!(s, "  smaller cause: {c}");
    }
    if let Some(r) = &v.reason {
        let _ = writeln!(s, "  reason: {r}");
    }
    s
}

/// Text and JSON renderings of one answered query, plus its exit code.
struct Report {
    text: String,
    json: Json,
    code: i32,
}

impl Report {
    fn ok(text: String, json: Json) -> Self {
        Report { text, json, code: 0 }
    }
}

fn budget(cli: &Cli) -> SearchBudget {
    SearchBudget {
        max_contingency: cli.contingency,
        max_evaluations: cli.budget,
    }
}

fn run_sat(a: &SatArgs) -> Result<Report, Failure> {
    let (_, s) = setting(&a.target)?;
    let f = formula_arg("formula", &a.formula)?;
    let result = s.satisfies(&a.world, &f)?;
    Ok(Report::ok(
        format!("{result}\n"),
        json!({"query": "sat", "model": a.target.model, "context": a.target.context,
               "world": a.world, "formula": f.to_string(), "result": result}),
    ))
}

fn run_eval(a: &EvalArgs) -> Result<Report, Failure> {
    let (loaded, s) = setting(&a.target)?;
    let worlds: Vec<String> = match &a.world {
        Some(w) => {
            loaded.model.successors(w)?;
            vec![w.clone()]
        }
        None => loaded.model.worlds().to_vec(),
    };
    let mut text = String::new();
    let mut rows = Vec::new();
    for w in &worlds {
        let entries: Vec<(VarAt, Value)> = s
            .valuation()
            .entries()
            .into_iter()
            .filter(|(at, _)| &at.world == w)
            .collect();
        let shown: Vec<String> = entries.iter().map(|(at, v)| format!("{}={v}", at.var)).collect();
        let _ = writeln!(text, "{w}: {}", shown.join(" "));
        let values: serde_json::Map<String, Json> =
            entries.iter().map(|(at, v)| (at.var.clone(), json!(v))).collect();
        rows.push(json!({"world": w, "values": values, "true": s.valuation().true_at(w)}));
    }
    Ok(Report::ok(
        text,
        json!({"query": "eval", "model": a.target.model, "context": a.target.context, "worlds": rows}),
    ))
}

fn verdict_report(v: CauseVerdict, head: Json, event: &str, world: &str) -> Report {
    let code = if v.outcome == Outcome::Inconclusive { 3 } else { 0 };
    let mut record = head;
    record["verdict"] = verdict_json(&v);
    Report {
        text: verdict_text(&v, event, world),
        json: record,
        code,
    }
}

fn run_cause(cli: &Cli, a: &CauseArgs) -> Result<Report, Failure> {
    let (_, s) = setting(&a.target)?;
    let c = candidate_arg("candidate", &a.candidate, &a.world)?;
    let e = formula_arg("event", &a.event)?;
    let v = cause::is_cause(&s, &a.world, &c, &e, a.definition, budget(cli))?;
    let head = json!({"query": "cause", "model": a.target.model, "context": a.target.context,
                      "world": a.world, "event": e.to_string()});
    Ok(verdict_report(v, head, &e.to_string(), &a.world))
}

fn run_causes(cli: &Cli, a: &CausesArgs) -> Result<Report, Failure> {
    let (_, s) = setting(&a.target)?;
    let e = formula_arg("event", &a.event)?;
    let pool = if a.include_event_pairs {
        EventPairs::Include
    } else {
        EventPairs::Exclude
    };
    let causes = cause::find_causes_with(&s, &a.world, &e, a.definition, a.max_conjuncts, budget(cli), pool)?;
    let listed: Vec<String> = causes.iter().map(ToString::to_string).collect();
    let mut text = format!(
        "causes of {e} at {} ({}, up to {} conjunct{}): {}\n",
        a.world,
        a.definition,
        a.max_conjuncts,
        if a.max_conjuncts == 1 { "" } else { "s" },
        causes.len()
    );
    for c in &listed {
        let _ = writeln!(text, "  {c}");
    }
    Ok(Report::ok(
        text,
        json!({"query": "causes", "model": a.target.model, "context": a.target.context,
               "world": a.world, "event": e.to_string(), "definition": a.definition.to_string(),
               "max_conjuncts": a.max_conjuncts, "include_event_pairs": a.include_event_pairs,
               "causes": causes.iter().map(|c| assignments_json(c.conjuncts())).collect::<Vec<_>>(),
               "causes_text": listed}),
    ))
}

fn run_part(cli: &Cli, a: &PartArgs) -> Result<Report, Failure> {
    let (_, s) = setting(&a.target)?;
    let atom = candidate_arg("atom", &a.atom, &a.world)?;
    let [(at, value)] = atom.conjuncts() else {
        return Err(Failure::Usage("--atom takes a single atom".into()));
    };
    let e = formula_arg("event", &a.event)?;
    let result = cause::part_of_cause(&s, &a.world, (at, *value), &e, a.definition, a.max_conjuncts, budget(cli))?;
    let bound = a
        .max_conjuncts
        .map_or("causes of any size".to_string(), |m| format!("causes with at most {m} conjuncts"));
    Ok(Report::ok(
        format!("{result}\n  searched {bound}\n"),
        json!({"query": "part", "model": a.target.model, "context": a.target.context,
               "world": a.world, "atom": atom.to_string(), "event": e.to_string(),
               "definition": a.definition.to_string(), "max_conjuncts": a.max_conjuncts,
               "result": result}),
    ))
}

fn run_possibility(cli: &Cli, a: &ModalValueArgs) -> Result<Report, Failure> {
    let (_, s) = setting(&a.target)?;
    let e = formula_arg("event", &a.event)?;
    let head = json!({"query": "possibility", "model": a.target.model, "context": a.target.context,
                      "world": a.world, "variable": a.variable, "value": a.value, "event": e.to_string()});
    match cause::possibility_candidate(&s, &a.world, &a.variable, a.value)? {
        None => {
            let reason = format!("no successor of {} satisfies {}={}", a.world, a.variable, a.value);
            let mut record = head;
            record["result"] = json!(false);
            record["reason"] = json!(reason);
            Ok(Report::ok(format!("false\n  reason: {reason}\n"), record))
        }
        Some(c) => {
            let v = cause::is_cause(&s, &a.world, &c, &e, Definition::Modified, budget(cli))?;
            let mut record = head;
            record["result"] = json!(v.holds());
            let text = format!("{}\n  conjunction: {c}\n{}", v.holds(), verdict_text(&v, &e.to_string(), &a.world));
            let code = if v.outcome == Outcome::Inconclusive { 3 } else { 0 };
            record["verdict"] = verdict_json(&v);
            Ok(Report { text, json: record, code })
        }
    }
}

fn run_certainty(cli: &Cli, a: &ModalValueArgs) -> Result<Report, Failure> {
    let (_, s) = setting(&a.target)?;
    let e = formula_arg("event", &a.event)?;
    let successors = s.model().successors(&a.world)?;
    let mut rows = Vec::new();
    let mut text = String::new();
    let mut result = !successors.is_empty();
    for w in &successors {
        let c = Candidate::single(VarAt::new(a.variable.clone(), w.clone()), a.value);
        let v = cause::is_cause(&s, &a.world, &c, &e, Definition::Modified, budget(cli))?;
        if v.outcome == Outcome::Inconclusive {
            return Err(Failure::Budget(v.reason.unwrap_or_default()));
        }
        result &= v.holds();
        let _ = writeln!(text, "  {c}: {}", outcome(v.outcome));
        rows.push(json!({"candidate": c.to_string(), "outcome": outcome(v.outcome)}));
    }
    if successors.is_empty() {
        let _ = writeln!(text, "  reason: {} has no successors", a.world);
    }
    Ok(Report::ok(
        format!("{result}\n{text}"),
        json!({"query": "certainty", "model": a.target.model, "context": a.target.context,
               "world": a.world, "variable": a.variable, "value": a.value, "event": e.to_string(),
               "result": result, "successors": rows}),
    ))
}

fn run_modalcause(cli: &Cli, a: &ModalCauseArgs) -> Result<Report, Failure> {
    let (_, s) = setting(&a.target)?;
    let c = candidate_arg("candidate", &a.candidate, &a.world)?;
    let e = formula_arg("event", &a.event)?;
    let result = cause::modal_cause_check(&s, &a.world, a.modality, &c, &e, a.definition, budget(cli))?;
    let mut rows = Vec::new();
    let mut text = String::new();
    for w in s.model().successors(&a.world)? {
        let v = cause::is_cause(&s, &w, &c, &e, a.definition, budget(cli))?;
        let _ = writeln!(text, "  at {w}: {}", outcome(v.outcome));
        rows.push(json!({"world": w, "outcome": outcome(v.outcome)}));
    }
    let modality = match a.modality {
        Modality::Box => "box",
        Modality::Dia => "dia",
    };
    Ok(Report::ok(
        format!("{result}\n{text}"),
        json!({"query": "modalcause", "model": a.target.model, "context": a.target.context,
               "world": a.world, "modality": modality, "candidate": c.to_string(),
               "event": e.to_string(), "definition": a.definition.to_string(),
               "result": result, "successors": rows}),
    ))
}

fn run_suffcause(cli: &Cli, a: &SuffArgs) -> Result<Report, Failure> {
    let loaded = load_model(&a.target.model)?;
    let ctx = loaded.context(&a.target.context)?.clone();
    let space = ContextSpace::exhaustive(loaded.model.clone(), &a.nearby, !a.irreflexive)?;
    let u = space
        .find(&ctx)
        .expect("the exhaustive space contains every context")
        .to_string();
    let world = loaded.model.worlds()[0].clone();
    let c = candidate_arg("candidate", &a.candidate, &world)?;
    let e = formula_arg("event", &a.event)?;
    let v = sufficiency::is_sufficient_cause(&space, &u, &c, &e, a.scope, a.definition, budget(cli))?;
    let mut text = format!(
        "{c} is{} a sufficient cause of {e} in context {} ({} scope, {})\n  SC1 {}, SC2 {}, SC3 {}, minimal {}\n",
        if v.sufficient { "" } else { " not" },
        a.target.context,
        a.scope,
        a.definition,
        v.sc1,
        v.sc2,
        v.sc3,
        v.minimal.map_or("n/a".to_string(), |m| m.to_string()),
    );
    if !v.sc3_failures.is_empty() {
        let described: Vec<String> = v
            .sc3_failures
            .iter()
            .map(|n| {
                let values: Vec<String> = space
                    .context(n)
                    .expect("listed")
                    .assignments()
                    .into_iter()
                    .map(|(at, x)| format!("{}={x}", at.var))
                    .collect();
                format!("{n} ({})", values.join(", "))
            })
            .collect();
        let _ = writeln!(text, "  [X <- x] event fails in: {}", described.join("; "));
    }
    if let Some(sm) = &v.smaller {
        let _ = writeln!(text, "  smaller sufficient conjunction: {sm}");
    }
    let contexts: Vec<Json> = space
        .names()
        .iter()
        .map(|n| {
            let values: serde_json::Map<String, Json> = space
                .context(n)
                .expect("listed")
                .assignments()
                .into_iter()
                .map(|(at, v)| (at.var, json!(v)))
                .collect();
            json!({"name": n, "values": values})
        })
        .collect();
    Ok(Report::ok(
        text,
        json!({"query": "suffcause", "model": a.target.model, "context": a.target.context,
               "lifted_world": u, "contexts": contexts, "verdict": v}),
    ))
}

fn run_axioms(cli: &Cli, a: &AxiomArgs) -> Result<Report, Failure> {
    match &a.model {
        Some(spec) => {
            let loaded = load_model(spec)?;
            let ctx = a
                .context
                .clone()
                .or_else(|| loaded.contexts.keys().next().cloned())
                .ok_or_else(|| Failure::Usage(format!("{spec} defines no context")))?;
            let s = loaded.setting(&ctx)?;
            use rand_chacha::rand_core::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cli.seed);
            let mut text = String::new();
            let mut rows = Vec::new();
            let mut failed = false;
            for scheme in axioms::Scheme::ALL {
                let batch = axioms::sample_instances(s.model(), scheme, a.instances, &mut rng);
                let cx = axioms::check_scheme(&s, &scheme.to_string(), &batch)?;
                failed |= cx.is_some();
                match &cx {
                    None => {
                        let _ = writeln!(text, "{scheme}: ok ({} instances)", a.instances);
                    }
                    Some(c) => {
                        let _ = writeln!(text, "{scheme}: counterexample at {}: {}", c.world, c.instance.formula);
                    }
                }
                rows.push(json!({"scheme": scheme.to_string(), "instances": a.instances, "counterexample": cx}));
            }
            let mut report = Report::ok(
                text,
                json!({"query": "axioms", "model": spec, "context": ctx, "seed": cli.seed, "schemes": rows}),
            );
            if failed {
                report.code = 2;
            }
            Ok(report)
        }
        None => {
            let spec = ModelGenSpec {
                seed: cli.seed,
                ..ModelGenSpec::default()
            };
            let r = axioms::run_suite(&spec, a.models, a.instances)?;
            let mut text = format!(
                "{} generated models, {} instances per scheme: {} counterexamples\n\
                 local pseudo-G mutant refuted on {} models\n",
                r.models,
                r.instances_per_scheme,
                r.counterexamples.len(),
                r.mutant_hits
            );
            for (seed, c) in &r.counterexamples {
                let _ = writeln!(text, "  seed {seed}, {} at {}: {}", c.label, c.world, c.instance.formula);
            }
            let code = if r.counterexamples.is_empty() { 0 } else { 2 };
            Ok(Report {
                text,
                json: json!({"query": "axioms", "seed": cli.seed, "report": r}),
                code,
            })
        }
    }
}

fn run_corpus(a: &CorpusArgs) -> Result<Report, Failure> {
    if let Some(dir) = &a.export {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, src) in corpus::FILES {
            let path = Path::new(dir).join(format!("{name}.ck"));
            std::fs::write(&path, src)?;
            written.push(path.display().to_string());
        }
        return Ok(Report::ok(
            written.iter().map(|p| format!("{p}\n")).collect(),
            json!({"query": "corpus", "exported": written}),
        ));
    }
    if let Some(name) = &a.name {
        let src = corpus::source(name)
            .ok_or_else(|| Failure::Usage(format!("no bundled model `{name}`")))?;
        return Ok(Report::ok(src.to_string(), json!({"query": "corpus", "name": name, "source": src})));
    }
    let names: Vec<&str> = corpus::names().collect();
    Ok(Report::ok(
        names.iter().map(|n| format!("{n}\n")).collect(),
        json!({"query": "corpus", "models": names}),
    ))
}

fn dispatch(cli: &Cli) -> Result<Report, Failure> {
    match &cli.command {
        Command::Sat(a) => run_sat(a),
        Command::Eval(a) => run_eval(a),
        Command::Cause(a) => run_cause(cli, a),
        Command::Causes(a) => run_causes(cli, a),
        Command::Part(a) => run_part(cli, a),
        Command::Possibility(a) => run_possibility(cli, a),
        Command::Certainty(a) => run_certainty(cli, a),
        Command::Modalcause(a) => run_modalcause(cli, a),
        Command::Suffcause(a) => run_suffcause(cli, a),
        Command::Axioms(a) => run_axioms(cli, a),
        Command::Corpus(a) => run_corpus(a),
    }
}

/// Runs one invocation, writing the report to `out` and diagnostics to
/// `err`. `argv[0]` is the program name.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(report) => {
            let _ = if cli.json {
                writeln!(out, "{}", serde_json::to_string_pretty(&report.json).expect("json values serialize"))
            } else {
                out.write_all(report.text.as_bytes())
            };
            report.code
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

/// Runs one invocation against the process's stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}
