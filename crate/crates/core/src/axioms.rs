//! Soundness checks of the axiom schemes on concrete models, plus the
//! random model and formula generators they run on.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::formula::Formula;
use crate::model::{Context, Equation, Intervention, Model, ModelError, Signature, Value, VarAt, VarDecl};
use crate::semantics::Setting;

/// Parameters for [`generate_model`]. Every generated model is recursive
/// and binary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelGenSpec {
    pub seed: u64,
    pub worlds: RangeInclusive<usize>,
    pub endogenous: RangeInclusive<usize>,
    pub exogenous: RangeInclusive<usize>,
    /// Chance of each ordered pair (self-loops included) being in `R`.
    pub edge_probability: f64,
    /// Chance that an equation atom is a modal or cross-world reference.
    pub modal_probability: f64,
    /// Connective depth of equation formulas.
    pub equation_depth: usize,
}

impl Default for ModelGenSpec {
    fn default() -> Self {
        ModelGenSpec {
            seed: 0,
            worlds: 1..=3,
            endogenous: 1..=3,
            exogenous: 1..=2,
            edge_probability: 0.4,
            modal_probability: 0.4,
            equation_depth: 2,
        }
    }
}

impl ModelGenSpec {
    pub fn with_seed(&self, seed: u64) -> Self {
        ModelGenSpec {
            seed,
            ..self.clone()
        }
    }

    /// Models with a single world and an empty relation.
    pub fn classical() -> Self {
        ModelGenSpec {
            worlds: 1..=1,
            endogenous: 2..=4,
            edge_probability: 0.0,
            ..ModelGenSpec::default()
        }
    }
}

fn pick_count(rng: &mut impl Rng, range: &RangeInclusive<usize>) -> usize {
    if range.is_empty() {
        *range.start()
    } else {
        rng.gen_range(range.clone())
    }
}

/// Draws a model and a context, deterministically in `spec.seed`.
/// Equations respect a random order over the endogenous pairs, so the model
/// is recursive by construction.
pub fn generate_model(spec: &ModelGenSpec) -> (Model, Context) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let nw = pick_count(&mut rng, &spec.worlds).max(1);
    let ne = pick_count(&mut rng, &spec.endogenous);
    let nu = pick_count(&mut rng, &spec.exogenous);
    let worlds: Vec<String> = (0..nw).map(|i| format!("w{i}")).collect();
    let exo: Vec<String> = (0..nu).map(|i| format!("u{i}")).collect();
    let endo: Vec<String> = (0..ne).map(|i| ["x", "y", "z"].get(i).map_or(format!("v{i}"), |s| s.to_string())).collect();

    let mut relation = Vec::new();
    for a in &worlds {
        for b in &worlds {
            if rng.gen_bool(spec.edge_probability) {
                relation.push((a.clone(), b.clone()));
            }
        }
    }
    let succ = |w: &str| -> Vec<&str> {
        relation.iter().filter(|(a, _)| a == w).map(|(_, b)| b.as_str()).collect()
    };
    let pred = |w: &str| -> Vec<&str> {
        relation.iter().filter(|(_, b)| b == w).map(|(a, _)| a.as_str()).collect()
    };

    let mut pairs: Vec<VarAt> = endo
        .iter()
        .flat_map(|v| worlds.iter().map(move |w| VarAt::new(v.clone(), w.clone())))
        .collect();
    pairs.shuffle(&mut rng);

    let mut signature = Signature::new();
    for u in &exo {
        signature.add(VarDecl::exogenous(u.clone(), [0, 1])).expect("fresh names");
    }
    for v in &endo {
        signature.add(VarDecl::endogenous(v.clone(), [0, 1])).expect("fresh names");
    }

    let mut equations = Vec::new();
    for (k, target) in pairs.iter().enumerate() {
        let earlier = &pairs[..k];
        let settled = |var: &str, world: &str| {
            exo.iter().any(|u| u == var) || earlier.iter().any(|p| p.var == var && p.world == world)
        };
        // atoms usable by this equation
        let mut atoms: Vec<Formula> = Vec::new();
        let mut modal: Vec<Formula> = Vec::new();
        for var in exo.iter().chain(&endo) {
            if settled(var, &target.world) {
                atoms.push(Formula::local(var.clone(), rng.gen_range(0..2)));
            }
            for w in &worlds {
                if w != &target.world && settled(var, w) {
                    modal.push(Formula::global(var.clone(), w.clone(), rng.gen_range(0..2)));
                }
            }
            let s = succ(&target.world);
            if s.iter().all(|w| settled(var, w)) {
                let a = Formula::local(var.clone(), 1);
                modal.push(if rng.gen_bool(0.5) { Formula::boxed(a) } else { Formula::dia(a) });
            }
            let p = pred(&target.world);
            if p.iter().all(|w| settled(var, w)) {
                let a = Formula::local(var.clone(), 1);
                modal.push(if rng.gen_bool(0.5) { Formula::conv_box(a) } else { Formula::conv_dia(a) });
            }
        }
        let eq = if atoms.is_empty() && modal.is_empty() {
            Equation::Constant(rng.gen_range(0..2))
        } else {
            Equation::Formula(equation_formula(&mut rng, &atoms, &modal, spec, spec.equation_depth))
        };
        equations.push((target.clone(), eq));
    }
    let model = Model::build(signature, worlds.clone(), relation.clone(), equations)
        .expect("generated models are valid by construction");
    let assignments: Vec<(VarAt, Value)> = exo
        .iter()
        .flat_map(|u| worlds.iter().map(move |w| VarAt::new(u.clone(), w.clone())))
        .map(|at| (at, rng.gen_range(0..2)))
        .collect();
    let context = Context::new(&model, assignments).expect("generated contexts are total");
    (model, context)
}

fn equation_formula(
    rng: &mut impl Rng,
    atoms: &[Formula],
    modal: &[Formula],
    spec: &ModelGenSpec,
    depth: usize,
) -> Formula {
    if depth == 0 || rng.gen_bool(0.3) {
        let use_modal = !modal.is_empty() && (atoms.is_empty() || rng.gen_bool(spec.modal_probability));
        let pool = if use_modal { modal } else { atoms };
        return pool.choose(rng).expect("nonempty pool").clone();
    }
    let op = rng.gen_range(0..4);
    let mut sub = || equation_formula(rng, atoms, modal, spec, depth - 1);
    match op {
        0 => Formula::not(sub()),
        1 => Formula::and(sub(), sub()),
        2 => Formula::or(sub(), sub()),
        _ => Formula::implies(sub(), sub()),
    }
}

/// Random formulas over a model's variables and worlds.
pub struct FormulaSampler<'a> {
    model: &'a Model,
    vars: Vec<String>,
}

impl<'a> FormulaSampler<'a> {
    pub fn new(model: &'a Model) -> Self {
        FormulaSampler {
            model,
            vars: model.signature().vars().iter().map(|d| d.name.clone()).collect(),
        }
    }

    fn value(&self, rng: &mut impl Rng, var: &str, world: &str) -> Value {
        let range = self
            .model
            .range(&VarAt::new(var, world))
            .expect("sampled pairs exist");
        *range.choose(rng).expect("ranges are nonempty")
    }

    pub fn local_atom(&self, rng: &mut impl Rng) -> Formula {
        let var = self.vars.choose(rng).expect("models have variables").clone();
        let world = self.model.worlds().choose(rng).expect("models have worlds").clone();
        let v = self.value(rng, &var, &world);
        Formula::local(var, v)
    }

    pub fn global_atom(&self, rng: &mut impl Rng) -> Formula {
        let var = self.vars.choose(rng).expect("models have variables").clone();
        let world = self.model.worlds().choose(rng).expect("models have worlds").clone();
        let v = self.value(rng, &var, &world);
        Formula::global(var, world, v)
    }

    /// An event with at most `depth` nested connectives.
    pub fn event(&self, rng: &mut impl Rng, depth: usize) -> Formula {
        if depth == 0 || rng.gen_bool(0.25) {
            return match rng.gen_range(0..10) {
                0 => Formula::True,
                1 => Formula::False,
                2..=4 => self.global_atom(rng),
                _ => self.local_atom(rng),
            };
        }
        let op = rng.gen_range(0..9);
        let mut sub = || self.event(rng, depth - 1);
        match op {
            0 => Formula::not(sub()),
            1 => Formula::and(sub(), sub()),
            2 => Formula::or(sub(), sub()),
            3 => Formula::implies(sub(), sub()),
            4 => Formula::boxed(sub()),
            5 => Formula::dia(sub()),
            6 => Formula::conv_box(sub()),
            7 => Formula::conv_dia(sub()),
            _ => Formula::not(Formula::boxed(sub())),
        }
    }

    /// One or two endogenous pairs set to random values; empty for models
    /// without endogenous variables.
    pub fn intervention(&self, rng: &mut impl Rng) -> Intervention {
        let mut pairs = self.model.endogenous_pairs();
        pairs.shuffle(rng);
        let k = rng.gen_range(1..=2).min(pairs.len());
        let items: Vec<(VarAt, Value)> = pairs
            .into_iter()
            .take(k)
            .map(|at| {
                let v = self.value(rng, &at.var, &at.world);
                (at, v)
            })
            .collect();
        Intervention::new(items).expect("distinct pairs")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Scheme {
    /// `box(a -> b) -> (box a -> box b)`
    K,
    /// If `a` holds at every world, so does `box a`.
    Necessitation,
    /// `[Y <- y] dia a <-> dia [Y <- y] a`
    DiaAxiom,
    /// `[Y <- y] box a <-> box [Y <- y] a`
    BoxAxiom,
    /// `[Y <- y] X@w=x -> box [Y <- y] X@w=x`
    GAxiom,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::K,
        Scheme::Necessitation,
        Scheme::DiaAxiom,
        Scheme::BoxAxiom,
        Scheme::GAxiom,
    ];
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::K => "K",
            Scheme::Necessitation => "necessitation",
            Scheme::DiaAxiom => "dia-axiom",
            Scheme::BoxAxiom => "box-axiom",
            Scheme::GAxiom => "G-axiom",
        })
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown scheme `{s}`"))
    }
}

/// A formula that should hold at every world, or for a rule, a conclusion
/// that should be valid whenever the premise is.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Instance {
    #[serde(serialize_with = "display")]
    pub premise: Option<Formula>,
    #[serde(serialize_with = "display")]
    pub formula: Formula,
}

fn display<S: serde::Serializer, T: DisplayOpt>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    match v.text() {
        Some(t) => s.serialize_str(&t),
        None => s.serialize_none(),
    }
}

trait DisplayOpt {
    fn text(&self) -> Option<String>;
}

impl DisplayOpt for Formula {
    fn text(&self) -> Option<String> {
        Some(self.to_string())
    }
}

impl DisplayOpt for Option<Formula> {
    fn text(&self) -> Option<String> {
        self.as_ref().map(ToString::to_string)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counterexample {
    pub label: String,
    pub world: String,
    pub instance: Instance,
}

fn wrap(i: &Intervention, body: Formula) -> Formula {
    Formula::intervene(i.clone(), body).expect("sampled bodies carry no interventions")
}

/// Draws `count` instances of `scheme` over the model's vocabulary.
pub fn sample_instances(model: &Model, scheme: Scheme, count: usize, rng: &mut impl Rng) -> Vec<Instance> {
    let s = FormulaSampler::new(model);
    (0..count)
        .map(|_| {
            let a = s.event(rng, 3);
            match scheme {
                Scheme::K => {
                    let b = s.event(rng, 3);
                    Instance {
                        premise: None,
                        formula: Formula::implies(
                            Formula::boxed(Formula::implies(a.clone(), b.clone())),
                            Formula::implies(Formula::boxed(a), Formula::boxed(b)),
                        ),
                    }
                }
                Scheme::Necessitation => {
                    // half the premises are forced valid so the rule is exercised
                    let premise = match rng.gen_range(0..4) {
                        0 => Formula::or(a.clone(), Formula::not(a)),
                        1 => {
                            let g = s.global_atom(rng);
                            let i = s.intervention(rng);
                            Formula::implies(wrap(&i, g.clone()), wrap(&i, g))
                        }
                        _ => a,
                    };
                    Instance {
                        formula: Formula::boxed(premise.clone()),
                        premise: Some(premise),
                    }
                }
                Scheme::DiaAxiom | Scheme::BoxAxiom => {
                    let i = s.intervention(rng);
                    let m = |f: Formula| {
                        if scheme == Scheme::DiaAxiom {
                            Formula::dia(f)
                        } else {
                            Formula::boxed(f)
                        }
                    };
                    Instance {
                        premise: None,
                        formula: Formula::iff(wrap(&i, m(a.clone())), m(wrap(&i, a))),
                    }
                }
                Scheme::GAxiom => g_instance(&s, rng, true),
            }
        })
        .collect()
}

fn g_instance(s: &FormulaSampler, rng: &mut impl Rng, global: bool) -> Instance {
    let i = s.intervention(rng);
    let atom = if global { s.global_atom(rng) } else { s.local_atom(rng) };
    Instance {
        premise: None,
        formula: Formula::implies(wrap(&i, atom.clone()), Formula::boxed(wrap(&i, atom))),
    }
}

/// Instances of the invalid local-atom variant of the G-axiom,
/// `[Y <- y] X=x -> box [Y <- y] X=x`. Used to confirm the checker can fail.
pub fn sample_local_pseudo_g(model: &Model, count: usize, rng: &mut impl Rng) -> Vec<Instance> {
    let s = FormulaSampler::new(model);
    (0..count).map(|_| g_instance(&s, rng, false)).collect()
}

/// First instance that fails, with the world where it fails.
pub fn check_scheme(
    setting: &Setting,
    label: &str,
    instances: &[Instance],
) -> Result<Option<Counterexample>, ModelError> {
    for inst in instances {
        if let Some(p) = &inst.premise {
            if !setting.valid(p)? {
                continue;
            }
        }
        for w in setting.model().worlds() {
            if !setting.satisfies(w, &inst.formula)? {
                return Ok(Some(Counterexample {
                    label: label.to_string(),
                    world: w.clone(),
                    instance: inst.clone(),
                }));
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelReport {
    pub seed: u64,
    pub counterexamples: Vec<Counterexample>,
    /// Counterexample to the local pseudo-G scheme, if one was drawn.
    pub mutant: Option<Counterexample>,
}

/// Generates the model for `spec` and checks `instances` instances of
/// every scheme, plus the local pseudo-G mutant.
pub fn check_generated(spec: &ModelGenSpec, instances: usize) -> Result<ModelReport, ModelError> {
    let (model, context) = generate_model(spec);
    let setting = Setting::new(model, context)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed_0ff0);
    let mut counterexamples = Vec::new();
    for scheme in Scheme::ALL {
        let batch = sample_instances(setting.model(), scheme, instances, &mut rng);
        if let Some(c) = check_scheme(&setting, &scheme.to_string(), &batch)? {
            counterexamples.push(c);
        }
    }
    let mutant_batch = sample_local_pseudo_g(setting.model(), instances, &mut rng);
    let mutant = check_scheme(&setting, "local-pseudo-G", &mutant_batch)?;
    Ok(ModelReport {
        seed: spec.seed,
        counterexamples,
        mutant,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub models: usize,
    pub instances_per_scheme: usize,
    pub counterexamples: Vec<(u64, Counterexample)>,
    pub mutant_hits: usize,
    pub first_mutant: Option<(u64, Counterexample)>,
}

/// Runs [`check_generated`] on `models` seeds starting at `spec.seed`.
pub fn run_suite(spec: &ModelGenSpec, models: usize, instances: usize) -> Result<SuiteReport, ModelError> {
    let reports = (0..models as u64)
        .map(|i| check_generated(&spec.with_seed(spec.seed.wrapping_add(i)), instances))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(summarize(reports, instances))
}

/// Folds per-model reports (in seed order) into a suite report.
pub fn summarize(reports: Vec<ModelReport>, instances: usize) -> SuiteReport {
    let mut out = SuiteReport {
        models: reports.len(),
        instances_per_scheme: instances,
        counterexamples: Vec::new(),
        mutant_hits: 0,
        first_mutant: None,
    };
    for r in reports {
        out.counterexamples
            .extend(r.counterexamples.into_iter().map(|c| (r.seed, c)));
        if let Some(m) = r.mutant {
            out.mutant_hits += 1;
            out.first_mutant.get_or_insert((r.seed, m));
        }
    }
    out
}
