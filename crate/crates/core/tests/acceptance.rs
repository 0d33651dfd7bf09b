//! Acceptance suite: one PASS/FAIL line per criterion. Runs as a plain
//! binary (`harness = false`); exits non-zero when the set of failing
//! criteria differs from `KNOWN_FAILING`.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use causalmk::axioms::{generate_model, run_suite, ModelGenSpec};
use causalmk::cause::{
    certainty_is_cause, find_causes, is_cause, modal_cause_check, parts_of_causes, Candidate, ClauseStatus,
    Definition, EventPairs, Modality, SearchBudget,
};
use causalmk::sufficiency::{is_sufficient_cause, sc3_local_box, ContextSpace, Nearby, Scope};
use causalmk::{corpus, parse, Formula, Setting, Value, VarAt};
use common::Classical;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Criteria whose stated verdicts the implementation does not reproduce;
/// see the README for the computed sets.
const KNOWN_FAILING: &[usize] = &[3];

const UMBRELLA_LIMIT: Duration = Duration::from_secs(1);
const PROPERTY_LIMIT: Duration = Duration::from_secs(300);
const IMPLICATION_MODELS: u64 = 500;
const ORACLE_MODELS: u64 = 200;
const AXIOM_MODELS: usize = 1000;
const AXIOM_INSTANCES: usize = 20;
const NEARBY_RELATIONS: u64 = 100;

const B: SearchBudget = SearchBudget {
    max_contingency: None,
    max_evaluations: None,
};

struct Report {
    pass: bool,
    detail: String,
}

fn report(pass: bool, detail: impl Into<String>) -> Report {
    Report {
        pass,
        detail: detail.into(),
    }
}

fn setting(name: &str, ctx: &str) -> Setting {
    corpus::load(name).unwrap().setting(ctx).unwrap()
}

fn cand(atoms: &[(&str, &str, Value)]) -> Candidate {
    Candidate::new(atoms.iter().map(|(v, w, x)| (VarAt::new(*v, *w), *x))).unwrap()
}

fn names(cs: &[Candidate]) -> Vec<String> {
    cs.iter().map(ToString::to_string).collect()
}

fn holds(s: &Setting, w: &str, c: &Candidate, e: &Formula, def: Definition) -> bool {
    is_cause(s, w, c, e, def, B).unwrap().holds()
}

fn criterion_1() -> Report {
    let start = Instant::now();
    let s = setting("umbrella", "t");
    let q = parse("q=1").unwrap();
    let ok = Definition::ALL.iter().all(|&def| {
        holds(&s, "w0", &cand(&[("p", "w3", 1)]), &q, def) && holds(&s, "w0", &cand(&[("r", "w3", 1)]), &q, def)
    });
    let t = start.elapsed();
    report(ok && t < UMBRELLA_LIMIT, format!("p@w3=1 and r@w3=1 cause q=1 under all definitions: {ok}; {t:.2?}"))
}

fn criterion_2() -> Report {
    let s = setting("stalemate", "t");
    let r = parse("r=1").unwrap();
    let want = ["p@w0=0", "q@w0=1", "p@w1=1", "p@w2=1"];
    let mut bad = Vec::new();
    for def in Definition::ALL {
        let got = names(&find_causes(&s, "w0", &r, def, 1, B).unwrap());
        if got != want {
            bad.push(format!("{def}: {got:?}"));
        }
    }
    let certainty = certainty_is_cause(&s, "w0", "p", 1, &r, B).unwrap();
    report(
        bad.is_empty() && certainty,
        format!("causes {want:?} under all definitions (mismatches {bad:?}); certainty {certainty}"),
    )
}

fn criterion_3() -> Report {
    let e = parse("s=1").unwrap();
    let stated: [(&str, &[&str]); 3] = [
        ("t", &["p@w1=1", "p@w2=1"]),
        ("t1", &["o@w0=1", "p@w1=1", "p@w2=1"]),
        ("t2", &["o@w0=1"]),
    ];
    let mut pass = true;
    let mut lines = Vec::new();
    for (ctx, want) in stated {
        let s = setting("police", ctx);
        for def in Definition::ALL {
            let got = names(&find_causes(&s, "w0", &e, def, 3, B).unwrap());
            if got != want {
                pass = false;
                lines.push(format!("{ctx}/{def} got {got:?} want {want:?}"));
            }
        }
    }
    report(pass, if pass { "all contexts match".to_string() } else { lines.join("; ") })
}

fn criterion_4() -> Report {
    let s = setting("robot", "t");
    let r = parse("r=1").unwrap();
    let q = parse("q=1").unwrap();
    let p0 = cand(&[("p", "w0", 1)]);
    let mut ok = true;
    for def in Definition::ALL {
        let at_w2 = is_cause(&s, "w2", &p0, &r, def, B).unwrap();
        let at_w1 = is_cause(&s, "w1", &p0, &r, def, B).unwrap();
        ok &= at_w2.holds() && !at_w1.holds() && at_w1.ac1 == ClauseStatus::Fail;
        ok &= modal_cause_check(&s, "w0", Modality::Dia, &p0, &r, def, B).unwrap();
        ok &= modal_cause_check(&s, "w0", Modality::Dia, &p0, &q, def, B).unwrap();
    }
    report(ok, "p@w0=1 causes r=1 at w2, fails AC1 at w1; dia checks for r=1 and q=1")
}

fn criterion_5() -> Report {
    let s = setting("navigation", "t");
    let r = parse("r=1").unwrap();
    let want = ["q@w1=1", "q@w2=1", "q@w3=1"];
    let mut bad = Vec::new();
    for def in Definition::ALL {
        let got = names(&find_causes(&s, "w1", &r, def, 3, B).unwrap());
        if got != want {
            bad.push(format!("{def}: {got:?}"));
        }
    }
    report(bad.is_empty(), format!("causes {want:?} under all definitions (mismatches {bad:?})"))
}

fn criterion_6() -> Report {
    let s = setting("stalemate-revisited", "t");
    let r = parse("r=1").unwrap();
    let p1 = cand(&[("p1", "w1", 1)]);
    let p2 = cand(&[("p2", "w1", 1)]);
    let both = cand(&[("p1", "w1", 1), ("p2", "w1", 1)]);
    let mut ok = true;
    for def in [Definition::Original, Definition::Updated] {
        ok &= holds(&s, "w0", &p1, &r, def) && holds(&s, "w0", &p2, &r, def);
    }
    ok &= !holds(&s, "w0", &p1, &r, Definition::Modified);
    ok &= !holds(&s, "w0", &p2, &r, Definition::Modified);
    ok &= holds(&s, "w0", &both, &r, Definition::Modified);
    report(ok, "singletons cause r=1 under original/updated only; the conjunction under modified")
}

fn criterion_7() -> Report {
    let start = Instant::now();
    let spec = ModelGenSpec {
        worlds: 1..=3,
        endogenous: 1..=3,
        ..ModelGenSpec::default()
    };
    let results: Vec<(bool, Vec<String>)> = (0..IMPLICATION_MODELS)
        .into_par_iter()
        .map(|seed| {
            let (model, ctx) = generate_model(&spec.with_seed(70_000 + seed));
            let s = Setting::new(model, ctx).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = s.model().worlds().choose(&mut rng).unwrap().clone();
            let e = common::true_event(&s, &w, &mut rng);
            let parts = |def| parts_of_causes(&s, &w, &e, def, B, EventPairs::Include).unwrap();
            let (o, u, m) = (parts(Definition::Original), parts(Definition::Updated), parts(Definition::Modified));
            let mut out = Vec::new();
            for (label, a, b) in [("modified=>original", &m, &o), ("modified=>updated", &m, &u), ("updated=>original", &u, &o)] {
                if !a.is_subset(b) {
                    out.push(format!("seed {seed} {label}: {{{}}} vs {{{}}}", common::atoms_set(a), common::atoms_set(b)));
                }
            }
            (!o.is_empty(), out)
        })
        .collect();
    let t = start.elapsed();
    let with_causes = results.iter().filter(|r| r.0).count();
    let violations: Vec<&String> = results.iter().flat_map(|r| &r.1).collect();
    report(
        violations.is_empty() && t < PROPERTY_LIMIT,
        format!(
            "{IMPLICATION_MODELS} models ({with_causes} with some original cause), {} violations {:?}; {t:.2?}",
            violations.len(),
            violations.first()
        ),
    )
}

fn criterion_8() -> Report {
    let spec = ModelGenSpec::classical();
    let results: Vec<(usize, Vec<String>)> = (0..ORACLE_MODELS)
        .into_par_iter()
        .map(|seed| {
            let (model, ctx) = generate_model(&spec.with_seed(80_000 + seed));
            let s = Setting::new(model, ctx).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = s.model().worlds()[0].clone();
            let e = common::true_event(&s, &w, &mut rng);
            let oracle = Classical::new(s.model(), s.context());
            let mut checked = 0;
            let mut bad = Vec::new();
            for x in oracle.candidates(2) {
                let c = Candidate::new(oracle.to_var_at(&x)).unwrap();
                for def in Definition::ALL {
                    checked += 1;
                    if holds(&s, &w, &c, &e, def) != oracle.is_cause(def, &x, &e) {
                        bad.push(format!("seed {seed}: {c} for {e} under {def}"));
                    }
                }
            }
            (checked, bad)
        })
        .collect();
    let checked: usize = results.iter().map(|r| r.0).sum();
    let bad: Vec<&String> = results.iter().flat_map(|r| &r.1).collect();
    report(
        bad.is_empty(),
        format!("{ORACLE_MODELS} models, {checked} verdicts, {} disagreements {:?}", bad.len(), bad.first()),
    )
}

fn criterion_9() -> Report {
    let s = run_suite(&ModelGenSpec::default().with_seed(90_000), AXIOM_MODELS, AXIOM_INSTANCES).unwrap();
    report(
        s.counterexamples.is_empty() && s.mutant_hits >= 1,
        format!(
            "{} models x {} instances: {} counterexamples; local pseudo-G refuted on {} models",
            s.models,
            s.instances_per_scheme,
            s.counterexamples.len(),
            s.mutant_hits
        ),
    )
}

/// SC1-SC3 and minimality for the conjunctive model by direct enumeration,
/// with SC2 read from the classical oracle.
fn brute_sufficient(oracle: &Classical, space: &ContextSpace, x: &common::Assignment, event: &Formula) -> bool {
    let sc = |x: &common::Assignment| {
        let sc1 = oracle.ac1(x, event);
        let parts: BTreeSet<(String, Value)> = oracle
            .candidates(oracle.vars().len())
            .into_iter()
            .filter(|c| oracle.is_cause(Definition::Updated, c, event))
            .flat_map(|c| c.into_iter())
            .collect();
        let sc2 = x.iter().any(|(k, v)| parts.contains(&(k.clone(), *v)));
        let sc3 = space.names().iter().all(|n| {
            let other = Classical::new(space.base(), space.context(n).unwrap());
            other.holds(event, &other.solve(x))
        });
        sc1 && sc2 && sc3
    };
    if !sc(x) {
        return false;
    }
    let keys: Vec<&String> = x.keys().collect();
    (1..(1u32 << keys.len()) - 1).all(|mask| {
        let sub: common::Assignment = keys
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, k)| ((*k).clone(), x[*k]))
            .collect();
        !sc(&sub)
    })
}

fn criterion_10() -> Report {
    let base = corpus::load("forest-fire-conjunctive").unwrap().model;
    let events = [parse("F=1").unwrap(), parse("F=0").unwrap(), parse("L=1 | M=1").unwrap()];
    let space = ContextSpace::exhaustive(base.clone(), &Nearby::Hamming(1), true).unwrap();
    let mut mismatches = Vec::new();
    let mut verdicts = 0;
    for u in space.names() {
        let oracle = Classical::new(&base, space.context(u).unwrap());
        for e in &events {
            for x in oracle.candidates(3) {
                let c = Candidate::new(oracle.to_var_at(&x)).unwrap();
                let ours = is_sufficient_cause(&space, u, &c, e, Scope::Global, Definition::Updated, B).unwrap();
                verdicts += 1;
                if ours.sufficient != brute_sufficient(&oracle, &space, &x, e) {
                    mismatches.push(format!("{u}: {c} for {e}"));
                }
            }
        }
    }

    let names = space.names().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mut monotonicity = Vec::new();
    for k in 0..NEARBY_RELATIONS {
        let pairs: Vec<(String, String)> = names
            .iter()
            .flat_map(|a| names.iter().map(move |b| (a.clone(), b.clone())))
            .filter(|_| rng.gen_bool(0.4))
            .collect();
        let reflexive = rng.gen_bool(0.5);
        let local = ContextSpace::new(
            base.clone(),
            names.iter().map(|n| (n.clone(), space.context(n).unwrap().clone())).collect(),
            &Nearby::Pairs(pairs),
            reflexive,
        )
        .unwrap();
        for u in &names {
            let oracle = Classical::new(&base, space.context(u).unwrap());
            for e in &events {
                for x in oracle.candidates(3) {
                    let c = Candidate::new(oracle.to_var_at(&x)).unwrap();
                    let g = is_sufficient_cause(&space, u, &c, e, Scope::Global, Definition::Updated, B).unwrap();
                    let l = is_sufficient_cause(&local, u, &c, e, Scope::Local, Definition::Updated, B).unwrap();
                    let boxed = sc3_local_box(&local, u, &c, e).unwrap();
                    if (g.sc3 && !l.sc3) || boxed != l.sc3 || (g.sc1 && g.sc2 && g.sc3 && !(l.sc1 && l.sc2 && l.sc3)) {
                        monotonicity.push(format!("relation {k}, {u}: {c} for {e}"));
                    }
                }
            }
        }
    }
    report(
        mismatches.is_empty() && monotonicity.is_empty(),
        format!(
            "{verdicts} global verdicts, {} mismatches {:?}; {NEARBY_RELATIONS} nearby relations, {} monotonicity violations {:?}",
            mismatches.len(),
            mismatches.first(),
            monotonicity.len(),
            monotonicity.first()
        ),
    )
}

fn main() {
    let criteria: [fn() -> Report; 10] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
    ];
    let mut failing = Vec::new();
    for (i, run) in criteria.iter().enumerate() {
        let n = i + 1;
        let r = run();
        println!("criterion {n}: {} - {}", if r.pass { "PASS" } else { "FAIL" }, r.detail);
        if !r.pass {
            failing.push(n);
        }
    }
    if failing != KNOWN_FAILING {
        eprintln!("failing criteria {failing:?}, expected {KNOWN_FAILING:?}");
        std::process::exit(1);
    }
}
