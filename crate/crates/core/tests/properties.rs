mod common;

use causalmk::axioms::{generate_model, FormulaSampler, ModelGenSpec};
use causalmk::cause::{
    check_ac2b_original, check_ac2b_updated, find_causes, is_cause, parts_of_causes, verify_witness,
    ClauseStatus, EventPairs,
};
use causalmk::{
    parse, Candidate, Context, Definition, Equation, Formula, Intervention, Model, SearchBudget, Setting,
    VarAt, VarDecl,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn setting(seed: u64) -> Setting {
    let (model, ctx) = generate_model(&ModelGenSpec::default().with_seed(seed));
    Setting::new(model, ctx).unwrap()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x5eed)
}

/// The model extended with a binary variable `probe` whose equation at every
/// world is `event`.
fn with_probe(model: &Model, context: &Context, event: &Formula) -> Setting {
    let sig = model
        .signature()
        .clone()
        .with(VarDecl::endogenous("probe", [0, 1]))
        .unwrap();
    let mut equations: Vec<(VarAt, Equation)> = model
        .endogenous_pairs()
        .into_iter()
        .map(|at| {
            let eq = model.equation(&at).unwrap().unwrap().clone();
            (at, eq)
        })
        .collect();
    for w in model.worlds() {
        equations.push((VarAt::new("probe", w.clone()), Equation::Formula(event.clone())));
    }
    let probed = Model::build(sig, model.worlds().to_vec(), model.relation(), equations).unwrap();
    let ctx = Context::new(&probed, context.assignments()).unwrap();
    Setting::new(probed, ctx).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn printed_formulas_parse_back(seed in any::<u64>()) {
        let s = setting(seed);
        let mut r = rng(seed);
        let sampler = FormulaSampler::new(s.model());
        let event = sampler.event(&mut r, 3);
        prop_assert_eq!(parse(&event.to_string()).unwrap(), event.clone());
        if !s.model().endogenous_pairs().is_empty() {
            let f = Formula::intervene(sampler.intervention(&mut r), event).unwrap();
            prop_assert_eq!(parse(&f.to_string()).unwrap(), f);
        }
    }

    #[test]
    fn normal_form_is_equivalent(seed in any::<u64>()) {
        let s = setting(seed);
        let mut r = rng(seed);
        let f = FormulaSampler::new(s.model()).event(&mut r, 3);
        let n = f.normalize();
        for w in s.model().worlds() {
            prop_assert_eq!(s.satisfies(w, &f).unwrap(), s.satisfies(w, &n).unwrap());
        }
    }

    #[test]
    fn satisfaction_agrees_with_equation_evaluation(seed in any::<u64>()) {
        let s = setting(seed);
        let mut r = rng(seed);
        let f = FormulaSampler::new(s.model()).event(&mut r, 3);
        let probed = with_probe(s.model(), s.context(), &f);
        for w in s.model().worlds() {
            let v = probed.valuation().value("probe", w).unwrap();
            prop_assert_eq!(v == 1, s.satisfies(w, &f).unwrap(), "{} at {}", f, w);
        }
    }

    #[test]
    fn evaluation_is_deterministic(seed in any::<u64>()) {
        let s = setting(seed);
        prop_assert_eq!(s.model().evaluate(s.context()), s.valuation().clone());
        let (m2, c2) = generate_model(&ModelGenSpec::default().with_seed(seed));
        prop_assert_eq!(m2.evaluate(&c2), s.valuation().clone());
    }

    #[test]
    fn interventions_take_effect(seed in any::<u64>()) {
        let s = setting(seed);
        prop_assume!(!s.model().endogenous_pairs().is_empty());
        let mut r = rng(seed);
        let sampler = FormulaSampler::new(s.model());
        let i = sampler.intervention(&mut r);
        let after = s.model().intervene(&i).unwrap().evaluate(s.context());
        for (at, v) in i.assignments() {
            prop_assert_eq!(after.get(at), Some(*v));
        }
        // setting pairs to their actual values changes nothing
        let same = Intervention::new(
            i.assignments().iter().map(|(at, _)| (at.clone(), s.valuation().get(at).unwrap())),
        )
        .unwrap();
        prop_assert_eq!(s.model().intervene(&same).unwrap().evaluate(s.context()), s.valuation().clone());
        // the intervention formula reads the intervened model
        let body = sampler.event(&mut r, 2);
        let inner = Setting::new(s.model().intervene(&i).unwrap(), s.context().clone()).unwrap();
        let f = Formula::intervene(i, body.clone()).unwrap();
        for w in s.model().worlds() {
            prop_assert_eq!(s.satisfies(w, &f).unwrap(), inner.satisfies(w, &body).unwrap());
        }
    }
}

fn small_spec() -> ModelGenSpec {
    ModelGenSpec {
        worlds: 1..=2,
        endogenous: 1..=3,
        ..ModelGenSpec::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn reported_causes_carry_valid_witnesses(seed in any::<u64>()) {
        let (model, ctx) = generate_model(&small_spec().with_seed(seed));
        let s = Setting::new(model, ctx).unwrap();
        let mut r = rng(seed);
        let w = s.model().worlds()[0].clone();
        let e = common::true_event(&s, &w, &mut r);
        let b = SearchBudget::default();
        for def in Definition::ALL {
            for cause in find_causes(&s, &w, &e, def, 2, b).unwrap() {
                let v = is_cause(&s, &w, &cause, &e, def, b).unwrap();
                prop_assert!(v.holds(), "{} under {}", cause, def);
                let witness = v.witness.unwrap();
                prop_assert!(verify_witness(&s, &w, &cause, &e, &witness).unwrap());
                if def == Definition::Updated {
                    prop_assert!(check_ac2b_original(&s, &w, &cause, &e, &witness).unwrap());
                }
                if def == Definition::Original && check_ac2b_updated(&s, &w, &cause, &e, &witness).unwrap() {
                    prop_assert!(check_ac2b_original(&s, &w, &cause, &e, &witness).unwrap());
                }
                // minimality: no strict sub-conjunction satisfies AC2
                if cause.len() == 2 {
                    for atom in cause.conjuncts() {
                        let sub = Candidate::new([atom.clone()]).unwrap();
                        let sv = is_cause(&s, &w, &sub, &e, def, b).unwrap();
                        prop_assert_eq!(sv.ac2, ClauseStatus::Fail);
                    }
                }
            }
        }
    }

    #[test]
    fn part_of_cause_implications(seed in any::<u64>()) {
        let (model, ctx) = generate_model(&small_spec().with_seed(seed));
        let s = Setting::new(model, ctx).unwrap();
        let mut r = rng(seed);
        let w = s.model().worlds()[0].clone();
        let e = common::true_event(&s, &w, &mut r);
        let b = SearchBudget::default();
        let parts = |def| parts_of_causes(&s, &w, &e, def, b, EventPairs::Include).unwrap();
        let (o, u, m) = (parts(Definition::Original), parts(Definition::Updated), parts(Definition::Modified));
        prop_assert!(m.is_subset(&o), "modified {} vs original {}", common::atoms_set(&m), common::atoms_set(&o));
        prop_assert!(m.is_subset(&u), "modified {} vs updated {}", common::atoms_set(&m), common::atoms_set(&u));
        prop_assert!(u.is_subset(&o), "updated {} vs original {}", common::atoms_set(&u), common::atoms_set(&o));
    }
}
