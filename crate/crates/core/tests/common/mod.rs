//! Helpers shared by the integration tests: a from-scratch checker for the
//! classical (single-world) cause definitions and random event selection.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use causalmk::axioms::FormulaSampler;
use causalmk::{Context, Definition, Equation, Formula, Model, Value, VarAt};
use rand::Rng;

/// A single-world structural model evaluated by naive fixpoint iteration,
/// with the cause definitions stated over partitions (Z, W) of the
/// endogenous variables.
pub struct Classical {
    world: String,
    vars: Vec<String>,
    ranges: BTreeMap<String, Vec<Value>>,
    equations: BTreeMap<String, Equation>,
    exogenous: BTreeMap<String, Value>,
}

pub type Assignment = BTreeMap<String, Value>;

impl Classical {
    pub fn new(model: &Model, context: &Context) -> Classical {
        assert_eq!(model.worlds().len(), 1);
        let world = model.worlds()[0].clone();
        let mut vars = Vec::new();
        let mut ranges = BTreeMap::new();
        let mut equations = BTreeMap::new();
        for at in model.endogenous_pairs() {
            ranges.insert(at.var.clone(), model.range(&at).unwrap().to_vec());
            equations.insert(at.var.clone(), model.equation(&at).unwrap().unwrap().clone());
            vars.push(at.var);
        }
        let exogenous = context.assignments().into_iter().map(|(at, v)| (at.var, v)).collect();
        Classical {
            world,
            vars,
            ranges,
            equations,
            exogenous,
        }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn range(&self, var: &str) -> &[Value] {
        &self.ranges[var]
    }

    pub fn world(&self) -> &str {
        &self.world
    }

    fn lookup(&self, vals: &Assignment, var: &str) -> Value {
        self.exogenous.get(var).or_else(|| vals.get(var)).copied().unwrap()
    }

    /// True/false of an event over a total assignment. The relation is
    /// empty, so boxes hold and diamonds fail.
    pub fn holds(&self, f: &Formula, vals: &Assignment) -> bool {
        match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Local { var, value } => self.lookup(vals, var) == *value,
            Formula::Global { var, world, value } => {
                assert_eq!(world, &self.world);
                self.lookup(vals, var) == *value
            }
            Formula::Not(a) => !self.holds(a, vals),
            Formula::And(a, b) => self.holds(a, vals) && self.holds(b, vals),
            Formula::Or(a, b) => self.holds(a, vals) || self.holds(b, vals),
            Formula::Implies(a, b) => !self.holds(a, vals) || self.holds(b, vals),
            Formula::Box(_) | Formula::ConvBox(_) => true,
            Formula::Dia(_) | Formula::ConvDia(_) => false,
            Formula::Intervene { .. } => panic!("events only"),
        }
    }

    /// Values of all endogenous variables under `fixed`: iterate every
    /// equation until nothing changes.
    pub fn solve(&self, fixed: &Assignment) -> Assignment {
        let mut vals: Assignment = self
            .vars
            .iter()
            .map(|v| (v.clone(), fixed.get(v).copied().unwrap_or(self.ranges[v][0])))
            .collect();
        for _ in 0..=self.vars.len() {
            let mut next = vals.clone();
            for v in &self.vars {
                if let Some(x) = fixed.get(v) {
                    next.insert(v.clone(), *x);
                    continue;
                }
                let x = match &self.equations[v] {
                    Equation::Constant(c) => *c,
                    Equation::Formula(f) => self.holds(f, &vals) as Value,
                    Equation::Table(t) => {
                        let key: Vec<Value> = t.parents.iter().map(|p| self.lookup(&vals, &p.var)).collect();
                        t.rows[&key]
                    }
                };
                next.insert(v.clone(), x);
            }
            if next == vals {
                return vals;
            }
            vals = next;
        }
        panic!("no fixpoint: the model is not recursive");
    }

    pub fn actual(&self) -> Assignment {
        self.solve(&Assignment::new())
    }

    fn settings(&self, vars: &[String]) -> Vec<Assignment> {
        let mut out = vec![Assignment::new()];
        for v in vars {
            out = out
                .into_iter()
                .flat_map(|a| {
                    self.ranges[v].iter().map(move |x| {
                        let mut b = a.clone();
                        b.insert(v.clone(), *x);
                        b
                    })
                })
                .collect();
        }
        out
    }

    fn subsets(items: &[String]) -> Vec<Vec<String>> {
        (0..1u32 << items.len())
            .map(|m| {
                items
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| m >> i & 1 == 1)
                    .map(|(_, s)| s.clone())
                    .collect()
            })
            .collect()
    }

    fn merged(parts: &[&Assignment]) -> Assignment {
        let mut out = Assignment::new();
        for p in parts {
            out.extend(p.iter().map(|(k, v)| (k.clone(), *v)));
        }
        out
    }

    fn restrict(a: &Assignment, keys: &[String]) -> Assignment {
        keys.iter().map(|k| (k.clone(), a[k])).collect()
    }

    pub fn ac1(&self, x: &Assignment, phi: &Formula) -> bool {
        let actual = self.actual();
        self.holds(phi, &actual) && x.iter().all(|(k, v)| actual[k] == *v)
    }

    pub fn ac2(&self, def: Definition, x: &Assignment, phi: &Formula) -> bool {
        let actual = self.actual();
        let xs: Vec<String> = x.keys().cloned().collect();
        let others: Vec<String> = self.vars.iter().filter(|v| !x.contains_key(*v)).cloned().collect();
        for w_vars in Self::subsets(&others) {
            let z_minus_x: Vec<String> = others.iter().filter(|v| !w_vars.contains(v)).cloned().collect();
            let w_settings = match def {
                Definition::Modified => vec![Self::restrict(&actual, &w_vars)],
                _ => self.settings(&w_vars),
            };
            for w in &w_settings {
                let flips = self
                    .settings(&xs)
                    .iter()
                    .any(|x_alt| !self.holds(phi, &self.solve(&Self::merged(&[x_alt, w]))));
                if !flips {
                    continue;
                }
                let restores = match def {
                    Definition::Modified => true,
                    Definition::Original => Self::subsets(&z_minus_x).iter().all(|z| {
                        let z_star = Self::restrict(&actual, z);
                        self.holds(phi, &self.solve(&Self::merged(&[x, w, &z_star])))
                    }),
                    Definition::Updated => Self::subsets(&w_vars).iter().all(|w_sub| {
                        let w_part = Self::restrict(w, w_sub);
                        Self::subsets(&z_minus_x).iter().all(|z| {
                            let z_star = Self::restrict(&actual, z);
                            self.holds(phi, &self.solve(&Self::merged(&[x, &w_part, &z_star])))
                        })
                    }),
                };
                if restores {
                    return true;
                }
            }
        }
        false
    }

    pub fn is_cause(&self, def: Definition, x: &Assignment, phi: &Formula) -> bool {
        if x.is_empty() || !self.ac1(x, phi) || !self.ac2(def, x, phi) {
            return false;
        }
        let keys: Vec<String> = x.keys().cloned().collect();
        Self::subsets(&keys)
            .into_iter()
            .filter(|s| !s.is_empty() && s.len() < keys.len())
            .all(|s| !self.ac2(def, &Self::restrict(x, &s), phi))
    }

    /// Every conjunction of at most `k` atoms over distinct endogenous
    /// variables and any values.
    pub fn candidates(&self, k: usize) -> Vec<Assignment> {
        Self::subsets(&self.vars)
            .into_iter()
            .filter(|s| !s.is_empty() && s.len() <= k)
            .flat_map(|s| self.settings(&s))
            .collect()
    }

    pub fn to_var_at(&self, x: &Assignment) -> Vec<(VarAt, Value)> {
        x.iter().map(|(k, v)| (VarAt::new(k.clone(), self.world.clone()), *v)).collect()
    }
}

/// A random event at `world` that holds in the setting; half the time a
/// single atom over an endogenous pair, otherwise a sampled formula
/// (negated if false).
pub fn true_event(setting: &causalmk::Setting, world: &str, rng: &mut impl Rng) -> Formula {
    let model = setting.model();
    let endo = model.endogenous_pairs();
    if !endo.is_empty() && rng.gen_bool(0.5) {
        let at = &endo[rng.gen_range(0..endo.len())];
        let v = setting.valuation().get(at).unwrap();
        return if at.world == world {
            Formula::local(at.var.clone(), v)
        } else {
            Formula::global(at.var.clone(), at.world.clone(), v)
        };
    }
    let f = FormulaSampler::new(model).event(rng, 2);
    if setting.satisfies(world, &f).unwrap() {
        f
    } else {
        Formula::not(f)
    }
}

pub fn atoms_set(items: &BTreeSet<(VarAt, Value)>) -> String {
    items.iter().map(|(a, v)| format!("{a}={v}")).collect::<Vec<_>>().join(", ")
}
