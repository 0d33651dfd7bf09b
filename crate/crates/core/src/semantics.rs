//! Satisfaction of formulas in a causal Kripke setting.

use crate::formula::Formula;
use crate::model::{Context, Model, ModelError, Valuation, Value};

/// A model together with a context and its (cached) valuation.
#[derive(Clone, Debug)]
pub struct Setting {
    model: Model,
    context: Context,
    valuation: Valuation,
}

impl Setting {
    pub fn new(model: Model, context: Context) -> Result<Setting, ModelError> {
        if !context.fits(&model) {
            return Err(ModelError::Dangling(
                "context was built for a different model".into(),
            ));
        }
        let valuation = model.evaluate(&context);
        Ok(Setting {
            model,
            context,
            valuation,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn context(&self) -> &Context {
        &self.context
    }

    pub fn valuation(&self) -> &Valuation {
        &self.valuation
    }

    /// `(K, t, world) |= formula`.
    pub fn satisfies(&self, world: &str, formula: &Formula) -> Result<bool, ModelError> {
        let w = self.model.layout.world(world)?;
        sat(&self.model, &self.context, &self.valuation.values, w, formula)
    }

    /// True iff the formula holds at every world.
    pub fn valid(&self, formula: &Formula) -> Result<bool, ModelError> {
        for w in 0..self.model.worlds().len() {
            if !sat(&self.model, &self.context, &self.valuation.values, w, formula)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

pub fn satisfies(setting: &Setting, world: &str, formula: &Formula) -> Result<bool, ModelError> {
    setting.satisfies(world, formula)
}

pub fn valid_in_model(setting: &Setting, formula: &Formula) -> Result<bool, ModelError> {
    setting.valid(formula)
}

fn atom(model: &Model, vals: &[Value], var: &str, world: usize, value: Value) -> Result<bool, ModelError> {
    let layout = &model.layout;
    Ok(vals[layout.pair(layout.var(var)?, world)] == value)
}

fn sat(
    model: &Model,
    context: &Context,
    vals: &[Value],
    w: usize,
    f: &Formula,
) -> Result<bool, ModelError> {
    let layout = &model.layout;
    let rec = |g: &Formula, at: usize| sat(model, context, vals, at, g);
    Ok(match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Local { var, value } => atom(model, vals, var, w, *value)?,
        Formula::Global { var, world, value } => {
            atom(model, vals, var, layout.world(world)?, *value)?
        }
        Formula::Not(a) => !rec(a, w)?,
        Formula::And(a, b) => rec(a, w)? && rec(b, w)?,
        Formula::Or(a, b) => rec(a, w)? || rec(b, w)?,
        Formula::Implies(a, b) => !rec(a, w)? || rec(b, w)?,
        Formula::Box(a) => all(&layout.succ[w], |s| rec(a, s))?,
        Formula::Dia(a) => any(&layout.succ[w], |s| rec(a, s))?,
        Formula::ConvBox(a) => all(&layout.pred[w], |s| rec(a, s))?,
        Formula::ConvDia(a) => any(&layout.pred[w], |s| rec(a, s))?,
        Formula::Intervene { intervention, body } => {
            let intervened = model.intervene(intervention)?;
            let valuation = intervened.evaluate(context);
            sat(&intervened, context, &valuation.values, w, body)?
        }
    })
}

fn all(
    worlds: &[usize],
    mut f: impl FnMut(usize) -> Result<bool, ModelError>,
) -> Result<bool, ModelError> {
    for &w in worlds {
        if !f(w)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn any(
    worlds: &[usize],
    mut f: impl FnMut(usize) -> Result<bool, ModelError>,
) -> Result<bool, ModelError> {
    for &w in worlds {
        if f(w)? {
            return Ok(true);
        }
    }
    Ok(false)
}
