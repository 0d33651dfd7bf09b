//! Browser bindings: evaluate a model, check a formula at a world, and list
//! the causes of an event. Each call takes the model file text and returns
//! a JSON string.

use causalmk::cause::find_causes;
use causalmk::{parse, Definition, ModelFile, SearchBudget, Setting};
use serde_json::{json, Value as Json};
use wasm_bindgen::prelude::*;

/// Evaluation cap for `causes`, so a large model cannot hang the page.
pub const MAX_EVALUATIONS: u64 = 2_000_000;

fn load(source: &str, context: &str) -> Result<(Setting, Vec<String>), String> {
    let loaded = ModelFile::load(source).map_err(|e| e.to_string())?;
    let names: Vec<String> = loaded.contexts.keys().cloned().collect();
    let name = if context.is_empty() {
        names.first().ok_or("the model defines no context")?.clone()
    } else {
        context.to_string()
    };
    let setting = loaded.setting(&name).map_err(|e| e.to_string())?;
    Ok((setting, names))
}

fn parse_at(text: &str) -> Result<causalmk::Formula, String> {
    parse(text).map_err(|e| format!("{e}\n{text}\n{}^", " ".repeat(e.offset())))
}

/// Worlds, relation, context names and the value of every pair.
pub fn evaluate_json(source: &str, context: &str) -> Result<String, String> {
    let (setting, contexts) = load(source, context)?;
    let model = setting.model();
    let mut valuation = serde_json::Map::new();
    for (at, v) in setting.valuation().entries() {
        valuation
            .entry(at.world.clone())
            .or_insert_with(|| json!({}))
            .as_object_mut()
            .unwrap()
            .insert(at.var, json!(v));
    }
    let out = json!({
        "worlds": model.worlds(),
        "relation": model.relation(),
        "contexts": contexts,
        "valuation": Json::Object(valuation),
    });
    Ok(out.to_string())
}

/// Truth of `formula` at `world`.
pub fn check_json(source: &str, context: &str, world: &str, formula: &str) -> Result<String, String> {
    let (setting, _) = load(source, context)?;
    let f = parse_at(formula)?;
    let holds = setting.satisfies(world, &f).map_err(|e| e.to_string())?;
    Ok(json!({"formula": f.to_string(), "world": world, "holds": holds}).to_string())
}

/// Causes of `event` at `world` with at most `max` conjuncts.
pub fn causes_json(
    source: &str,
    context: &str,
    world: &str,
    event: &str,
    definition: &str,
    max: usize,
) -> Result<String, String> {
    let (setting, _) = load(source, context)?;
    let e = parse_at(event)?;
    let def: Definition = definition.parse()?;
    let budget = SearchBudget {
        max_contingency: None,
        max_evaluations: Some(MAX_EVALUATIONS),
    };
    let causes = find_causes(&setting, world, &e, def, max.max(1), budget).map_err(|e| e.to_string())?;
    let list: Vec<String> = causes.iter().map(ToString::to_string).collect();
    Ok(json!({"event": e.to_string(), "world": world, "definition": def.to_string(), "causes": list}).to_string())
}

#[wasm_bindgen]
pub fn evaluate(source: &str, context: &str) -> Result<String, JsValue> {
    evaluate_json(source, context).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn check(source: &str, context: &str, world: &str, formula: &str) -> Result<String, JsValue> {
    check_json(source, context, world, formula).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn causes(
    source: &str,
    context: &str,
    world: &str,
    event: &str,
    definition: &str,
    max: usize,
) -> Result<String, JsValue> {
    causes_json(source, context, world, event, definition, max).map_err(|e| JsValue::from_str(&e))
}
