//! The `.ck` model file: a TOML document describing worlds, relation,
//! variables with their equations, named contexts and optional named
//! queries. Formulas are embedded as strings in the formula syntax.
//!
//! ```toml
//! worlds = ["w0", "w1"]
//! relation = [["w0", "w1"]]
//!
//! [exogenous.U]              # range defaults to [0, 1]
//!
//! [endogenous.p]
//! equation = "U=1"           # formula, integer constant, or table
//! at = { w0 = 0 }            # per-world equation overrides
//!
//! [endogenous.s]
//! range = [0, 1, 2]
//! equation = { parents = ["p", "p@w1"], rows = [[0, 0, 0], [0, 1, 1], [1, 0, 1], [1, 1, 2]] }
//!
//! [contexts.t]
//! U = [0, 1]                 # one value per world, a scalar, or { w0 = 0, w1 = 1 }
//! ```
//!
//! Unknown keys are rejected everywhere.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    Context, Equation, Model, ModelError, Signature, TableEquation, Value, VarAt, VarDecl, VarKind,
};
use crate::parser::{parse, ParseError};
use crate::semantics::Setting;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{0}")]
    Toml(#[from] toml::de::Error),
    #[error("{location}: {source}")]
    Formula {
        location: String,
        #[source]
        source: ParseError,
    },
    #[error("{location}: {source}")]
    Model {
        location: String,
        #[source]
        source: ModelError,
    },
    #[error("{0}")]
    Invalid(String),
}

impl FileError {
    /// True for syntax-level problems (TOML or embedded formula syntax).
    pub fn is_syntax(&self) -> bool {
        matches!(self, FileError::Toml(_) | FileError::Formula { .. })
    }
}

fn binary_range() -> Vec<Value> {
    vec![0, 1]
}

fn is_binary(r: &Vec<Value>) -> bool {
    r.as_slice() == [0, 1]
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub worlds: Vec<String>,
    #[serde(default)]
    pub relation: Vec<(String, String)>,
    #[serde(default)]
    pub exogenous: BTreeMap<String, ExogenousDecl>,
    #[serde(default)]
    pub endogenous: BTreeMap<String, EndogenousDecl>,
    #[serde(default)]
    pub contexts: BTreeMap<String, BTreeMap<String, ContextValue>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub queries: Vec<QuerySpec>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExogenousDecl {
    #[serde(default = "binary_range", skip_serializing_if = "is_binary")]
    pub range: Vec<Value>,
    /// Per-world range overrides.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub ranges: BTreeMap<String, Vec<Value>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndogenousDecl {
    #[serde(default = "binary_range", skip_serializing_if = "is_binary")]
    pub range: Vec<Value>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub ranges: BTreeMap<String, Vec<Value>>,
    /// Equation used at every world without an override in `at`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equation: Option<EquationSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub at: BTreeMap<String, EquationSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EquationSpec {
    Constant(Value),
    Formula(String),
    Table(TableSpec),
}

/// Parents are `X` (same world as the target) or `X@w`. Each row lists the
/// parent values followed by the output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub parents: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ContextValue {
    Uniform(Value),
    PerWorld(Vec<Value>),
    ByWorld(BTreeMap<String, Value>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryKind {
    Sat,
    Eval,
    Cause,
    Causes,
    Part,
    Possibility,
    Certainty,
    Modalcause,
    Suffcause,
    Axioms,
}

impl QueryKind {
    pub fn subcommand(self) -> &'static str {
        match self {
            QueryKind::Sat => "sat",
            QueryKind::Eval => "eval",
            QueryKind::Cause => "cause",
            QueryKind::Causes => "causes",
            QueryKind::Part => "part",
            QueryKind::Possibility => "possibility",
            QueryKind::Certainty => "certainty",
            QueryKind::Modalcause => "modalcause",
            QueryKind::Suffcause => "suffcause",
            QueryKind::Axioms => "axioms",
        }
    }
}

/// A named query stored with a model; mirrors the command-line flags of the
/// matching subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySpec {
    pub name: String,
    pub kind: QueryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub world: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variable: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modality: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub definition: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_conjuncts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scope: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nearby: Option<String>,
}

impl QuerySpec {
    /// Command-line arguments (after the program name) that run this query
    /// against `model_path`.
    pub fn to_args(&self, model_path: &str) -> Vec<String> {
        let mut args = vec![self.kind.subcommand().to_string(), model_path.to_string()];
        let mut push = |flag: &str, v: Option<String>| {
            if let Some(v) = v {
                args.push(flag.to_string());
                args.push(v);
            }
        };
        push("--context", self.context.clone());
        push("--world", self.world.clone());
        push("--formula", self.formula.clone());
        push("--candidate", self.candidate.clone());
        push("--event", self.event.clone());
        push("--atom", self.atom.clone());
        push("--variable", self.variable.clone());
        push("--value", self.value.map(|v| v.to_string()));
        push("--modality", self.modality.clone());
        push("--def", self.definition.clone());
        push("--max", self.max_conjuncts.map(|v| v.to_string()));
        push("--scope", self.scope.clone());
        push("--nearby", self.nearby.clone());
        args
    }
}

/// A built model with its named contexts.
#[derive(Clone, Debug)]
pub struct LoadedModel {
    pub model: Model,
    pub contexts: BTreeMap<String, Context>,
    pub file: ModelFile,
}

impl LoadedModel {
    pub fn context(&self, name: &str) -> Result<&Context, FileError> {
        self.contexts.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.contexts.keys().map(String::as_str).collect();
            FileError::Invalid(format!(
                "unknown context `{name}` (known: {})",
                known.join(", ")
            ))
        })
    }

    pub fn setting(&self, name: &str) -> Result<Setting, FileError> {
        let ctx = self.context(name)?.clone();
        Setting::new(self.model.clone(), ctx).map_err(|source| FileError::Model {
            location: format!("contexts.{name}"),
            source,
        })
    }
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<ModelFile, FileError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("model files always serialize")
    }

    pub fn load(text: &str) -> Result<LoadedModel, FileError> {
        Self::parse(text)?.build()
    }

    pub fn build(&self) -> Result<LoadedModel, FileError> {
        let mut sig = Signature::new();
        for (name, decl) in &self.exogenous {
            let mut v = VarDecl::new(name, VarKind::Exogenous, decl.range.iter().copied());
            for (w, r) in &decl.ranges {
                v = v.with_range_at(w, r.iter().copied());
            }
            sig.add(v).map_err(|source| FileError::Model {
                location: format!("exogenous.{name}"),
                source,
            })?;
        }
        for (name, decl) in &self.endogenous {
            let mut v = VarDecl::new(name, VarKind::Endogenous, decl.range.iter().copied());
            for (w, r) in &decl.ranges {
                v = v.with_range_at(w, r.iter().copied());
            }
            sig.add(v).map_err(|source| FileError::Model {
                location: format!("endogenous.{name}"),
                source,
            })?;
        }

        let mut equations = Vec::new();
        for (name, decl) in &self.endogenous {
            for w in decl.at.keys() {
                if !self.worlds.contains(w) {
                    return Err(FileError::Model {
                        location: format!("endogenous.{name}.at"),
                        source: ModelError::Dangling(format!("world `{w}`")),
                    });
                }
            }
            for w in &self.worlds {
                let (spec, location) = match decl.at.get(w) {
                    Some(spec) => (spec, format!("endogenous.{name}.at.{w}")),
                    None => match &decl.equation {
                        Some(spec) => (spec, format!("endogenous.{name}.equation")),
                        None => {
                            return Err(FileError::Model {
                                location: format!("endogenous.{name}"),
                                source: ModelError::MissingEquation(VarAt::new(name, w)),
                            })
                        }
                    },
                };
                let eq = equation_from_spec(spec, w, &location)?;
                equations.push((VarAt::new(name, w), eq));
            }
        }

        let model = Model::build(
            sig,
            self.worlds.iter().cloned(),
            self.relation.iter().cloned(),
            equations,
        )
        .map_err(|source| FileError::Model {
            location: "model".into(),
            source,
        })?;

        let mut contexts = BTreeMap::new();
        for (cname, assignments) in &self.contexts {
            let location = format!("contexts.{cname}");
            let mut values = Vec::new();
            for (var, cv) in assignments {
                match cv {
                    ContextValue::Uniform(v) => {
                        values.extend(self.worlds.iter().map(|w| (VarAt::new(var, w), *v)))
                    }
                    ContextValue::PerWorld(vs) => {
                        if vs.len() != self.worlds.len() {
                            return Err(FileError::Invalid(format!(
                                "{location}.{var}: expected {} values (one per world), found {}",
                                self.worlds.len(),
                                vs.len()
                            )));
                        }
                        values.extend(self.worlds.iter().zip(vs).map(|(w, v)| (VarAt::new(var, w), *v)));
                    }
                    ContextValue::ByWorld(map) => {
                        values.extend(map.iter().map(|(w, v)| (VarAt::new(var, w), *v)))
                    }
                }
            }
            let ctx = Context::new(&model, values).map_err(|source| FileError::Model {
                location: location.clone(),
                source,
            })?;
            contexts.insert(cname.clone(), ctx);
        }

        let mut names = std::collections::BTreeSet::new();
        for q in &self.queries {
            if !names.insert(q.name.as_str()) {
                return Err(FileError::Invalid(format!("query `{}` defined twice", q.name)));
            }
        }

        Ok(LoadedModel {
            model,
            contexts,
            file: self.clone(),
        })
    }
}

fn equation_from_spec(spec: &EquationSpec, world: &str, location: &str) -> Result<Equation, FileError> {
    Ok(match spec {
        EquationSpec::Constant(v) => Equation::Constant(*v),
        EquationSpec::Formula(text) => Equation::Formula(parse(text).map_err(|source| {
            FileError::Formula {
                location: location.to_string(),
                source,
            }
        })?),
        EquationSpec::Table(t) => {
            let parents: Vec<VarAt> = t
                .parents
                .iter()
                .map(|p| match p.split_once('@') {
                    Some((var, w)) => VarAt::new(var, w),
                    None => VarAt::new(p.as_str(), world),
                })
                .collect();
            let mut rows = BTreeMap::new();
            for row in &t.rows {
                let Some((out, key)) = row.split_last() else {
                    return Err(FileError::Invalid(format!("{location}: empty table row")));
                };
                if key.len() != parents.len() {
                    return Err(FileError::Invalid(format!(
                        "{location}: row {row:?} needs {} parent values and an output",
                        parents.len()
                    )));
                }
                if rows.insert(key.to_vec(), *out).is_some() {
                    return Err(FileError::Invalid(format!(
                        "{location}: duplicate row for {key:?}"
                    )));
                }
            }
            Equation::Table(TableEquation { parents, rows })
        }
    })
}
