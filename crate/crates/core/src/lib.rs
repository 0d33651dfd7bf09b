//! Actual causality in causal Kripke models.
//!
//! A causal Kripke model attaches a structural equation to every
//! (variable, world) pair; modal atoms in an equation make a variable depend
//! on its value at related worlds. [`semantics`] decides a hybrid modal
//! language with interventions, [`cause`] implements the three actual-cause
//! definitions and [`sufficiency`] the sufficient-cause notion.

mod circuit;

pub mod axioms;
pub mod cause;
pub mod cli;
pub mod corpus;
pub mod formula;
pub mod model;
pub mod modelfile;
pub mod parser;
pub mod semantics;
pub mod sufficiency;

pub use cause::{
    find_causes, is_cause, Candidate, CauseError, CauseVerdict, Definition, Outcome, SearchBudget, Witness,
};
pub use formula::Formula;
pub use model::{
    Context, Equation, Intervention, Model, ModelError, Signature, TableEquation, Valuation, Value, VarAt,
    VarDecl, VarKind,
};
pub use modelfile::{FileError, LoadedModel, ModelFile};
pub use parser::{parse, ParseError};
pub use semantics::Setting;
