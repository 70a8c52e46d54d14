//! Privacy-pattern modelling: entities that display aspects, roles enacted
//! in contexts, derogable deontic rules, the five privacy-state templates,
//! a trace-replay engine and a line-oriented model language.

pub mod deontic;
pub mod dsl;
pub mod engine;
pub mod ids;
pub mod metamodel;
pub mod patterns;
pub mod verb;

pub use deontic::{evaluate, DeonticRule, Outcome, Stereotype, Verdict};
pub use ids::{AspectId, ContextId, EntityId, RoleId, RoleType, RuleId, WarrantId};
pub use metamodel::{validate_structure, EntityKind, Model, ModelError, Violation};
pub use patterns::{check, TemplateName};
pub use verb::Verb;
