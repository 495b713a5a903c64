//! Triple graph grammar engine with an interactive step debugger.
//!
//! The crate derives model generation (GEN), forward (FWD) and backward
//! (BWD) transformations from declarative triple rules, records every rule
//! application in a replayable protocol, and builds view models and diagram
//! text for inspecting rules, matches and protocol states.

pub mod engine;
pub mod fixture;
pub mod graph;
pub mod matcher;
pub mod rules;
pub mod serialization;
pub mod view;

pub use engine::{
    Breakpoint, BreakpointKind, DataPackage, EngineError, HaltReason, Mode, Protocol, RuleApplication, RuleStatus,
    Session,
};
pub use graph::{check_conformance, k_neighborhood, Domain, TripleGraph, TripleMetamodel, Violation};
pub use matcher::{find_matches, is_still_valid, MarkingState, Match};
pub use rules::{operationalize, validate_rule, OperationKind, OperationalRule, Tgg, TggRule};
