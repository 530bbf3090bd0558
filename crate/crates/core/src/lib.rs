//! mtp2skill: turn Module Type Package (MTP) AutomationML models into a
//! capability/skill ontology, check the result with competency questions,
//! and drive the mapped skills against a simulated Process Equipment
//! Assembly over a small JSON-lines wire protocol.

pub mod aml;
pub mod config;
pub mod cq;
pub mod executor;
pub mod mapping;
pub mod rdf;
pub mod sim;
pub mod vocab;
pub mod wire;

pub use aml::{AmlDocument, AmlError, ContainerKind, Element, OpcUaNodeRef, PathExpr};
pub use mapping::{map_document, merge, ConversionResult, MappingError, MappingRule};
pub use rdf::{BgpQuery, Iri, RdfGraph, SolutionTable, Term, Triple};
pub use vocab::{SkillConfig, StateMachineTemplate};
