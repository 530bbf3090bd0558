//! Combine per-module graphs into one shared plant model.

use std::collections::BTreeMap;

use crate::rdf::RdfGraph;
use crate::vocab;

use super::MappingError;

/// Set union of the input graphs with merged prefix tables.
///
/// Inputs must come from distinct base IRIs: a module IRI showing up in two
/// graphs means the same namespace was used twice, and the union would
/// silently conflate individuals.
pub fn merge(graphs: &[RdfGraph]) -> Result<RdfGraph, MappingError> {
    let mut out = RdfGraph::new();
    let mut module_sources: BTreeMap<String, usize> = BTreeMap::new();
    for (index, graph) in graphs.iter().enumerate() {
        for module in graph.subjects_of_type(vocab::vdi2206::MODULE) {
            let Some(iri) = module.as_iri() else { continue };
            if let Some(previous) = module_sources.insert(iri.as_str().to_string(), index) {
                if previous != index {
                    return Err(MappingError::BaseIriCollision(iri.as_str().to_string()));
                }
            }
        }
        for (prefix, namespace) in graph.prefixes() {
            out.register_prefix(prefix, namespace)?;
        }
        out.extend(graph.iter().cloned());
    }
    Ok(out)
}
