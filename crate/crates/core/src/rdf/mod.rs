//! In-memory RDF triple store with deterministic Turtle output and a small
//! basic-graph-pattern query engine.
//!
//! The store keeps triples in a sorted set, so two graphs are equal exactly
//! when their triple sets are equal and serialization order never depends on
//! insertion order.

mod query;
mod turtle;

pub use query::{BgpQuery, PatternTerm, QueryError, SolutionTable, TriplePattern};
pub use turtle::TurtleError;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
pub const XSD_DOUBLE: &str = "http://www.w3.org/2001/XMLSchema#double";
pub const XSD_BOOLEAN: &str = "http://www.w3.org/2001/XMLSchema#boolean";
pub const XSD_ANY_URI: &str = "http://www.w3.org/2001/XMLSchema#anyURI";

/// An absolute IRI. Construction checks for a scheme, nothing more.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Iri(String);

impl Iri {
    pub fn new(value: impl Into<String>) -> Result<Self, InvalidIri> {
        let value = value.into();
        if is_absolute_iri(&value) {
            Ok(Iri(value))
        } else {
            Err(InvalidIri(value))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not an absolute IRI: {0:?}")]
pub struct InvalidIri(pub String);

/// `scheme ":" ...` with a sane scheme, per RFC 3987.
fn is_absolute_iri(s: &str) -> bool {
    let Some(colon) = s.find(':') else {
        return false;
    };
    let scheme = &s[..colon];
    let mut chars = scheme.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '+' || c == '-' || c == '.')
}

/// A typed literal. Plain strings carry the `xsd:string` datatype.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub lexical: String,
    pub datatype: Iri,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subject {
    Iri(Iri),
    Blank(String),
}

impl Subject {
    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Subject::Iri(iri) => Some(iri),
            Subject::Blank(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(Iri),
    Literal(Literal),
    Blank(String),
}

impl Term {
    pub fn iri(value: &str) -> Term {
        Term::Iri(Iri::new(value).expect("vocabulary IRIs are absolute"))
    }

    pub fn string(lexical: impl Into<String>) -> Term {
        Term::typed(lexical, XSD_STRING)
    }

    pub fn integer(value: i64) -> Term {
        Term::typed(value.to_string(), XSD_INTEGER)
    }

    pub fn typed(lexical: impl Into<String>, datatype: &str) -> Term {
        Term::Literal(Literal {
            lexical: lexical.into(),
            datatype: Iri::new(datatype).expect("datatype IRIs are absolute"),
        })
    }

    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(iri) => Some(iri),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(lit) => Some(lit),
            _ => None,
        }
    }

    /// Lexical form for literals, the raw string for IRIs and blank nodes.
    pub fn lexical(&self) -> &str {
        match self {
            Term::Iri(iri) => iri.as_str(),
            Term::Literal(lit) => &lit.lexical,
            Term::Blank(label) => label,
        }
    }

    pub fn as_integer(&self) -> Option<i64> {
        match self {
            Term::Literal(lit) if lit.datatype.as_str() == XSD_INTEGER => {
                lit.lexical.parse().ok()
            }
            _ => None,
        }
    }
}

impl From<Subject> for Term {
    fn from(subject: Subject) -> Term {
        match subject {
            Subject::Iri(iri) => Term::Iri(iri),
            Subject::Blank(label) => Term::Blank(label),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Subject,
    pub predicate: Iri,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Subject, predicate: Iri, object: Term) -> Triple {
        Triple {
            subject,
            predicate,
            object,
        }
    }
}

/// Triple set plus the prefix table used for compact Turtle output.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RdfGraph {
    triples: BTreeSet<Triple>,
    prefixes: BTreeMap<String, String>,
}

impl RdfGraph {
    pub fn new() -> RdfGraph {
        RdfGraph::default()
    }

    /// Insert a triple. Duplicate inserts are no-ops, returns whether the
    /// graph changed.
    pub fn add(&mut self, triple: Triple) -> bool {
        self.triples.insert(triple)
    }

    pub fn add_iri(&mut self, subject: &str, predicate: &str, object: &str) {
        self.add(Triple::new(
            Subject::Iri(Iri::new(subject).expect("absolute subject IRI")),
            Iri::new(predicate).expect("absolute predicate IRI"),
            Term::iri(object),
        ));
    }

    pub fn add_literal(&mut self, subject: &str, predicate: &str, object: Term) {
        self.add(Triple::new(
            Subject::Iri(Iri::new(subject).expect("absolute subject IRI")),
            Iri::new(predicate).expect("absolute predicate IRI"),
            object,
        ));
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.contains(triple)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    /// Register a prefix for compact serialization. Re-registering the same
    /// mapping is fine; a different namespace for a known prefix is refused.
    pub fn register_prefix(
        &mut self,
        prefix: &str,
        namespace: &str,
    ) -> Result<(), PrefixConflict> {
        match self.prefixes.get(prefix) {
            Some(existing) if existing != namespace => Err(PrefixConflict {
                prefix: prefix.to_string(),
                existing: existing.clone(),
                requested: namespace.to_string(),
            }),
            Some(_) => Ok(()),
            None => {
                self.prefixes
                    .insert(prefix.to_string(), namespace.to_string());
                Ok(())
            }
        }
    }

    pub fn prefixes(&self) -> &BTreeMap<String, String> {
        &self.prefixes
    }

    /// All subjects carrying `rdf:type <class>`, sorted.
    pub fn subjects_of_type(&self, class: &str) -> Vec<&Subject> {
        let rdf_type = crate::vocab::rdf::TYPE;
        self.triples
            .iter()
            .filter(|t| t.predicate.as_str() == rdf_type && t.object.lexical() == class)
            .map(|t| &t.subject)
            .collect()
    }

    /// Objects of `(subject, predicate, ?)`, sorted.
    pub fn objects(&self, subject: &str, predicate: &str) -> Vec<&Term> {
        self.triples
            .iter()
            .filter(|t| {
                t.subject.as_iri().map(Iri::as_str) == Some(subject)
                    && t.predicate.as_str() == predicate
            })
            .map(|t| &t.object)
            .collect()
    }

    pub fn serialize_turtle(&self) -> String {
        turtle::serialize(self)
    }

    pub fn parse_turtle(text: &str) -> Result<RdfGraph, TurtleError> {
        turtle::parse(text)
    }

    pub fn query_bgp(&self, query: &BgpQuery) -> SolutionTable {
        query::evaluate(self, query)
    }
}

impl Extend<Triple> for RdfGraph {
    fn extend<T: IntoIterator<Item = Triple>>(&mut self, iter: T) {
        for triple in iter {
            self.add(triple);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("prefix {prefix:?} already maps to <{existing}>, refusing <{requested}>")]
pub struct PrefixConflict {
    pub prefix: String,
    pub existing: String,
    pub requested: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_is_idempotent() {
        let mut g = RdfGraph::new();
        let t = Triple::new(
            Subject::Iri(Iri::new("http://x.example/s").unwrap()),
            Iri::new("http://x.example/p").unwrap(),
            Term::string("v"),
        );
        assert!(g.add(t.clone()));
        assert!(!g.add(t));
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn distinct_objects_are_distinct_triples() {
        let mut g = RdfGraph::new();
        g.add_iri("http://x.example/s", "http://x.example/p", "http://x.example/o1");
        g.add_iri("http://x.example/s", "http://x.example/p", "http://x.example/o2");
        assert_eq!(g.len(), 2);
    }

    #[test]
    fn typed_literal_round_trips_through_the_store() {
        let mut g = RdfGraph::new();
        g.add_literal("http://x.example/s", "http://x.example/p", Term::integer(4));
        let objects = g.objects("http://x.example/s", "http://x.example/p");
        assert_eq!(objects.len(), 1);
        let lit = objects[0].as_literal().unwrap();
        assert_eq!(lit.lexical, "4");
        assert_eq!(lit.datatype.as_str(), XSD_INTEGER);
    }

    #[test]
    fn iri_requires_scheme() {
        assert!(Iri::new("http://x.example/a").is_ok());
        assert!(Iri::new("urn:x:y").is_ok());
        assert!(Iri::new("no-scheme-here").is_err());
        assert!(Iri::new("1http://x").is_err());
    }

    #[test]
    fn prefix_conflict_is_detected() {
        let mut g = RdfGraph::new();
        g.register_prefix("ex", "http://a.example/").unwrap();
        g.register_prefix("ex", "http://a.example/").unwrap();
        assert!(g.register_prefix("ex", "http://b.example/").is_err());
    }
}
