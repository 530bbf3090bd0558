//! Basic-graph-pattern matching: conjunctive triple patterns with named
//! variables, evaluated by successive extension of candidate bindings.
//! Results carry distinct rows, sorted by their projected terms.

use std::collections::BTreeMap;

use super::{RdfGraph, Subject, Term};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternTerm {
    Var(String),
    Term(Term),
}

impl PatternTerm {
    pub fn var(name: &str) -> PatternTerm {
        PatternTerm::Var(name.to_string())
    }

    pub fn iri(value: &str) -> PatternTerm {
        PatternTerm::Term(Term::iri(value))
    }

    fn var_name(&self) -> Option<&str> {
        match self {
            PatternTerm::Var(name) => Some(name),
            PatternTerm::Term(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl TriplePattern {
    pub fn new(subject: PatternTerm, predicate: PatternTerm, object: PatternTerm) -> Self {
        TriplePattern {
            subject,
            predicate,
            object,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BgpQuery {
    patterns: Vec<TriplePattern>,
    projection: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("projected variable {0:?} does not occur in any pattern")]
    UnboundProjection(String),
}

impl BgpQuery {
    pub fn new(
        patterns: Vec<TriplePattern>,
        projection: Vec<String>,
    ) -> Result<BgpQuery, QueryError> {
        for var in &projection {
            let occurs = patterns.iter().any(|p| {
                p.subject.var_name() == Some(var)
                    || p.predicate.var_name() == Some(var)
                    || p.object.var_name() == Some(var)
            });
            if !occurs {
                return Err(QueryError::UnboundProjection(var.clone()));
            }
        }
        Ok(BgpQuery {
            patterns,
            projection,
        })
    }

    pub fn patterns(&self) -> &[TriplePattern] {
        &self.patterns
    }

    pub fn projection(&self) -> &[String] {
        &self.projection
    }

    pub fn variables(&self) -> Vec<&str> {
        let mut vars: Vec<&str> = Vec::new();
        for p in &self.patterns {
            for slot in [&p.subject, &p.predicate, &p.object] {
                if let Some(name) = slot.var_name() {
                    if !vars.contains(&name) {
                        vars.push(name);
                    }
                }
            }
        }
        vars
    }

    /// Substitute a variable with a concrete term everywhere it occurs.
    /// Bound variables disappear from the projection.
    pub fn bind(&self, name: &str, term: &Term) -> BgpQuery {
        let replace = |slot: &PatternTerm| -> PatternTerm {
            match slot {
                PatternTerm::Var(v) if v == name => PatternTerm::Term(term.clone()),
                other => other.clone(),
            }
        };
        BgpQuery {
            patterns: self
                .patterns
                .iter()
                .map(|p| TriplePattern {
                    subject: replace(&p.subject),
                    predicate: replace(&p.predicate),
                    object: replace(&p.object),
                })
                .collect(),
            projection: self
                .projection
                .iter()
                .filter(|v| v.as_str() != name)
                .cloned()
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionTable {
    pub variables: Vec<String>,
    pub rows: Vec<Vec<Term>>,
}

impl SolutionTable {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Values of one projected column, in row order.
    pub fn column(&self, variable: &str) -> Vec<&Term> {
        match self.variables.iter().position(|v| v == variable) {
            Some(idx) => self.rows.iter().map(|row| &row[idx]).collect(),
            None => Vec::new(),
        }
    }
}

type Binding = BTreeMap<String, Term>;

/// Borrowed view of a triple position, so matching never allocates.
#[derive(Clone, Copy)]
enum TermView<'a> {
    Iri(&'a super::Iri),
    Literal(&'a super::Literal),
    Blank(&'a str),
}

impl<'a> TermView<'a> {
    fn of_subject(subject: &'a Subject) -> TermView<'a> {
        match subject {
            Subject::Iri(iri) => TermView::Iri(iri),
            Subject::Blank(label) => TermView::Blank(label),
        }
    }

    fn of_term(term: &'a Term) -> TermView<'a> {
        match term {
            Term::Iri(iri) => TermView::Iri(iri),
            Term::Literal(lit) => TermView::Literal(lit),
            Term::Blank(label) => TermView::Blank(label),
        }
    }

    fn matches(&self, term: &Term) -> bool {
        match (self, term) {
            (TermView::Iri(a), Term::Iri(b)) => **a == *b,
            (TermView::Literal(a), Term::Literal(b)) => **a == *b,
            (TermView::Blank(a), Term::Blank(b)) => *a == b,
            _ => false,
        }
    }

    fn to_term(self) -> Term {
        match self {
            TermView::Iri(iri) => Term::Iri(iri.clone()),
            TermView::Literal(lit) => Term::Literal(lit.clone()),
            TermView::Blank(label) => Term::Blank(label.to_string()),
        }
    }
}

pub fn evaluate(graph: &RdfGraph, query: &BgpQuery) -> SolutionTable {
    // Every realistic pattern fixes the predicate, so one pass worth of
    // indexing pays for itself immediately.
    let all: Vec<&super::Triple> = graph.iter().collect();
    let mut by_predicate: BTreeMap<&str, Vec<&super::Triple>> = BTreeMap::new();
    for triple in &all {
        by_predicate
            .entry(triple.predicate.as_str())
            .or_default()
            .push(triple);
    }
    let empty: Vec<&super::Triple> = Vec::new();

    let mut bindings: Vec<Binding> = vec![Binding::new()];
    for pattern in &query.patterns {
        let mut next: Vec<Binding> = Vec::new();
        for binding in &bindings {
            let predicate_key: Option<&str> = match &pattern.predicate {
                PatternTerm::Term(Term::Iri(iri)) => Some(iri.as_str()),
                PatternTerm::Term(_) => None,
                PatternTerm::Var(name) => binding.get(name).and_then(|t| match t {
                    Term::Iri(iri) => Some(iri.as_str()),
                    _ => None,
                }),
            };
            let candidates = match predicate_key {
                Some(key) => by_predicate.get(key).unwrap_or(&empty),
                None => &all,
            };
            for triple in candidates.iter().copied() {
                let views = [
                    TermView::of_subject(&triple.subject),
                    TermView::Iri(&triple.predicate),
                    TermView::of_term(&triple.object),
                ];
                let slots = [&pattern.subject, &pattern.predicate, &pattern.object];
                // Fresh variables introduced by this pattern, checked for
                // self-consistency before the binding is cloned.
                let mut fresh: Vec<(&str, TermView<'_>)> = Vec::new();
                let mut ok = true;
                for (slot, view) in slots.iter().zip(views) {
                    match slot {
                        PatternTerm::Term(term) => {
                            if !view.matches(term) {
                                ok = false;
                                break;
                            }
                        }
                        PatternTerm::Var(name) => {
                            if let Some(bound) = binding.get(name) {
                                if !view.matches(bound) {
                                    ok = false;
                                    break;
                                }
                            } else if let Some((_, earlier)) =
                                fresh.iter().find(|(n, _)| n == name)
                            {
                                if !view.matches(&earlier.to_term()) {
                                    ok = false;
                                    break;
                                }
                            } else {
                                fresh.push((name, view));
                            }
                        }
                    }
                }
                if ok {
                    let mut candidate = binding.clone();
                    for (name, view) in fresh {
                        candidate.insert(name.to_string(), view.to_term());
                    }
                    next.push(candidate);
                }
            }
        }
        bindings = next;
        if bindings.is_empty() {
            break;
        }
    }

    let mut rows: Vec<Vec<Term>> = bindings
        .iter()
        .filter_map(|binding| {
            query
                .projection
                .iter()
                .map(|var| binding.get(var).cloned())
                .collect::<Option<Vec<Term>>>()
        })
        .collect();
    rows.sort();
    rows.dedup();
    SolutionTable {
        variables: query.projection.clone(),
        rows,
    }
}
