//! Property tests: Turtle round-tripping and query monotonicity.

use mtp2skill_core::rdf::{
    BgpQuery, Iri, PatternTerm, RdfGraph, Subject, Term, TriplePattern, XSD_ANY_URI, XSD_INTEGER,
    XSD_STRING,
};
use mtp2skill_core::Triple;
use proptest::prelude::*;

const SUBJECT_IRIS: [&str; 4] = [
    "http://t.example/ns#alpha",
    "http://t.example/ns#beta",
    "http://t.example/other/gamma",
    "urn:t:delta",
];

const PREDICATE_IRIS: [&str; 3] = [
    "http://t.example/ns#linksTo",
    "http://t.example/ns#value",
    "http://www.w3.org/2000/01/rdf-schema#label",
];

fn subject_strategy() -> impl Strategy<Value = Subject> {
    prop_oneof![
        9 => prop::sample::select(SUBJECT_IRIS.to_vec())
            .prop_map(|iri| Subject::Iri(Iri::new(iri).unwrap())),
        1 => "[a-z][a-z0-9]{0,6}".prop_map(Subject::Blank),
    ]
}

fn object_strategy() -> impl Strategy<Value = Term> {
    prop_oneof![
        3 => prop::sample::select(SUBJECT_IRIS.to_vec()).prop_map(Term::iri),
        3 => any::<String>().prop_map(Term::string),
        2 => any::<i64>().prop_map(Term::integer),
        1 => "[ -~]{0,20}".prop_map(|s| Term::typed(s, XSD_ANY_URI)),
        1 => "-?[0-9]{1,6}".prop_map(|s| Term::typed(s, XSD_INTEGER)),
    ]
}

fn triple_strategy() -> impl Strategy<Value = Triple> {
    (
        subject_strategy(),
        prop::sample::select(PREDICATE_IRIS.to_vec()),
        object_strategy(),
    )
        .prop_map(|(subject, predicate, object)| {
            Triple::new(subject, Iri::new(predicate).unwrap(), object)
        })
}

fn graph_strategy() -> impl Strategy<Value = RdfGraph> {
    prop::collection::vec(triple_strategy(), 0..24).prop_map(|triples| {
        let mut graph = RdfGraph::new();
        graph.register_prefix("t", "http://t.example/ns#").unwrap();
        graph
            .register_prefix("rdfs", "http://www.w3.org/2000/01/rdf-schema#")
            .unwrap();
        graph
            .register_prefix("xsd", "http://www.w3.org/2001/XMLSchema#")
            .unwrap();
        graph.extend(triples);
        graph
    })
}

proptest! {
    #[test]
    fn turtle_round_trip_preserves_the_graph(graph in graph_strategy()) {
        let text = graph.serialize_turtle();
        let parsed = RdfGraph::parse_turtle(&text)
            .unwrap_or_else(|e| panic!("reparse failed: {e}\n{text}"));
        prop_assert_eq!(&parsed, &graph);
    }

    #[test]
    fn serialization_is_a_fixpoint(graph in graph_strategy()) {
        let once = graph.serialize_turtle();
        let twice = RdfGraph::parse_turtle(&once).unwrap().serialize_turtle();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn adding_a_triple_never_shrinks_query_results(
        graph in graph_strategy(),
        extra in triple_strategy(),
    ) {
        let query = BgpQuery::new(
            vec![
                TriplePattern::new(
                    PatternTerm::var("s"),
                    PatternTerm::iri("http://t.example/ns#linksTo"),
                    PatternTerm::var("o"),
                ),
                TriplePattern::new(
                    PatternTerm::var("o"),
                    PatternTerm::var("p"),
                    PatternTerm::var("x"),
                ),
            ],
            vec!["s".to_string(), "o".to_string(), "x".to_string()],
        )
        .unwrap();
        let before = graph.query_bgp(&query);
        let mut extended = graph.clone();
        extended.add(extra);
        let after = extended.query_bgp(&query);
        for row in &before.rows {
            prop_assert!(after.rows.contains(row), "row {row:?} vanished");
        }
    }

    #[test]
    fn literals_keep_their_exact_lexical_form(lexical in any::<String>()) {
        let mut graph = RdfGraph::new();
        graph.add_literal(
            "http://t.example/ns#thing",
            "http://t.example/ns#value",
            Term::string(lexical.clone()),
        );
        let text = graph.serialize_turtle();
        let parsed = RdfGraph::parse_turtle(&text).unwrap();
        let objects = parsed.objects("http://t.example/ns#thing", "http://t.example/ns#value");
        prop_assert_eq!(objects.len(), 1);
        let literal = objects[0].as_literal().unwrap();
        prop_assert_eq!(&literal.lexical, &lexical);
        prop_assert_eq!(literal.datatype.as_str(), XSD_STRING);
    }
}
