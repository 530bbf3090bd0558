//! Competency question and validation tests on the mixer pipeline.

use std::collections::BTreeMap;

use mtp2skill_core::cq::{list_cqs, run_cq, validate, CqError, CqId};
use mtp2skill_core::mapping::map_document;
use mtp2skill_core::rdf::{Subject, Term, Triple};
use mtp2skill_core::vocab::{self, vdi2206};
use mtp2skill_core::{AmlDocument, ConversionResult, Iri, SkillConfig};

const MIXER: &str = include_str!("../fixtures/mixer.aml");
const BASE: &str = "http://plant.example/mixer";

fn pipeline() -> (AmlDocument, ConversionResult) {
    let doc = AmlDocument::parse(MIXER.as_bytes()).unwrap();
    let result = map_document(&doc, BASE, &SkillConfig::default()).unwrap();
    (doc, result)
}

fn iri(local: &str) -> Term {
    Term::iri(&format!("{BASE}#{local}"))
}

fn bind(pairs: &[(&str, Term)]) -> BTreeMap<String, Term> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

#[test]
fn there_are_exactly_nine_questions() {
    let cqs = list_cqs();
    assert_eq!(cqs.len(), 9);
    let ids: Vec<String> = cqs.iter().map(|cq| cq.id.to_string()).collect();
    assert_eq!(
        ids,
        ["CQ1", "CQ2", "CQ3", "CQ4", "CQ5", "CQ6", "CQ7", "CQ8", "CQ9"]
    );
    for cq in &cqs {
        assert!(!cq.query.projection().is_empty());
    }
}

#[test]
fn cq1_lists_the_three_components() {
    let (_, result) = pipeline();
    let table = run_cq(
        &result.graph,
        CqId::Cq1,
        &bind(&[("module", iri("Mixer"))]),
    )
    .unwrap();
    assert_eq!(table.len(), 3);
    let names: Vec<&str> = table.column("name").iter().map(|t| t.lexical()).collect();
    assert!(names.contains(&"TemperatureSensor"));
    assert!(names.contains(&"LevelSensor"));
    assert!(names.contains(&"StirrerMotor"));
}

#[test]
fn cq2_maps_a_state_cur_reading_to_the_state() {
    let (_, result) = pipeline();
    let table = run_cq(
        &result.graph,
        CqId::Cq2,
        &bind(&[
            ("skill", iri("Mixer_Mixing_Continuous")),
            ("value", Term::integer(64)),
        ]),
    )
    .unwrap();
    assert_eq!(table.len(), 1);
    assert_eq!(
        table.rows[0][0].lexical(),
        format!("{BASE}#Mixer_Mixing_Continuous_Execute")
    );
    assert_eq!(table.rows[0][1].lexical(), "Execute");
}

#[test]
fn cq2_is_scoped_to_the_bound_skill() {
    let (_, result) = pipeline();
    for skill in ["Mixer_Mixing_Continuous", "Mixer_Mixing_Batch"] {
        let table = run_cq(
            &result.graph,
            CqId::Cq2,
            &bind(&[("skill", iri(skill)), ("value", Term::integer(16))]),
        )
        .unwrap();
        assert_eq!(table.len(), 1, "one Idle row for {skill}");
        assert!(table.rows[0][0].lexical().starts_with(&format!("{BASE}#{skill}")));
    }
}

#[test]
fn cq2_answers_nothing_for_values_outside_the_table() {
    let (_, result) = pipeline();
    let table = run_cq(
        &result.graph,
        CqId::Cq2,
        &bind(&[
            ("skill", iri("Mixer_Mixing_Continuous")),
            ("value", Term::integer(3)),
        ]),
    )
    .unwrap();
    assert!(table.is_empty());
}

#[test]
fn cq3_lists_the_single_capability() {
    let (_, result) = pipeline();
    let table = run_cq(
        &result.graph,
        CqId::Cq3,
        &bind(&[("module", iri("Mixer"))]),
    )
    .unwrap();
    assert_eq!(table.len(), 1);
    assert_eq!(table.rows[0][1].lexical(), "Mixing");
}

#[test]
fn cq4_lists_both_skills_of_the_capability() {
    let (_, result) = pipeline();
    let table = run_cq(
        &result.graph,
        CqId::Cq4,
        &bind(&[("capability", iri("Mixer_Mixing"))]),
    )
    .unwrap();
    assert_eq!(table.len(), 2);
}

#[test]
fn cq5_lists_parameters_with_values() {
    let (_, result) = pipeline();
    let table = run_cq(
        &result.graph,
        CqId::Cq5,
        &bind(&[("skill", iri("Mixer_Mixing_Continuous"))]),
    )
    .unwrap();
    // Rpm VExt/VMin/VMax/VUnit + SpeedLimit x4 + ProcedureExt.
    assert_eq!(table.len(), 9);
    let pairs: Vec<(String, String)> = table
        .rows
        .iter()
        .map(|row| (row[1].lexical().to_string(), row[2].lexical().to_string()))
        .collect();
    assert!(pairs.contains(&("VExt".to_string(), "120".to_string())));
    assert!(pairs.contains(&("VUnit".to_string(), "rpm".to_string())));
    assert!(pairs.contains(&("ProcedureExt".to_string(), "1".to_string())));
}

#[test]
fn cq6_start_requires_four() {
    let (_, result) = pipeline();
    for skill in ["Mixer_Mixing_Continuous", "Mixer_Mixing_Batch"] {
        let table = run_cq(
            &result.graph,
            CqId::Cq6,
            &bind(&[("skill", iri(skill)), ("transition", Term::string("Start"))]),
        )
        .unwrap();
        assert_eq!(table.len(), 1);
        assert_eq!(table.column("value")[0].as_integer(), Some(4));
    }
}

#[test]
fn cq6_stop_answers_once_per_stoppable_state() {
    let (_, result) = pipeline();
    let table = run_cq(
        &result.graph,
        CqId::Cq6,
        &bind(&[
            ("skill", iri("Mixer_Mixing_Continuous")),
            ("transition", Term::string("Stop")),
        ]),
    )
    .unwrap();
    assert_eq!(table.len(), 11);
    assert!(table.column("value").iter().all(|v| v.as_integer() == Some(8)));
}

#[test]
fn cq7_resolves_the_endpoint_and_node_addresses() {
    let (_, result) = pipeline();
    let table = run_cq(
        &result.graph,
        CqId::Cq7,
        &bind(&[("skill", iri("Mixer_Mixing_Continuous"))]),
    )
    .unwrap();
    assert_eq!(table.len(), 1);
    assert_eq!(table.column("endpoint")[0].lexical(), "opc.tcp://mixer.example:4840");
    assert_eq!(table.column("commandId")[0].lexical(), "Mixing.CommandExt");
    assert_eq!(table.column("stateId")[0].lexical(), "Mixing.StateCur");
}

#[test]
fn cq8_lists_the_two_procedure_outputs() {
    let (_, result) = pipeline();
    let table = run_cq(
        &result.graph,
        CqId::Cq8,
        &bind(&[("skill", iri("Mixer_Mixing_Batch"))]),
    )
    .unwrap();
    assert_eq!(table.len(), 2);
    let names: Vec<&str> = table.column("name").iter().map(|t| t.lexical()).collect();
    assert_eq!(names, ["ProcedureCur", "ProcedureReq"]);
}

#[test]
fn cq9_enumerates_transitions_leaving_idle() {
    let (_, result) = pipeline();
    let table = run_cq(
        &result.graph,
        CqId::Cq9,
        &bind(&[
            ("skill", iri("Mixer_Mixing_Continuous")),
            ("value", Term::integer(16)),
        ]),
    )
    .unwrap();
    let mut names: Vec<&str> = table.column("name").iter().map(|t| t.lexical()).collect();
    names.sort();
    names.dedup();
    assert_eq!(names, ["Abort", "Start", "Stop"]);
}

#[test]
fn cq9_without_stop_from_idle_answers_two_rows() {
    let mut config = SkillConfig::default();
    config
        .template
        .transitions
        .retain(|t| !(t.from == "Idle" && t.command.as_deref() == Some("Stop")));
    let doc = AmlDocument::parse(MIXER.as_bytes()).unwrap();
    let result = map_document(&doc, BASE, &config).unwrap();
    let table = run_cq(
        &result.graph,
        CqId::Cq9,
        &bind(&[
            ("skill", iri("Mixer_Mixing_Continuous")),
            ("value", Term::integer(16)),
        ]),
    )
    .unwrap();
    let mut names: Vec<&str> = table.column("name").iter().map(|t| t.lexical()).collect();
    names.sort();
    assert_eq!(names, ["Abort", "Start"]);
}

#[test]
fn missing_bindings_are_reported() {
    let (_, result) = pipeline();
    let err = run_cq(&result.graph, CqId::Cq2, &BTreeMap::new()).unwrap_err();
    assert!(matches!(err, CqError::MissingBinding { .. }));
    let err = run_cq(
        &result.graph,
        CqId::Cq1,
        &bind(&[("skill", iri("Mixer"))]),
    )
    .unwrap_err();
    assert!(matches!(err, CqError::UnknownBinding { .. }));
}

#[test]
fn unknown_cq_ids_are_reported() {
    let err = "CQ99".parse::<CqId>().unwrap_err();
    assert_eq!(err, CqError::UnknownCq("CQ99".to_string()));
    assert_eq!("cq4".parse::<CqId>().unwrap(), CqId::Cq4);
    assert_eq!("7".parse::<CqId>().unwrap(), CqId::Cq7);
}

#[test]
fn golden_pipeline_passes_validation() {
    let (doc, result) = pipeline();
    let report = validate(&doc, &result, &SkillConfig::default());
    assert!(report.pass, "{}", report.render_text());
    assert_eq!(report.cqs.len(), 9);
    assert!(report.render_text().contains("overall: PASS"));
}

#[test]
fn deleting_a_sensor_triple_fails_cq1_and_names_the_component() {
    let (doc, mut result) = pipeline();
    let sensor = format!("{BASE}#Mixer_TemperatureSensor");
    let mut graph = mtp2skill_core::RdfGraph::new();
    for (prefix, ns) in result.graph.prefixes() {
        graph.register_prefix(prefix, ns).unwrap();
    }
    for triple in result.graph.iter() {
        let drop = triple.subject.as_iri().map(|i| i.as_str()) == Some(sensor.as_str())
            && triple.predicate.as_str() == vocab::rdf::TYPE;
        if !drop {
            graph.add(triple.clone());
        }
    }
    result.graph = graph;
    let report = validate(&doc, &result, &SkillConfig::default());
    assert!(!report.pass);
    let cq1 = &report.cqs[0];
    assert_eq!(cq1.status, "fail");
    assert!(cq1.actual.contains("TemperatureSensor"), "{}", cq1.actual);
}

#[test]
fn empty_graph_fails_every_structural_question() {
    let (doc, mut result) = pipeline();
    result.graph = mtp2skill_core::RdfGraph::new();
    let report = validate(&doc, &result, &SkillConfig::default());
    assert!(!report.pass);
    for outcome in &report.cqs {
        assert_eq!(outcome.status, "fail", "{} should fail", outcome.cq);
    }
}

#[test]
fn cq1_row_count_equals_source_component_count() {
    let (doc, result) = pipeline();
    let source_count = doc
        .all_elements()
        .filter(|el| ["IndicatorElement", "ActiveElement"].contains(&el.suc_class()))
        .count();
    let table = run_cq(
        &result.graph,
        CqId::Cq1,
        &bind(&[("module", iri("Mixer"))]),
    )
    .unwrap();
    assert_eq!(table.len(), source_count);
}

#[test]
fn extra_foreign_triples_do_not_break_validation() {
    let (doc, mut result) = pipeline();
    result.graph.add(Triple::new(
        Subject::Iri(Iri::new("http://elsewhere.example/x").unwrap()),
        Iri::new(vocab::rdf::TYPE).unwrap(),
        Term::iri(vdi2206::SENSOR),
    ));
    let report = validate(&doc, &result, &SkillConfig::default());
    assert!(report.pass, "{}", report.render_text());
}
