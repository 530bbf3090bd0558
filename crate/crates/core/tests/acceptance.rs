//! Acceptance suite: one test per shipping criterion, each printing a
//! PASS line when it holds. Run with `cargo test --test acceptance --
//! --nocapture` to see every line.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use mtp2skill_core::cq::{run_cq, validate, CqId};
use mtp2skill_core::executor::{invoke, resolve_skill, AwaitOutcome};
use mtp2skill_core::mapping::{map_document, merge};
use mtp2skill_core::rdf::{Subject, Term};
use mtp2skill_core::sim::{serve, ClockMode, SimOptions, SimServer};
use mtp2skill_core::vocab::{self, cap, vdi2206};
use mtp2skill_core::wire::{NodeAddress, Request, Value, WireClient};
use mtp2skill_core::{AmlDocument, ConversionResult, RdfGraph, SkillConfig};

use common::{generate_mtp, oracle_counts, SplitMix64};

const MIXER: &str = include_str!("../fixtures/mixer.aml");
const FILLER: &str = include_str!("../fixtures/filler.aml");
const MIXER_BASE: &str = "http://plant.example/mixer";
const FILLER_BASE: &str = "http://plant.example/filler";

fn convert(xml: &str, base: &str) -> (AmlDocument, ConversionResult) {
    let doc = AmlDocument::parse(xml.as_bytes()).unwrap();
    let result = map_document(&doc, base, &SkillConfig::default()).unwrap();
    (doc, result)
}

fn skills_of(graph: &RdfGraph) -> Vec<String> {
    graph
        .subjects_of_type(cap::OPC_UA_VARIABLE_SKILL)
        .iter()
        .filter_map(|s| s.as_iri().map(|i| i.as_str().to_string()))
        .collect()
}

/// Criterion 1: every transferred-individual row present in the fixture
/// maps to at least one individual, the stats equal an independent count
/// over the raw XML, and conversion stays under a second.
#[test]
fn acceptance_1_transfer_completeness() {
    let started = Instant::now();
    let (_, result) = convert(MIXER, MIXER_BASE);
    let elapsed = started.elapsed();

    let expected = oracle_counts(MIXER);
    assert_eq!(result.stats, expected, "stats must equal the XML count oracle");
    for (row, count) in &expected {
        if ["ReportValue", "ProcessValueIn"].contains(&row.as_str()) {
            continue; // not present in the mixer fixture
        }
        assert!(*count > 0, "fixture row {row} is unexpectedly empty");
    }
    assert!(
        elapsed < Duration::from_secs(1),
        "conversion took {elapsed:?}"
    );
    println!("[acceptance] criterion 1 (transfer completeness, < 1 s): PASS");
}

/// Criterion 2: every skill's Start transition requires command value 4,
/// expressed as a Requirement/Equal data element linking the transition
/// with the skill's single command individual. Checked by graph query.
#[test]
fn acceptance_2_start_requirement_is_four() {
    let (_, result) = convert(MIXER, MIXER_BASE);
    let skills = skills_of(&result.graph);
    assert!(!skills.is_empty());
    for skill in &skills {
        let commands = result.graph.objects(skill, cap::HAS_SKILL_COMMAND);
        assert_eq!(commands.len(), 1, "{skill} must have one command");
        let table = run_cq(
            &result.graph,
            CqId::Cq6,
            &BTreeMap::from([
                ("skill".to_string(), Term::iri(skill)),
                ("transition".to_string(), Term::string("Start")),
            ]),
        )
        .unwrap();
        assert_eq!(table.len(), 1, "{skill} must have one Start transition");
        assert_eq!(
            table.column("value")[0].as_integer(),
            Some(4),
            "{skill} Start requirement"
        );
    }
    println!("[acceptance] criterion 2 (Start requirement equals 4): PASS");
}

/// Criterion 3: exactly one command parameter and one state output per
/// skill, on the fixture and on 100 generated MTPs of varying shape.
#[test]
fn acceptance_3_command_and_state_cardinality() {
    let mut checked_skills = 0usize;
    let mut check = |graph: &RdfGraph| {
        for skill in skills_of(graph) {
            assert_eq!(
                graph.objects(&skill, cap::HAS_SKILL_COMMAND).len(),
                1,
                "{skill} commands"
            );
            assert_eq!(
                graph.objects(&skill, cap::HAS_CURRENT_STATE_OUTPUT).len(),
                1,
                "{skill} state outputs"
            );
            checked_skills += 1;
        }
    };
    let (_, result) = convert(MIXER, MIXER_BASE);
    check(&result.graph);
    for seed in 0..100 {
        let xml = generate_mtp(seed);
        let (_, result) = convert(&xml, &format!("http://plant.example/generated/{seed}"));
        assert!(
            result.warnings.is_empty(),
            "generated MTP {seed} warned: {:?}",
            result.warnings
        );
        check(&result.graph);
    }
    assert!(checked_skills > 100, "generator produced too few skills");
    println!(
        "[acceptance] criterion 3 (one command, one state output; {checked_skills} skills): PASS"
    );
}

/// Criterion 4: the nine competency questions pass on the mixer pipeline,
/// and removing any mapped class entirely makes at least one fail.
#[test]
fn acceptance_4_nine_cqs_and_class_mutations() {
    let (doc, result) = convert(MIXER, MIXER_BASE);
    let config = SkillConfig::default();
    let report = validate(&doc, &result, &config);
    assert!(report.pass, "baseline must pass:\n{}", report.render_text());
    assert_eq!(report.cqs.len(), 9);

    let classes: BTreeSet<String> = result
        .graph
        .iter()
        .filter(|t| t.predicate.as_str() == vocab::rdf::TYPE)
        .map(|t| t.object.lexical().to_string())
        .collect();
    assert!(classes.len() >= 15, "expected a rich class set, got {classes:?}");
    for class in &classes {
        let mut mutated = RdfGraph::new();
        for (prefix, ns) in result.graph.prefixes() {
            mutated.register_prefix(prefix, ns).unwrap();
        }
        for triple in result.graph.iter() {
            let is_dropped = triple.predicate.as_str() == vocab::rdf::TYPE
                && triple.object.lexical() == class;
            if !is_dropped {
                mutated.add(triple.clone());
            }
        }
        let mutated_result = ConversionResult {
            graph: mutated,
            stats: result.stats.clone(),
            warnings: Vec::new(),
        };
        let report = validate(&doc, &mutated_result, &config);
        assert!(
            !report.pass,
            "removing class {class} went unnoticed by all nine CQs"
        );
    }
    println!(
        "[acceptance] criterion 4 (nine CQs pass; {} class mutations all caught): PASS",
        classes.len()
    );
}

/// Criterion 5: conversion is byte-deterministic and serialization is a
/// parse/serialize fixpoint.
#[test]
fn acceptance_5_determinism_and_fixpoint() {
    let (_, first) = convert(MIXER, MIXER_BASE);
    let (_, second) = convert(MIXER, MIXER_BASE);
    let text_a = first.graph.serialize_turtle();
    let text_b = second.graph.serialize_turtle();
    assert_eq!(text_a, text_b, "two conversions must be byte-identical");
    let reparsed = RdfGraph::parse_turtle(&text_a).unwrap();
    assert_eq!(reparsed, first.graph);
    assert_eq!(reparsed.serialize_turtle(), text_a, "fixpoint");
    println!("[acceptance] criterion 5 (byte determinism, round-trip fixpoint): PASS");
}

/// Criterion 6: merging two modules unions their triples exactly, and
/// component queries stay scoped to their module afterwards.
#[test]
fn acceptance_6_shared_ontology_merge() {
    let (_, mixer) = convert(MIXER, MIXER_BASE);
    let (_, filler) = convert(FILLER, FILLER_BASE);
    let merged = merge(&[mixer.graph.clone(), filler.graph.clone()]).unwrap();
    assert_eq!(
        merged.len(),
        mixer.graph.len() + filler.graph.len(),
        "merged size must be the sum"
    );
    let expectations = [
        (format!("{MIXER_BASE}#Mixer"), 3usize),
        (format!("{FILLER_BASE}#Filler"), 2usize),
    ];
    for (module, count) in expectations {
        let table = run_cq(
            &merged,
            CqId::Cq1,
            &BTreeMap::from([("module".to_string(), Term::iri(&module))]),
        )
        .unwrap();
        assert_eq!(table.len(), count, "components of {module}");
        for row in &table.rows {
            let component = row[0].lexical();
            assert!(
                component.starts_with(module.rsplit_once('#').unwrap().0),
                "{component} leaked across modules"
            );
        }
    }
    println!("[acceptance] criterion 6 (merge sums triples, CQ1 stays module-scoped): PASS");
}

/// Criterion 7: closed-loop execution against the simulator under a
/// virtual clock: Start reaches Execute, the full Start/Complete/Reset
/// cycle returns to Idle, and the observed state values are exactly the
/// template path. Budget: five seconds.
#[test]
fn acceptance_7_closed_loop_execution() {
    let started = Instant::now();
    let dwell = Duration::from_millis(10);
    let (_, result) = convert(MIXER, MIXER_BASE);
    let doc = AmlDocument::parse(MIXER.as_bytes()).unwrap();
    let server = Arc::new(
        SimServer::with_options(
            &doc,
            &SkillConfig::default(),
            SimOptions {
                clock: ClockMode::Virtual,
                dwell,
                subscription_buffer: 1024,
            },
        )
        .unwrap(),
    );
    let handle = serve(server.clone(), "127.0.0.1:0").unwrap();
    let addr = handle.addr().to_string();
    let stop = Arc::new(std::sync::atomic::AtomicBool::new(false));
    let ticker = {
        let server = server.clone();
        let stop = stop.clone();
        std::thread::spawn(move || {
            while !stop.load(std::sync::atomic::Ordering::SeqCst) {
                server.advance(dwell);
                std::thread::sleep(Duration::from_millis(1));
            }
        })
    };

    // The suite's own subscription collects the whole journey.
    let mut observer = WireClient::connect(&addr).unwrap();
    let response = observer
        .request(&Request::Subscribe {
            ns: "urn:mixer".to_string(),
            id: "Mixing.StateCur".to_string(),
        })
        .unwrap();
    assert!(response.ok);

    let binding = resolve_skill(
        &result.graph,
        &format!("{MIXER_BASE}#Mixer_Mixing_Continuous"),
    )
    .unwrap();
    let await_budget = Duration::from_secs(2);
    for (transition, target) in [("Start", "Execute"), ("Complete", "Completed"), ("Reset", "Idle")]
    {
        let mut handle = invoke(&binding, transition, &BTreeMap::new(), Some(&addr)).unwrap();
        assert_eq!(
            handle.await_state(target, await_budget).unwrap(),
            AwaitOutcome::Reached,
            "{transition} must reach {target}"
        );
        handle.close();
    }

    let mut observed = Vec::new();
    while observed.len() < 6 {
        if let mtp2skill_core::wire::ServerMessage::Event(
                mtp2skill_core::wire::Event::Change { value, .. },
            ) = observer.read_message().unwrap() { observed.push(value) }
    }
    // Starting, Execute, Completing, Completed, Resetting, Idle.
    let expected = [8, 64, 65536, 131072, 32768, 16].map(Value::Int);
    assert_eq!(observed, expected);

    stop.store(true, std::sync::atomic::Ordering::SeqCst);
    ticker.join().unwrap();
    handle.shutdown();
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(5), "closed loop took {elapsed:?}");
    println!("[acceptance] criterion 7 (closed-loop Start/Complete/Reset cycle, < 5 s): PASS");
}

/// Criterion 8: ten thousand random command writes never break the
/// StateCur/CommandEn invariants and never leave the template's state set.
#[test]
fn acceptance_8_simulator_safety_fuzz() {
    let doc = AmlDocument::parse(MIXER.as_bytes()).unwrap();
    let config = SkillConfig::default();
    let server = SimServer::with_options(
        &doc,
        &config,
        SimOptions {
            clock: ClockMode::Virtual,
            dwell: Duration::from_millis(1),
            subscription_buffer: 64,
        },
    )
    .unwrap();
    let command = NodeAddress::new("urn:mixer", "Mixing.CommandExt");
    let state_cur = NodeAddress::new("urn:mixer", "Mixing.StateCur");
    let command_en = NodeAddress::new("urn:mixer", "Mixing.CommandEn");
    let mut rng = SplitMix64::new(0xac5e97a9c3);
    let states: BTreeSet<&str> = config.template.states.iter().map(String::as_str).collect();

    for step in 0..10_000u32 {
        let value = match rng.below(5) {
            0 => 1i64 << rng.below(13),
            1 => rng.below(2048) as i64,
            2 => -(rng.below(64) as i64),
            3 => 4,
            _ => 1024,
        };
        let _ = server.write(&command, Value::Int(value));
        if rng.chance(1, 3) {
            server.advance(Duration::from_millis(1));
        }

        let state = server.current_state("Mixing").unwrap();
        assert!(states.contains(state.as_str()), "escaped to {state} at {step}");
        assert_eq!(
            server.read(&state_cur).unwrap(),
            Value::Int(config.state_value(&state).unwrap() as i64),
            "StateCur invariant at {step}"
        );
        assert_eq!(
            server.read(&command_en).unwrap(),
            Value::Int(config.enabled_command_mask(&state) as i64),
            "CommandEn invariant at {step}"
        );
    }
    println!("[acceptance] criterion 8 (10,000-write safety fuzz): PASS");
}

/// The per-class stats invariant behind criterion 1: summing rows by their
/// target class matches the number of typed subjects in the graph.
#[test]
fn stats_rows_aggregate_to_typed_subject_counts() {
    let (_, result) = convert(MIXER, MIXER_BASE);
    let class_of_row: BTreeMap<&str, &str> = BTreeMap::from([
        ("ModuleTypePackage", vdi2206::MODULE),
        ("Service", cap::CAPABILITY),
        ("ServiceProcedure", cap::OPC_UA_VARIABLE_SKILL),
        ("IndicatorElement", vdi2206::SENSOR),
        ("ActiveElement", vdi2206::ACTUATOR),
        ("OPCUAServer", mtp2skill_core::vocab::opcua::UA_SERVER),
        ("CommandExt", cap::SKILL_COMMAND),
        ("StateCur", cap::CURRENT_STATE_OUTPUT),
    ]);
    for (row, class) in class_of_row {
        assert_eq!(
            result.stats[row],
            result.graph.subjects_of_type(class).len(),
            "row {row} vs class {class}"
        );
    }
    // Rows sharing cap:SkillParameter add up across parameter kinds.
    let parameter_rows: usize = ["VExt", "VMin", "VMax", "VUnit", "ProcedureExt"]
        .iter()
        .map(|row| result.stats[*row])
        .sum();
    let configuration = result
        .graph
        .subjects_of_type(cap::CONFIGURATION_SKILL_PARAMETER)
        .len();
    let plain = result.graph.subjects_of_type(cap::SKILL_PARAMETER).len();
    assert_eq!(parameter_rows, configuration + plain);
    let output_rows: usize = ["ProcedureCur", "ProcedureReq", "V", "ReportValue"]
        .iter()
        .map(|row| result.stats[*row])
        .sum();
    assert_eq!(output_rows, result.graph.subjects_of_type(cap::SKILL_OUTPUT).len());
}

/// Sanity for the generator/oracle pair itself: generated documents parse,
/// and the oracle agrees with the engine on them.
#[test]
fn generated_mtps_agree_with_the_oracle() {
    for seed in [7u64, 21, 42, 77, 99] {
        let xml = generate_mtp(seed);
        let (_, result) = convert(&xml, &format!("http://plant.example/generated/{seed}"));
        assert_eq!(
            result.stats,
            oracle_counts(&xml),
            "stats vs oracle for seed {seed}"
        );
    }
}

/// Graphs emitted by the mapper contain no blank nodes, so merge and
/// serialization stay diffable.
#[test]
fn mapper_output_has_no_blank_nodes() {
    let (_, result) = convert(MIXER, MIXER_BASE);
    for triple in result.graph.iter() {
        assert!(matches!(triple.subject, Subject::Iri(_)));
        assert!(!matches!(triple.object, Term::Blank(_)));
    }
}
