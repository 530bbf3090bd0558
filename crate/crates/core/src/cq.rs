//! Competency questions over converted graphs, and document-driven
//! validation of a conversion result.
//!
//! Each question is a basic graph pattern with declared input slots
//! (module, skill, value, ...). `validate` derives the expected answers
//! from the source document itself — element counts, attribute values,
//! template closure — so it works on any MTP, not just the fixtures.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::aml::{AmlDocument, Element, PathExpr};
use crate::mapping::ConversionResult;
use crate::rdf::{BgpQuery, PatternTerm, RdfGraph, SolutionTable, Term, TriplePattern};
use crate::vocab::{self, cap, din61360, isa88, opcua, rdfs, vdi2206, vdi3682, SkillConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CqId {
    Cq1,
    Cq2,
    Cq3,
    Cq4,
    Cq5,
    Cq6,
    Cq7,
    Cq8,
    Cq9,
}

impl CqId {
    pub const ALL: [CqId; 9] = [
        CqId::Cq1,
        CqId::Cq2,
        CqId::Cq3,
        CqId::Cq4,
        CqId::Cq5,
        CqId::Cq6,
        CqId::Cq7,
        CqId::Cq8,
        CqId::Cq9,
    ];
}

impl fmt::Display for CqId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = Self::ALL.iter().position(|id| id == self).unwrap() + 1;
        write!(f, "CQ{n}")
    }
}

impl FromStr for CqId {
    type Err = CqError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let normalized = s.trim().to_ascii_uppercase();
        let digits = normalized.strip_prefix("CQ").unwrap_or(&normalized);
        digits
            .parse::<usize>()
            .ok()
            .and_then(|n| n.checked_sub(1))
            .and_then(|i| Self::ALL.get(i).copied())
            .ok_or_else(|| CqError::UnknownCq(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CqError {
    #[error("unknown competency question {0:?}")]
    UnknownCq(String),
    #[error("{cq} needs a binding for {slot:?}")]
    MissingBinding { cq: String, slot: String },
    #[error("{cq} has no slot named {slot:?}")]
    UnknownBinding { cq: String, slot: String },
}

/// An input slot of a competency question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slot {
    pub name: &'static str,
    pub description: &'static str,
}

#[derive(Debug, Clone)]
pub struct CompetencyQuestion {
    pub id: CqId,
    pub description: &'static str,
    pub slots: Vec<Slot>,
    pub query: BgpQuery,
}

fn var(name: &str) -> PatternTerm {
    PatternTerm::var(name)
}

fn iri(value: &str) -> PatternTerm {
    PatternTerm::iri(value)
}

fn p3(s: PatternTerm, p: &str, o: PatternTerm) -> TriplePattern {
    TriplePattern::new(s, iri(p), o)
}

fn query(patterns: Vec<TriplePattern>, projection: &[&str]) -> BgpQuery {
    BgpQuery::new(patterns, projection.iter().map(|s| s.to_string()).collect())
        .expect("competency question projections are bound")
}

/// The nine competency questions.
pub fn list_cqs() -> Vec<CompetencyQuestion> {
    vec![
        CompetencyQuestion {
            id: CqId::Cq1,
            description: "Which components belong to the module?",
            slots: vec![Slot { name: "module", description: "module IRI" }],
            query: query(
                vec![
                    p3(var("module"), vocab::rdf::TYPE, iri(vdi2206::MODULE)),
                    p3(var("module"), rdfs::LABEL, var("moduleName")),
                    p3(var("module"), vdi2206::HAS_COMPONENT, var("component")),
                    p3(var("component"), vocab::rdf::TYPE, var("componentType")),
                    p3(var("component"), rdfs::LABEL, var("name")),
                ],
                &["component", "componentType", "name"],
            ),
        },
        CompetencyQuestion {
            id: CqId::Cq2,
            description: "Which state is the skill in, given a StateCur reading?",
            slots: vec![
                Slot { name: "skill", description: "skill IRI" },
                Slot { name: "value", description: "observed StateCur integer" },
            ],
            query: query(
                vec![
                    p3(var("skill"), cap::HAS_CURRENT_STATE_OUTPUT, var("output")),
                    p3(var("output"), vocab::rdf::TYPE, iri(cap::CURRENT_STATE_OUTPUT)),
                    p3(var("skill"), cap::BEHAVIOR_CONFORMS_TO, var("machine")),
                    p3(var("machine"), vocab::rdf::TYPE, iri(isa88::STATE_MACHINE)),
                    p3(var("machine"), isa88::HAS_STATE, var("state")),
                    p3(var("state"), vocab::rdf::TYPE, iri(isa88::STATE)),
                    p3(var("state"), din61360::HAS_DATA_ELEMENT, var("element")),
                    p3(var("output"), din61360::HAS_DATA_ELEMENT, var("element")),
                    p3(var("element"), vocab::rdf::TYPE, iri(din61360::DATA_ELEMENT)),
                    p3(var("element"), din61360::EXPRESSION_GOAL, iri(din61360::ASSURANCE)),
                    p3(var("element"), din61360::LOGIC_INTERPRETATION, iri(din61360::EQUAL)),
                    p3(var("element"), din61360::HAS_VALUE, var("value")),
                    p3(var("state"), rdfs::LABEL, var("name")),
                ],
                &["state", "name"],
            ),
        },
        CompetencyQuestion {
            id: CqId::Cq3,
            description: "Which capabilities does the module have?",
            slots: vec![Slot { name: "module", description: "module IRI" }],
            query: query(
                vec![
                    p3(var("module"), cap::HAS_CAPABILITY, var("capability")),
                    p3(var("capability"), vocab::rdf::TYPE, iri(cap::CAPABILITY)),
                    p3(var("capability"), rdfs::LABEL, var("name")),
                ],
                &["capability", "name"],
            ),
        },
        CompetencyQuestion {
            id: CqId::Cq4,
            description: "Which skills make the capability executable?",
            slots: vec![Slot { name: "capability", description: "capability IRI" }],
            query: query(
                vec![
                    p3(var("capability"), vocab::rdf::TYPE, iri(vdi3682::PROCESS)),
                    p3(var("capability"), cap::IS_EXECUTABLE_VIA_OPC_UA_SKILL, var("skill")),
                    p3(var("skill"), vocab::rdf::TYPE, iri(cap::OPC_UA_VARIABLE_SKILL)),
                    p3(var("module"), vocab::rdf::TYPE, iri(vdi2206::MODULE)),
                    p3(var("module"), cap::PROVIDES_SKILL, var("skill")),
                    p3(var("skill"), rdfs::LABEL, var("name")),
                ],
                &["skill", "name"],
            ),
        },
        CompetencyQuestion {
            id: CqId::Cq5,
            description: "Which parameters does the skill take, with their values?",
            slots: vec![Slot { name: "skill", description: "skill IRI" }],
            query: query(
                vec![
                    p3(var("skill"), cap::HAS_SKILL_PARAMETER, var("parameter")),
                    p3(var("parameter"), vocab::rdf::TYPE, var("parameterType")),
                    p3(var("parameter"), rdfs::LABEL, var("name")),
                    p3(var("parameter"), din61360::HAS_VALUE, var("value")),
                ],
                &["parameter", "name", "value"],
            ),
        },
        CompetencyQuestion {
            id: CqId::Cq6,
            description: "Which command value fires the named transition of the skill?",
            slots: vec![
                Slot { name: "skill", description: "skill IRI" },
                Slot { name: "transition", description: "transition name" },
            ],
            query: query(
                vec![
                    p3(var("skill"), cap::BEHAVIOR_CONFORMS_TO, var("machine")),
                    p3(var("machine"), isa88::HAS_TRANSITION, var("t")),
                    p3(var("t"), rdfs::LABEL, var("transition")),
                    p3(var("t"), din61360::HAS_DATA_ELEMENT, var("element")),
                    p3(var("element"), vocab::rdf::TYPE, iri(din61360::DATA_ELEMENT)),
                    p3(var("element"), din61360::EXPRESSION_GOAL, iri(din61360::REQUIREMENT)),
                    p3(var("element"), din61360::LOGIC_INTERPRETATION, iri(din61360::EQUAL)),
                    p3(var("element"), din61360::HAS_VALUE, var("value")),
                    p3(var("skill"), cap::HAS_SKILL_COMMAND, var("command")),
                    p3(var("command"), vocab::rdf::TYPE, iri(cap::SKILL_COMMAND)),
                    p3(var("command"), din61360::HAS_DATA_ELEMENT, var("element")),
                ],
                &["t", "value"],
            ),
        },
        CompetencyQuestion {
            id: CqId::Cq7,
            description: "Which endpoint serves the skill's command and state variables?",
            slots: vec![Slot { name: "skill", description: "skill IRI" }],
            query: query(
                vec![
                    p3(var("skill"), cap::HAS_SKILL_COMMAND, var("command")),
                    p3(var("command"), opcua::HAS_NODE, var("commandNode")),
                    p3(var("commandNode"), vocab::rdf::TYPE, iri(opcua::UA_VARIABLE)),
                    p3(var("commandNode"), opcua::NODE_NAMESPACE, var("commandNs")),
                    p3(var("commandNode"), opcua::NODE_IDENTIFIER, var("commandId")),
                    p3(var("skill"), cap::HAS_CURRENT_STATE_OUTPUT, var("output")),
                    p3(var("output"), opcua::HAS_NODE, var("stateNode")),
                    p3(var("stateNode"), vocab::rdf::TYPE, iri(opcua::UA_VARIABLE)),
                    p3(var("stateNode"), opcua::NODE_NAMESPACE, var("stateNs")),
                    p3(var("stateNode"), opcua::NODE_IDENTIFIER, var("stateId")),
                    p3(var("nodeSet"), opcua::HAS_NODE, var("commandNode")),
                    p3(var("nodeSet"), opcua::HAS_NODE, var("stateNode")),
                    p3(var("nodeSet"), vocab::rdf::TYPE, iri(opcua::UA_NODE_SET)),
                    p3(var("server"), opcua::HAS_NODE_SET, var("nodeSet")),
                    p3(var("server"), vocab::rdf::TYPE, iri(opcua::UA_SERVER)),
                    p3(var("server"), opcua::ENDPOINT_URL, var("endpoint")),
                ],
                &["endpoint", "commandNs", "commandId", "stateNs", "stateId"],
            ),
        },
        CompetencyQuestion {
            id: CqId::Cq8,
            description: "Which outputs does the skill (or component) expose, with values?",
            slots: vec![Slot { name: "skill", description: "skill or component IRI" }],
            query: query(
                vec![
                    p3(var("skill"), cap::HAS_SKILL_OUTPUT, var("output")),
                    p3(var("output"), vocab::rdf::TYPE, iri(cap::SKILL_OUTPUT)),
                    p3(var("output"), rdfs::LABEL, var("name")),
                    p3(var("output"), din61360::HAS_VALUE, var("value")),
                ],
                &["output", "name", "value"],
            ),
        },
        CompetencyQuestion {
            id: CqId::Cq9,
            description: "Which transitions are available from the skill's current state?",
            slots: vec![
                Slot { name: "skill", description: "skill IRI" },
                Slot { name: "value", description: "observed StateCur integer" },
            ],
            query: query(
                vec![
                    p3(var("skill"), cap::BEHAVIOR_CONFORMS_TO, var("machine")),
                    p3(var("machine"), isa88::HAS_TRANSITION, var("t")),
                    p3(var("t"), vocab::rdf::TYPE, iri(isa88::TRANSITION)),
                    p3(var("t"), isa88::FROM_STATE, var("state")),
                    p3(var("state"), din61360::HAS_DATA_ELEMENT, var("element")),
                    p3(var("element"), din61360::EXPRESSION_GOAL, iri(din61360::ASSURANCE)),
                    p3(var("element"), din61360::HAS_VALUE, var("value")),
                    p3(var("t"), rdfs::LABEL, var("name")),
                    p3(var("t"), isa88::TO_STATE, var("target")),
                    p3(var("target"), rdfs::LABEL, var("targetName")),
                ],
                &["t", "name", "targetName"],
            ),
        },
    ]
}

pub fn find_cq(id: CqId) -> CompetencyQuestion {
    list_cqs()
        .into_iter()
        .find(|cq| cq.id == id)
        .expect("all ids are listed")
}

/// Run one competency question with bindings for its declared slots.
pub fn run_cq(
    graph: &RdfGraph,
    id: CqId,
    bindings: &BTreeMap<String, Term>,
) -> Result<SolutionTable, CqError> {
    let cq = find_cq(id);
    for key in bindings.keys() {
        if !cq.slots.iter().any(|slot| slot.name == key) {
            return Err(CqError::UnknownBinding {
                cq: id.to_string(),
                slot: key.clone(),
            });
        }
    }
    let mut bound = cq.query.clone();
    for slot in &cq.slots {
        let term = bindings
            .get(slot.name)
            .ok_or_else(|| CqError::MissingBinding {
                cq: id.to_string(),
                slot: slot.name.to_string(),
            })?;
        bound = bound.bind(slot.name, term);
    }
    Ok(graph.query_bgp(&bound))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CqOutcome {
    pub cq: String,
    pub status: String,
    pub expected: String,
    pub actual: String,
}

impl CqOutcome {
    pub fn pass(&self) -> bool {
        self.status == "pass"
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub cqs: Vec<CqOutcome>,
}

impl ValidationReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for outcome in &self.cqs {
            out.push_str(&format!(
                "{} {}: expected {}; actual {}\n",
                outcome.cq,
                outcome.status.to_uppercase(),
                outcome.expected,
                outcome.actual
            ));
        }
        out.push_str(&format!(
            "overall: {}\n",
            if self.pass { "PASS" } else { "FAIL" }
        ));
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// One probe: a CQ bound with concrete inputs, with the answer expected
/// from the source document.
struct Probe {
    id: CqId,
    label: String,
    bindings: BTreeMap<String, Term>,
    /// Expected multiset of projected key columns.
    expected: Vec<String>,
    /// Which projected columns form the comparison key.
    key_columns: Vec<&'static str>,
}

/// Check a conversion result for completeness against its source document.
///
/// State and command expectations come from the config the conversion ran
/// with; everything else is derived from the document.
pub fn validate(
    doc: &AmlDocument,
    result: &ConversionResult,
    config: &SkillConfig,
) -> ValidationReport {
    let graph = &result.graph;
    let view = DocView::collect(doc, config);
    let mut probes: Vec<Probe> = Vec::new();

    for module in &view.modules {
        let module_term = match locate_module(graph, &module.name) {
            Some(iri) => Term::iri(&iri),
            None => Term::iri("http://mtp2skill.org/unresolved#module"),
        };
        probes.push(Probe {
            id: CqId::Cq1,
            label: format!("components of {}", module.name),
            bindings: BTreeMap::from([("module".to_string(), module_term.clone())]),
            expected: module.components.iter().map(|c| c.name.clone()).collect(),
            key_columns: vec!["name"],
        });
        probes.push(Probe {
            id: CqId::Cq3,
            label: format!("capabilities of {}", module.name),
            bindings: BTreeMap::from([("module".to_string(), module_term.clone())]),
            expected: module.services.iter().map(|s| s.name.clone()).collect(),
            key_columns: vec!["name"],
        });

        for component in &module.components {
            if component.outputs.is_empty() {
                continue;
            }
            let component_term = locate_labelled(
                graph,
                module_term.lexical(),
                vdi2206::HAS_COMPONENT,
                &component.name,
            );
            probes.push(Probe {
                id: CqId::Cq8,
                label: format!("outputs of component {}", component.name),
                bindings: BTreeMap::from([("skill".to_string(), component_term)]),
                expected: component
                    .outputs
                    .iter()
                    .map(|(name, value)| format!("{name}|{value}"))
                    .collect(),
                key_columns: vec!["name", "value"],
            });
        }

        for service in &module.services {
            let capability_term = locate_labelled(
                graph,
                module_term.lexical(),
                cap::HAS_CAPABILITY,
                &service.name,
            );
            probes.push(Probe {
                id: CqId::Cq4,
                label: format!("skills of {}", service.name),
                bindings: BTreeMap::from([("capability".to_string(), capability_term.clone())]),
                expected: service.skills.iter().map(|s| s.name.clone()).collect(),
                key_columns: vec!["name"],
            });

            for skill in &service.skills {
                let skill_term = locate_labelled(
                    graph,
                    capability_term.lexical(),
                    cap::IS_EXECUTABLE_VIA_OPC_UA_SKILL,
                    &skill.name,
                );
                let skill_label = format!("{}/{}", service.name, skill.name);

                probes.push(Probe {
                    id: CqId::Cq5,
                    label: format!("parameters of {skill_label}"),
                    bindings: BTreeMap::from([("skill".to_string(), skill_term.clone())]),
                    expected: skill
                        .parameters
                        .iter()
                        .map(|(name, value)| format!("{name}|{value}"))
                        .collect(),
                    key_columns: vec!["name", "value"],
                });
                probes.push(Probe {
                    id: CqId::Cq8,
                    label: format!("outputs of {skill_label}"),
                    bindings: BTreeMap::from([("skill".to_string(), skill_term.clone())]),
                    expected: skill
                        .outputs
                        .iter()
                        .map(|(name, value)| format!("{name}|{value}"))
                        .collect(),
                    key_columns: vec!["name", "value"],
                });
                if let Some(wiring) = &skill.wiring {
                    probes.push(Probe {
                        id: CqId::Cq7,
                        label: format!("endpoint of {skill_label}"),
                        bindings: BTreeMap::from([("skill".to_string(), skill_term.clone())]),
                        expected: vec![format!(
                            "{}|{}|{}|{}|{}",
                            wiring.endpoint,
                            wiring.command_ns,
                            wiring.command_id,
                            wiring.state_ns,
                            wiring.state_id
                        )],
                        key_columns: vec![
                            "endpoint",
                            "commandNs",
                            "commandId",
                            "stateNs",
                            "stateId",
                        ],
                    });
                }
                if skill.has_state_machine {
                    push_state_machine_probes(&mut probes, config, &skill_term, &skill_label);
                }
            }
        }
    }

    let mut outcomes: BTreeMap<CqId, (Vec<String>, usize)> = CqId::ALL
        .iter()
        .map(|id| (*id, (Vec::new(), 0)))
        .collect();
    for probe in &probes {
        let (failures, total) = outcomes.get_mut(&probe.id).expect("all ids present");
        *total += 1;
        if let Some(failure) = run_probe(graph, probe) {
            failures.push(failure);
        }
    }

    let cqs: Vec<CqOutcome> = CqId::ALL
        .iter()
        .map(|id| {
            let (failures, total) = &outcomes[id];
            let description = find_cq(*id).description;
            if failures.is_empty() {
                CqOutcome {
                    cq: id.to_string(),
                    status: "pass".to_string(),
                    expected: format!("{description} ({total} probes)"),
                    actual: format!("{total} probes answered as expected"),
                }
            } else {
                CqOutcome {
                    cq: id.to_string(),
                    status: "fail".to_string(),
                    expected: format!("{description} ({total} probes)"),
                    actual: failures.join("; "),
                }
            }
        })
        .collect();
    ValidationReport {
        pass: cqs.iter().all(CqOutcome::pass),
        cqs,
    }
}

fn push_state_machine_probes(
    probes: &mut Vec<Probe>,
    config: &SkillConfig,
    skill_term: &Term,
    skill_label: &str,
) {
    // CQ2: each state value answers with exactly its state...
    for state in &config.template.states {
        let value = config.state_value(state).expect("validated config");
        probes.push(Probe {
            id: CqId::Cq2,
            label: format!("state of {skill_label} at {value}"),
            bindings: BTreeMap::from([
                ("skill".to_string(), skill_term.clone()),
                ("value".to_string(), Term::integer(value as i64)),
            ]),
            expected: vec![state.clone()],
            key_columns: vec!["name"],
        });
        // ...and CQ9 enumerates the transition closure of that state.
        probes.push(Probe {
            id: CqId::Cq9,
            label: format!("transitions of {skill_label} from {state}"),
            bindings: BTreeMap::from([
                ("skill".to_string(), skill_term.clone()),
                ("value".to_string(), Term::integer(value as i64)),
            ]),
            expected: config
                .template
                .transitions_from(state)
                .map(|t| format!("{}|{}", t.name, t.to))
                .collect(),
            key_columns: vec!["name", "targetName"],
        });
    }
    // A value outside the state table answers with no state at all.
    let unused = (1..)
        .map(|shift| 1u64 << shift)
        .find(|v| config.states.state_for_value(*v).is_none())
        .unwrap_or(3);
    probes.push(Probe {
        id: CqId::Cq2,
        label: format!("state of {skill_label} at unused value {unused}"),
        bindings: BTreeMap::from([
            ("skill".to_string(), skill_term.clone()),
            ("value".to_string(), Term::integer(unused as i64)),
        ]),
        expected: vec![],
        key_columns: vec!["name"],
    });
    // CQ6: every distinct commanded transition name, each occurrence
    // answering with the command's bit value.
    let mut seen = std::collections::BTreeSet::new();
    for transition in &config.template.transitions {
        let Some(command) = &transition.command else { continue };
        if !seen.insert(transition.name.clone()) {
            continue;
        }
        let value = config.command_value(command).expect("validated config");
        let occurrences = config
            .template
            .transitions
            .iter()
            .filter(|t| t.name == transition.name && t.command.is_some())
            .count();
        probes.push(Probe {
            id: CqId::Cq6,
            label: format!("command value of {skill_label} transition {}", transition.name),
            bindings: BTreeMap::from([
                ("skill".to_string(), skill_term.clone()),
                ("transition".to_string(), Term::string(transition.name.as_str())),
            ]),
            expected: std::iter::repeat_with(|| value.to_string())
                .take(occurrences)
                .collect(),
            key_columns: vec!["value"],
        });
    }
}

/// Returns a failure description, or `None` when the probe matched.
fn run_probe(graph: &RdfGraph, probe: &Probe) -> Option<String> {
    let table = match run_cq(graph, probe.id, &probe.bindings) {
        Ok(table) => table,
        Err(e) => return Some(format!("{}: {e}", probe.label)),
    };
    let mut actual: Vec<String> = table
        .rows
        .iter()
        .map(|row| {
            probe
                .key_columns
                .iter()
                .map(|column| {
                    let idx = table
                        .variables
                        .iter()
                        .position(|v| v == column)
                        .expect("probe keys are projected");
                    row[idx].lexical().to_string()
                })
                .collect::<Vec<_>>()
                .join("|")
        })
        .collect();
    actual.sort();
    let mut expected = probe.expected.clone();
    expected.sort();
    if actual == expected {
        return None;
    }
    let missing: Vec<&String> = expected.iter().filter(|e| !actual.contains(e)).collect();
    let surplus: Vec<&String> = actual.iter().filter(|a| !expected.contains(a)).collect();
    let mut parts = vec![format!(
        "{}: expected {} rows, got {}",
        probe.label,
        expected.len(),
        actual.len()
    )];
    if !missing.is_empty() {
        parts.push(format!(
            "missing {}",
            missing.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
        ));
    }
    if !surplus.is_empty() {
        parts.push(format!(
            "unexpected {}",
            surplus.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
        ));
    }
    Some(parts.join(", "))
}

/// Find the module individual by its label.
fn locate_module(graph: &RdfGraph, name: &str) -> Option<String> {
    graph
        .subjects_of_type(vdi2206::MODULE)
        .iter()
        .filter_map(|s| s.as_iri())
        .find(|iri| {
            graph
                .objects(iri.as_str(), rdfs::LABEL)
                .iter()
                .any(|label| label.lexical() == name)
        })
        .map(|iri| iri.as_str().to_string())
}

/// Follow `predicate` from `from` to the object labelled `name`. Falls back
/// to a sentinel IRI that matches nothing, so broken graphs fail probes
/// instead of panicking.
fn locate_labelled(graph: &RdfGraph, from: &str, predicate: &str, name: &str) -> Term {
    graph
        .objects(from, predicate)
        .iter()
        .find(|term| {
            graph
                .objects(term.lexical(), rdfs::LABEL)
                .iter()
                .any(|label| label.lexical() == name)
        })
        .map(|term| (*term).clone())
        .unwrap_or_else(|| Term::iri("http://mtp2skill.org/unresolved#individual"))
}

// --- document-side expectation model ---------------------------------------

struct DocView {
    modules: Vec<ModuleView>,
}

struct ModuleView {
    name: String,
    components: Vec<ComponentView>,
    services: Vec<ServiceView>,
}

struct ComponentView {
    name: String,
    outputs: Vec<(String, String)>,
}

struct ServiceView {
    name: String,
    skills: Vec<SkillView>,
}

struct SkillView {
    name: String,
    parameters: Vec<(String, String)>,
    outputs: Vec<(String, String)>,
    wiring: Option<WiringView>,
    has_state_machine: bool,
}

struct WiringView {
    endpoint: String,
    command_ns: String,
    command_id: String,
    state_ns: String,
    state_id: String,
}

impl DocView {
    fn collect(doc: &AmlDocument, _config: &SkillConfig) -> DocView {
        let module_path = PathExpr::parse("//IE[suc='ModuleTypePackage']").unwrap();
        let mut modules = Vec::new();
        for module in doc.select(&module_path).unwrap_or_default() {
            modules.push(ModuleView {
                name: module.name().to_string(),
                components: collect_components(doc),
                services: collect_services(doc),
            });
        }
        DocView { modules }
    }
}

fn collect_components(doc: &AmlDocument) -> Vec<ComponentView> {
    let mut components = Vec::new();
    for suc in ["IndicatorElement", "ActiveElement"] {
        let path = PathExpr::parse(&format!("//IE[suc='{suc}']")).unwrap();
        for el in doc.select(&path).unwrap_or_default() {
            let outputs = el
                .attribute_value("V")
                .map(|v| vec![("V".to_string(), v.to_string())])
                .unwrap_or_default();
            components.push(ComponentView {
                name: el.name().to_string(),
                outputs,
            });
        }
    }
    components
}

fn collect_services(doc: &AmlDocument) -> Vec<ServiceView> {
    let service_path = PathExpr::parse("//IE[suc='Service']").unwrap();
    let procedure_path = PathExpr::parse("child::IE[suc='ServiceProcedure']").unwrap();
    let mut services = Vec::new();
    for service in doc.select(&service_path).unwrap_or_default() {
        let control = service
            .attribute_value("RefID")
            .and_then(|ref_id| doc.resolve_ref_id(ref_id, Some("ServiceControl")).ok());
        let endpoint = doc
            .all_elements()
            .find(|el| el.suc_class() == "OPCUAServer")
            .and_then(|el| el.attribute_value("Endpoint"))
            .map(str::to_string);
        let config_params = parameter_attributes(doc, service, "ConfigurationParameter");

        let mut skills = Vec::new();
        for procedure in service.select(&procedure_path).unwrap_or_default() {
            let mut parameters = parameter_attributes(doc, procedure, "ProcedureParameter");
            parameters.extend(config_params.iter().cloned());
            let mut outputs = Vec::new();
            if let Some(control) = control {
                for attr in ["ProcedureCur", "ProcedureReq"] {
                    if let Some(value) = control.attribute_value(attr) {
                        outputs.push((attr.to_string(), value.to_string()));
                    }
                }
                if let Some(value) = control.attribute_value("ProcedureExt") {
                    parameters.push(("ProcedureExt".to_string(), value.to_string()));
                }
            }
            for (suc, bucket) in [("ReportValue", &mut outputs), ("ProcessValueIn", &mut parameters)]
            {
                let path = PathExpr::parse(&format!("child::IE[suc='{suc}']")).unwrap();
                for el in procedure.select(&path).unwrap_or_default() {
                    let target = el
                        .attribute_value("RefID")
                        .and_then(|r| doc.resolve_ref_id(r, Some("OperationElement")).ok());
                    if let Some(value) = target.and_then(|t| t.attribute_value("V")) {
                        bucket.push((el.name().to_string(), value.to_string()));
                    }
                }
            }

            let wiring = control.and_then(|control| {
                let endpoint = endpoint.clone()?;
                let command = control.opcua_ref_of("CommandExt").ok().flatten()?;
                let state = control.opcua_ref_of("StateCur").ok().flatten()?;
                Some(WiringView {
                    endpoint,
                    command_ns: command.namespace,
                    command_id: command.identifier,
                    state_ns: state.namespace,
                    state_id: state.identifier,
                })
            });
            let has_state_machine = control
                .map(|c| {
                    c.attribute_value("CommandExt").is_some()
                        && c.attribute_value("StateCur").is_some()
                })
                .unwrap_or(false);
            skills.push(SkillView {
                name: procedure.name().to_string(),
                parameters,
                outputs,
                wiring,
                has_state_machine,
            });
        }
        services.push(ServiceView {
            name: service.name().to_string(),
            skills,
        });
    }
    services
}

/// (label, value) pairs for the VExt/VMin/VMax/VUnit attributes behind the
/// parameter elements of the given class under `scope`.
fn parameter_attributes(
    doc: &AmlDocument,
    scope: Element<'_>,
    suc: &str,
) -> Vec<(String, String)> {
    let path = PathExpr::parse(&format!("child::IE[suc='{suc}']")).unwrap();
    let mut out = Vec::new();
    for el in scope.select(&path).unwrap_or_default() {
        let Some(target) = el
            .attribute_value("RefID")
            .and_then(|r| doc.resolve_ref_id(r, Some("OperationElement")).ok())
        else {
            continue;
        };
        for attr in ["VExt", "VMin", "VMax", "VUnit"] {
            if let Some(value) = target.attribute_value(attr) {
                out.push((attr.to_string(), value.to_string()));
            }
        }
    }
    out
}
