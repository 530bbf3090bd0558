//! Per-skill state machine synthesis.
//!
//! The AML side of an MTP only ships the integer variables; the states,
//! transitions and their value semantics are created here for every skill.
//! Commanded transitions carry a requirement data element ("to fire this,
//! the command variable must equal N"), states carry an assurance data
//! element ("in this state, the feedback variable equals N"). All command
//! data elements share one type description, all state feedback elements
//! share another.

use crate::rdf::{RdfGraph, Term};
use crate::vocab::{
    self, cap, din61360, isa88, rdfs, ExpressionGoal, LogicInterpretation, SkillConfig,
};

use super::MappingError;

pub fn synthesize_state_machine(
    graph: &mut RdfGraph,
    skill_iri: &str,
    config: &SkillConfig,
    command_iri: &str,
    state_output_iri: &str,
) -> Result<(), MappingError> {
    config.validate()?;
    if !has_type(graph, command_iri, cap::SKILL_COMMAND) {
        return Err(MappingError::MissingCommandIndividual(
            command_iri.to_string(),
        ));
    }
    if !has_type(graph, state_output_iri, cap::CURRENT_STATE_OUTPUT) {
        return Err(MappingError::MissingStateOutput(state_output_iri.to_string()));
    }

    let machine_iri = format!("{skill_iri}_StateMachine");
    graph.add_iri(skill_iri, cap::BEHAVIOR_CONFORMS_TO, &machine_iri);
    graph.add_iri(&machine_iri, vocab::rdf::TYPE, isa88::STATE_MACHINE);

    for state in &config.template.states {
        let state_iri = state_iri(skill_iri, state);
        graph.add_iri(&machine_iri, isa88::HAS_STATE, &state_iri);
        graph.add_iri(&state_iri, vocab::rdf::TYPE, isa88::STATE);
        graph.add_literal(&state_iri, rdfs::LABEL, Term::string(state.as_str()));

        let value = config
            .state_value(state)
            .expect("validated template states are all valued");
        let element_iri = format!("{state_iri}_DE");
        data_element(
            graph,
            &element_iri,
            cap::CURRENT_STATE_OUTPUT_TD,
            ExpressionGoal::Assurance,
            value,
        );
        graph.add_iri(&state_iri, din61360::HAS_DATA_ELEMENT, &element_iri);
        graph.add_iri(state_output_iri, din61360::HAS_DATA_ELEMENT, &element_iri);
    }

    for transition in &config.template.transitions {
        let transition_iri = transition_iri(skill_iri, transition);
        graph.add_iri(&machine_iri, isa88::HAS_TRANSITION, &transition_iri);
        graph.add_iri(&transition_iri, vocab::rdf::TYPE, isa88::TRANSITION);
        graph.add_literal(
            &transition_iri,
            rdfs::LABEL,
            Term::string(transition.name.as_str()),
        );
        graph.add_iri(
            &transition_iri,
            isa88::FROM_STATE,
            &state_iri(skill_iri, &transition.from),
        );
        graph.add_iri(
            &transition_iri,
            isa88::TO_STATE,
            &state_iri(skill_iri, &transition.to),
        );

        if let Some(command) = &transition.command {
            let value = config
                .command_value(command)
                .expect("validated template commands are all valued");
            let element_iri = format!("{transition_iri}_DE");
            data_element(
                graph,
                &element_iri,
                cap::SKILL_COMMAND_VARIABLE_TD,
                ExpressionGoal::Requirement,
                value,
            );
            graph.add_iri(&transition_iri, din61360::HAS_DATA_ELEMENT, &element_iri);
            graph.add_iri(command_iri, din61360::HAS_DATA_ELEMENT, &element_iri);
        }
    }
    Ok(())
}

fn state_iri(skill_iri: &str, state: &str) -> String {
    format!("{skill_iri}_{}", super::sanitize(state))
}

fn transition_iri(skill_iri: &str, transition: &vocab::Transition) -> String {
    match &transition.command {
        Some(command) => format!(
            "{skill_iri}_{}_{}",
            super::sanitize(&transition.from),
            super::sanitize(command)
        ),
        None => format!("{skill_iri}_{}", super::sanitize(&transition.name)),
    }
}

fn data_element(
    graph: &mut RdfGraph,
    element_iri: &str,
    type_description: &str,
    goal: ExpressionGoal,
    value: u64,
) {
    graph.add_iri(element_iri, vocab::rdf::TYPE, din61360::DATA_ELEMENT);
    graph.add_iri(element_iri, din61360::HAS_TYPE_DESCRIPTION, type_description);
    graph.add_iri(element_iri, din61360::EXPRESSION_GOAL, goal.iri());
    graph.add_iri(
        element_iri,
        din61360::LOGIC_INTERPRETATION,
        LogicInterpretation::Equal.iri(),
    );
    graph.add_literal(element_iri, din61360::HAS_VALUE, Term::integer(value as i64));
}

fn has_type(graph: &RdfGraph, subject: &str, class: &str) -> bool {
    graph
        .objects(subject, vocab::rdf::TYPE)
        .iter()
        .any(|t| t.lexical() == class)
}
