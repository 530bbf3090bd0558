//! Vocabulary of the capability/skill ontology.
//!
//! Every class and property the mapping can emit is declared here, grouped
//! by the ontology design pattern it belongs to. Relation names that no
//! industry standard prescribes are minted in these namespaces; they are
//! marked below so a rename table can bridge to other T-Boxes later.

mod state_machine;

pub use state_machine::{
    default_state_machine_template, CommandTable, SkillConfig, StateMachineTemplate,
    StateValueTable, TemplateError, Transition, TransitionKind, VocabError,
};

/// Capability and skill terms.
pub mod cap {
    pub const NS: &str = "http://mtp2skill.org/ontology/capability#";

    pub const CAPABILITY: &str = "http://mtp2skill.org/ontology/capability#Capability";
    pub const SKILL: &str = "http://mtp2skill.org/ontology/capability#Skill";
    pub const OPC_UA_SKILL: &str = "http://mtp2skill.org/ontology/capability#OpcUaSkill";
    pub const OPC_UA_VARIABLE_SKILL: &str =
        "http://mtp2skill.org/ontology/capability#OpcUaVariableSkill";
    pub const SKILL_PARAMETER: &str = "http://mtp2skill.org/ontology/capability#SkillParameter";
    // Marker class for parameters configured per service rather than per
    // procedure; linked with the same predicate as ordinary parameters.
    pub const CONFIGURATION_SKILL_PARAMETER: &str =
        "http://mtp2skill.org/ontology/capability#ConfigurationSkillParameter";
    pub const SKILL_COMMAND: &str = "http://mtp2skill.org/ontology/capability#SkillCommand";
    pub const CURRENT_STATE_OUTPUT: &str =
        "http://mtp2skill.org/ontology/capability#CurrentStateOutput";
    pub const SKILL_OUTPUT: &str = "http://mtp2skill.org/ontology/capability#SkillOutput";

    pub const HAS_CAPABILITY: &str = "http://mtp2skill.org/ontology/capability#hasCapability";
    pub const PROVIDES_SKILL: &str = "http://mtp2skill.org/ontology/capability#providesSkill";
    pub const IS_EXECUTABLE_VIA_OPC_UA_SKILL: &str =
        "http://mtp2skill.org/ontology/capability#isExecutableViaOpcUaSkill";
    pub const HAS_SKILL_PARAMETER: &str =
        "http://mtp2skill.org/ontology/capability#hasSkillParameter";
    pub const HAS_SKILL_COMMAND: &str =
        "http://mtp2skill.org/ontology/capability#hasSkillCommand";
    pub const HAS_CURRENT_STATE_OUTPUT: &str =
        "http://mtp2skill.org/ontology/capability#hasCurrentStateOutput";
    pub const HAS_SKILL_OUTPUT: &str = "http://mtp2skill.org/ontology/capability#hasSkillOutput";
    // minted: the skill-to-state-machine relation.
    pub const BEHAVIOR_CONFORMS_TO: &str =
        "http://mtp2skill.org/ontology/capability#behaviorConformsTo";

    /// Type description shared by every skill-command data element.
    pub const SKILL_COMMAND_VARIABLE_TD: &str =
        "http://mtp2skill.org/ontology/capability#SkillCommandVariable_TD";
    /// Type description shared by every state-feedback data element.
    pub const CURRENT_STATE_OUTPUT_TD: &str =
        "http://mtp2skill.org/ontology/capability#CurrentStateOutput_TD";
}

/// Machine structure terms (VDI 2206 pattern).
pub mod vdi2206 {
    pub const NS: &str = "http://mtp2skill.org/ontology/vdi2206#";

    pub const MODULE: &str = "http://mtp2skill.org/ontology/vdi2206#Module";
    pub const SENSOR: &str = "http://mtp2skill.org/ontology/vdi2206#Sensor";
    pub const ACTUATOR: &str = "http://mtp2skill.org/ontology/vdi2206#Actuator";
    pub const HAS_COMPONENT: &str = "http://mtp2skill.org/ontology/vdi2206#hasComponent";
}

/// Process terms (VDI 3682 pattern).
pub mod vdi3682 {
    pub const NS: &str = "http://mtp2skill.org/ontology/vdi3682#";

    pub const PROCESS: &str = "http://mtp2skill.org/ontology/vdi3682#Process";
}

/// State machine terms (ISA 88 pattern).
pub mod isa88 {
    pub const NS: &str = "http://mtp2skill.org/ontology/isa88#";

    pub const STATE_MACHINE: &str = "http://mtp2skill.org/ontology/isa88#StateMachine";
    pub const STATE: &str = "http://mtp2skill.org/ontology/isa88#State";
    pub const TRANSITION: &str = "http://mtp2skill.org/ontology/isa88#Transition";
    pub const HAS_STATE: &str = "http://mtp2skill.org/ontology/isa88#hasState";
    pub const HAS_TRANSITION: &str = "http://mtp2skill.org/ontology/isa88#hasTransition";
    pub const FROM_STATE: &str = "http://mtp2skill.org/ontology/isa88#fromState";
    pub const TO_STATE: &str = "http://mtp2skill.org/ontology/isa88#toState";
}

/// Property terms (DIN EN 61360 pattern).
pub mod din61360 {
    pub const NS: &str = "http://mtp2skill.org/ontology/din61360#";

    pub const TYPE_DESCRIPTION: &str = "http://mtp2skill.org/ontology/din61360#TypeDescription";
    pub const INSTANCE_DESCRIPTION: &str =
        "http://mtp2skill.org/ontology/din61360#InstanceDescription";
    pub const DATA_ELEMENT: &str = "http://mtp2skill.org/ontology/din61360#DataElement";
    pub const HAS_TYPE_DESCRIPTION: &str =
        "http://mtp2skill.org/ontology/din61360#hasTypeDescription";
    pub const HAS_INSTANCE_DESCRIPTION: &str =
        "http://mtp2skill.org/ontology/din61360#hasInstanceDescription";
    pub const HAS_DATA_ELEMENT: &str = "http://mtp2skill.org/ontology/din61360#hasDataElement";
    pub const HAS_VALUE: &str = "http://mtp2skill.org/ontology/din61360#hasValue";
    pub const EXPRESSION_GOAL: &str = "http://mtp2skill.org/ontology/din61360#expressionGoal";
    pub const LOGIC_INTERPRETATION: &str =
        "http://mtp2skill.org/ontology/din61360#logicInterpretation";

    pub const REQUIREMENT: &str = "http://mtp2skill.org/ontology/din61360#Requirement";
    pub const ASSURANCE: &str = "http://mtp2skill.org/ontology/din61360#Assurance";
    pub const ACTUAL_VALUE: &str = "http://mtp2skill.org/ontology/din61360#ActualValue";
    pub const EQUAL: &str = "http://mtp2skill.org/ontology/din61360#Equal";
    pub const LESS_THAN: &str = "http://mtp2skill.org/ontology/din61360#LessThan";
    pub const GREATER_THAN: &str = "http://mtp2skill.org/ontology/din61360#GreaterThan";
}

/// Communication terms.
pub mod opcua {
    pub const NS: &str = "http://mtp2skill.org/ontology/opcua#";

    pub const UA_SERVER: &str = "http://mtp2skill.org/ontology/opcua#UaServer";
    pub const UA_NODE_SET: &str = "http://mtp2skill.org/ontology/opcua#UaNodeSet";
    pub const UA_VARIABLE: &str = "http://mtp2skill.org/ontology/opcua#UaVariable";
    pub const ENDPOINT_URL: &str = "http://mtp2skill.org/ontology/opcua#endpointUrl";
    pub const NODE_NAMESPACE: &str = "http://mtp2skill.org/ontology/opcua#nodeNamespace";
    pub const NODE_IDENTIFIER: &str = "http://mtp2skill.org/ontology/opcua#nodeIdentifier";
    // minted: access mode of the node, from the OPCUAItem Access attribute.
    pub const NODE_ACCESS: &str = "http://mtp2skill.org/ontology/opcua#nodeAccess";
    pub const HAS_NODE: &str = "http://mtp2skill.org/ontology/opcua#hasNode";
    // minted: server-to-nodeset containment.
    pub const HAS_NODE_SET: &str = "http://mtp2skill.org/ontology/opcua#hasNodeSet";
}

pub mod rdf {
    pub const NS: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
    pub const TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
}

pub mod rdfs {
    pub const NS: &str = "http://www.w3.org/2000/01/rdf-schema#";
    pub const LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
}

pub mod xsd {
    pub const NS: &str = "http://www.w3.org/2001/XMLSchema#";
}

/// Prefixes registered on every converted graph, in emission order.
pub const STANDARD_PREFIXES: [(&str, &str); 9] = [
    ("cap", cap::NS),
    ("vdi3682", vdi3682::NS),
    ("vdi2206", vdi2206::NS),
    ("isa88", isa88::NS),
    ("din61360", din61360::NS),
    ("opcua", opcua::NS),
    ("rdf", rdf::NS),
    ("rdfs", rdfs::NS),
    ("xsd", xsd::NS),
];

/// How a data element's value statement is meant: a value that must be set,
/// a value the element guarantees, or a momentary reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpressionGoal {
    Requirement,
    Assurance,
    ActualValue,
}

impl ExpressionGoal {
    pub fn iri(self) -> &'static str {
        match self {
            ExpressionGoal::Requirement => din61360::REQUIREMENT,
            ExpressionGoal::Assurance => din61360::ASSURANCE,
            ExpressionGoal::ActualValue => din61360::ACTUAL_VALUE,
        }
    }
}

/// Relation between a data element's stated value and the observed one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogicInterpretation {
    Equal,
    LessThan,
    GreaterThan,
}

impl LogicInterpretation {
    pub fn iri(self) -> &'static str {
        match self {
            LogicInterpretation::Equal => din61360::EQUAL,
            LogicInterpretation::LessThan => din61360::LESS_THAN,
            LogicInterpretation::GreaterThan => din61360::GREATER_THAN,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn all_terms_are_absolute_and_unique() {
        let all = [
            cap::CAPABILITY,
            cap::SKILL,
            cap::OPC_UA_SKILL,
            cap::OPC_UA_VARIABLE_SKILL,
            cap::SKILL_PARAMETER,
            cap::CONFIGURATION_SKILL_PARAMETER,
            cap::SKILL_COMMAND,
            cap::CURRENT_STATE_OUTPUT,
            cap::SKILL_OUTPUT,
            cap::HAS_CAPABILITY,
            cap::PROVIDES_SKILL,
            cap::IS_EXECUTABLE_VIA_OPC_UA_SKILL,
            cap::HAS_SKILL_PARAMETER,
            cap::HAS_SKILL_COMMAND,
            cap::HAS_CURRENT_STATE_OUTPUT,
            cap::HAS_SKILL_OUTPUT,
            cap::BEHAVIOR_CONFORMS_TO,
            cap::SKILL_COMMAND_VARIABLE_TD,
            cap::CURRENT_STATE_OUTPUT_TD,
            vdi2206::MODULE,
            vdi2206::SENSOR,
            vdi2206::ACTUATOR,
            vdi2206::HAS_COMPONENT,
            vdi3682::PROCESS,
            isa88::STATE_MACHINE,
            isa88::STATE,
            isa88::TRANSITION,
            isa88::HAS_STATE,
            isa88::HAS_TRANSITION,
            isa88::FROM_STATE,
            isa88::TO_STATE,
            din61360::TYPE_DESCRIPTION,
            din61360::INSTANCE_DESCRIPTION,
            din61360::DATA_ELEMENT,
            din61360::HAS_TYPE_DESCRIPTION,
            din61360::HAS_INSTANCE_DESCRIPTION,
            din61360::HAS_DATA_ELEMENT,
            din61360::HAS_VALUE,
            din61360::EXPRESSION_GOAL,
            din61360::LOGIC_INTERPRETATION,
            din61360::REQUIREMENT,
            din61360::ASSURANCE,
            din61360::ACTUAL_VALUE,
            din61360::EQUAL,
            din61360::LESS_THAN,
            din61360::GREATER_THAN,
            opcua::UA_SERVER,
            opcua::UA_NODE_SET,
            opcua::UA_VARIABLE,
            opcua::ENDPOINT_URL,
            opcua::NODE_NAMESPACE,
            opcua::NODE_IDENTIFIER,
            opcua::NODE_ACCESS,
            opcua::HAS_NODE,
            opcua::HAS_NODE_SET,
            rdf::TYPE,
            rdfs::LABEL,
        ];
        let unique: BTreeSet<&str> = all.iter().copied().collect();
        assert_eq!(unique.len(), all.len());
        for term in all {
            assert!(
                crate::rdf::Iri::new(term).is_ok(),
                "not absolute: {term}"
            );
        }
    }
}
