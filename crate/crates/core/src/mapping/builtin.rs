//! The built-in rule set, one rule per transferred MTP element or attribute.
//!
//! Subjects are minted as `{base}#{Module}_{Service}_{Procedure}_{Suffix}`
//! so individuals stay unique and stable across runs. Command and state
//! variables live on the ServiceControl element reached through the
//! service's RefID and are named with the service, which keeps one shared
//! individual per service even when several procedures link to it.

use super::{
    IriTemplate, LiteralType, MappingRule, ObjectSpec, PredicateObjectMap, RefIdJoin,
};
use crate::aml::PathExpr;
use crate::vocab::{cap, din61360, opcua, rdfs, vdi2206, vdi3682};

fn path(expr: &str) -> PathExpr {
    PathExpr::parse(expr).expect("built-in paths are valid")
}

fn label_from_name() -> PredicateObjectMap {
    PredicateObjectMap::forward(rdfs::LABEL, ObjectSpec::ElementName)
}

fn label_from_attr() -> PredicateObjectMap {
    PredicateObjectMap::forward(rdfs::LABEL, ObjectSpec::AttrName)
}

fn value_literal(attr: &str, datatype: LiteralType) -> PredicateObjectMap {
    PredicateObjectMap::forward(
        din61360::HAS_VALUE,
        ObjectSpec::AttrLiteral {
            attr: attr.to_string(),
            datatype,
        },
    )
}

fn attach_node() -> PredicateObjectMap {
    PredicateObjectMap::forward(opcua::HAS_NODE, ObjectSpec::OpcUaNode)
}

const MODULE_TEMPLATE: &str = "{base}#{module}";
const SERVICE_TEMPLATE: &str = "{base}#{module}_{service}";
const SKILL_TEMPLATE: &str = "{base}#{module}_{service}_{name}";
const SKILL_OF_PROCEDURE_TEMPLATE: &str = "{base}#{module}_{service}_{procedure}";

/// The ServiceControl element of the surrounding service, reached from a
/// procedure via the service's RefID.
fn service_control_join() -> RefIdJoin {
    RefIdJoin {
        ref_path: path("parent::/@RefID"),
        expected_suc: "ServiceControl".to_string(),
    }
}

fn operation_element_join() -> RefIdJoin {
    RefIdJoin {
        ref_path: path("@RefID"),
        expected_suc: "OperationElement".to_string(),
    }
}

/// A rule per control attribute on the ServiceControl: iterated per
/// procedure so every skill links to the shared per-service individual.
fn service_control_attribute_rule(
    name: &str,
    attr: &str,
    class: &str,
    link_predicate: &str,
    value: Option<LiteralType>,
) -> MappingRule {
    let mut poms = vec![
        label_from_attr(),
        PredicateObjectMap::inverse(
            link_predicate,
            ObjectSpec::TemplateIri {
                template: IriTemplate::new(SKILL_TEMPLATE),
            },
        ),
        attach_node(),
    ];
    if let Some(datatype) = value {
        poms.insert(1, value_literal(attr, datatype));
    }
    MappingRule {
        name: name.to_string(),
        stats_row: Some(attr.to_string()),
        iterator: path("//IE[suc='Service']/child::IE[suc='ServiceProcedure']"),
        ref_join: Some(service_control_join()),
        source_attribute: Some(attr.to_string()),
        subject: IriTemplate::new(&format!("{{base}}#{{module}}_{{service}}_{attr}")),
        classes: vec![class.to_string()],
        predicate_object_maps: poms,
    }
}

/// A rule per parameter attribute (VExt/VMin/VMax/VUnit) on the operation
/// element behind a ProcedureParameter.
fn procedure_parameter_rule(attr: &str, datatype: LiteralType) -> MappingRule {
    MappingRule {
        name: format!("procedure-parameter-{}", attr.to_ascii_lowercase()),
        stats_row: Some(attr.to_string()),
        iterator: path("//IE[suc='ProcedureParameter']"),
        ref_join: Some(operation_element_join()),
        source_attribute: Some(attr.to_string()),
        subject: IriTemplate::new(&format!(
            "{{base}}#{{module}}_{{service}}_{{procedure}}_{{name}}_{attr}"
        )),
        classes: vec![cap::SKILL_PARAMETER.to_string()],
        predicate_object_maps: vec![
            label_from_attr(),
            value_literal(attr, datatype),
            PredicateObjectMap::inverse(
                cap::HAS_SKILL_PARAMETER,
                ObjectSpec::TemplateIri {
                    template: IriTemplate::new(SKILL_OF_PROCEDURE_TEMPLATE),
                },
            ),
            attach_node(),
        ],
    }
}

/// Configuration parameters belong to the service and parameterize all of
/// its skills, so the link fans out over every procedure.
fn configuration_parameter_rule(attr: &str, datatype: LiteralType) -> MappingRule {
    MappingRule {
        name: format!("configuration-parameter-{}", attr.to_ascii_lowercase()),
        stats_row: Some(attr.to_string()),
        iterator: path("//IE[suc='ConfigurationParameter']"),
        ref_join: Some(operation_element_join()),
        source_attribute: Some(attr.to_string()),
        subject: IriTemplate::new(&format!("{{base}}#{{module}}_{{service}}_{{name}}_{attr}")),
        classes: vec![cap::CONFIGURATION_SKILL_PARAMETER.to_string()],
        predicate_object_maps: vec![
            label_from_attr(),
            value_literal(attr, datatype),
            PredicateObjectMap::inverse(
                cap::HAS_SKILL_PARAMETER,
                ObjectSpec::ForEach {
                    path: path("parent::/child::IE[suc='ServiceProcedure']"),
                    template: IriTemplate::new(SKILL_TEMPLATE),
                },
            ),
            attach_node(),
        ],
    }
}

/// A component's process value: the V attribute on sensors and actuators.
fn component_value_rule(name: &str, suc: &str) -> MappingRule {
    MappingRule {
        name: name.to_string(),
        stats_row: Some("V".to_string()),
        iterator: path(&format!("//IE[suc='{suc}']")),
        ref_join: None,
        source_attribute: Some("V".to_string()),
        subject: IriTemplate::new("{base}#{module}_{name}_V"),
        classes: vec![cap::SKILL_OUTPUT.to_string()],
        predicate_object_maps: vec![
            label_from_attr(),
            value_literal("V", LiteralType::Double),
            PredicateObjectMap::inverse(
                cap::HAS_SKILL_OUTPUT,
                ObjectSpec::TemplateIri {
                    template: IriTemplate::new("{base}#{module}_{name}"),
                },
            ),
            attach_node(),
        ],
    }
}

/// Report values and incoming process values sit under a procedure and
/// carry their V attribute on a linked operation element.
fn procedure_value_rule(suc: &str, class: &str, link_predicate: &str) -> MappingRule {
    MappingRule {
        name: format!("{}-value", suc.to_ascii_lowercase()),
        stats_row: Some(suc.to_string()),
        iterator: path(&format!("//IE[suc='{suc}']")),
        ref_join: Some(operation_element_join()),
        source_attribute: Some("V".to_string()),
        subject: IriTemplate::new("{base}#{module}_{service}_{procedure}_{name}_V"),
        classes: vec![class.to_string()],
        predicate_object_maps: vec![
            label_from_name(),
            value_literal("V", LiteralType::Double),
            PredicateObjectMap::inverse(
                link_predicate,
                ObjectSpec::TemplateIri {
                    template: IriTemplate::new(SKILL_OF_PROCEDURE_TEMPLATE),
                },
            ),
            attach_node(),
        ],
    }
}

/// The rule set realizing every transferred element and attribute class.
pub fn builtin_rules() -> Vec<MappingRule> {
    let mut rules = vec![
        MappingRule {
            name: "module".to_string(),
            stats_row: Some("ModuleTypePackage".to_string()),
            iterator: path("//IE[suc='ModuleTypePackage']"),
            ref_join: None,
            source_attribute: None,
            subject: IriTemplate::new(MODULE_TEMPLATE),
            classes: vec![vdi2206::MODULE.to_string()],
            predicate_object_maps: vec![label_from_name()],
        },
        // Services double as process and capability, bound to their module.
        MappingRule {
            name: "service".to_string(),
            stats_row: Some("Service".to_string()),
            iterator: path("//IE[suc='Service']"),
            ref_join: None,
            source_attribute: None,
            subject: IriTemplate::new("{base}#{module}_{name}"),
            classes: vec![vdi3682::PROCESS.to_string(), cap::CAPABILITY.to_string()],
            predicate_object_maps: vec![
                label_from_name(),
                PredicateObjectMap::inverse(
                    cap::HAS_CAPABILITY,
                    ObjectSpec::TemplateIri {
                        template: IriTemplate::new(MODULE_TEMPLATE),
                    },
                ),
            ],
        },
        // Procedures become skills, executable realizations of the service.
        MappingRule {
            name: "procedure".to_string(),
            stats_row: Some("ServiceProcedure".to_string()),
            iterator: path("//IE[suc='Service']/child::IE[suc='ServiceProcedure']"),
            ref_join: None,
            source_attribute: None,
            subject: IriTemplate::new(SKILL_TEMPLATE),
            classes: vec![cap::OPC_UA_VARIABLE_SKILL.to_string()],
            predicate_object_maps: vec![
                label_from_name(),
                PredicateObjectMap::inverse(
                    cap::IS_EXECUTABLE_VIA_OPC_UA_SKILL,
                    ObjectSpec::TemplateIri {
                        template: IriTemplate::new(SERVICE_TEMPLATE),
                    },
                ),
                PredicateObjectMap::inverse(
                    cap::PROVIDES_SKILL,
                    ObjectSpec::TemplateIri {
                        template: IriTemplate::new(MODULE_TEMPLATE),
                    },
                ),
            ],
        },
        MappingRule {
            name: "indicator-element".to_string(),
            stats_row: Some("IndicatorElement".to_string()),
            iterator: path("//IE[suc='IndicatorElement']"),
            ref_join: None,
            source_attribute: None,
            subject: IriTemplate::new("{base}#{module}_{name}"),
            classes: vec![vdi2206::SENSOR.to_string()],
            predicate_object_maps: vec![
                label_from_name(),
                PredicateObjectMap::inverse(
                    vdi2206::HAS_COMPONENT,
                    ObjectSpec::TemplateIri {
                        template: IriTemplate::new(MODULE_TEMPLATE),
                    },
                ),
            ],
        },
        MappingRule {
            name: "active-element".to_string(),
            stats_row: Some("ActiveElement".to_string()),
            iterator: path("//IE[suc='ActiveElement']"),
            ref_join: None,
            source_attribute: None,
            subject: IriTemplate::new("{base}#{module}_{name}"),
            classes: vec![vdi2206::ACTUATOR.to_string()],
            predicate_object_maps: vec![
                label_from_name(),
                PredicateObjectMap::inverse(
                    vdi2206::HAS_COMPONENT,
                    ObjectSpec::TemplateIri {
                        template: IriTemplate::new(MODULE_TEMPLATE),
                    },
                ),
            ],
        },
        MappingRule {
            name: "opcua-server".to_string(),
            stats_row: Some("OPCUAServer".to_string()),
            iterator: path("//IE[suc='OPCUAServer']"),
            ref_join: None,
            source_attribute: None,
            subject: IriTemplate::new("{base}#{module}_{name}"),
            classes: vec![opcua::UA_SERVER.to_string()],
            predicate_object_maps: vec![
                label_from_name(),
                PredicateObjectMap::forward(
                    opcua::ENDPOINT_URL,
                    ObjectSpec::AttrLiteral {
                        attr: "Endpoint".to_string(),
                        datatype: LiteralType::AnyUri,
                    },
                ),
                PredicateObjectMap::forward(
                    opcua::HAS_NODE_SET,
                    ObjectSpec::TemplateIri {
                        template: IriTemplate::new("{base}#{module}_{name}_NodeSet"),
                    },
                ),
            ],
        },
        MappingRule {
            name: "opcua-nodeset".to_string(),
            stats_row: None,
            iterator: path("//IE[suc='OPCUAServer']"),
            ref_join: None,
            source_attribute: None,
            subject: IriTemplate::new("{base}#{module}_{name}_NodeSet"),
            classes: vec![opcua::UA_NODE_SET.to_string()],
            predicate_object_maps: vec![],
        },
        service_control_attribute_rule(
            "command-ext",
            "CommandExt",
            cap::SKILL_COMMAND,
            cap::HAS_SKILL_COMMAND,
            None,
        ),
        service_control_attribute_rule(
            "state-cur",
            "StateCur",
            cap::CURRENT_STATE_OUTPUT,
            cap::HAS_CURRENT_STATE_OUTPUT,
            None,
        ),
        service_control_attribute_rule(
            "procedure-cur",
            "ProcedureCur",
            cap::SKILL_OUTPUT,
            cap::HAS_SKILL_OUTPUT,
            Some(LiteralType::Integer),
        ),
        service_control_attribute_rule(
            "procedure-req",
            "ProcedureReq",
            cap::SKILL_OUTPUT,
            cap::HAS_SKILL_OUTPUT,
            Some(LiteralType::Integer),
        ),
        service_control_attribute_rule(
            "procedure-ext",
            "ProcedureExt",
            cap::SKILL_PARAMETER,
            cap::HAS_SKILL_PARAMETER,
            Some(LiteralType::Integer),
        ),
    ];
    for (attr, datatype) in [
        ("VExt", LiteralType::Double),
        ("VMin", LiteralType::Double),
        ("VMax", LiteralType::Double),
        ("VUnit", LiteralType::String),
    ] {
        rules.push(procedure_parameter_rule(attr, datatype));
        rules.push(configuration_parameter_rule(attr, datatype));
    }
    rules.push(component_value_rule("indicator-value", "IndicatorElement"));
    rules.push(component_value_rule("active-value", "ActiveElement"));
    rules.push(procedure_value_rule(
        "ReportValue",
        cap::SKILL_OUTPUT,
        cap::HAS_SKILL_OUTPUT,
    ));
    rules.push(procedure_value_rule(
        "ProcessValueIn",
        cap::SKILL_PARAMETER,
        cap::HAS_SKILL_PARAMETER,
    ));
    rules
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_one_rule_mints_skills() {
        let rules = builtin_rules();
        let skill_rules: Vec<&MappingRule> = rules
            .iter()
            .filter(|r| r.classes.contains(&cap::OPC_UA_VARIABLE_SKILL.to_string()))
            .collect();
        assert_eq!(skill_rules.len(), 1);
        assert_eq!(skill_rules[0].name, "procedure");
    }

    #[test]
    fn command_rule_joins_through_the_service_ref_id() {
        let rules = builtin_rules();
        let rule = rules.iter().find(|r| r.name == "command-ext").unwrap();
        let join = rule.ref_join.as_ref().unwrap();
        assert_eq!(join.expected_suc, "ServiceControl");
        assert_eq!(join.ref_path.to_string(), "parent::/@RefID");
        assert_eq!(rule.source_attribute.as_deref(), Some("CommandExt"));
    }

    #[test]
    fn configuration_parameters_fan_out_to_every_skill() {
        let rules = builtin_rules();
        let rule = rules
            .iter()
            .find(|r| r.name == "configuration-parameter-vext")
            .unwrap();
        assert!(rule.predicate_object_maps.iter().any(|pom| {
            pom.inverse && matches!(pom.object, ObjectSpec::ForEach { .. })
        }));
    }

    #[test]
    fn every_rule_emits_vocabulary_classes() {
        for rule in builtin_rules() {
            for class in &rule.classes {
                assert!(
                    class.starts_with("http://mtp2skill.org/ontology/"),
                    "{} emits foreign class {}",
                    rule.name,
                    class
                );
            }
        }
    }
}
