//! Declarative mapping from MTP documents to the capability/skill graph.
//!
//! A rule iterates elements via a path expression, optionally hops across a
//! RefID link, mints one subject IRI per (element, rule) from a template and
//! emits class plus predicate-object triples. Unresolvable links degrade to
//! warnings so partial MTPs still convert to an inspectable graph.

mod builtin;
mod merge;
mod synthesis;

pub use builtin::builtin_rules;
pub use merge::merge;
pub use synthesis::synthesize_state_machine;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::aml::{AmlDocument, Element, PathExpr};
use crate::rdf::{Iri, PrefixConflict, RdfGraph, Subject, Term, Triple};
use crate::vocab::{self, SkillConfig, TemplateError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MappingError {
    #[error("base IRI {0:?} is not absolute")]
    InvalidBaseIri(String),
    #[error("invalid state machine template: {0}")]
    InvalidTemplate(#[from] TemplateError),
    #[error("no skill command individual for {0}")]
    MissingCommandIndividual(String),
    #[error("no current-state output individual for {0}")]
    MissingStateOutput(String),
    #[error(transparent)]
    PrefixConflict(#[from] PrefixConflict),
    #[error("module {0} appears in more than one input graph")]
    BaseIriCollision(String),
}

/// Literal datatypes the mapping can emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LiteralType {
    String,
    Integer,
    Double,
    Boolean,
    AnyUri,
}

impl LiteralType {
    pub fn datatype_iri(self) -> &'static str {
        match self {
            LiteralType::String => crate::rdf::XSD_STRING,
            LiteralType::Integer => crate::rdf::XSD_INTEGER,
            LiteralType::Double => crate::rdf::XSD_DOUBLE,
            LiteralType::Boolean => crate::rdf::XSD_BOOLEAN,
            LiteralType::AnyUri => crate::rdf::XSD_ANY_URI,
        }
    }
}

/// IRI pattern with `{base}`, `{module}`, `{service}`, `{procedure}` and
/// `{name}` placeholders. Placeholder values are sanitized to
/// `[A-Za-z0-9_]`; `{base}` is inserted verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IriTemplate(pub String);

impl IriTemplate {
    pub fn new(pattern: &str) -> IriTemplate {
        IriTemplate(pattern.to_string())
    }

    fn render(&self, ctx: &RenderContext<'_>) -> Result<String, String> {
        let mut out = String::new();
        let mut rest = self.0.as_str();
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let after = &rest[open + 1..];
            let close = after
                .find('}')
                .ok_or_else(|| format!("unterminated placeholder in {:?}", self.0))?;
            let key = &after[..close];
            match key {
                "base" => out.push_str(ctx.base),
                "module" => match ctx.module_name {
                    Some(name) => out.push_str(&sanitize(name)),
                    None => return Err("document has no ModuleTypePackage element".to_string()),
                },
                "service" => match ctx.element.ancestor_or_self_with_suc("Service") {
                    Some(el) => out.push_str(&sanitize(el.name())),
                    None => {
                        return Err(format!(
                            "element {:?} is not inside a Service",
                            ctx.element.name()
                        ))
                    }
                },
                "procedure" => match ctx.element.ancestor_or_self_with_suc("ServiceProcedure") {
                    Some(el) => out.push_str(&sanitize(el.name())),
                    None => {
                        return Err(format!(
                            "element {:?} is not inside a ServiceProcedure",
                            ctx.element.name()
                        ))
                    }
                },
                "name" => out.push_str(&sanitize(ctx.element.name())),
                other => return Err(format!("unknown placeholder {{{other}}}")),
            }
            rest = &after[close + 1..];
        }
        out.push_str(rest);
        Ok(out)
    }
}

/// IRI-safe rendering of MTP names.
pub fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect()
}

/// A LinkedObject hop: read a RefID through `ref_path` (relative to the
/// iterated element), then resolve it to the unique element of the expected
/// SystemUnitClass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RefIdJoin {
    pub ref_path: PathExpr,
    pub expected_suc: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum ObjectSpec {
    /// A fixed IRI.
    ConstIri { iri: String },
    /// An IRI minted from a template in the iterated element's context.
    TemplateIri { template: IriTemplate },
    /// A typed literal read from the (joined) element's attribute.
    AttrLiteral { attr: String, datatype: LiteralType },
    /// The iterated element's name as a string literal.
    ElementName,
    /// The rule's source attribute name as a string literal.
    AttrName,
    /// Attach the OPC UA variable behind the source attribute: mints a
    /// `UaVariable` individual with namespace/identifier/access and
    /// registers it in the document's node set.
    OpcUaNode,
    /// One IRI per element reached by `path`, templated in that element's
    /// context. Used to fan a link out to every skill of a service.
    ForEach { path: PathExpr, template: IriTemplate },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PredicateObjectMap {
    pub predicate: String,
    #[serde(flatten)]
    pub object: ObjectSpec,
    /// Emit `(object, predicate, subject)` instead of
    /// `(subject, predicate, object)`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub inverse: bool,
}

impl PredicateObjectMap {
    pub fn forward(predicate: &str, object: ObjectSpec) -> PredicateObjectMap {
        PredicateObjectMap {
            predicate: predicate.to_string(),
            object,
            inverse: false,
        }
    }

    pub fn inverse(predicate: &str, object: ObjectSpec) -> PredicateObjectMap {
        PredicateObjectMap {
            predicate: predicate.to_string(),
            object,
            inverse: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MappingRule {
    pub name: String,
    /// Row of the conversion statistics this rule contributes to; rules
    /// without a row (plumbing like node sets) stay out of the stats.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats_row: Option<String>,
    pub iterator: PathExpr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ref_join: Option<RefIdJoin>,
    /// For attribute-level rules: the rule fires only when the (joined)
    /// element carries this attribute or an OPC UA item of the same name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_attribute: Option<String>,
    pub subject: IriTemplate,
    pub classes: Vec<String>,
    #[serde(default)]
    pub predicate_object_maps: Vec<PredicateObjectMap>,
}

/// Conversion output: the graph, per-source-class individual counts and the
/// warnings collected along the way.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConversionResult {
    pub graph: RdfGraph,
    pub stats: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
}

struct RenderContext<'a> {
    base: &'a str,
    module_name: Option<&'a str>,
    element: Element<'a>,
}

/// Run a rule set over a document.
pub fn apply_rules(
    doc: &AmlDocument,
    rules: &[MappingRule],
    base_iri: &str,
) -> Result<ConversionResult, MappingError> {
    Iri::new(base_iri).map_err(|_| MappingError::InvalidBaseIri(base_iri.to_string()))?;
    let base = base_iri.trim_end_matches(['#', '/']);

    let mut graph = RdfGraph::new();
    for (prefix, ns) in vocab::STANDARD_PREFIXES {
        graph
            .register_prefix(prefix, ns)
            .expect("standard prefixes are consistent");
    }
    let namespace = format!("{base}#");
    graph
        .register_prefix(&derive_prefix(base), &namespace)
        .expect("fresh graph has no conflicting prefix");

    let mut warnings: Vec<String> = Vec::new();
    let module_name = module_element_name(doc);
    let node_set_iri = node_set_iri(doc, base, module_name);

    let mut stats_subjects: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for rule in rules {
        if let Some(row) = &rule.stats_row {
            stats_subjects.entry(row.clone()).or_default();
        }
    }

    for rule in rules {
        let elements = match doc.select(&rule.iterator) {
            Ok(elements) => elements,
            Err(e) => {
                warnings.push(format!("rule {:?}: iterator not usable: {e}", rule.name));
                continue;
            }
        };
        for element in elements {
            apply_rule_to_element(
                doc,
                rule,
                element,
                base,
                module_name,
                node_set_iri.as_deref(),
                &mut graph,
                &mut stats_subjects,
                &mut warnings,
            );
        }
    }

    let stats = stats_subjects
        .into_iter()
        .map(|(row, subjects)| (row, subjects.len()))
        .collect();
    Ok(ConversionResult {
        graph,
        stats,
        warnings,
    })
}

#[allow(clippy::too_many_arguments)]
fn apply_rule_to_element(
    doc: &AmlDocument,
    rule: &MappingRule,
    element: Element<'_>,
    base: &str,
    module_name: Option<&str>,
    node_set_iri: Option<&str>,
    graph: &mut RdfGraph,
    stats_subjects: &mut BTreeMap<String, BTreeSet<String>>,
    warnings: &mut Vec<String>,
) {
    let ctx = RenderContext {
        base,
        module_name,
        element,
    };

    // Resolve the LinkedObject hop, if any.
    let target = match &rule.ref_join {
        None => element,
        Some(join) => {
            let values = match element.select_values(&join.ref_path) {
                Ok(values) => values,
                Err(e) => {
                    warnings.push(format!("rule {:?}: ref path not usable: {e}", rule.name));
                    return;
                }
            };
            let Some(ref_id) = values.first() else {
                warnings.push(format!(
                    "rule {:?}: element {:?} has no value for {}",
                    rule.name,
                    element.name(),
                    join.ref_path
                ));
                return;
            };
            match doc.resolve_ref_id(ref_id, Some(&join.expected_suc)) {
                Ok(target) => target,
                Err(e) => {
                    warnings.push(format!(
                        "rule {:?}: unresolved RefID join from {:?}: {e}",
                        rule.name,
                        element.name()
                    ));
                    return;
                }
            }
        }
    };

    // Attribute-level rules fire only where the attribute exists.
    if let Some(attr) = &rule.source_attribute {
        let has_attribute = target.attribute_value(attr).is_some();
        let has_item = target
            .external_interfaces()
            .iter()
            .any(|i| i.interface_class == "OPCUAItem" && &i.name == attr);
        if !has_attribute && !has_item {
            return;
        }
    }

    let subject_iri = match rule.subject.render(&ctx) {
        Ok(iri) => iri,
        Err(e) => {
            warnings.push(format!(
                "rule {:?}: subject for {:?} not resolvable: {e}",
                rule.name,
                element.name()
            ));
            return;
        }
    };

    if let Some(row) = &rule.stats_row {
        stats_subjects
            .entry(row.clone())
            .or_default()
            .insert(subject_iri.clone());
    }
    for class in &rule.classes {
        graph.add_iri(&subject_iri, vocab::rdf::TYPE, class);
    }

    for pom in &rule.predicate_object_maps {
        emit_pom(rule, pom, &ctx, target, &subject_iri, node_set_iri, graph, warnings);
    }
}

#[allow(clippy::too_many_arguments)]
fn emit_pom(
    rule: &MappingRule,
    pom: &PredicateObjectMap,
    ctx: &RenderContext<'_>,
    target: Element<'_>,
    subject_iri: &str,
    node_set_iri: Option<&str>,
    graph: &mut RdfGraph,
    warnings: &mut Vec<String>,
) {
    let mut objects: Vec<Term> = Vec::new();
    match &pom.object {
        ObjectSpec::ConstIri { iri } => objects.push(Term::iri(iri)),
        ObjectSpec::TemplateIri { template } => match template.render(ctx) {
            Ok(iri) => objects.push(Term::iri(&iri)),
            Err(e) => {
                warnings.push(format!("rule {:?}: object template: {e}", rule.name));
                return;
            }
        },
        ObjectSpec::AttrLiteral { attr, datatype } => {
            match target.attribute_value(attr) {
                Some(value) => objects.push(Term::typed(value, datatype.datatype_iri())),
                None => return,
            }
        }
        ObjectSpec::ElementName => objects.push(Term::string(ctx.element.name())),
        ObjectSpec::AttrName => match &rule.source_attribute {
            Some(attr) => objects.push(Term::string(attr.as_str())),
            None => return,
        },
        ObjectSpec::OpcUaNode => {
            let Some(attr) = &rule.source_attribute else {
                return;
            };
            match target.opcua_ref_of(attr) {
                Ok(Some(node)) => {
                    let var_iri = format!("{subject_iri}_UaVariable");
                    graph.add_iri(&var_iri, vocab::rdf::TYPE, vocab::opcua::UA_VARIABLE);
                    graph.add_literal(
                        &var_iri,
                        vocab::opcua::NODE_NAMESPACE,
                        Term::string(&node.namespace),
                    );
                    graph.add_literal(
                        &var_iri,
                        vocab::opcua::NODE_IDENTIFIER,
                        Term::string(&node.identifier),
                    );
                    graph.add_literal(
                        &var_iri,
                        vocab::opcua::NODE_ACCESS,
                        Term::string(node.access.as_str()),
                    );
                    if let Some(node_set) = node_set_iri {
                        graph.add_iri(node_set, vocab::opcua::HAS_NODE, &var_iri);
                    }
                    objects.push(Term::iri(&var_iri));
                }
                Ok(None) => return,
                Err(e) => {
                    warnings.push(format!(
                        "rule {:?}: OPC UA item for {:?} on {:?}: {e}",
                        rule.name,
                        attr,
                        target.name()
                    ));
                    return;
                }
            }
        }
        ObjectSpec::ForEach { path, template } => {
            let elements = match ctx.element.select(path) {
                Ok(elements) => elements,
                Err(e) => {
                    warnings.push(format!("rule {:?}: for-each path: {e}", rule.name));
                    return;
                }
            };
            for element in elements {
                let each_ctx = RenderContext {
                    base: ctx.base,
                    module_name: ctx.module_name,
                    element,
                };
                match template.render(&each_ctx) {
                    Ok(iri) => objects.push(Term::iri(&iri)),
                    Err(e) => {
                        warnings.push(format!("rule {:?}: for-each template: {e}", rule.name));
                    }
                }
            }
        }
    }

    let predicate = Iri::new(&pom.predicate).expect("rule predicates are absolute IRIs");
    for object in objects {
        if pom.inverse {
            let Term::Iri(object_iri) = object else {
                warnings.push(format!(
                    "rule {:?}: inverse map needs an IRI object",
                    rule.name
                ));
                return;
            };
            graph.add(Triple::new(
                Subject::Iri(object_iri),
                predicate.clone(),
                Term::iri(subject_iri),
            ));
        } else {
            graph.add(Triple::new(
                Subject::Iri(Iri::new(subject_iri).expect("subject built from absolute base")),
                predicate.clone(),
                object,
            ));
        }
    }
}

/// Name of the document's ModuleTypePackage element, if present.
fn module_element_name(doc: &AmlDocument) -> Option<&str> {
    doc.all_elements()
        .find(|el| el.suc_class() == "ModuleTypePackage")
        .map(|el| el.name())
}

/// IRI of the node set collecting every UaVariable of this document,
/// derived from the first OPCUAServer element.
fn node_set_iri(doc: &AmlDocument, base: &str, module_name: Option<&str>) -> Option<String> {
    let server = doc
        .all_elements()
        .find(|el| el.suc_class() == "OPCUAServer")?;
    let ctx = RenderContext {
        base,
        module_name,
        element: server,
    };
    IriTemplate::new("{base}#{module}_{name}_NodeSet").render(&ctx).ok()
}

/// Prefix for the module's own namespace, derived from the base IRI.
fn derive_prefix(base: &str) -> String {
    let candidate = base
        .rsplit(['/', ':', '#'])
        .find(|segment| !segment.is_empty())
        .unwrap_or("ns");
    let mut prefix: String = candidate
        .to_ascii_lowercase()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    if prefix.is_empty() || prefix.chars().next().is_some_and(|c| c.is_ascii_digit()) {
        prefix = format!("ns{prefix}");
    }
    if vocab::STANDARD_PREFIXES.iter().any(|(name, _)| *name == prefix) {
        prefix.push('_');
    }
    prefix
}

/// Full conversion: run the rule set, then synthesize one state machine per
/// skill that ended up with a command and a state output.
pub fn map_document(
    doc: &AmlDocument,
    base_iri: &str,
    config: &SkillConfig,
) -> Result<ConversionResult, MappingError> {
    map_document_with_rules(doc, &builtin_rules(), base_iri, config)
}

pub fn map_document_with_rules(
    doc: &AmlDocument,
    rules: &[MappingRule],
    base_iri: &str,
    config: &SkillConfig,
) -> Result<ConversionResult, MappingError> {
    config.validate()?;
    let mut result = apply_rules(doc, rules, base_iri)?;

    let skills: Vec<String> = result
        .graph
        .subjects_of_type(vocab::cap::OPC_UA_VARIABLE_SKILL)
        .iter()
        .filter_map(|s| s.as_iri().map(|iri| iri.as_str().to_string()))
        .collect();
    for skill in skills {
        let commands = result.graph.objects(&skill, vocab::cap::HAS_SKILL_COMMAND);
        let outputs = result
            .graph
            .objects(&skill, vocab::cap::HAS_CURRENT_STATE_OUTPUT);
        let command = match commands.as_slice() {
            [Term::Iri(iri)] => iri.as_str().to_string(),
            [] => {
                result.warnings.push(format!(
                    "skill {skill} has no command individual; state machine skipped"
                ));
                continue;
            }
            _ => {
                result.warnings.push(format!(
                    "skill {skill} has {} command individuals; state machine skipped",
                    commands.len()
                ));
                continue;
            }
        };
        let output = match outputs.as_slice() {
            [Term::Iri(iri)] => iri.as_str().to_string(),
            [] => {
                result.warnings.push(format!(
                    "skill {skill} has no current-state output; state machine skipped"
                ));
                continue;
            }
            _ => {
                result.warnings.push(format!(
                    "skill {skill} has {} current-state outputs; state machine skipped",
                    outputs.len()
                ));
                continue;
            }
        };
        synthesis::synthesize_state_machine(&mut result.graph, &skill, config, &command, &output)?;
    }
    Ok(result)
}
