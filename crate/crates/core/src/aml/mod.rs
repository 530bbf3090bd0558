//! AutomationML/CAEX document model for MTP files.
//!
//! Parses the CAEX subset that carries MTP content — InstanceHierarchy,
//! InternalElement, nested Attribute, ExternalInterface — into an arena of
//! elements with parent links, an ID index and a RefID index for the
//! LinkedObject relation. Everything else in the file is read and dropped.

mod container;
mod parser;
mod path;

pub use container::{open_mtp, ContainerKind, OpenedMtp};
pub use path::{PathExpr, PathStep};

use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AmlError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("root element is {0:?}, not CAEXFile")]
    NotCaex(String),
    #[error("duplicate element ID {0:?}")]
    DuplicateId(String),
    #[error("zip archive contains no .aml entry")]
    NoAmlEntry,
    #[error("no element carries RefID {ref_id:?}{}", match .expected_suc { Some(suc) => format!(" with class {suc}"), None => String::new() })]
    RefNotFound {
        ref_id: String,
        expected_suc: Option<String>,
    },
    #[error("RefID {0:?} matches {1} elements")]
    AmbiguousRef(String, usize),
    #[error("OPCUAItem {interface:?} is missing attribute {missing:?}")]
    IncompleteOpcUaItem { interface: String, missing: String },
    #[error("invalid path expression: {0}")]
    InvalidPath(String),
}

/// Index of an element in the document arena. Indices follow document order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ElementId(pub(crate) u32);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmlAttribute {
    pub name: String,
    pub value: Option<String>,
    pub data_type: Option<String>,
    pub unit: Option<String>,
    pub sub_attributes: Vec<AmlAttribute>,
}

impl AmlAttribute {
    fn find(&self, name: &str) -> Option<&AmlAttribute> {
        self.sub_attributes.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalInterface {
    pub name: String,
    /// Last segment of RefBaseClassPath, e.g. "OPCUAItem".
    pub interface_class: String,
    pub attributes: Vec<AmlAttribute>,
}

impl ExternalInterface {
    pub fn attribute_value(&self, name: &str) -> Option<&str> {
        self.attributes
            .iter()
            .find(|a| a.name == name)
            .and_then(|a| a.value.as_deref())
    }
}

/// How an OPC UA node may be used by a client.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessMode {
    Read,
    Write,
    ReadWrite,
}

impl AccessMode {
    /// MTP exports write the mode either as a name or as the numeric
    /// encoding 1/2/3.
    pub fn parse(value: &str) -> Option<AccessMode> {
        match value.trim().to_ascii_lowercase().as_str() {
            "read" | "readonly" | "1" => Some(AccessMode::Read),
            "write" | "writeonly" | "2" => Some(AccessMode::Write),
            "read-write" | "readwrite" | "3" => Some(AccessMode::ReadWrite),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            AccessMode::Read => "read",
            AccessMode::Write => "write",
            AccessMode::ReadWrite => "read-write",
        }
    }

    pub fn writable(&self) -> bool {
        matches!(self, AccessMode::Write | AccessMode::ReadWrite)
    }
}

/// Address of a variable in an OPC UA server's address space.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OpcUaNodeRef {
    pub namespace: String,
    pub identifier: String,
    pub access: AccessMode,
}

impl PartialOrd for AccessMode {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for AccessMode {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (*self as u8).cmp(&(*other as u8))
    }
}

impl std::hash::Hash for AccessMode {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        (*self as u8).hash(state);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct ElementNode {
    pub id: String,
    pub name: String,
    pub ref_base_system_unit_path: Option<String>,
    pub attributes: Vec<AmlAttribute>,
    pub external_interfaces: Vec<ExternalInterface>,
    pub children: Vec<ElementId>,
    pub parent: Option<ElementId>,
}

/// A parsed MTP AutomationML document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmlDocument {
    pub(crate) nodes: Vec<ElementNode>,
    pub(crate) roots: Vec<ElementId>,
    pub(crate) by_id: HashMap<String, ElementId>,
    pub(crate) by_ref_id: HashMap<String, Vec<ElementId>>,
}

impl AmlDocument {
    /// Parse raw AutomationML bytes.
    pub fn parse(bytes: &[u8]) -> Result<AmlDocument, AmlError> {
        parser::parse(bytes)
    }

    /// The InstanceHierarchy roots, in document order.
    pub fn instance_hierarchies(&self) -> impl Iterator<Item = Element<'_>> {
        self.roots.iter().map(move |id| Element { doc: self, id: *id })
    }

    pub fn element_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_by_id(&self, id: &str) -> Option<Element<'_>> {
        self.by_id.get(id).map(|eid| Element { doc: self, id: *eid })
    }

    /// Every element in the document, in document order.
    pub fn all_elements(&self) -> impl Iterator<Item = Element<'_>> {
        (0..self.nodes.len() as u32).map(move |i| Element {
            doc: self,
            id: ElementId(i),
        })
    }

    /// Elements carrying an attribute named `RefID` with the given value.
    pub fn elements_by_ref_id(&self, ref_id: &str) -> Vec<Element<'_>> {
        self.by_ref_id
            .get(ref_id)
            .map(|ids| {
                ids.iter()
                    .map(|eid| Element { doc: self, id: *eid })
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Resolve the LinkedObject relation: the unique element carrying
    /// `RefID = ref_id`, optionally restricted to a SystemUnitClass.
    pub fn resolve_ref_id(
        &self,
        ref_id: &str,
        expected_suc: Option<&str>,
    ) -> Result<Element<'_>, AmlError> {
        let matches: Vec<Element<'_>> = self
            .elements_by_ref_id(ref_id)
            .into_iter()
            .filter(|el| match expected_suc {
                Some(suc) => el.suc_class() == suc,
                None => true,
            })
            .collect();
        match matches.len() {
            0 => Err(AmlError::RefNotFound {
                ref_id: ref_id.to_string(),
                expected_suc: expected_suc.map(str::to_string),
            }),
            1 => Ok(matches[0]),
            n => Err(AmlError::AmbiguousRef(ref_id.to_string(), n)),
        }
    }

    /// Evaluate a path expression against the document roots.
    pub fn select(&self, path: &PathExpr) -> Result<Vec<Element<'_>>, AmlError> {
        path::select_from_document(self, path)
    }

    /// Evaluate a path expression ending in an attribute step.
    pub fn select_values(&self, path: &PathExpr) -> Result<Vec<String>, AmlError> {
        path::select_values_from_document(self, path)
    }
}

/// Borrowed view of one element.
#[derive(Debug, Clone, Copy)]
pub struct Element<'a> {
    doc: &'a AmlDocument,
    id: ElementId,
}

impl<'a> PartialEq for Element<'a> {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.doc, other.doc) && self.id == other.id
    }
}

impl<'a> Eq for Element<'a> {}

impl<'a> Element<'a> {
    fn node(&self) -> &'a ElementNode {
        &self.doc.nodes[self.id.0 as usize]
    }

    pub fn element_id(&self) -> ElementId {
        self.id
    }

    pub fn id(&self) -> &'a str {
        &self.node().id
    }

    pub fn name(&self) -> &'a str {
        &self.node().name
    }

    pub fn ref_base_system_unit_path(&self) -> Option<&'a str> {
        self.node().ref_base_system_unit_path.as_deref()
    }

    /// Last segment of RefBaseSystemUnitPath; empty when absent. MTP
    /// libraries version their path prefixes, the class name is stable.
    pub fn suc_class(&self) -> &'a str {
        self.node()
            .ref_base_system_unit_path
            .as_deref()
            .map(|p| p.rsplit('/').next().unwrap_or(p))
            .unwrap_or("")
    }

    pub fn attributes(&self) -> &'a [AmlAttribute] {
        &self.node().attributes
    }

    pub fn external_interfaces(&self) -> &'a [ExternalInterface] {
        &self.node().external_interfaces
    }

    pub fn children(&self) -> impl Iterator<Item = Element<'a>> + 'a {
        let doc = self.doc;
        self.node()
            .children
            .iter()
            .map(move |id| Element { doc, id: *id })
    }

    pub fn parent(&self) -> Option<Element<'a>> {
        self.node().parent.map(|id| Element { doc: self.doc, id })
    }

    /// All descendants in document order, not including the element itself.
    pub fn descendants(&self) -> Vec<Element<'a>> {
        let mut out = Vec::new();
        let mut stack: Vec<Element<'a>> = self.children().collect();
        stack.reverse();
        while let Some(el) = stack.pop() {
            out.push(el);
            let mut kids: Vec<Element<'a>> = el.children().collect();
            kids.reverse();
            stack.extend(kids);
        }
        out
    }

    /// Nearest ancestor-or-self with the given SUC class.
    pub fn ancestor_or_self_with_suc(&self, suc: &str) -> Option<Element<'a>> {
        let mut current = Some(*self);
        while let Some(el) = current {
            if el.suc_class() == suc {
                return Some(el);
            }
            current = el.parent();
        }
        None
    }

    /// Resolve a possibly dotted attribute name ("A.B") to its leaf value.
    /// Absence is a value, not an error.
    pub fn attribute_value(&self, dotted_name: &str) -> Option<&'a str> {
        let mut segments = dotted_name.split('.');
        let first = segments.next()?;
        let mut attr = self.node().attributes.iter().find(|a| a.name == first)?;
        for segment in segments {
            attr = attr.find(segment)?;
        }
        attr.value.as_deref()
    }

    /// The OPC UA node reference for the interface associated with the named
    /// attribute. Association is by name equality between the interface and
    /// the attribute. Returns `None` when no such interface exists.
    pub fn opcua_ref_of(&self, attribute_name: &str) -> Result<Option<OpcUaNodeRef>, AmlError> {
        let Some(interface) = self
            .node()
            .external_interfaces
            .iter()
            .find(|i| i.interface_class == "OPCUAItem" && i.name == attribute_name)
        else {
            return Ok(None);
        };
        let field = |name: &str| -> Result<&str, AmlError> {
            interface
                .attribute_value(name)
                .ok_or_else(|| AmlError::IncompleteOpcUaItem {
                    interface: interface.name.clone(),
                    missing: name.to_string(),
                })
        };
        let access_raw = field("Access")?;
        let namespace = field("Namespace")?;
        let identifier = field("Identifier")?;
        let access =
            AccessMode::parse(access_raw).ok_or_else(|| AmlError::IncompleteOpcUaItem {
                interface: interface.name.clone(),
                missing: format!("Access (unrecognized value {access_raw:?})"),
            })?;
        if namespace.is_empty() || identifier.is_empty() {
            return Err(AmlError::IncompleteOpcUaItem {
                interface: interface.name.clone(),
                missing: if namespace.is_empty() {
                    "Namespace".to_string()
                } else {
                    "Identifier".to_string()
                },
            });
        }
        Ok(Some(OpcUaNodeRef {
            namespace: namespace.to_string(),
            identifier: identifier.to_string(),
            access,
        }))
    }

    /// All OPCUAItem interfaces of this element with their node references.
    pub fn opcua_items(&self) -> Result<Vec<(String, OpcUaNodeRef)>, AmlError> {
        let mut out = Vec::new();
        for interface in &self.node().external_interfaces {
            if interface.interface_class == "OPCUAItem" {
                if let Some(node_ref) = self.opcua_ref_of(&interface.name)? {
                    out.push((interface.name.clone(), node_ref));
                }
            }
        }
        Ok(out)
    }

    pub fn select(&self, path: &PathExpr) -> Result<Vec<Element<'a>>, AmlError> {
        path::select_from_element(*self, path)
    }

    pub fn select_values(&self, path: &PathExpr) -> Result<Vec<String>, AmlError> {
        path::select_values_from_element(*self, path)
    }
}
