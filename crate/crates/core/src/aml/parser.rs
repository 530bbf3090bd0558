//! Streaming CAEX reader built on quick-xml.
//!
//! Only InstanceHierarchy subtrees are materialized. Element names are
//! matched on the local part, so namespaced and plain CAEX files parse the
//! same way. CAEX constructs outside the supported subset (role
//! requirements, mappings, libraries) are skipped.

use std::collections::HashMap;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{AmlAttribute, AmlDocument, AmlError, ElementId, ElementNode, ExternalInterface};

pub fn parse(bytes: &[u8]) -> Result<AmlDocument, AmlError> {
    let mut reader = Reader::from_reader(bytes);
    reader.config_mut().trim_text(true);

    let mut builder = Builder::default();
    let mut buf = Vec::new();
    let mut saw_root = false;

    loop {
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| AmlError::MalformedXml(format!("{e} at byte {}", reader.buffer_position())))?;
        match event {
            Event::Start(start) => {
                let local = local_name(&start);
                if !saw_root {
                    saw_root = true;
                    if local != "CAEXFile" {
                        return Err(AmlError::NotCaex(local));
                    }
                    continue;
                }
                builder.open(local, &start, &reader)?;
            }
            Event::Empty(start) => {
                let local = local_name(&start);
                if !saw_root {
                    saw_root = true;
                    if local != "CAEXFile" {
                        return Err(AmlError::NotCaex(local));
                    }
                    break;
                }
                builder.open(local.clone(), &start, &reader)?;
                builder.close()?;
            }
            Event::End(_) => {
                if builder.depth() > 0 {
                    builder.close()?;
                }
            }
            Event::Text(text) => {
                let value = text
                    .unescape()
                    .map_err(|e| AmlError::MalformedXml(e.to_string()))?;
                builder.text(&value);
            }
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    if !saw_root {
        return Err(AmlError::NotCaex("(empty document)".to_string()));
    }
    builder.finish()
}

fn local_name(start: &BytesStart<'_>) -> String {
    String::from_utf8_lossy(start.name().local_name().as_ref()).into_owned()
}

fn xml_attr(start: &BytesStart<'_>, name: &str) -> Result<Option<String>, AmlError> {
    for attr in start.attributes() {
        let attr = attr.map_err(|e| AmlError::MalformedXml(e.to_string()))?;
        if attr.key.local_name().as_ref() == name.as_bytes() {
            let value = attr
                .unescape_value()
                .map_err(|e| AmlError::MalformedXml(e.to_string()))?;
            return Ok(Some(value.into_owned()));
        }
    }
    Ok(None)
}

/// One open XML element we care about (or are skipping).
enum Frame {
    /// An element in the arena: an InstanceHierarchy or InternalElement.
    Element(ElementId),
    /// An Attribute under construction, possibly nested.
    Attribute(AmlAttribute),
    /// An ExternalInterface under construction.
    Interface(ExternalInterface),
    /// The Value child of an Attribute.
    Value(String),
    /// Anything else: consumed without effect.
    Ignored,
}

#[derive(Default)]
struct Builder {
    nodes: Vec<ElementNode>,
    roots: Vec<ElementId>,
    stack: Vec<Frame>,
}

impl Builder {
    fn depth(&self) -> usize {
        self.stack.len()
    }

    fn current_element(&self) -> Option<ElementId> {
        self.stack.iter().rev().find_map(|frame| match frame {
            Frame::Element(id) => Some(*id),
            _ => None,
        })
    }

    /// Whether the innermost relevant frame is an element (vs. attribute or
    /// interface), i.e. whether a child Attribute belongs to the element.
    fn innermost(&self) -> Option<&Frame> {
        self.stack.last()
    }

    fn open<B: std::io::BufRead>(
        &mut self,
        local: String,
        start: &BytesStart<'_>,
        reader: &Reader<B>,
    ) -> Result<(), AmlError> {
        // Inside an ignored subtree everything stays ignored.
        if matches!(self.innermost(), Some(Frame::Ignored) | Some(Frame::Value(_))) {
            self.stack.push(Frame::Ignored);
            return Ok(());
        }
        let frame = match local.as_str() {
            "InstanceHierarchy" if self.stack.is_empty() => {
                let name = xml_attr(start, "Name")?.unwrap_or_default();
                let id = xml_attr(start, "ID")?.unwrap_or_else(|| format!("ih:{name}"));
                let eid = self.push_node(ElementNode {
                    id,
                    name,
                    ref_base_system_unit_path: None,
                    attributes: Vec::new(),
                    external_interfaces: Vec::new(),
                    children: Vec::new(),
                    parent: None,
                });
                self.roots.push(eid);
                Frame::Element(eid)
            }
            "InternalElement" if !self.stack.is_empty() => {
                let name = xml_attr(start, "Name")?.unwrap_or_default();
                let id = xml_attr(start, "ID")?.ok_or_else(|| {
                    AmlError::MalformedXml(format!(
                        "InternalElement {name:?} has no ID (near byte {})",
                        reader.buffer_position()
                    ))
                })?;
                let parent = self.current_element();
                let eid = self.push_node(ElementNode {
                    id,
                    name,
                    ref_base_system_unit_path: xml_attr(start, "RefBaseSystemUnitPath")?,
                    attributes: Vec::new(),
                    external_interfaces: Vec::new(),
                    children: Vec::new(),
                    parent,
                });
                if let Some(parent) = parent {
                    self.nodes[parent.0 as usize].children.push(eid);
                }
                Frame::Element(eid)
            }
            "Attribute" => {
                let in_scope = matches!(
                    self.innermost(),
                    Some(Frame::Element(_)) | Some(Frame::Attribute(_)) | Some(Frame::Interface(_))
                );
                if in_scope {
                    Frame::Attribute(AmlAttribute {
                        name: xml_attr(start, "Name")?.unwrap_or_default(),
                        value: None,
                        data_type: xml_attr(start, "AttributeDataType")?,
                        unit: xml_attr(start, "Unit")?,
                        sub_attributes: Vec::new(),
                    })
                } else {
                    Frame::Ignored
                }
            }
            "ExternalInterface" => {
                if matches!(self.innermost(), Some(Frame::Element(_))) {
                    let class_path = xml_attr(start, "RefBaseClassPath")?.unwrap_or_default();
                    let interface_class = class_path
                        .rsplit('/')
                        .next()
                        .unwrap_or_default()
                        .to_string();
                    Frame::Interface(ExternalInterface {
                        name: xml_attr(start, "Name")?.unwrap_or_default(),
                        interface_class,
                        attributes: Vec::new(),
                    })
                } else {
                    Frame::Ignored
                }
            }
            "Value" => {
                if matches!(self.innermost(), Some(Frame::Attribute(_))) {
                    Frame::Value(String::new())
                } else {
                    Frame::Ignored
                }
            }
            _ => Frame::Ignored,
        };
        self.stack.push(frame);
        Ok(())
    }

    fn text(&mut self, value: &str) {
        if let Some(Frame::Value(buffer)) = self.stack.last_mut() {
            buffer.push_str(value);
        }
    }

    fn close(&mut self) -> Result<(), AmlError> {
        let frame = self.stack.pop().expect("balanced XML events");
        match frame {
            Frame::Element(_) | Frame::Ignored => {}
            Frame::Value(text) => {
                if let Some(Frame::Attribute(attr)) = self.stack.last_mut() {
                    attr.value = Some(text);
                }
            }
            Frame::Attribute(attr) => match self.stack.last_mut() {
                Some(Frame::Attribute(parent)) => parent.sub_attributes.push(attr),
                Some(Frame::Interface(interface)) => interface.attributes.push(attr),
                Some(Frame::Element(eid)) => {
                    let eid = *eid;
                    self.nodes[eid.0 as usize].attributes.push(attr);
                }
                _ => {}
            },
            Frame::Interface(interface) => {
                if let Some(Frame::Element(eid)) = self.stack.last() {
                    let eid = *eid;
                    self.nodes[eid.0 as usize].external_interfaces.push(interface);
                }
            }
        }
        Ok(())
    }

    fn push_node(&mut self, node: ElementNode) -> ElementId {
        let id = ElementId(self.nodes.len() as u32);
        self.nodes.push(node);
        id
    }

    fn finish(self) -> Result<AmlDocument, AmlError> {
        let mut by_id = HashMap::new();
        let mut by_ref_id: HashMap<String, Vec<ElementId>> = HashMap::new();
        for (index, node) in self.nodes.iter().enumerate() {
            let eid = ElementId(index as u32);
            if by_id.insert(node.id.clone(), eid).is_some() {
                return Err(AmlError::DuplicateId(node.id.clone()));
            }
            if let Some(ref_id) = node
                .attributes
                .iter()
                .find(|a| a.name == "RefID")
                .and_then(|a| a.value.as_deref())
            {
                by_ref_id.entry(ref_id.to_string()).or_default().push(eid);
            }
        }
        Ok(AmlDocument {
            nodes: self.nodes,
            roots: self.roots,
            by_id,
            by_ref_id,
        })
    }
}
