//! Minimal path dialect for iterating MTP elements, shaped after the XPath
//! fragments mapping rules need:
//!
//! - `//IE[suc='X']`    all descendants whose SUC class is X
//! - `child::IE[suc='X']` direct children (leading `/` optional)
//! - `parent::`         one step up
//! - `@Attr`            attribute leaf, only as the final step
//!
//! Steps compose with `/`. `IE` without a filter matches any element.

use std::fmt;
use std::str::FromStr;

use super::{AmlDocument, AmlError, Element};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathStep {
    /// `//IE[suc='X']`; `suc: None` matches every descendant.
    Descendants { suc: Option<String> },
    /// `child::IE[suc='X']`.
    Children { suc: Option<String> },
    /// `parent::`
    Parent,
    /// `@Name`, terminal only.
    Attribute(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathExpr {
    steps: Vec<PathStep>,
    source: String,
}

impl PathExpr {
    pub fn parse(input: &str) -> Result<PathExpr, AmlError> {
        let mut steps = Vec::new();
        let mut rest = input.trim();
        if rest.is_empty() {
            return Err(AmlError::InvalidPath("empty expression".to_string()));
        }
        while !rest.is_empty() {
            if let Some(after) = rest.strip_prefix("//") {
                let (step, remaining) = parse_ie_step(after, input)?;
                steps.push(PathStep::Descendants { suc: step });
                rest = remaining;
            } else if let Some(after) = rest.strip_prefix("child::") {
                let (step, remaining) = parse_ie_step(after, input)?;
                steps.push(PathStep::Children { suc: step });
                rest = remaining;
            } else if let Some(after) = rest.strip_prefix("parent::") {
                steps.push(PathStep::Parent);
                rest = after;
            } else if let Some(after) = rest.strip_prefix('@') {
                let name = after.trim();
                if name.is_empty() || name.contains('/') {
                    return Err(AmlError::InvalidPath(format!(
                        "attribute step must terminate the path: {input:?}"
                    )));
                }
                steps.push(PathStep::Attribute(name.to_string()));
                rest = "";
            } else {
                return Err(AmlError::InvalidPath(format!(
                    "unsupported syntax at {rest:?} in {input:?}"
                )));
            }
            rest = match rest.strip_prefix('/') {
                Some(after) if !rest.starts_with("//") => after,
                _ => rest,
            };
        }
        for (index, step) in steps.iter().enumerate() {
            if matches!(step, PathStep::Attribute(_)) && index + 1 != steps.len() {
                return Err(AmlError::InvalidPath(format!(
                    "attribute step must terminate the path: {input:?}"
                )));
            }
        }
        Ok(PathExpr {
            steps,
            source: input.to_string(),
        })
    }

    pub fn steps(&self) -> &[PathStep] {
        &self.steps
    }

    pub fn is_attribute_path(&self) -> bool {
        matches!(self.steps.last(), Some(PathStep::Attribute(_)))
    }
}

impl fmt::Display for PathExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl FromStr for PathExpr {
    type Err = AmlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PathExpr::parse(s)
    }
}

impl serde::Serialize for PathExpr {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.source)
    }
}

impl<'de> serde::Deserialize<'de> for PathExpr {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        PathExpr::parse(&raw).map_err(serde::de::Error::custom)
    }
}

/// Parses `IE`, `IE[suc='X']` or `IE[suc="X"]`; returns the filter and the
/// unconsumed remainder (starting at `/` or end).
fn parse_ie_step<'a>(input: &'a str, whole: &str) -> Result<(Option<String>, &'a str), AmlError> {
    let rest = input.strip_prefix("IE").ok_or_else(|| {
        AmlError::InvalidPath(format!("expected IE step at {input:?} in {whole:?}"))
    })?;
    if let Some(after) = rest.strip_prefix('[') {
        let close = after.find(']').ok_or_else(|| {
            AmlError::InvalidPath(format!("unterminated filter in {whole:?}"))
        })?;
        let filter = &after[..close];
        let value = filter
            .strip_prefix("suc=")
            .and_then(|v| {
                let v = v.trim();
                v.strip_prefix('\'')
                    .and_then(|v| v.strip_suffix('\''))
                    .or_else(|| v.strip_prefix('"').and_then(|v| v.strip_suffix('"')))
            })
            .ok_or_else(|| {
                AmlError::InvalidPath(format!("unsupported filter {filter:?} in {whole:?}"))
            })?;
        Ok((Some(value.to_string()), &after[close + 1..]))
    } else {
        Ok((None, rest))
    }
}

enum Start<'a> {
    Document(&'a AmlDocument),
    Element(Element<'a>),
}

fn evaluate<'a>(start: Start<'a>, path: &PathExpr) -> Result<Vec<Element<'a>>, AmlError> {
    if path.is_attribute_path() {
        return Err(AmlError::InvalidPath(format!(
            "attribute path {path} is not an element selection"
        )));
    }
    Ok(evaluate_steps(start, &path.steps))
}

fn evaluate_values(start: Start<'_>, path: &PathExpr) -> Result<Vec<String>, AmlError> {
    let Some(PathStep::Attribute(name)) = path.steps.last() else {
        return Err(AmlError::InvalidPath(format!(
            "path {path} does not end in an attribute step"
        )));
    };
    let elements = evaluate_steps(start, &path.steps[..path.steps.len() - 1]);
    Ok(elements
        .iter()
        .filter_map(|el| el.attribute_value(name))
        .map(str::to_string)
        .collect())
}

fn evaluate_steps<'a>(start: Start<'a>, steps: &[PathStep]) -> Vec<Element<'a>> {
    // The document context: children = instance hierarchies, descendants =
    // every element. An element context uses its own subtree.
    let mut current: Vec<Element<'a>> = Vec::new();
    let mut at_document = false;
    match start {
        Start::Document(doc) => {
            at_document = true;
            // seed handled per first step below
            if let Some(first) = steps.first() {
                current = match first {
                    PathStep::Descendants { suc } => doc
                        .all_elements()
                        .filter(|el| matches_suc(el, suc))
                        .collect(),
                    PathStep::Children { suc } => doc
                        .instance_hierarchies()
                        .filter(|el| matches_suc(el, suc))
                        .collect(),
                    PathStep::Parent => Vec::new(),
                    PathStep::Attribute(_) => Vec::new(),
                };
            }
        }
        Start::Element(el) => current = vec![el],
    }
    let remaining = if at_document && !steps.is_empty() {
        &steps[1..]
    } else {
        steps
    };
    for step in remaining {
        let mut next = Vec::new();
        for el in &current {
            match step {
                PathStep::Descendants { suc } => {
                    next.extend(el.descendants().into_iter().filter(|d| matches_suc(d, suc)));
                }
                PathStep::Children { suc } => {
                    next.extend(el.children().filter(|c| matches_suc(c, suc)));
                }
                PathStep::Parent => {
                    if let Some(parent) = el.parent() {
                        next.push(parent);
                    }
                }
                PathStep::Attribute(_) => {}
            }
        }
        current = next;
    }
    // Document order, without duplicates from overlapping branches.
    current.sort_by_key(|el| el.element_id());
    current.dedup_by_key(|el| el.element_id());
    current
}

fn matches_suc(el: &Element<'_>, suc: &Option<String>) -> bool {
    match suc {
        Some(class) => el.suc_class() == class,
        None => true,
    }
}

pub fn select_from_document<'a>(
    doc: &'a AmlDocument,
    path: &PathExpr,
) -> Result<Vec<Element<'a>>, AmlError> {
    evaluate(Start::Document(doc), path)
}

pub fn select_from_element<'a>(
    el: Element<'a>,
    path: &PathExpr,
) -> Result<Vec<Element<'a>>, AmlError> {
    evaluate(Start::Element(el), path)
}

pub fn select_values_from_document(
    doc: &AmlDocument,
    path: &PathExpr,
) -> Result<Vec<String>, AmlError> {
    evaluate_values(Start::Document(doc), path)
}

pub fn select_values_from_element(
    el: Element<'_>,
    path: &PathExpr,
) -> Result<Vec<String>, AmlError> {
    evaluate_values(Start::Element(el), path)
}
