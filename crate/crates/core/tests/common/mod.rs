//! Shared helpers for the acceptance suite: a deterministic RNG, a random
//! MTP generator, and an independent count oracle that scans the raw XML
//! without going through the document model.

use std::collections::BTreeMap;

use quick_xml::events::Event;
use quick_xml::Reader;

/// SplitMix64: tiny, deterministic, good enough for structural fuzzing.
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> SplitMix64 {
        SplitMix64 { state: seed }
    }

    pub fn next(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, bound: u64) -> u64 {
        self.next() % bound
    }

    pub fn chance(&mut self, numerator: u64, denominator: u64) -> bool {
        self.below(denominator) < numerator
    }
}

/// Generate a structurally valid MTP with `0..=5` services of `0..=5`
/// procedures each. Every service is wired to a complete ServiceControl;
/// parameters, components and report values appear at random.
pub fn generate_mtp(seed: u64) -> String {
    let mut rng = SplitMix64::new(seed);
    let mut id = 0u64;
    let mut next_id = move || {
        id += 1;
        format!("id-{seed}-{id}")
    };
    let module = format!("Module{}", seed % 10_000);
    let ns = format!("urn:generated:{seed}");

    let mut services_xml = String::new();
    let mut instances_xml = String::new();
    let service_count = rng.below(6);
    for s in 0..service_count {
        let service = format!("Service{s}");
        let control_link = format!("lnk-{seed}-control-{s}");
        let mut children = String::new();

        if rng.chance(1, 3) {
            let link = format!("lnk-{seed}-cfg-{s}");
            children.push_str(&format!(
                r#"<InternalElement Name="Setpoint" ID="{}" RefBaseSystemUnitPath="MTPServiceSUCLib/ConfigurationParameter"><Attribute Name="RefID"><Value>{link}</Value></Attribute></InternalElement>"#,
                next_id()
            ));
            instances_xml.push_str(&operation_element(
                &format!("SetpointValue{s}"),
                &next_id(),
                &link,
                &mut rng,
            ));
        }

        let procedure_count = rng.below(6);
        for p in 0..procedure_count {
            let procedure = format!("Procedure{p}");
            let mut procedure_children = String::new();
            if rng.chance(1, 3) {
                let link = format!("lnk-{seed}-param-{s}-{p}");
                procedure_children.push_str(&format!(
                    r#"<InternalElement Name="Amount" ID="{}" RefBaseSystemUnitPath="MTPServiceSUCLib/ProcedureParameter"><Attribute Name="RefID"><Value>{link}</Value></Attribute></InternalElement>"#,
                    next_id()
                ));
                instances_xml.push_str(&operation_element(
                    &format!("AmountValue{s}x{p}"),
                    &next_id(),
                    &link,
                    &mut rng,
                ));
            }
            if rng.chance(1, 4) {
                let link = format!("lnk-{seed}-report-{s}-{p}");
                procedure_children.push_str(&format!(
                    r#"<InternalElement Name="Yield" ID="{}" RefBaseSystemUnitPath="MTPServiceSUCLib/ReportValue"><Attribute Name="RefID"><Value>{link}</Value></Attribute></InternalElement>"#,
                    next_id()
                ));
                instances_xml.push_str(&format!(
                    r#"<InternalElement Name="YieldValue{s}x{p}" ID="{}" RefBaseSystemUnitPath="MTPDataObjectSUCLib/DataAssembly/OperationElement"><Attribute Name="RefID"><Value>{link}</Value></Attribute><Attribute Name="V"><Value>0</Value></Attribute></InternalElement>"#,
                    next_id()
                ));
            }
            children.push_str(&format!(
                r#"<InternalElement Name="{procedure}" ID="{}" RefBaseSystemUnitPath="MTPServiceSUCLib/ServiceProcedure">{procedure_children}</InternalElement>"#,
                next_id()
            ));
        }
        services_xml.push_str(&format!(
            r#"<InternalElement Name="{service}" ID="{}" RefBaseSystemUnitPath="MTPServiceSUCLib/Service"><Attribute Name="RefID"><Value>{control_link}</Value></Attribute>{children}</InternalElement>"#,
            next_id()
        ));
        instances_xml.push_str(&service_control(
            &service,
            &next_id(),
            &control_link,
            &ns,
        ));
    }

    for c in 0..rng.below(4) {
        instances_xml.push_str(&component(
            &format!("Sensor{c}"),
            &next_id(),
            "IndicatorElement",
            &ns,
            &mut rng,
        ));
    }
    for c in 0..rng.below(3) {
        instances_xml.push_str(&component(
            &format!("Actuator{c}"),
            &next_id(),
            "ActiveElement",
            &ns,
            &mut rng,
        ));
    }

    format!(
        r#"<?xml version="1.0" encoding="utf-8"?>
<CAEXFile FileName="generated-{seed}.aml" SchemaVersion="2.15">
<InstanceHierarchy Name="ModuleTypePackage" ID="{}">
<InternalElement Name="{module}" ID="{}" RefBaseSystemUnitPath="MTPSUCLib/ModuleTypePackage"/>
</InstanceHierarchy>
<InstanceHierarchy Name="Services" ID="{}">{services_xml}</InstanceHierarchy>
<InstanceHierarchy Name="CommunicationSet" ID="{}">
<InternalElement Name="InstanceList" ID="{}">{instances_xml}</InternalElement>
<InternalElement Name="SourceList" ID="{}">
<InternalElement Name="Server" ID="{}" RefBaseSystemUnitPath="MTPCommunicationSUCLib/ServerAssembly/OPCUAServer">
<Attribute Name="Endpoint"><Value>opc.tcp://generated-{seed}.example:4840</Value></Attribute>
</InternalElement>
</InternalElement>
</InstanceHierarchy>
</CAEXFile>"#,
        next_id(),
        next_id(),
        next_id(),
        next_id(),
        next_id(),
        next_id(),
        next_id(),
    )
}

fn opcua_item(name: &str, id: &str, ns: &str, node: &str, access: &str) -> String {
    format!(
        r#"<ExternalInterface Name="{name}" ID="{id}" RefBaseClassPath="MTPCommunicationICLib/DataItem/OPCUAItem"><Attribute Name="Access"><Value>{access}</Value></Attribute><Attribute Name="Namespace"><Value>{ns}</Value></Attribute><Attribute Name="Identifier"><Value>{node}</Value></Attribute></ExternalInterface>"#
    )
}

fn service_control(service: &str, id: &str, link: &str, ns: &str) -> String {
    let mut attrs = String::new();
    let mut items = String::new();
    for (attr, access) in [
        ("CommandExt", "write"),
        ("CommandEn", "read"),
        ("StateCur", "read"),
        ("ProcedureCur", "read"),
        ("ProcedureReq", "read"),
        ("ProcedureExt", "write"),
    ] {
        attrs.push_str(&format!(
            r#"<Attribute Name="{attr}"><Value>0</Value></Attribute>"#
        ));
        items.push_str(&opcua_item(
            attr,
            &format!("{id}-{attr}"),
            ns,
            &format!("{service}.{attr}"),
            access,
        ));
    }
    format!(
        r#"<InternalElement Name="{service}Control" ID="{id}" RefBaseSystemUnitPath="MTPDataObjectSUCLib/DataAssembly/ServiceControl"><Attribute Name="RefID"><Value>{link}</Value></Attribute>{attrs}{items}</InternalElement>"#
    )
}

fn operation_element(name: &str, id: &str, link: &str, rng: &mut SplitMix64) -> String {
    let mut attrs = format!(r#"<Attribute Name="RefID"><Value>{link}</Value></Attribute>"#);
    for attr in ["VExt", "VMin", "VMax", "VUnit"] {
        if rng.chance(3, 4) {
            let value = if attr == "VUnit" {
                "units".to_string()
            } else {
                rng.below(1000).to_string()
            };
            attrs.push_str(&format!(
                r#"<Attribute Name="{attr}"><Value>{value}</Value></Attribute>"#
            ));
        }
    }
    format!(
        r#"<InternalElement Name="{name}" ID="{id}" RefBaseSystemUnitPath="MTPDataObjectSUCLib/DataAssembly/OperationElement">{attrs}</InternalElement>"#
    )
}

fn component(name: &str, id: &str, suc: &str, ns: &str, rng: &mut SplitMix64) -> String {
    let item = if rng.chance(2, 3) {
        opcua_item("V", &format!("{id}-v"), ns, &format!("{name}.V"), "read")
    } else {
        String::new()
    };
    format!(
        r#"<InternalElement Name="{name}" ID="{id}" RefBaseSystemUnitPath="MTPDataObjectSUCLib/DataAssembly/{suc}"><Attribute Name="V"><Value>0</Value></Attribute>{item}</InternalElement>"#
    )
}

// --- independent count oracle ----------------------------------------------

#[derive(Debug, Default)]
pub struct RawElement {
    pub suc: String,
    pub parent: Option<usize>,
    /// Direct attributes with their Value text.
    pub attrs: Vec<(String, String)>,
    /// Names of OPCUAItem interfaces.
    pub items: Vec<String>,
}

/// Flat scan of InternalElements under InstanceHierarchies, built straight
/// from XML events. Deliberately separate from the document model so the
/// two cannot share a bug.
pub fn scan_elements(xml: &str) -> Vec<RawElement> {
    let mut reader = Reader::from_reader(xml.as_bytes());
    reader.config_mut().trim_text(true);
    let mut elements: Vec<RawElement> = Vec::new();
    // (tag, element index if this frame is a tracked element)
    let mut stack: Vec<(String, Option<usize>)> = Vec::new();
    let mut pending_attr: Option<(usize, String)> = None;
    let mut in_value = false;
    let mut in_hierarchy = 0usize;
    let mut buf = Vec::new();

    loop {
        let event = reader.read_event_into(&mut buf).expect("fixtures are well-formed");
        match event {
            Event::Start(ref start) | Event::Empty(ref start) => {
                let empty = matches!(event, Event::Empty(_));
                let tag = String::from_utf8_lossy(start.name().local_name().as_ref()).into_owned();
                let get = |name: &str| -> Option<String> {
                    start.attributes().flatten().find_map(|a| {
                        (a.key.local_name().as_ref() == name.as_bytes())
                            .then(|| String::from_utf8_lossy(&a.value).into_owned())
                    })
                };
                let mut tracked = None;
                match tag.as_str() {
                    "InstanceHierarchy" => in_hierarchy += 1,
                    "InternalElement" if in_hierarchy > 0 => {
                        let parent = stack.iter().rev().find_map(|(_, idx)| *idx);
                        elements.push(RawElement {
                            suc: get("RefBaseSystemUnitPath")
                                .map(|p| p.rsplit('/').next().unwrap_or("").to_string())
                                .unwrap_or_default(),
                            parent,
                            attrs: Vec::new(),
                            items: Vec::new(),
                        });
                        tracked = Some(elements.len() - 1);
                    }
                    "Attribute" => {
                        // Only direct, flat attributes of a tracked element;
                        // nested attributes reset the capture.
                        pending_attr = match stack.last() {
                            Some((tag, Some(idx))) if tag == "InternalElement" => {
                                Some((*idx, get("Name").unwrap_or_default()))
                            }
                            _ => None,
                        };
                    }
                    "ExternalInterface" => {
                        if let Some((_, Some(idx))) = stack.last() {
                            let class = get("RefBaseClassPath").unwrap_or_default();
                            if class.rsplit('/').next() == Some("OPCUAItem") {
                                elements[*idx].items.push(get("Name").unwrap_or_default());
                            }
                        }
                    }
                    "Value" => in_value = pending_attr.is_some(),
                    _ => {}
                }
                if !empty {
                    // Keep the original tag so Attribute nesting checks work.
                    let frame_tag = if tracked.is_some() {
                        "InternalElement".to_string()
                    } else {
                        tag
                    };
                    stack.push((frame_tag, tracked));
                } else if let Some(idx) = tracked {
                    let _ = idx; // empty tracked element, nothing else to do
                }
            }
            Event::Text(text) => {
                if in_value {
                    if let Some((idx, name)) = pending_attr.take() {
                        let value = text.unescape().unwrap_or_default().into_owned();
                        elements[idx].attrs.push((name, value));
                    }
                    in_value = false;
                }
            }
            Event::End(end) => {
                let tag = String::from_utf8_lossy(end.name().local_name().as_ref()).into_owned();
                if tag == "InstanceHierarchy" {
                    in_hierarchy = in_hierarchy.saturating_sub(1);
                }
                stack.pop();
            }
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    elements
}

impl RawElement {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }

    pub fn has_source(&self, name: &str) -> bool {
        self.attr(name).is_some() || self.items.iter().any(|i| i == name)
    }
}

/// Hand-counted expectation for every stats row, straight off the XML.
pub fn oracle_counts(xml: &str) -> BTreeMap<String, usize> {
    let elements = scan_elements(xml);
    let resolve = |link: &str, suc: &str| -> Option<&RawElement> {
        let mut matches = elements
            .iter()
            .filter(|el| el.attr("RefID") == Some(link) && el.suc == suc);
        let found = matches.next()?;
        matches.next().is_none().then_some(found)
    };

    let rows = [
        "ModuleTypePackage",
        "Service",
        "ServiceProcedure",
        "IndicatorElement",
        "ActiveElement",
        "OPCUAServer",
        "VExt",
        "VMax",
        "VMin",
        "VUnit",
        "ProcedureExt",
        "CommandExt",
        "StateCur",
        "ProcedureCur",
        "ProcedureReq",
        "V",
        "ReportValue",
        "ProcessValueIn",
    ];
    let mut counts: BTreeMap<String, usize> =
        rows.iter().map(|row| (row.to_string(), 0)).collect();
    let mut bump = |row: &str| *counts.get_mut(row).expect("known row") += 1;

    for el in &elements {
        match el.suc.as_str() {
            "ModuleTypePackage" | "Service" | "IndicatorElement" | "ActiveElement"
            | "OPCUAServer" => bump(&el.suc),
            "ServiceProcedure" => {
                let under_service = el
                    .parent
                    .map(|p| elements[p].suc == "Service")
                    .unwrap_or(false);
                if under_service {
                    bump("ServiceProcedure");
                }
            }
            "ProcedureParameter" | "ConfigurationParameter" => {
                if let Some(target) = el.attr("RefID").and_then(|l| resolve(l, "OperationElement"))
                {
                    for attr in ["VExt", "VMin", "VMax", "VUnit"] {
                        if target.has_source(attr) {
                            bump(attr);
                        }
                    }
                }
            }
            "ReportValue" | "ProcessValueIn" => {
                if let Some(target) = el.attr("RefID").and_then(|l| resolve(l, "OperationElement"))
                {
                    if target.has_source("V") {
                        bump(&el.suc);
                    }
                }
            }
            _ => {}
        }
        if matches!(el.suc.as_str(), "IndicatorElement" | "ActiveElement")
            && el.has_source("V")
        {
            bump("V");
        }
    }

    // Control attributes count once per service with a resolvable control.
    // Services without procedures mint no skills and therefore no control
    // individuals either.
    for (index, service) in elements.iter().enumerate().filter(|(_, el)| el.suc == "Service") {
        let has_procedures = elements
            .iter()
            .any(|el| el.suc == "ServiceProcedure" && el.parent == Some(index));
        if !has_procedures {
            continue;
        }
        let Some(control) = service
            .attr("RefID")
            .and_then(|link| resolve(link, "ServiceControl"))
        else {
            continue;
        };
        for attr in [
            "CommandExt",
            "StateCur",
            "ProcedureCur",
            "ProcedureReq",
            "ProcedureExt",
        ] {
            if control.has_source(attr) {
                bump(attr);
            }
        }
    }
    counts
}
