//! Drive a mapped skill over the wire protocol.
//!
//! Everything needed to execute — command and state node addresses, the
//! endpoint, transition requirement values, the state-value map — is
//! resolved from the graph alone. Invoking writes the parameters, then the
//! command value, and monitors the state variable through a subscription
//! until the handle is closed.

use std::collections::BTreeMap;
use std::net::Shutdown;
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use crate::rdf::{BgpQuery, PatternTerm, RdfGraph, Term, TriplePattern};
use crate::vocab::{self, cap, din61360, isa88, opcua, rdfs};
use crate::wire::{self, NodeAddress, Request, ServerMessage, Value, WireClient};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExecError {
    #[error("skill {0} is not in the graph")]
    SkillNotFound(String),
    #[error("model incomplete for {skill}: no match for {missing}")]
    IncompleteModel { skill: String, missing: String },
    #[error("unknown transition {0:?}")]
    UnknownTransition(String),
    #[error("no parameter node for {0:?}")]
    UnknownParameter(String),
    #[error("no state named {0:?} in the binding")]
    UnknownStateName(String),
    #[error("cannot connect to {endpoint}: {reason}")]
    ConnectFailed { endpoint: String, reason: String },
    #[error("write to {node} rejected: {code}")]
    WriteRejected { node: String, code: String },
    #[error("protocol error: {0}")]
    Protocol(String),
}

/// Everything resolve_skill pulls out of the graph for one skill.
#[derive(Debug, Clone, PartialEq)]
pub struct SkillBinding {
    pub skill_iri: String,
    pub endpoint_url: String,
    pub command_node: NodeAddress,
    pub state_node: NodeAddress,
    /// Transition name to required command value.
    pub transition_values: BTreeMap<String, i64>,
    /// StateCur value to state individual.
    pub state_for_value: BTreeMap<i64, String>,
    /// State name to state individual.
    pub state_names: BTreeMap<String, String>,
    /// Parameter name to its variable's address.
    pub parameter_nodes: BTreeMap<String, NodeAddress>,
}

impl SkillBinding {
    pub fn state_for_value(&self, value: i64) -> Option<&str> {
        self.state_for_value.get(&value).map(String::as_str)
    }
}

fn var(name: &str) -> PatternTerm {
    PatternTerm::var(name)
}

fn iri(value: &str) -> PatternTerm {
    PatternTerm::iri(value)
}

fn skill_query(
    skill_iri: &str,
    patterns: Vec<(PatternTerm, &str, PatternTerm)>,
    projection: &[&str],
) -> BgpQuery {
    let patterns = patterns
        .into_iter()
        .map(|(s, p, o)| TriplePattern::new(s, iri(p), o))
        .collect();
    BgpQuery::new(patterns, projection.iter().map(|v| v.to_string()).collect())
        .expect("executor queries are well-formed")
        .bind("skill", &Term::iri(skill_iri))
}

/// Assemble a binding for the skill purely from graph queries.
pub fn resolve_skill(graph: &RdfGraph, skill_iri: &str) -> Result<SkillBinding, ExecError> {
    let typed = graph
        .objects(skill_iri, vocab::rdf::TYPE)
        .iter()
        .any(|t| t.lexical() == cap::OPC_UA_VARIABLE_SKILL);
    if !typed {
        return Err(ExecError::SkillNotFound(skill_iri.to_string()));
    }
    let incomplete = |missing: &str| ExecError::IncompleteModel {
        skill: skill_iri.to_string(),
        missing: missing.to_string(),
    };

    let node_of = |link: &str, missing: &str| -> Result<NodeAddress, ExecError> {
        let query = skill_query(
            skill_iri,
            vec![
                (var("skill"), link, var("holder")),
                (var("holder"), opcua::HAS_NODE, var("node")),
                (var("node"), opcua::NODE_NAMESPACE, var("ns")),
                (var("node"), opcua::NODE_IDENTIFIER, var("id")),
            ],
            &["ns", "id"],
        );
        let table = graph.query_bgp(&query);
        match table.rows.as_slice() {
            [row] => Ok(NodeAddress::new(row[0].lexical(), row[1].lexical())),
            _ => Err(incomplete(missing)),
        }
    };
    let command_node = node_of(
        cap::HAS_SKILL_COMMAND,
        "hasSkillCommand -> hasNode -> nodeNamespace/nodeIdentifier",
    )?;
    let state_node = node_of(
        cap::HAS_CURRENT_STATE_OUTPUT,
        "hasCurrentStateOutput -> hasNode -> nodeNamespace/nodeIdentifier",
    )?;

    let endpoint_query = skill_query(
        skill_iri,
        vec![
            (var("skill"), cap::HAS_SKILL_COMMAND, var("command")),
            (var("command"), opcua::HAS_NODE, var("node")),
            (var("set"), opcua::HAS_NODE, var("node")),
            (var("set"), vocab::rdf::TYPE, iri(opcua::UA_NODE_SET)),
            (var("server"), opcua::HAS_NODE_SET, var("set")),
            (var("server"), opcua::ENDPOINT_URL, var("endpoint")),
        ],
        &["endpoint"],
    );
    let endpoints = graph.query_bgp(&endpoint_query);
    let endpoint_url = match endpoints.rows.as_slice() {
        [row] => row[0].lexical().to_string(),
        _ => return Err(incomplete("hasNodeSet -> endpointUrl")),
    };

    let transition_query = skill_query(
        skill_iri,
        vec![
            (var("skill"), cap::BEHAVIOR_CONFORMS_TO, var("machine")),
            (var("machine"), isa88::HAS_TRANSITION, var("t")),
            (var("t"), rdfs::LABEL, var("name")),
            (var("t"), din61360::HAS_DATA_ELEMENT, var("element")),
            (
                var("element"),
                din61360::EXPRESSION_GOAL,
                iri(din61360::REQUIREMENT),
            ),
            (
                var("element"),
                din61360::LOGIC_INTERPRETATION,
                iri(din61360::EQUAL),
            ),
            (var("element"), din61360::HAS_VALUE, var("value")),
        ],
        &["name", "value"],
    );
    let mut transition_values = BTreeMap::new();
    for row in &graph.query_bgp(&transition_query).rows {
        let name = row[0].lexical().to_string();
        let value = row[1]
            .as_integer()
            .ok_or_else(|| incomplete("integer requirement value"))?;
        if let Some(previous) = transition_values.insert(name.clone(), value) {
            if previous != value {
                return Err(incomplete(&format!(
                    "consistent requirement for transition {name:?}"
                )));
            }
        }
    }
    if transition_values.is_empty() {
        return Err(incomplete("behaviorConformsTo -> hasTransition -> requirement"));
    }

    let state_query = skill_query(
        skill_iri,
        vec![
            (var("skill"), cap::BEHAVIOR_CONFORMS_TO, var("machine")),
            (var("machine"), isa88::HAS_STATE, var("state")),
            (var("state"), rdfs::LABEL, var("name")),
            (var("state"), din61360::HAS_DATA_ELEMENT, var("element")),
            (
                var("element"),
                din61360::EXPRESSION_GOAL,
                iri(din61360::ASSURANCE),
            ),
            (var("element"), din61360::HAS_VALUE, var("value")),
        ],
        &["state", "name", "value"],
    );
    let mut state_for_value = BTreeMap::new();
    let mut state_names = BTreeMap::new();
    for row in &graph.query_bgp(&state_query).rows {
        let state_iri = row[0].lexical().to_string();
        let name = row[1].lexical().to_string();
        let value = row[2]
            .as_integer()
            .ok_or_else(|| incomplete("integer assurance value"))?;
        if let Some(previous) = state_for_value.insert(value, state_iri.clone()) {
            if previous != state_iri {
                return Err(incomplete(&format!(
                    "injective state value map (value {value})"
                )));
            }
        }
        state_names.insert(name, state_iri);
    }
    if state_for_value.is_empty() {
        return Err(incomplete("behaviorConformsTo -> hasState -> assurance"));
    }

    let parameter_query = skill_query(
        skill_iri,
        vec![
            (var("skill"), cap::HAS_SKILL_PARAMETER, var("parameter")),
            (var("parameter"), rdfs::LABEL, var("name")),
            (var("parameter"), opcua::HAS_NODE, var("node")),
            (var("node"), opcua::NODE_NAMESPACE, var("ns")),
            (var("node"), opcua::NODE_IDENTIFIER, var("id")),
        ],
        &["name", "ns", "id"],
    );
    let parameter_nodes = graph
        .query_bgp(&parameter_query)
        .rows
        .iter()
        .map(|row| {
            (
                row[0].lexical().to_string(),
                NodeAddress::new(row[1].lexical(), row[2].lexical()),
            )
        })
        .collect();

    Ok(SkillBinding {
        skill_iri: skill_iri.to_string(),
        endpoint_url,
        command_node,
        state_node,
        transition_values,
        state_for_value,
        state_names,
        parameter_nodes,
    })
}

/// One observed state change.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogEntry {
    pub seq: u64,
    pub value: i64,
    /// State individual for the value, `None` for values outside the map.
    pub state: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AwaitOutcome {
    Reached,
    Timeout { last_observed: Option<LogEntry> },
    Unexpected(i64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CurrentState {
    Known(String),
    Unknown(i64),
}

#[derive(Debug)]
struct SharedLog {
    entries: Mutex<Vec<LogEntry>>,
    wake: Condvar,
}

/// A running invocation: the subscription monitor keeps appending state
/// changes to the log until the handle is closed.
#[derive(Debug)]
pub struct ExecutionHandle {
    binding: SkillBinding,
    log: Arc<SharedLog>,
    cursor: usize,
    monitor: Option<JoinHandle<()>>,
    subscription_stream: std::net::TcpStream,
}

impl ExecutionHandle {
    /// Snapshot of all state changes observed so far.
    pub fn events(&self) -> Vec<LogEntry> {
        self.log.entries.lock().unwrap().clone()
    }

    pub fn binding(&self) -> &SkillBinding {
        &self.binding
    }

    /// Wait until the named state is observed. Known-but-different states
    /// keep the wait going; a value outside the state map returns
    /// `Unexpected` without stopping the monitor.
    pub fn await_state(
        &mut self,
        state_name: &str,
        timeout: Duration,
    ) -> Result<AwaitOutcome, ExecError> {
        let target = self
            .binding
            .state_names
            .get(state_name)
            .cloned()
            .ok_or_else(|| ExecError::UnknownStateName(state_name.to_string()))?;
        let deadline = Instant::now() + timeout;
        let mut entries = self.log.entries.lock().unwrap();
        loop {
            while self.cursor < entries.len() {
                let entry = entries[self.cursor].clone();
                self.cursor += 1;
                match &entry.state {
                    Some(state) if *state == target => return Ok(AwaitOutcome::Reached),
                    Some(_) => continue,
                    None => return Ok(AwaitOutcome::Unexpected(entry.value)),
                }
            }
            let remaining = deadline.saturating_duration_since(Instant::now());
            if remaining.is_zero() {
                let last_observed = entries.last().cloned();
                return Ok(AwaitOutcome::Timeout { last_observed });
            }
            let (guard, _) = self.log.wake.wait_timeout(entries, remaining).unwrap();
            entries = guard;
        }
    }

    /// Stop monitoring and release the connection.
    pub fn close(mut self) {
        self.shutdown();
    }

    fn shutdown(&mut self) {
        let _ = self.subscription_stream.shutdown(Shutdown::Both);
        if let Some(monitor) = self.monitor.take() {
            let _ = monitor.join();
        }
    }
}

impl Drop for ExecutionHandle {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn connect(endpoint: &str) -> Result<WireClient, ExecError> {
    WireClient::connect(endpoint).map_err(|e| ExecError::ConnectFailed {
        endpoint: endpoint.to_string(),
        reason: e.to_string(),
    })
}

fn checked_write(
    client: &mut WireClient,
    node: &NodeAddress,
    value: Value,
    endpoint: &str,
) -> Result<(), ExecError> {
    let response = client
        .request(&Request::Write {
            ns: node.ns.clone(),
            id: node.id.clone(),
            value,
        })
        .map_err(|e| ExecError::ConnectFailed {
            endpoint: endpoint.to_string(),
            reason: e.to_string(),
        })?;
    if !response.ok {
        return Err(ExecError::WriteRejected {
            node: node.to_string(),
            code: response.error.unwrap_or_else(|| "unknown".to_string()),
        });
    }
    Ok(())
}

/// The endpoint to actually dial: an explicit override wins over the
/// MTP-declared URL (whose scheme prefix is dropped for plain TCP).
pub fn dial_address(binding: &SkillBinding, endpoint_override: Option<&str>) -> String {
    match endpoint_override {
        Some(endpoint) => endpoint.to_string(),
        None => match binding.endpoint_url.rsplit_once("://") {
            Some((_, host_port)) => host_port.to_string(),
            None => binding.endpoint_url.clone(),
        },
    }
}

/// Fire a transition: write the parameters (sorted by name), subscribe to
/// the state variable, then write the command value. Returns as soon as
/// the command write is acknowledged; monitoring continues in the
/// background.
pub fn invoke(
    binding: &SkillBinding,
    transition: &str,
    parameters: &BTreeMap<String, Value>,
    endpoint_override: Option<&str>,
) -> Result<ExecutionHandle, ExecError> {
    let command_value = *binding
        .transition_values
        .get(transition)
        .ok_or_else(|| ExecError::UnknownTransition(transition.to_string()))?;
    let endpoint = dial_address(binding, endpoint_override);

    let mut control = connect(&endpoint)?;
    for (name, value) in parameters {
        let node = binding
            .parameter_nodes
            .get(name)
            .ok_or_else(|| ExecError::UnknownParameter(name.clone()))?;
        checked_write(&mut control, node, *value, &endpoint)?;
    }

    // Subscribe before commanding so no state change is missed.
    let mut monitor_client = connect(&endpoint)?;
    let response = monitor_client
        .send(&Request::Subscribe {
            ns: binding.state_node.ns.clone(),
            id: binding.state_node.id.clone(),
        })
        .and_then(|()| monitor_client.read_message())
        .map_err(|e| ExecError::ConnectFailed {
            endpoint: endpoint.clone(),
            reason: e.to_string(),
        })?;
    match response {
        ServerMessage::Response(response) if response.ok => {}
        ServerMessage::Response(response) => {
            return Err(ExecError::Protocol(format!(
                "subscribe refused: {}",
                response.error.unwrap_or_default()
            )));
        }
        ServerMessage::Event(_) => {
            return Err(ExecError::Protocol(
                "event before subscribe acknowledgement".to_string(),
            ));
        }
    }

    let subscription_stream =
        monitor_client
            .stream()
            .try_clone()
            .map_err(|e| ExecError::ConnectFailed {
                endpoint: endpoint.clone(),
                reason: e.to_string(),
            })?;
    let log = Arc::new(SharedLog {
        entries: Mutex::new(Vec::new()),
        wake: Condvar::new(),
    });
    let monitor_log = log.clone();
    let state_map = binding.state_for_value.clone();
    let monitor = std::thread::spawn(move || {
        monitor_loop(monitor_client, monitor_log, state_map);
    });

    checked_write(&mut control, &binding.command_node, Value::Int(command_value), &endpoint)?;

    Ok(ExecutionHandle {
        binding: binding.clone(),
        log,
        cursor: 0,
        monitor: Some(monitor),
        subscription_stream,
    })
}

fn monitor_loop(
    mut client: WireClient,
    log: Arc<SharedLog>,
    state_map: BTreeMap<i64, String>,
) {
    while let Ok(message) = client.read_message() {
        let ServerMessage::Event(event) = message else {
            continue;
        };
        let wire::Event::Change { value, seq, .. } = event else {
            // Gap markers carry no value; the log just moves on.
            continue;
        };
        let Some(value) = value.as_int() else { continue };
        let entry = LogEntry {
            seq,
            value,
            state: state_map.get(&value).cloned(),
        };
        let mut entries = log.entries.lock().unwrap();
        entries.push(entry);
        log.wake.notify_all();
    }
}

/// One read of the state variable, mapped through the binding.
pub fn current_state(
    binding: &SkillBinding,
    client: &mut WireClient,
) -> Result<CurrentState, ExecError> {
    let response = client
        .request(&Request::Read {
            ns: binding.state_node.ns.clone(),
            id: binding.state_node.id.clone(),
        })
        .map_err(|e| ExecError::ConnectFailed {
            endpoint: binding.endpoint_url.clone(),
            reason: e.to_string(),
        })?;
    if !response.ok {
        return Err(ExecError::Protocol(format!(
            "state read refused: {}",
            response.error.unwrap_or_default()
        )));
    }
    let value = response
        .value
        .and_then(|v| v.as_int())
        .ok_or_else(|| ExecError::Protocol("state variable is not an integer".to_string()))?;
    Ok(match binding.state_for_value(value) {
        Some(state) => CurrentState::Known(state.to_string()),
        None => CurrentState::Unknown(value),
    })
}
