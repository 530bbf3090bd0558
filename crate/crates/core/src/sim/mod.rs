//! Simulated Process Equipment Assembly.
//!
//! The address space is built from an MTP's OPC UA items; every service
//! with a reachable ServiceControl gets a running state machine. Writing a
//! command bit to CommandExt fires the matching enabled transition; writes
//! of disabled commands are acknowledged and counted but change nothing.
//! StateCur always mirrors the current state's value and CommandEn the
//! bitmask of commands enabled in it.

mod net;

pub use net::{serve, ServeHandle};

use std::collections::{BTreeMap, VecDeque};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use crate::aml::{AmlDocument, AmlError};
use crate::vocab::{SkillConfig, TemplateError};
use crate::wire::{NodeAddress, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("document declares no OPCUAServer with an Endpoint")]
    NoServerElement,
    #[error(transparent)]
    Aml(#[from] AmlError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("unknown node {0}")]
    UnknownNode(NodeAddress),
    #[error("node {0} is not writable")]
    NotWritable(NodeAddress),
    #[error("command variables take integer values")]
    NonIntegerCommand,
    #[error("cannot bind {addr}: {reason}")]
    PortInUse { addr: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClockMode {
    /// Dwell times measured against the real clock.
    #[default]
    Wall,
    /// Dwell times advance only through `advance`, for deterministic tests.
    Virtual,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimOptions {
    pub clock: ClockMode,
    /// Minimum time a state with an automatic transition is held.
    pub dwell: Duration,
    /// Per-subscription buffer; overflow drops oldest changes behind a gap
    /// marker.
    pub subscription_buffer: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            clock: ClockMode::Wall,
            dwell: Duration::from_millis(100),
            subscription_buffer: 1024,
        }
    }
}

/// An automatic transition fired by `advance`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiredTransition {
    pub service: String,
    pub transition: String,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WriteRecord {
    pub node: NodeAddress,
    pub value: Value,
}

#[derive(Debug)]
struct ChangePayload {
    node: NodeAddress,
    value: Value,
}

#[derive(Debug)]
struct SubscriberSlot {
    queue: VecDeque<ChangePayload>,
    dropped_pending: u64,
    next_seq: u64,
    capacity: usize,
    closed: bool,
}

#[derive(Debug)]
struct SubscriberShared {
    slot: Mutex<SubscriberSlot>,
    wake: Condvar,
}

/// In-process subscription handle; the TCP layer pumps one of these per
/// subscribe request.
pub struct Subscription {
    shared: Arc<SubscriberShared>,
}

impl Subscription {
    /// Next event, waiting up to `timeout`. `None` on timeout or once the
    /// subscription is closed and drained.
    pub fn next_timeout(&self, timeout: Duration) -> Option<crate::wire::Event> {
        let deadline = Instant::now() + timeout;
        let mut slot = self.shared.slot.lock().unwrap();
        loop {
            if slot.dropped_pending > 0 {
                let dropped = slot.dropped_pending;
                slot.dropped_pending = 0;
                slot.next_seq += 1;
                let front = slot.queue.front().expect("gap implies a newer event");
                return Some(crate::wire::Event::Gap {
                    ns: front.node.ns.clone(),
                    id: front.node.id.clone(),
                    dropped,
                    seq: slot.next_seq,
                });
            }
            if let Some(payload) = slot.queue.pop_front() {
                slot.next_seq += 1;
                return Some(crate::wire::Event::Change {
                    ns: payload.node.ns,
                    id: payload.node.id,
                    value: payload.value,
                    seq: slot.next_seq,
                });
            }
            if slot.closed {
                return None;
            }
            let remaining = deadline.saturating_duration_since(Instant::now());
            if remaining.is_zero() {
                return None;
            }
            let (guard, _) = self.shared.wake.wait_timeout(slot, remaining).unwrap();
            slot = guard;
        }
    }

    pub fn close(&self) {
        let mut slot = self.shared.slot.lock().unwrap();
        slot.closed = true;
        self.shared.wake.notify_all();
    }

    pub fn is_closed(&self) -> bool {
        self.shared.slot.lock().unwrap().closed
    }
}

impl Drop for Subscription {
    fn drop(&mut self) {
        self.close();
    }
}

#[derive(Debug)]
struct NodeState {
    value: Value,
    writable: bool,
    subscribers: Vec<Arc<SubscriberShared>>,
}

#[derive(Debug)]
struct ControlNodes {
    command: NodeAddress,
    state: NodeAddress,
    command_enable: Option<NodeAddress>,
    procedure_current: Option<NodeAddress>,
    procedure_external: Option<NodeAddress>,
}

#[derive(Debug)]
struct Runtime {
    state: String,
    entered: Duration,
    rejected_commands: u64,
    control: ControlNodes,
}

#[derive(Debug)]
struct Inner {
    nodes: BTreeMap<NodeAddress, NodeState>,
    services: BTreeMap<String, Runtime>,
    virtual_now: Duration,
    write_log: Vec<WriteRecord>,
}

#[derive(Debug)]
pub struct SimServer {
    config: SkillConfig,
    options: SimOptions,
    declared_endpoint: String,
    started: Instant,
    inner: Mutex<Inner>,
}

impl SimServer {
    /// Build the address space: one variable per OPC UA item in the
    /// document, one state machine per service whose ServiceControl
    /// resolves with command and state items.
    pub fn build_address_space(doc: &AmlDocument, config: &SkillConfig) -> Result<SimServer, SimError> {
        SimServer::with_options(doc, config, SimOptions::default())
    }

    pub fn with_options(
        doc: &AmlDocument,
        config: &SkillConfig,
        options: SimOptions,
    ) -> Result<SimServer, SimError> {
        config.validate()?;
        let declared_endpoint = doc
            .all_elements()
            .find(|el| el.suc_class() == "OPCUAServer")
            .and_then(|el| el.attribute_value("Endpoint"))
            .ok_or(SimError::NoServerElement)?
            .to_string();

        let mut nodes: BTreeMap<NodeAddress, NodeState> = BTreeMap::new();
        for element in doc.all_elements() {
            for (attribute, node_ref) in element.opcua_items()? {
                let value = element
                    .attribute_value(&attribute)
                    .map(parse_value)
                    .unwrap_or(Value::Int(0));
                nodes.insert(
                    NodeAddress::new(node_ref.namespace, node_ref.identifier),
                    NodeState {
                        value,
                        writable: node_ref.access.writable(),
                        subscribers: Vec::new(),
                    },
                );
            }
        }

        let mut services: BTreeMap<String, Runtime> = BTreeMap::new();
        let service_path = crate::aml::PathExpr::parse("//IE[suc='Service']").unwrap();
        for service in doc.select(&service_path).unwrap_or_default() {
            let Some(control) = service
                .attribute_value("RefID")
                .and_then(|r| doc.resolve_ref_id(r, Some("ServiceControl")).ok())
            else {
                continue;
            };
            let address_of = |attr: &str| -> Result<Option<NodeAddress>, SimError> {
                Ok(control
                    .opcua_ref_of(attr)?
                    .map(|r| NodeAddress::new(r.namespace, r.identifier)))
            };
            let (Some(command), Some(state)) =
                (address_of("CommandExt")?, address_of("StateCur")?)
            else {
                continue;
            };
            services.insert(
                service.name().to_string(),
                Runtime {
                    state: "Idle".to_string(),
                    entered: Duration::ZERO,
                    rejected_commands: 0,
                    control: ControlNodes {
                        command,
                        state,
                        command_enable: address_of("CommandEn")?,
                        procedure_current: address_of("ProcedureCur")?,
                        procedure_external: address_of("ProcedureExt")?,
                    },
                },
            );
        }

        let server = SimServer {
            config: config.clone(),
            options,
            declared_endpoint,
            started: Instant::now(),
            inner: Mutex::new(Inner {
                nodes,
                services,
                virtual_now: Duration::ZERO,
                write_log: Vec::new(),
            }),
        };
        {
            let mut inner = server.inner.lock().unwrap();
            let names: Vec<String> = inner.services.keys().cloned().collect();
            for name in names {
                server.refresh_control_nodes(&mut inner, &name);
            }
        }
        Ok(server)
    }

    /// The endpoint URL the MTP declares for its real server.
    pub fn declared_endpoint(&self) -> &str {
        &self.declared_endpoint
    }

    pub fn config(&self) -> &SkillConfig {
        &self.config
    }

    pub fn node_count(&self) -> usize {
        self.inner.lock().unwrap().nodes.len()
    }

    pub fn service_names(&self) -> Vec<String> {
        self.inner.lock().unwrap().services.keys().cloned().collect()
    }

    pub fn current_state(&self, service: &str) -> Option<String> {
        self.inner
            .lock()
            .unwrap()
            .services
            .get(service)
            .map(|rt| rt.state.clone())
    }

    pub fn rejected_commands(&self, service: &str) -> u64 {
        self.inner
            .lock()
            .unwrap()
            .services
            .get(service)
            .map(|rt| rt.rejected_commands)
            .unwrap_or(0)
    }

    /// Accepted writes in arrival order, oldest first.
    pub fn write_log(&self) -> Vec<WriteRecord> {
        self.inner.lock().unwrap().write_log.clone()
    }

    pub fn list_nodes(&self) -> Vec<crate::wire::NodeInfo> {
        let inner = self.inner.lock().unwrap();
        inner
            .nodes
            .iter()
            .map(|(address, state)| crate::wire::NodeInfo {
                ns: address.ns.clone(),
                id: address.id.clone(),
                value: state.value,
                writable: state.writable,
            })
            .collect()
    }

    pub fn read(&self, address: &NodeAddress) -> Result<Value, SimError> {
        let inner = self.inner.lock().unwrap();
        inner
            .nodes
            .get(address)
            .map(|n| n.value)
            .ok_or_else(|| SimError::UnknownNode(address.clone()))
    }

    pub fn write(&self, address: &NodeAddress, value: Value) -> Result<(), SimError> {
        let mut inner = self.inner.lock().unwrap();
        let node = inner
            .nodes
            .get(address)
            .ok_or_else(|| SimError::UnknownNode(address.clone()))?;
        if !node.writable {
            return Err(SimError::NotWritable(address.clone()));
        }

        let command_service = inner
            .services
            .iter()
            .find(|(_, rt)| rt.control.command == *address)
            .map(|(name, _)| name.clone());
        if let Some(service) = &command_service {
            let Some(command_word) = value.as_int() else {
                return Err(SimError::NonIntegerCommand);
            };
            self.set_node(&mut inner, address, value);
            inner.write_log.push(WriteRecord {
                node: address.clone(),
                value,
            });
            self.handle_command(&mut inner, service, command_word);
            return Ok(());
        }

        self.set_node(&mut inner, address, value);
        inner.write_log.push(WriteRecord {
            node: address.clone(),
            value,
        });
        Ok(())
    }

    /// Force a node value, bypassing writability. Meant for fault
    /// injection in tests ("the PLC reports a value we do not model").
    pub fn inject_value(&self, address: &NodeAddress, value: Value) -> Result<(), SimError> {
        let mut inner = self.inner.lock().unwrap();
        if !inner.nodes.contains_key(address) {
            return Err(SimError::UnknownNode(address.clone()));
        }
        self.set_node(&mut inner, address, value);
        Ok(())
    }

    pub fn subscribe(&self, address: &NodeAddress) -> Result<Subscription, SimError> {
        let mut inner = self.inner.lock().unwrap();
        let capacity = self.options.subscription_buffer;
        let node = inner
            .nodes
            .get_mut(address)
            .ok_or_else(|| SimError::UnknownNode(address.clone()))?;
        let shared = Arc::new(SubscriberShared {
            slot: Mutex::new(SubscriberSlot {
                queue: VecDeque::new(),
                dropped_pending: 0,
                next_seq: 0,
                capacity: capacity.max(1),
                closed: false,
            }),
            wake: Condvar::new(),
        });
        node.subscribers.push(shared.clone());
        Ok(Subscription { shared })
    }

    /// Move time forward and fire due automatic transitions, at most one
    /// per service per call, in service-name order.
    pub fn advance(&self, dt: Duration) -> Vec<FiredTransition> {
        let mut inner = self.inner.lock().unwrap();
        if self.options.clock == ClockMode::Virtual {
            inner.virtual_now += dt;
        }
        let now = self.now(&inner);
        let mut fired = Vec::new();
        let names: Vec<String> = inner.services.keys().cloned().collect();
        for name in names {
            let (state, entered) = {
                let runtime = &inner.services[&name];
                (runtime.state.clone(), runtime.entered)
            };
            let Some(transition) = self.config.template.automatic_from(&state).cloned() else {
                continue;
            };
            if now.saturating_sub(entered) < self.options.dwell {
                continue;
            }
            self.enter_state(&mut inner, &name, &transition.to);
            fired.push(FiredTransition {
                service: name,
                transition: transition.name,
                from: transition.from,
                to: transition.to,
            });
        }
        fired
    }

    fn now(&self, inner: &Inner) -> Duration {
        match self.options.clock {
            ClockMode::Wall => self.started.elapsed(),
            ClockMode::Virtual => inner.virtual_now,
        }
    }

    fn handle_command(&self, inner: &mut Inner, service: &str, command_word: i64) {
        let transition = u64::try_from(command_word)
            .ok()
            .and_then(|word| self.config.commands.command_for_value(word))
            .and_then(|command| {
                let runtime = &inner.services[service];
                self.config
                    .template
                    .commanded_from(&runtime.state)
                    .find(|t| t.command.as_deref() == Some(command))
            })
            .cloned();
        match transition {
            Some(transition) => {
                if transition.command.as_deref() == Some("Start") {
                    self.mirror_procedure(inner, service);
                }
                self.enter_state(inner, service, &transition.to);
            }
            None => {
                inner
                    .services
                    .get_mut(service)
                    .expect("service exists")
                    .rejected_commands += 1;
            }
        }
    }

    /// On Start, ProcedureCur takes over the externally requested
    /// procedure.
    fn mirror_procedure(&self, inner: &mut Inner, service: &str) {
        let control = &inner.services[service].control;
        let (Some(current), Some(external)) = (
            control.procedure_current.clone(),
            control.procedure_external.clone(),
        ) else {
            return;
        };
        if let Some(value) = inner.nodes.get(&external).map(|n| n.value) {
            self.set_node(inner, &current, value);
        }
    }

    fn enter_state(&self, inner: &mut Inner, service: &str, state: &str) {
        let now = self.now(inner);
        {
            let runtime = inner.services.get_mut(service).expect("service exists");
            runtime.state = state.to_string();
            runtime.entered = now;
        }
        self.refresh_control_nodes(inner, service);
    }

    /// Re-derive StateCur and CommandEn from the current state.
    fn refresh_control_nodes(&self, inner: &mut Inner, service: &str) {
        let runtime = &inner.services[service];
        let state_value = self
            .config
            .state_value(&runtime.state)
            .expect("validated config values every state") as i64;
        let state_node = runtime.control.state.clone();
        let enable_node = runtime.control.command_enable.clone();
        let enable_mask = self.config.enabled_command_mask(&runtime.state) as i64;
        self.set_node(inner, &state_node, Value::Int(state_value));
        if let Some(enable_node) = enable_node {
            self.set_node(inner, &enable_node, Value::Int(enable_mask));
        }
    }

    /// Store a value and notify subscribers, but only on actual change.
    fn set_node(&self, inner: &mut Inner, address: &NodeAddress, value: Value) {
        let Some(node) = inner.nodes.get_mut(address) else {
            return;
        };
        if node.value == value {
            return;
        }
        node.value = value;
        node.subscribers.retain(|shared| {
            let mut slot = shared.slot.lock().unwrap();
            if slot.closed {
                return false;
            }
            if slot.queue.len() >= slot.capacity {
                slot.queue.pop_front();
                slot.dropped_pending += 1;
            }
            slot.queue.push_back(ChangePayload {
                node: address.clone(),
                value,
            });
            shared.wake.notify_all();
            true
        });
    }
}

fn parse_value(raw: &str) -> Value {
    if let Ok(v) = raw.trim().parse::<i64>() {
        Value::Int(v)
    } else if let Ok(v) = raw.trim().parse::<f64>() {
        Value::Double(v)
    } else {
        Value::Int(0)
    }
}
