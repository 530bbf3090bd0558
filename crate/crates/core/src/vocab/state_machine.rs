//! The MTP service state machine: command and state value tables plus the
//! template of states and transitions that is instantiated per skill.
//!
//! An MTP's AutomationML file does not carry the state machine itself, only
//! the integer variables driving it. The tables here supply the missing
//! piece: each command is one bit of the command word (`Start` is fixed at
//! 4), each state has a distinct integer seen through `StateCur`. Both
//! tables and the transition relation can be overridden from a config file.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VocabError {
    #[error("unknown command {0:?}")]
    UnknownCommand(String),
    #[error("unknown state {0:?}")]
    UnknownState(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("duplicate state name {0:?}")]
    DuplicateState(String),
    #[error("transition {name:?} references unknown state {state:?}")]
    UnknownEndpoint { name: String, state: String },
    #[error("transition {name:?} uses command {command:?} missing from the command table")]
    UnknownCommand { name: String, command: String },
    #[error("state {0:?} has no value table entry")]
    MissingStateValue(String),
    #[error("command values must be distinct powers of two, got {0}")]
    BadCommandValue(u64),
    #[error("state values must be distinct powers of two, got {0}")]
    BadStateValue(u64),
    #[error("duplicate value {0}")]
    DuplicateValue(u64),
    #[error("Start must map to 4, got {0}")]
    StartNotFour(u64),
    #[error("template has no Idle state")]
    NoIdle,
    #[error("Execute is not reachable from Idle via Start and automatic transitions")]
    ExecuteUnreachable,
    #[error("state {state:?} has two commanded transitions for {command:?}")]
    AmbiguousCommand { state: String, command: String },
}

/// Command name to command-word bit value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CommandTable(pub BTreeMap<String, u64>);

impl CommandTable {
    pub fn value(&self, command: &str) -> Result<u64, VocabError> {
        self.0
            .get(command)
            .copied()
            .ok_or_else(|| VocabError::UnknownCommand(command.to_string()))
    }

    pub fn command_for_value(&self, value: u64) -> Option<&str> {
        self.0
            .iter()
            .find(|(_, v)| **v == value)
            .map(|(name, _)| name.as_str())
    }

    fn validate(&self) -> Result<(), TemplateError> {
        let mut seen = BTreeMap::new();
        for (name, value) in &self.0 {
            if !value.is_power_of_two() {
                return Err(TemplateError::BadCommandValue(*value));
            }
            if seen.insert(*value, name).is_some() {
                return Err(TemplateError::DuplicateValue(*value));
            }
        }
        if let Some(start) = self.0.get("Start") {
            if *start != 4 {
                return Err(TemplateError::StartNotFour(*start));
            }
        }
        Ok(())
    }
}

impl Default for CommandTable {
    fn default() -> Self {
        CommandTable(
            [
                ("Reset", 2),
                ("Start", 4),
                ("Stop", 8),
                ("Hold", 16),
                ("Unhold", 32),
                ("Pause", 64),
                ("Resume", 128),
                ("Abort", 256),
                ("Restart", 512),
                ("Complete", 1024),
            ]
            .into_iter()
            .map(|(name, value)| (name.to_string(), value))
            .collect(),
        )
    }
}

/// State name to `StateCur` encoding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateValueTable(pub BTreeMap<String, u64>);

impl StateValueTable {
    pub fn value(&self, state: &str) -> Result<u64, VocabError> {
        self.0
            .get(state)
            .copied()
            .ok_or_else(|| VocabError::UnknownState(state.to_string()))
    }

    pub fn state_for_value(&self, value: u64) -> Option<&str> {
        self.0
            .iter()
            .find(|(_, v)| **v == value)
            .map(|(name, _)| name.as_str())
    }

    fn validate(&self) -> Result<(), TemplateError> {
        let mut seen = BTreeMap::new();
        for (name, value) in &self.0 {
            if !value.is_power_of_two() {
                return Err(TemplateError::BadStateValue(*value));
            }
            if seen.insert(*value, name).is_some() {
                return Err(TemplateError::DuplicateValue(*value));
            }
        }
        Ok(())
    }
}

impl Default for StateValueTable {
    fn default() -> Self {
        StateValueTable(
            [
                ("Idle", 16),
                ("Starting", 8),
                ("Execute", 64),
                ("Completing", 65536),
                ("Completed", 131072),
                ("Resetting", 32768),
                ("Pausing", 8192),
                ("Paused", 32),
                ("Resuming", 16384),
                ("Holding", 1024),
                ("Held", 2048),
                ("Unholding", 4096),
                ("Stopping", 128),
                ("Stopped", 4),
                ("Aborting", 256),
                ("Aborted", 512),
            ]
            .into_iter()
            .map(|(name, value)| (name.to_string(), value))
            .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionKind {
    /// Fired by writing the command's value to the command variable.
    Commanded,
    /// Fired by the equipment itself once the state's work is done.
    Automatic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub name: String,
    pub from: String,
    pub to: String,
    /// `Some(command)` for commanded transitions, `None` for automatic ones.
    pub command: Option<String>,
}

impl Transition {
    pub fn commanded(command: &str, from: &str, to: &str) -> Transition {
        Transition {
            name: command.to_string(),
            from: from.to_string(),
            to: to.to_string(),
            command: Some(command.to_string()),
        }
    }

    pub fn automatic(from: &str, to: &str) -> Transition {
        Transition {
            name: format!("SC_{from}"),
            from: from.to_string(),
            to: to.to_string(),
            command: None,
        }
    }

    pub fn kind(&self) -> TransitionKind {
        if self.command.is_some() {
            TransitionKind::Commanded
        } else {
            TransitionKind::Automatic
        }
    }
}

/// Named states with their value encodings plus the transition relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateMachineTemplate {
    pub states: Vec<String>,
    pub transitions: Vec<Transition>,
}

impl StateMachineTemplate {
    /// Commanded transitions leaving `state`, in template order.
    pub fn commanded_from<'a>(&'a self, state: &'a str) -> impl Iterator<Item = &'a Transition> {
        self.transitions
            .iter()
            .filter(move |t| t.from == state && t.command.is_some())
    }

    /// The automatic transition leaving `state`, if any.
    pub fn automatic_from(&self, state: &str) -> Option<&Transition> {
        self.transitions
            .iter()
            .find(|t| t.from == state && t.command.is_none())
    }

    pub fn transitions_from<'a>(&'a self, state: &'a str) -> impl Iterator<Item = &'a Transition> {
        self.transitions.iter().filter(move |t| t.from == state)
    }

    pub fn has_state(&self, state: &str) -> bool {
        self.states.iter().any(|s| s == state)
    }

    fn validate(&self, commands: &CommandTable) -> Result<(), TemplateError> {
        let mut seen = std::collections::BTreeSet::new();
        for state in &self.states {
            if !seen.insert(state) {
                return Err(TemplateError::DuplicateState(state.clone()));
            }
        }
        let mut pairs = std::collections::BTreeSet::new();
        for t in &self.transitions {
            for endpoint in [&t.from, &t.to] {
                if !self.has_state(endpoint) {
                    return Err(TemplateError::UnknownEndpoint {
                        name: t.name.clone(),
                        state: endpoint.clone(),
                    });
                }
            }
            if let Some(command) = &t.command {
                if commands.value(command).is_err() {
                    return Err(TemplateError::UnknownCommand {
                        name: t.name.clone(),
                        command: command.clone(),
                    });
                }
                if !pairs.insert((t.from.clone(), command.clone())) {
                    return Err(TemplateError::AmbiguousCommand {
                        state: t.from.clone(),
                        command: command.clone(),
                    });
                }
            }
        }
        if !self.has_state("Idle") {
            return Err(TemplateError::NoIdle);
        }
        // Execute must be reachable from Idle through Start plus automatics.
        let mut current = match self
            .transitions
            .iter()
            .find(|t| t.from == "Idle" && t.command.as_deref() == Some("Start"))
        {
            Some(t) => t.to.clone(),
            None => return Err(TemplateError::ExecuteUnreachable),
        };
        let mut hops = 0;
        while current != "Execute" {
            match self.automatic_from(&current) {
                Some(t) => current = t.to.clone(),
                None => return Err(TemplateError::ExecuteUnreachable),
            }
            hops += 1;
            if hops > self.states.len() {
                return Err(TemplateError::ExecuteUnreachable);
            }
        }
        Ok(())
    }
}

impl Default for StateMachineTemplate {
    fn default() -> Self {
        let states = StateValueTable::default()
            .0
            .keys()
            .cloned()
            .collect::<Vec<_>>();
        let mut transitions = vec![
            Transition::commanded("Start", "Idle", "Starting"),
            Transition::automatic("Starting", "Execute"),
            Transition::commanded("Complete", "Execute", "Completing"),
            Transition::automatic("Completing", "Completed"),
            Transition::commanded("Reset", "Completed", "Resetting"),
            Transition::automatic("Resetting", "Idle"),
            Transition::commanded("Hold", "Execute", "Holding"),
            Transition::automatic("Holding", "Held"),
            Transition::commanded("Unhold", "Held", "Unholding"),
            Transition::automatic("Unholding", "Execute"),
            Transition::commanded("Pause", "Execute", "Pausing"),
            Transition::automatic("Pausing", "Paused"),
            Transition::commanded("Resume", "Paused", "Resuming"),
            Transition::automatic("Resuming", "Execute"),
            Transition::commanded("Restart", "Execute", "Starting"),
        ];
        for from in [
            "Idle",
            "Starting",
            "Execute",
            "Completing",
            "Completed",
            "Paused",
            "Pausing",
            "Resuming",
            "Held",
            "Holding",
            "Unholding",
        ] {
            transitions.push(Transition::commanded("Stop", from, "Stopping"));
        }
        transitions.push(Transition::automatic("Stopping", "Stopped"));
        transitions.push(Transition::commanded("Reset", "Stopped", "Resetting"));
        for from in &states {
            if from != "Aborting" && from != "Aborted" {
                transitions.push(Transition::commanded("Abort", from, "Aborting"));
            }
        }
        transitions.push(Transition::automatic("Aborting", "Aborted"));
        transitions.push(Transition::commanded("Reset", "Aborted", "Resetting"));
        StateMachineTemplate {
            states,
            transitions,
        }
    }
}

pub fn default_state_machine_template() -> StateMachineTemplate {
    StateMachineTemplate::default()
}

/// Command table, state table and template bundled for one conversion or
/// simulation run.
#[derive(Debug, Clone, PartialEq, Eq)]
#[derive(Default)]
pub struct SkillConfig {
    pub commands: CommandTable,
    pub states: StateValueTable,
    pub template: StateMachineTemplate,
}

impl SkillConfig {
    pub fn command_value(&self, command: &str) -> Result<u64, VocabError> {
        self.commands.value(command)
    }

    pub fn state_value(&self, state: &str) -> Result<u64, VocabError> {
        self.states.value(state)
    }

    /// Checks the tables and the template together: distinct power-of-two
    /// values, Start anchored at 4, all endpoints known, one commanded
    /// transition per (state, command), every state valued, and Execute
    /// reachable from Idle.
    pub fn validate(&self) -> Result<(), TemplateError> {
        self.commands.validate()?;
        self.states.validate()?;
        self.template.validate(&self.commands)?;
        for state in &self.template.states {
            if self.states.value(state).is_err() {
                return Err(TemplateError::MissingStateValue(state.clone()));
            }
        }
        Ok(())
    }

    /// Bitwise OR of the command values enabled in `state`.
    pub fn enabled_command_mask(&self, state: &str) -> u64 {
        self.template
            .commanded_from(state)
            .filter_map(|t| t.command.as_deref())
            .filter_map(|c| self.commands.value(c).ok())
            .fold(0, |acc, v| acc | v)
    }
}
