//! Optional JSON config file: overrides for the command table, state table,
//! transition relation, mapping rules and the simulator dwell.
//!
//! Every section is optional; present sections replace the built-in
//! defaults entirely. Transition names follow the built-in convention: the
//! command name for commanded transitions, `SC_<from>` for automatic ones.
//!
//! ```json
//! {
//!   "commands": {"Start": 4, "Reset": 2},
//!   "states": {"Idle": 16, "Starting": 8, "Execute": 64},
//!   "transitions": [
//!     {"from": "Idle", "to": "Starting", "command": "Start"},
//!     {"from": "Starting", "to": "Execute"}
//!   ],
//!   "rules": [],
//!   "dwellMs": 100
//! }
//! ```

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::mapping::{builtin_rules, MappingRule};
use crate::vocab::{
    CommandTable, SkillConfig, StateMachineTemplate, StateValueTable, TemplateError, Transition,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("config file is not valid JSON: {0}")]
    Parse(String),
    #[error("config file rejected: {0}")]
    Invalid(#[from] TemplateError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TransitionSpec {
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commands: Option<BTreeMap<String, u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<BTreeMap<String, u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transitions: Option<Vec<TransitionSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rules: Option<Vec<MappingRule>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dwell_ms: Option<u64>,
}

/// Defaults with the config file's overrides applied and validated.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub skill: SkillConfig,
    pub rules: Vec<MappingRule>,
    pub dwell: Option<Duration>,
}

impl Default for LoadedConfig {
    fn default() -> Self {
        LoadedConfig {
            skill: SkillConfig::default(),
            rules: builtin_rules(),
            dwell: None,
        }
    }
}

pub fn load_config(text: &str) -> Result<LoadedConfig, ConfigError> {
    let file: ConfigFile =
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;

    let mut skill = SkillConfig::default();
    if let Some(commands) = file.commands {
        skill.commands = CommandTable(commands);
    }
    if let Some(states) = file.states {
        skill.states = StateValueTable(states.clone());
        skill.template = StateMachineTemplate {
            states: states.keys().cloned().collect(),
            transitions: skill.template.transitions.clone(),
        };
    }
    if let Some(specs) = file.transitions {
        skill.template.transitions = specs
            .into_iter()
            .map(|spec| match spec.command {
                Some(command) => Transition::commanded(&command, &spec.from, &spec.to),
                None => Transition::automatic(&spec.from, &spec.to),
            })
            .collect();
    }
    skill.validate()?;

    Ok(LoadedConfig {
        skill,
        rules: file.rules.unwrap_or_else(builtin_rules),
        dwell: file.dwell_ms.map(Duration::from_millis),
    })
}
