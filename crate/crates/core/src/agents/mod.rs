//! Debating agents: the turn contract, deterministic scripted agents, and a
//! chat-completion agent conditioned on stance and contentiousness.

pub mod chat;
pub mod parse;
pub mod prompt;
pub mod remote;
pub mod scripted;
pub mod similarity;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{Distribution, LabelScale};
use crate::protocol::{Phase, Round};

pub use remote::RemoteAgent;
pub use scripted::{DebateScript, ExhaustPolicy, ScriptTurn, ScriptedAgent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::A => f.write_str("A"),
            Side::B => f.write_str("B"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Position {
    /// Defends the current annotation.
    Support,
    /// Argues for alternative readings.
    Oppose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stance {
    pub position: Position,
    pub target_label: String,
    #[serde(default)]
    pub description: String,
}

impl Stance {
    pub fn new(
        position: Position,
        target_label: impl Into<String>,
        description: impl Into<String>,
        scale: &LabelScale,
    ) -> Result<Self, AgentError> {
        let stance = Self {
            position,
            target_label: target_label.into(),
            description: description.into(),
        };
        stance.validate(scale)?;
        Ok(stance)
    }

    pub fn validate(&self, scale: &LabelScale) -> Result<(), AgentError> {
        match scale.index_of(&self.target_label) {
            Some(_) => Ok(()),
            None => Err(AgentError::UnknownStanceLabel(self.target_label.clone())),
        }
    }

    /// The opposing stance on the same label.
    pub fn opposite(&self, description: impl Into<String>) -> Self {
        let position = match self.position {
            Position::Support => Position::Oppose,
            Position::Oppose => Position::Support,
        };
        Self {
            position,
            target_label: self.target_label.clone(),
            description: description.into(),
        }
    }
}

/// Everything an agent sees when asked for its next turn.
#[derive(Debug, Clone, Copy)]
pub struct AgentTurnContext<'a> {
    pub subject: &'a str,
    pub stance: &'a Stance,
    pub side: Side,
    pub delta: f64,
    pub phase: Phase,
    /// Completed rounds, oldest first.
    pub history: &'a [Round],
    pub scale: &'a Arc<LabelScale>,
    pub round_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentReply {
    pub dist: Distribution,
    pub argument: String,
    /// Unparsed model output, kept verbatim for audit.
    pub raw: String,
    /// Similarity to the agent's previous argument when the agent recorded one
    /// itself (scripted replays).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recorded_similarity: Option<f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("script exhausted: round {round} requested but only {available} scripted")]
    ScriptExhausted { round: usize, available: usize },
    #[error("reply is on a different label scale than the debate")]
    ScaleMismatch,
    #[error("stance label {0:?} is not on the debate scale")]
    UnknownStanceLabel(String),
    #[error("invalid script: {0}")]
    InvalidScript(String),
    #[error("remote agent failed after {attempts} attempts: {reason}")]
    Remote {
        attempts: u32,
        reason: String,
        last_raw: Option<String>,
    },
    #[error(transparent)]
    Template(#[from] prompt::TemplateError),
}

impl AgentError {
    pub fn attempts(&self) -> u32 {
        match self {
            AgentError::Remote { attempts, .. } => *attempts,
            _ => 1,
        }
    }
}

/// One side of a debate. Implementations serve one debate at a time.
pub trait Agent: Send {
    fn name(&self) -> &str;

    fn propose(&mut self, ctx: &AgentTurnContext<'_>) -> Result<AgentReply, AgentError>;
}

impl<T: Agent + ?Sized> Agent for Box<T> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn propose(&mut self, ctx: &AgentTurnContext<'_>) -> Result<AgentReply, AgentError> {
        (**self).propose(ctx)
    }
}
