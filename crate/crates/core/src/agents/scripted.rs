use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::parse::format_distribution;
use super::{Agent, AgentError, AgentReply, AgentTurnContext, Side, Stance};
use crate::metrics::{Distribution, LabelScale};

/// What a scripted agent does once its turns run out.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExhaustPolicy {
    #[default]
    Error,
    /// Restate the final turn for every later round.
    HoldLast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptTurn {
    /// Probabilities as percentages, one per label.
    pub percent: Vec<f64>,
    pub argument: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptStances {
    pub a: Stance,
    pub b: Stance,
}

/// A recorded two-agent debate that scripted agents can replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebateScript {
    pub subject: String,
    pub scale: LabelScale,
    pub stances: ScriptStances,
    #[serde(default)]
    pub on_exhausted: ExhaustPolicy,
    pub a: Vec<ScriptTurn>,
    pub b: Vec<ScriptTurn>,
}

impl DebateScript {
    /// Checks stance labels, percentages, and similarity ranges.
    pub fn validate(&self) -> Result<(), AgentError> {
        self.stances.a.validate(&self.scale)?;
        self.stances.b.validate(&self.scale)?;
        if self.a.is_empty() || self.b.is_empty() {
            return Err(AgentError::InvalidScript(
                "each agent needs at least one turn".into(),
            ));
        }
        let scale = Arc::new(self.scale.clone());
        for (side, turns) in [(Side::A, &self.a), (Side::B, &self.b)] {
            for (i, turn) in turns.iter().enumerate() {
                turn.distribution(&scale).map_err(|e| {
                    AgentError::InvalidScript(format!("agent {side} turn {}: {e}", i + 1))
                })?;
                if let Some(s) = turn.similarity {
                    if !(0.0..=1.0).contains(&s) {
                        return Err(AgentError::InvalidScript(format!(
                            "agent {side} turn {}: similarity {s} outside [0, 1]",
                            i + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Keeps only the first `rounds` turns of each agent.
    pub fn truncated(&self, rounds: usize) -> Self {
        let mut s = self.clone();
        s.a.truncate(rounds);
        s.b.truncate(rounds);
        s
    }

    pub fn turns(&self, side: Side) -> &[ScriptTurn] {
        match side {
            Side::A => &self.a,
            Side::B => &self.b,
        }
    }
}

impl ScriptTurn {
    pub fn distribution(
        &self,
        scale: &Arc<LabelScale>,
    ) -> Result<Distribution, crate::metrics::MetricError> {
        Distribution::from_percentages(scale.clone(), &self.percent)
    }
}

/// Replays scripted turns; fully deterministic.
#[derive(Debug, Clone)]
pub struct ScriptedAgent {
    name: String,
    turns: Vec<ScriptTurn>,
    policy: ExhaustPolicy,
}

impl ScriptedAgent {
    pub fn new(name: impl Into<String>, turns: Vec<ScriptTurn>, policy: ExhaustPolicy) -> Self {
        Self {
            name: name.into(),
            turns,
            policy,
        }
    }

    pub fn from_script(script: &DebateScript, side: Side) -> Self {
        Self::new(
            format!("scripted-{side}"),
            script.turns(side).to_vec(),
            script.on_exhausted,
        )
    }
}

impl Agent for ScriptedAgent {
    fn name(&self) -> &str {
        &self.name
    }

    fn propose(&mut self, ctx: &AgentTurnContext<'_>) -> Result<AgentReply, AgentError> {
        let idx = ctx.round_index.saturating_sub(1);
        let turn = match self.turns.get(idx) {
            Some(t) => t,
            None => match (self.policy, self.turns.last()) {
                (ExhaustPolicy::HoldLast, Some(last)) => last,
                _ => {
                    return Err(AgentError::ScriptExhausted {
                        round: ctx.round_index,
                        available: self.turns.len(),
                    })
                }
            },
        };
        let dist = turn
            .distribution(ctx.scale)
            .map_err(|e| AgentError::InvalidScript(e.to_string()))?;
        let raw = turn.raw.clone().unwrap_or_else(|| {
            format!(
                "Distribution:\n{}Argument:\n{}",
                format_distribution(&dist),
                turn.argument
            )
        });
        Ok(AgentReply {
            dist,
            argument: turn.argument.clone(),
            raw,
            recorded_similarity: turn.similarity,
        })
    }
}
