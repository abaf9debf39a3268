//! The debate state machine: initial-condition scoring, contentiousness
//! phases and modulation, convergence checking, and the round loop.

mod config;
mod convergence;
mod engine;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::AgentError;
use crate::metrics::{
    entropy, wasserstein_ordinal, Distribution, LabelScale, MetricError, MetricSnapshot,
};

pub use config::{DebateConfig, DeltaMode, Normalizers};
pub use convergence::{check_convergence, round_criteria, Convergence, RoundCriteria};
pub use engine::{AbortKind, AbortRecord, DebateRunner, DebateTranscript, StanceAssignment};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("contentiousness {0} outside [0, 1]")]
    DeltaOutOfRange(f64),
    #[error("malformed history: {0}")]
    MalformedHistory(String),
    #[error("CRIT gating is enabled but no CRIT evaluator was supplied")]
    CritEvaluatorMissing,
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Agent(#[from] AgentError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Exploration,
    Integration,
    Consensus,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Exploration => "exploration",
            Phase::Integration => "integration",
            Phase::Consensus => "consensus",
        })
    }
}

/// Exploration above 0.7, Integration in (0.3, 0.7], Consensus at or below 0.3.
pub fn phase_of(delta: f64) -> Result<Phase, ProtocolError> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(ProtocolError::DeltaOutOfRange(delta));
    }
    Ok(if delta > 0.7 {
        Phase::Exploration
    } else if delta > 0.3 {
        Phase::Integration
    } else {
        Phase::Consensus
    })
}

/// Contentiousness for the next round.
pub fn next_contentiousness(
    prev: f64,
    snapshot: &MetricSnapshot,
    cfg: &DebateConfig,
    scale: &LabelScale,
) -> f64 {
    match cfg.delta_mode {
        DeltaMode::Scheduled => (prev / cfg.delta_decay).clamp(0.0, 1.0),
        DeltaMode::MetricDriven => {
            let n = cfg.normalizers(scale.len());
            let delta = cfg.alpha * snapshot.kl_ab / n.kl_max
                + cfg.beta * snapshot.jsd / n.js_max
                + cfg.gamma * snapshot.wd / n.wd_max;
            delta.clamp(0.0, 1.0)
        }
    }
}

/// Cuts contentiousness by one schedule step when both agents' arguments are
/// more similar to their previous ones than `tau_sim`.
pub fn novelty_override(sim_a: f64, sim_b: f64, cfg: &DebateConfig, delta: f64) -> f64 {
    if sim_a.min(sim_b) > cfg.tau_sim {
        (delta / cfg.delta_decay).clamp(0.0, 1.0)
    } else {
        delta
    }
}

/// Advisory check that the opening positions pair a high-entropy with a
/// low-entropy distribution and sit far apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialConditionScore {
    pub entropy_gap: f64,
    pub wd: f64,
    pub dual_entropy_satisfied: bool,
    pub notes: String,
}

pub fn score_initial_conditions(
    a: &Distribution,
    b: &Distribution,
    cfg: &DebateConfig,
) -> Result<InitialConditionScore, MetricError> {
    let (ha, hb) = (entropy(a), entropy(b));
    let entropy_gap = (ha - hb).abs();
    let wd = wasserstein_ordinal(a, b)?;
    let gap_ok = entropy_gap >= cfg.edt_entropy_gap;
    let sep_ok = wd >= cfg.edt_separation;
    let notes = format!(
        "H(A) = {ha:.4} bits, H(B) = {hb:.4} bits, gap {entropy_gap:.4} ({}{:.2}); WD {wd:.4} steps ({}{:.2})",
        if gap_ok { ">= " } else { "< " },
        cfg.edt_entropy_gap,
        if sep_ok { ">= " } else { "< " },
        cfg.edt_separation,
    );
    Ok(InitialConditionScore {
        entropy_gap,
        wd,
        dual_entropy_satisfied: gap_ok && sep_ok,
        notes,
    })
}

/// One completed round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub index: usize,
    pub dist_a: Distribution,
    pub dist_b: Distribution,
    pub argument_a: String,
    pub argument_b: String,
    #[serde(default)]
    pub raw_a: String,
    #[serde(default)]
    pub raw_b: String,
    pub snapshot: MetricSnapshot,
    pub delta: f64,
    pub phase: Phase,
    #[serde(default)]
    pub sim_a: Option<f64>,
    #[serde(default)]
    pub sim_b: Option<f64>,
    #[serde(default)]
    pub crit_a: Option<f64>,
    #[serde(default)]
    pub crit_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Round {
    /// Builds a round, computing its metric snapshot and phase.
    pub fn new(
        index: usize,
        dist_a: Distribution,
        dist_b: Distribution,
        argument_a: String,
        argument_b: String,
        delta: f64,
    ) -> Result<Self, ProtocolError> {
        let snapshot = MetricSnapshot::compute(&dist_a, &dist_b)?;
        let phase = phase_of(delta)?;
        Ok(Self {
            index,
            dist_a,
            dist_b,
            argument_a,
            argument_b,
            raw_a: String::new(),
            raw_b: String::new(),
            snapshot,
            delta,
            phase,
            sim_a: None,
            sim_b: None,
            crit_a: None,
            crit_b: None,
            notes: Vec::new(),
        })
    }

    pub fn with_similarities(mut self, sim_a: Option<f64>, sim_b: Option<f64>) -> Self {
        self.sim_a = sim_a;
        self.sim_b = sim_b;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictKind {
    Converged,
    HumanReview,
    /// The history is longer than the configured round cap.
    MaxRoundsExceeded,
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictKind::Converged => "Converged",
            VerdictKind::HumanReview => "HumanReview",
            VerdictKind::MaxRoundsExceeded => "MaxRoundsExceeded",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    /// Present exactly when `kind` is `Converged`.
    pub consensus: Option<Distribution>,
    pub reason: String,
}

impl Verdict {
    pub fn converged(consensus: Distribution, reason: impl Into<String>) -> Self {
        Self {
            kind: VerdictKind::Converged,
            consensus: Some(consensus),
            reason: reason.into(),
        }
    }

    pub fn human_review(reason: impl Into<String>) -> Self {
        Self {
            kind: VerdictKind::HumanReview,
            consensus: None,
            reason: reason.into(),
        }
    }

    pub fn is_converged(&self) -> bool {
        self.kind == VerdictKind::Converged
    }
}
