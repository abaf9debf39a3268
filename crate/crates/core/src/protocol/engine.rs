use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{
    check_convergence, next_contentiousness, novelty_override, phase_of, score_initial_conditions,
    Convergence, DebateConfig, InitialConditionScore, ProtocolError, Round, Verdict,
};
use crate::agents::similarity::{argument_similarity, JaccardSimilarity, SimilarityEvaluator};
use crate::agents::{Agent, AgentError, AgentReply, AgentTurnContext, Side, Stance};
use crate::crit::{crit_score, CritEvaluator};
use crate::metrics::LabelScale;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StanceAssignment {
    pub a: Stance,
    pub b: Stance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbortKind {
    /// A remote agent exhausted its retries.
    Remote,
    /// A scripted agent ran out of turns.
    ScriptExhausted,
    Other,
}

/// Why and where a debate stopped early.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbortRecord {
    pub side: Side,
    pub round: usize,
    pub kind: AbortKind,
    pub error: String,
    pub attempts: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_raw: Option<String>,
}

impl AbortRecord {
    fn new(side: Side, round: usize, err: &AgentError) -> Self {
        let (kind, last_raw) = match err {
            AgentError::Remote { last_raw, .. } => (AbortKind::Remote, last_raw.clone()),
            AgentError::ScriptExhausted { .. } => (AbortKind::ScriptExhausted, None),
            _ => (AbortKind::Other, None),
        };
        Self {
            side,
            round,
            kind,
            error: err.to_string(),
            attempts: err.attempts(),
            last_raw,
        }
    }
}

/// Full record of one debate, sufficient to replay the verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebateTranscript {
    pub subject: String,
    pub stances: StanceAssignment,
    pub agent_a: String,
    pub agent_b: String,
    pub config: DebateConfig,
    pub scale: Arc<LabelScale>,
    #[serde(default)]
    pub initial: Option<InitialConditionScore>,
    pub rounds: Vec<Round>,
    /// Contentiousness used for each round, plus the value queued for the
    /// round after the last one.
    pub delta_trace: Vec<f64>,
    pub verdict: Verdict,
    #[serde(default)]
    pub aborted: Option<AbortRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<String>,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
}

impl DebateTranscript {
    /// Re-runs the convergence check over the recorded rounds.
    pub fn replay_verdict(&self) -> Result<Convergence, ProtocolError> {
        check_convergence(&self.rounds, &self.config)
    }
}

/// Drives two agents through rounds until the convergence check decides.
pub struct DebateRunner<'e> {
    config: DebateConfig,
    scale: Arc<LabelScale>,
    similarity: &'e dyn SimilarityEvaluator,
    crit: Option<&'e dyn CritEvaluator>,
}

impl<'e> DebateRunner<'e> {
    pub fn new(config: DebateConfig, scale: Arc<LabelScale>) -> Self {
        Self {
            config,
            scale,
            similarity: &JaccardSimilarity,
            crit: None,
        }
    }

    pub fn with_similarity(mut self, evaluator: &'e dyn SimilarityEvaluator) -> Self {
        self.similarity = evaluator;
        self
    }

    pub fn with_crit(mut self, evaluator: &'e dyn CritEvaluator) -> Self {
        self.crit = Some(evaluator);
        self
    }

    pub fn config(&self) -> &DebateConfig {
        &self.config
    }

    /// Runs a debate. Agent failures end the debate in human review with an
    /// abort record rather than an error; configuration problems are errors.
    pub fn run(
        &self,
        subject: &str,
        stances: StanceAssignment,
        agent_a: &mut dyn Agent,
        agent_b: &mut dyn Agent,
    ) -> Result<DebateTranscript, ProtocolError> {
        let cfg = &self.config;
        cfg.validate()?;
        stances.a.validate(&self.scale)?;
        stances.b.validate(&self.scale)?;
        if cfg.crit_enabled && self.crit.is_none() {
            return Err(ProtocolError::CritEvaluatorMissing);
        }
        let started_at = Utc::now();
        let mut rounds: Vec<Round> = Vec::new();
        let mut delta_trace = vec![cfg.delta_init];
        let mut annotations = Vec::new();
        let mut aborted = None;
        let mut delta = cfg.delta_init;

        let verdict = loop {
            let index = rounds.len() + 1;
            let phase = phase_of(delta)?;
            let ask = |agent: &mut dyn Agent, side: Side, stance: &Stance| {
                let ctx = AgentTurnContext {
                    subject,
                    stance,
                    side,
                    delta,
                    phase,
                    history: &rounds,
                    scale: &self.scale,
                    round_index: index,
                };
                agent.propose(&ctx).map_err(|e| (side, e))
            };
            let replies = ask(agent_a, Side::A, &stances.a)
                .and_then(|a| ask(agent_b, Side::B, &stances.b).map(|b| (a, b)));
            let (reply_a, reply_b) = match replies {
                Ok(pair) => pair,
                Err((side, err)) => {
                    log::warn!("agent {side} failed in round {index}: {err}");
                    let record = AbortRecord::new(side, index, &err);
                    let reason =
                        format!("debate aborted in round {index}: agent {side} failed: {err}");
                    aborted = Some(record);
                    break Verdict::human_review(reason);
                }
            };
            for reply in [&reply_a, &reply_b] {
                if !reply.dist.scale().as_ref().eq(self.scale.as_ref()) {
                    return Err(AgentError::ScaleMismatch.into());
                }
            }

            let sim_a = self.similarity_for(
                rounds.last().map(|r| r.argument_a.as_str()),
                &reply_a,
                &mut annotations,
                index,
                Side::A,
            );
            let sim_b = self.similarity_for(
                rounds.last().map(|r| r.argument_b.as_str()),
                &reply_b,
                &mut annotations,
                index,
                Side::B,
            );
            let mut round = Round::new(
                index,
                reply_a.dist,
                reply_b.dist,
                reply_a.argument,
                reply_b.argument,
                delta,
            )?
            .with_similarities(sim_a, sim_b);
            round.raw_a = reply_a.raw;
            round.raw_b = reply_b.raw;
            if let Some(evaluator) = self.crit {
                round.crit_a =
                    self.crit_for(&round.argument_a, evaluator, &mut round.notes, Side::A);
                round.crit_b =
                    self.crit_for(&round.argument_b, evaluator, &mut round.notes, Side::B);
            }

            delta = next_contentiousness(delta, &round.snapshot, cfg, &self.scale);
            if let (Some(a), Some(b)) = (sim_a, sim_b) {
                let overridden = novelty_override(a, b, cfg, delta);
                if overridden != delta {
                    round.notes.push(format!(
                        "no new perspectives; contentiousness {delta:.4} -> {overridden:.4}"
                    ));
                    delta = overridden;
                }
            }
            delta_trace.push(delta);
            log::info!(
                "round {index}: WD {:.4} JS {:.4} KL {:.4} next delta {delta:.4}",
                round.snapshot.wd,
                round.snapshot.jsd,
                round.snapshot.kl_ab
            );
            rounds.push(round);

            if let Convergence::Done(v) = check_convergence(&rounds, cfg)? {
                break v;
            }
        };

        let initial = match rounds.first() {
            Some(r) => Some(score_initial_conditions(&r.dist_a, &r.dist_b, cfg)?),
            None => None,
        };
        if let Some(init) = &initial {
            if !init.dual_entropy_satisfied {
                annotations.push(format!("initial conditions not satisfied: {}", init.notes));
            }
        }
        Ok(DebateTranscript {
            subject: subject.to_string(),
            stances,
            agent_a: agent_a.name().to_string(),
            agent_b: agent_b.name().to_string(),
            config: cfg.clone(),
            scale: self.scale.clone(),
            initial,
            rounds,
            delta_trace,
            verdict,
            aborted,
            annotations,
            started_at,
            finished_at: Utc::now(),
        })
    }

    fn similarity_for(
        &self,
        previous: Option<&str>,
        reply: &AgentReply,
        annotations: &mut Vec<String>,
        index: usize,
        side: Side,
    ) -> Option<f64> {
        if let Some(s) = reply.recorded_similarity {
            return Some(s);
        }
        let outcome = argument_similarity(previous?, &reply.argument, self.similarity);
        if outcome.fell_back {
            annotations.push(format!(
                "round {index}: similarity for agent {side} fell back to Jaccard"
            ));
        }
        Some(outcome.value)
    }

    fn crit_for(
        &self,
        argument: &str,
        evaluator: &dyn CritEvaluator,
        notes: &mut Vec<String>,
        side: Side,
    ) -> Option<f64> {
        match crit_score(argument, evaluator, self.config.crit_depth) {
            Ok(report) => Some(report.gamma_total),
            Err(e) => {
                notes.push(format!("CRIT unavailable for agent {side}: {e}"));
                None
            }
        }
    }
}
