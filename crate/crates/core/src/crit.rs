//! Argument-quality scoring: extract a claim, its supporting and rival
//! reasons, rate each reason's validity (gamma) and source credibility (theta)
//! on 1..=10, recurse into reasons that cite other sources, and aggregate
//!
//! ```text
//! Gamma = sum over R and R' of gamma_r * (theta_r / 10) / |R u R'|
//! ```
//!
//! Credibility is divided by ten so the aggregate stays on the 1-10 scale the
//! individual ratings use (the lowest possible value is 0.1).

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::chat::{ChatClient, ChatMessage};

pub const DEFAULT_DEPTH: u32 = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CritError {
    #[error("document is empty")]
    EmptyDocument,
    #[error("no supporting or rival reasons found; aggregate score is undefined")]
    NoReasons,
    #[error("score {value} for {field} is outside [1, 10]")]
    ScoreOutOfRange { field: &'static str, value: f64 },
    #[error("evaluator failed: {0}")]
    Evaluator(String),
    #[error("unknown document {0:?}")]
    UnknownDocument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceKind {
    Theory,
    Opinion,
    Statistics,
    ClaimFromOtherSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reason {
    pub text: String,
    pub kind: EvidenceKind,
}

/// Validity and credibility of one `reason => claim` link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkScore {
    pub gamma: f64,
    pub theta: f64,
}

impl LinkScore {
    pub fn checked(self) -> Result<Self, CritError> {
        for (field, value) in [("gamma", self.gamma), ("theta", self.theta)] {
            if !(1.0..=10.0).contains(&value) {
                return Err(CritError::ScoreOutOfRange { field, value });
            }
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasonAssessment {
    pub reason: String,
    pub kind: EvidenceKind,
    pub gamma: f64,
    pub theta: f64,
    pub is_rival: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_report: Option<Box<CritReport>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CritReport {
    pub claim: String,
    pub supporting: Vec<ReasonAssessment>,
    pub rivals: Vec<ReasonAssessment>,
    pub gamma_total: f64,
    #[serde(default)]
    pub justification: String,
}

impl CritReport {
    pub fn assessments(&self) -> impl Iterator<Item = &ReasonAssessment> {
        self.supporting.iter().chain(&self.rivals)
    }

    /// Aggregate recomputed from the stored assessments.
    pub fn recompute_gamma(&self) -> Result<f64, CritError> {
        aggregate_gamma(self.assessments().map(|a| (a.gamma, a.theta)))
    }

    /// Deepest chain of nested sub-reports below this one.
    pub fn depth(&self) -> u32 {
        self.assessments()
            .filter_map(|a| a.sub_report.as_ref())
            .map(|r| 1 + r.depth())
            .max()
            .unwrap_or(0)
    }
}

pub fn aggregate_gamma(scores: impl IntoIterator<Item = (f64, f64)>) -> Result<f64, CritError> {
    let (sum, count) = scores
        .into_iter()
        .fold((0.0, 0usize), |(s, c), (gamma, theta)| {
            (s + gamma * theta / 10.0, c + 1)
        });
    if count == 0 {
        return Err(CritError::NoReasons);
    }
    Ok(sum / count as f64)
}

/// The model-facing half of CRIT. Fixture-backed and chat-backed
/// implementations are provided.
pub trait CritEvaluator: Send + Sync {
    fn extract_claim(&self, document: &str) -> Result<String, CritError>;

    fn supporting_reasons(&self, document: &str, claim: &str) -> Result<Vec<Reason>, CritError>;

    fn rival_reasons(&self, document: &str, claim: &str) -> Result<Vec<Reason>, CritError>;

    fn validate(
        &self,
        document: &str,
        claim: &str,
        reason: &Reason,
    ) -> Result<LinkScore, CritError>;

    /// The document a cited claim comes from, if it can be located.
    fn find_document(&self, _reason: &Reason) -> Result<Option<String>, CritError> {
        Ok(None)
    }

    /// Re-evaluates `reason => claim` in a different context. Disabled unless
    /// an evaluator opts in.
    fn counterfactual(
        &self,
        _document: &str,
        _claim: &str,
        _reason: &Reason,
        _context: &str,
    ) -> Result<Option<LinkScore>, CritError> {
        Ok(None)
    }

    fn justify(&self, _document: &str, report: &CritReport) -> Result<String, CritError> {
        Ok(format!(
            "{} supporting and {} rival reasons; aggregate {:.4}",
            report.supporting.len(),
            report.rivals.len(),
            report.gamma_total
        ))
    }
}

/// Scores `document`, recursing at most `depth` levels into reasons that are
/// claims from other sources.
pub fn crit_score(
    document: &str,
    evaluator: &dyn CritEvaluator,
    depth: u32,
) -> Result<CritReport, CritError> {
    if document.trim().is_empty() {
        return Err(CritError::EmptyDocument);
    }
    let claim = evaluator.extract_claim(document)?;
    let supporting = evaluator.supporting_reasons(document, &claim)?;
    let mut assessed = Vec::with_capacity(supporting.len());
    for reason in supporting {
        assessed.push(assess(document, &claim, reason, false, evaluator, depth)?);
    }
    let rivals = evaluator.rival_reasons(document, &claim)?;
    let mut assessed_rivals = Vec::with_capacity(rivals.len());
    for reason in rivals {
        assessed_rivals.push(assess(document, &claim, reason, true, evaluator, depth)?);
    }
    let gamma_total = aggregate_gamma(
        assessed
            .iter()
            .chain(&assessed_rivals)
            .map(|a| (a.gamma, a.theta)),
    )?;
    let mut report = CritReport {
        claim,
        supporting: assessed,
        rivals: assessed_rivals,
        gamma_total,
        justification: String::new(),
    };
    report.justification = evaluator.justify(document, &report)?;
    Ok(report)
}

fn assess(
    document: &str,
    claim: &str,
    reason: Reason,
    is_rival: bool,
    evaluator: &dyn CritEvaluator,
    depth: u32,
) -> Result<ReasonAssessment, CritError> {
    let score = evaluator.validate(document, claim, &reason)?.checked()?;
    let mut gamma = score.gamma;
    let mut sub_report = None;
    if reason.kind == EvidenceKind::ClaimFromOtherSource && depth > 0 {
        if let Some(source) = evaluator.find_document(&reason)? {
            let sub = crit_score(&source, evaluator, depth - 1)?;
            gamma = sub.gamma_total.clamp(1.0, 10.0);
            sub_report = Some(Box::new(sub));
        }
    }
    Ok(ReasonAssessment {
        reason: reason.text,
        kind: reason.kind,
        gamma,
        theta: score.theta,
        is_rival,
        sub_report,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    Pass,
    /// Routed to the human-review queue.
    Flag(CritReport),
}

/// Pass when the aggregate reaches `tau_crit` (inclusive).
pub fn gate_arguments(report: &CritReport, tau_crit: f64) -> Gate {
    if report.gamma_total >= tau_crit {
        Gate::Pass
    } else {
        Gate::Flag(report.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureReason {
    pub text: String,
    pub kind: EvidenceKind,
    pub gamma: f64,
    pub theta: f64,
    /// Id of the fixture document backing a claim from another source.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureDocument {
    pub id: String,
    /// Full text; lookups match either the id or this text.
    #[serde(default)]
    pub text: Option<String>,
    pub claim: String,
    #[serde(default)]
    pub reasons: Vec<FixtureReason>,
    #[serde(default)]
    pub rivals: Vec<FixtureReason>,
    #[serde(default)]
    pub justification: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CritFixtureFile {
    pub documents: Vec<FixtureDocument>,
}

/// Evaluator answering from a fixture file. Documents are addressed by id or
/// by their exact (trimmed) text.
#[derive(Debug, Clone, Default)]
pub struct FixtureCritEvaluator {
    docs: Vec<FixtureDocument>,
    by_key: HashMap<String, usize>,
}

impl FixtureCritEvaluator {
    pub fn new(file: CritFixtureFile) -> Result<Self, CritError> {
        let mut by_key = HashMap::new();
        for (i, doc) in file.documents.iter().enumerate() {
            for r in doc.reasons.iter().chain(&doc.rivals) {
                LinkScore {
                    gamma: r.gamma,
                    theta: r.theta,
                }
                .checked()?;
            }
            if by_key.insert(doc.id.clone(), i).is_some() {
                return Err(CritError::Evaluator(format!(
                    "duplicate fixture id {:?}",
                    doc.id
                )));
            }
            if let Some(text) = &doc.text {
                by_key.insert(text.trim().to_string(), i);
            }
        }
        Ok(Self {
            docs: file.documents,
            by_key,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, CritError> {
        let file: CritFixtureFile = serde_json::from_str(text)
            .map_err(|e| CritError::Evaluator(format!("fixture JSON: {e}")))?;
        Self::new(file)
    }

    pub fn load(path: &Path) -> Result<Self, CritError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CritError::Evaluator(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn documents(&self) -> &[FixtureDocument] {
        &self.docs
    }

    fn doc(&self, key: &str) -> Result<&FixtureDocument, CritError> {
        self.by_key
            .get(key.trim())
            .map(|&i| &self.docs[i])
            .ok_or_else(|| CritError::UnknownDocument(key.chars().take(60).collect()))
    }

    fn reason(&self, document: &str, reason: &Reason) -> Result<&FixtureReason, CritError> {
        let doc = self.doc(document)?;
        doc.reasons
            .iter()
            .chain(&doc.rivals)
            .find(|r| r.text == reason.text)
            .ok_or_else(|| {
                CritError::Evaluator(format!(
                    "reason {:?} not in fixture {}",
                    reason.text, doc.id
                ))
            })
    }
}

fn to_reasons(list: &[FixtureReason]) -> Vec<Reason> {
    list.iter()
        .map(|r| Reason {
            text: r.text.clone(),
            kind: r.kind,
        })
        .collect()
}

impl CritEvaluator for FixtureCritEvaluator {
    fn extract_claim(&self, document: &str) -> Result<String, CritError> {
        Ok(self.doc(document)?.claim.clone())
    }

    fn supporting_reasons(&self, document: &str, _claim: &str) -> Result<Vec<Reason>, CritError> {
        Ok(to_reasons(&self.doc(document)?.reasons))
    }

    fn rival_reasons(&self, document: &str, _claim: &str) -> Result<Vec<Reason>, CritError> {
        Ok(to_reasons(&self.doc(document)?.rivals))
    }

    fn validate(
        &self,
        document: &str,
        _claim: &str,
        reason: &Reason,
    ) -> Result<LinkScore, CritError> {
        let r = self.reason(document, reason)?;
        Ok(LinkScore {
            gamma: r.gamma,
            theta: r.theta,
        })
    }

    fn find_document(&self, reason: &Reason) -> Result<Option<String>, CritError> {
        // Reasons are unique per fixture file in practice; take the first match.
        Ok(self
            .docs
            .iter()
            .flat_map(|d| d.reasons.iter().chain(&d.rivals))
            .find(|r| r.text == reason.text)
            .and_then(|r| r.source.clone()))
    }

    fn justify(&self, document: &str, report: &CritReport) -> Result<String, CritError> {
        match &self.doc(document)?.justification {
            Some(j) => Ok(j.clone()),
            None => Ok(format!(
                "{} supporting and {} rival reasons; aggregate {:.4}",
                report.supporting.len(),
                report.rivals.len(),
                report.gamma_total
            )),
        }
    }
}

/// CRIT evaluator that asks a chat model for each step and expects JSON back.
pub struct ChatCritEvaluator {
    client: Arc<dyn ChatClient>,
}

#[derive(Deserialize)]
struct ReasonList {
    reasons: Vec<Reason>,
}

impl ChatCritEvaluator {
    pub fn new(client: Arc<dyn ChatClient>) -> Self {
        Self { client }
    }

    fn ask(&self, instruction: &str, document: &str) -> Result<String, CritError> {
        let messages = [
            ChatMessage::system(
                "You are a careful critical reader. Answer only with the JSON requested, no prose.",
            ),
            ChatMessage::user(format!("{instruction}\n\nDocument:\n{document}")),
        ];
        self.client
            .complete(&messages)
            .map_err(|e| CritError::Evaluator(e.to_string()))
    }

    fn ask_json<T: serde::de::DeserializeOwned>(
        &self,
        instruction: &str,
        document: &str,
    ) -> Result<T, CritError> {
        let reply = self.ask(instruction, document)?;
        let start = reply
            .find('{')
            .ok_or_else(|| CritError::Evaluator(format!("no JSON in {reply:?}")))?;
        let end = reply.rfind('}').unwrap_or(reply.len() - 1);
        serde_json::from_str(&reply[start..=end])
            .map_err(|e| CritError::Evaluator(format!("bad JSON: {e}")))
    }
}

const KINDS: &str = "\"theory\", \"opinion\", \"statistics\", or \"claim_from_other_source\"";

impl CritEvaluator for ChatCritEvaluator {
    fn extract_claim(&self, document: &str) -> Result<String, CritError> {
        #[derive(Deserialize)]
        struct Claim {
            claim: String,
        }
        let c: Claim = self.ask_json(
            "State the document's central claim as {\"claim\": \"...\"}.",
            document,
        )?;
        Ok(c.claim)
    }

    fn supporting_reasons(&self, document: &str, claim: &str) -> Result<Vec<Reason>, CritError> {
        let list: ReasonList = self.ask_json(
            &format!(
                "List the reasons the document gives in support of the claim {claim:?}. For each, name the \
                 type of evidence behind it ({KINDS}). Answer as {{\"reasons\": [{{\"text\": \"...\", \"kind\": \"...\"}}]}}."
            ),
            document,
        )?;
        Ok(list.reasons)
    }

    fn rival_reasons(&self, document: &str, claim: &str) -> Result<Vec<Reason>, CritError> {
        let list: ReasonList = self.ask_json(
            &format!(
                "List counterarguments against the claim {claim:?}, including ones the document omits, with the \
                 type of evidence behind each ({KINDS}). Answer as {{\"reasons\": [{{\"text\": \"...\", \"kind\": \"...\"}}]}}; \
                 use an empty list if there are none."
            ),
            document,
        )?;
        Ok(list.reasons)
    }

    fn validate(
        &self,
        document: &str,
        claim: &str,
        reason: &Reason,
    ) -> Result<LinkScore, CritError> {
        let score: LinkScore = self.ask_json(
            &format!(
                "How strongly does the reason {:?} support the claim {claim:?} in this document? Rate argument \
                 validity as \"gamma\" and source credibility as \"theta\", each between 1 and 10 (strongest). \
                 Answer as {{\"gamma\": n, \"theta\": n}}.",
                reason.text
            ),
            document,
        )?;
        score.checked()
    }
}
