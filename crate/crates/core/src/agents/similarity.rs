//! Round-over-round argument similarity.

use std::collections::HashSet;

use thiserror::Error;

use super::chat::{ChatClient, ChatError, ChatMessage};

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("similarity judge failed: {0}")]
    Judge(#[from] ChatError),
    #[error("judge reply has no score in [0, 1]: {0:?}")]
    Unparseable(String),
}

pub trait SimilarityEvaluator: Send + Sync {
    fn similarity(&self, a: &str, b: &str) -> Result<f64, SimilarityError>;
}

/// Token-set Jaccard index over lowercased alphanumeric tokens.
#[derive(Debug, Clone, Copy, Default)]
pub struct JaccardSimilarity;

fn tokens(text: &str) -> HashSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn jaccard(a: &str, b: &str) -> f64 {
    let (ta, tb) = (tokens(a), tokens(b));
    let union = ta.union(&tb).count();
    if union == 0 {
        return 1.0;
    }
    ta.intersection(&tb).count() as f64 / union as f64
}

impl SimilarityEvaluator for JaccardSimilarity {
    fn similarity(&self, a: &str, b: &str) -> Result<f64, SimilarityError> {
        Ok(jaccard(a, b))
    }
}

/// Asks an independent model to rate semantic overlap between two arguments.
pub struct ChatJudgeSimilarity<C> {
    client: C,
}

impl<C: ChatClient> ChatJudgeSimilarity<C> {
    pub fn new(client: C) -> Self {
        Self { client }
    }
}

impl<C: ChatClient> SimilarityEvaluator for ChatJudgeSimilarity<C> {
    fn similarity(&self, a: &str, b: &str) -> Result<f64, SimilarityError> {
        let messages = [
            ChatMessage::system(
                "You compare two debate arguments. Reply with a single number between 0 and 1: \
                 1 means the second argument adds no new perspective over the first, \
                 0 means it is entirely new.",
            ),
            ChatMessage::user(format!("First argument:\n{a}\n\nSecond argument:\n{b}")),
        ];
        let reply = self.client.complete(&messages)?;
        reply
            .split(|c: char| !(c.is_ascii_digit() || c == '.'))
            .filter_map(|t| t.parse::<f64>().ok())
            .find(|v| (0.0..=1.0).contains(v))
            .ok_or(SimilarityError::Unparseable(reply))
    }
}

/// A similarity value and whether the configured evaluator had to be replaced
/// by Jaccard.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityOutcome {
    pub value: f64,
    pub fell_back: bool,
}

/// Scores with `evaluator`, falling back to Jaccard when it fails.
pub fn argument_similarity(
    a: &str,
    b: &str,
    evaluator: &dyn SimilarityEvaluator,
) -> SimilarityOutcome {
    match evaluator.similarity(a, b) {
        Ok(v) => SimilarityOutcome {
            value: v.clamp(0.0, 1.0),
            fell_back: false,
        },
        Err(err) => {
            log::warn!("similarity evaluator failed, using Jaccard: {err}");
            SimilarityOutcome {
                value: jaccard(a, b),
                fell_back: true,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard("same text here", "same text here"), 1.0);
        assert_eq!(jaccard("alpha beta", "gamma delta"), 0.0);
        assert!((jaccard("the quick brown fox", "the slow brown fox") - 0.6).abs() < 1e-12);
        assert_eq!(jaccard("The Fox!", "the fox"), 1.0);
    }

    struct Broken;

    impl ChatClient for Broken {
        fn complete(&self, _: &[ChatMessage]) -> Result<String, ChatError> {
            Err(ChatError::Transport("down".into()))
        }
    }

    struct Fixed(&'static str);

    impl ChatClient for Fixed {
        fn complete(&self, _: &[ChatMessage]) -> Result<String, ChatError> {
            Ok(self.0.to_string())
        }
    }

    #[test]
    fn judge_failure_falls_back() {
        let judge = ChatJudgeSimilarity::new(Broken);
        let out = argument_similarity("the quick brown fox", "the slow brown fox", &judge);
        assert!(out.fell_back);
        assert!((out.value - 0.6).abs() < 1e-12);
    }

    #[test]
    fn judge_score_is_used() {
        let judge = ChatJudgeSimilarity::new(Fixed("Score: 0.85"));
        let out = argument_similarity("a", "b", &judge);
        assert!(!out.fell_back);
        assert_eq!(out.value, 0.85);
        let out = argument_similarity("a", "b", &ChatJudgeSimilarity::new(Fixed("no idea")));
        assert!(out.fell_back);
    }
}
