use std::sync::Arc;

use super::chat::{ChatClient, ChatMessage};
use super::parse::{extract_argument, parse_distribution};
use super::prompt::{render_prompt, PromptTemplate};
use super::{Agent, AgentError, AgentReply, AgentTurnContext};

pub const DEFAULT_MAX_ATTEMPTS: u32 = 3;

/// An agent backed by a chat-completion model. Unreadable replies are
/// re-prompted with the parse failure quoted back, up to `max_attempts` calls.
pub struct RemoteAgent {
    name: String,
    client: Arc<dyn ChatClient>,
    template: PromptTemplate,
    max_attempts: u32,
}

impl RemoteAgent {
    pub fn new(
        name: impl Into<String>,
        client: Arc<dyn ChatClient>,
        template: PromptTemplate,
    ) -> Self {
        Self {
            name: name.into(),
            client,
            template,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }

    pub fn with_max_attempts(mut self, attempts: u32) -> Self {
        self.max_attempts = attempts.max(1);
        self
    }
}

impl Agent for RemoteAgent {
    fn name(&self) -> &str {
        &self.name
    }

    fn propose(&mut self, ctx: &AgentTurnContext<'_>) -> Result<AgentReply, AgentError> {
        let prompt = render_prompt(ctx, &self.template)?;
        let mut messages = vec![ChatMessage::user(prompt)];
        let mut last_raw = None;
        let mut reason = String::from("no attempt made");
        for attempt in 1..=self.max_attempts {
            let raw = match self.client.complete(&messages) {
                Ok(raw) => raw,
                Err(e) => {
                    log::warn!("{}: attempt {attempt} failed: {e}", self.name);
                    reason = e.to_string();
                    continue;
                }
            };
            match parse_distribution(&raw, ctx.scale) {
                Ok(dist) => {
                    return Ok(AgentReply {
                        argument: extract_argument(&raw),
                        dist,
                        raw,
                        recorded_similarity: None,
                    })
                }
                Err(e) => {
                    log::warn!("{}: attempt {attempt} unparseable: {e}", self.name);
                    reason = format!("unparseable reply: {e}");
                    messages.push(ChatMessage::assistant(raw.clone()));
                    messages.push(ChatMessage::user(format!(
                        "Your reply could not be read ({e}). Restate your assigned stance to yourself \
                         and answer again using exactly the requested format: a \"Distribution:\" block \
                         with one percentage per label ({}), then an \"Argument:\" block.",
                        ctx.scale.labels().join(", ")
                    )));
                    last_raw = Some(raw);
                }
            }
        }
        Err(AgentError::Remote {
            attempts: self.max_attempts,
            reason,
            last_raw,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::chat::ChatError;
    use crate::agents::{Position, Side, Stance};
    use crate::metrics::LabelScale;
    use crate::protocol::Phase;
    use std::sync::Mutex;

    /// Pops canned replies and records what it was sent.
    struct Canned {
        replies: Mutex<Vec<Result<String, ChatError>>>,
        seen: Mutex<Vec<Vec<ChatMessage>>>,
    }

    impl Canned {
        fn new(mut replies: Vec<Result<String, ChatError>>) -> Arc<Self> {
            replies.reverse();
            Arc::new(Self {
                replies: Mutex::new(replies),
                seen: Mutex::new(Vec::new()),
            })
        }
    }

    impl ChatClient for Canned {
        fn complete(&self, messages: &[ChatMessage]) -> Result<String, ChatError> {
            self.seen.lock().unwrap().push(messages.to_vec());
            self.replies
                .lock()
                .unwrap()
                .pop()
                .unwrap_or_else(|| Err(ChatError::Transport("empty".into())))
        }
    }

    fn run(client: Arc<Canned>) -> Result<AgentReply, AgentError> {
        let scale = Arc::new(LabelScale::five_point_bias());
        let stance = Stance::new(Position::Oppose, "Neutral", "", &scale).unwrap();
        let ctx = AgentTurnContext {
            subject: "s",
            stance: &stance,
            side: Side::B,
            delta: 0.9,
            phase: Phase::Exploration,
            history: &[],
            scale: &scale,
            round_index: 1,
        };
        RemoteAgent::new("remote", client, PromptTemplate::default_agent()).propose(&ctx)
    }

    #[test]
    fn parses_prose_reply() {
        let client = Canned::new(vec![Ok(
            "I estimate 5%, 15%, 50%, 25%, 5% for the five labels.\nArgument: mostly neutral."
                .into(),
        )]);
        let reply = run(client).unwrap();
        assert_eq!(reply.dist.probs(), &[0.05, 0.15, 0.50, 0.25, 0.05]);
        assert_eq!(reply.argument, "mostly neutral.");
        assert!(reply.raw.starts_with("I estimate"));
    }

    #[test]
    fn reprompts_after_parse_failure() {
        let client = Canned::new(vec![
            Ok("Hard to say.".into()),
            Ok("Distribution:\nNegative: 20%\nWeak Negative: 20%\nNeutral: 20%\nWeak Positive: 20%\nPositive: 20%\nArgument:\nUnclear.".into()),
        ]);
        let reply = run(client.clone()).unwrap();
        assert_eq!(reply.dist.probs(), &[0.2; 5]);
        let seen = client.seen.lock().unwrap();
        assert_eq!(seen.len(), 2);
        assert_eq!(seen[1].len(), 3);
        assert!(seen[1][2].content.contains("could not be read"));
    }

    #[test]
    fn gives_up_after_bound() {
        let client = Canned::new(vec![
            Ok("no".into()),
            Ok("still no".into()),
            Ok("never".into()),
            Ok("5 5 5 5 80".into()),
        ]);
        match run(client.clone()) {
            Err(AgentError::Remote {
                attempts, last_raw, ..
            }) => {
                assert_eq!(attempts, 3);
                assert_eq!(last_raw.as_deref(), Some("never"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(client.seen.lock().unwrap().len(), 3);
    }
}
