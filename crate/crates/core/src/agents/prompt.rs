//! Prompt templates with `{placeholder}` substitution.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use thiserror::Error;

use super::parse::format_distribution;
use super::{AgentTurnContext, Position, Side};

/// Placeholders an agent template may use.
pub const PLACEHOLDERS: &[&str] = &[
    "subject", "stance", "delta", "phase", "tone", "labels", "history", "format", "round",
];

/// Substring present in every rendered agent prompt.
pub const STANCE_MARKER: &str = "Your assigned stance";

pub const DEFAULT_TEMPLATE: &str = include_str!("../../templates/debater.txt");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TemplateError {
    #[error("unknown placeholder {{{0}}}")]
    UnknownPlaceholder(String),
    #[error("no binding for placeholder {{{0}}}")]
    MissingBinding(String),
    #[error("agent templates must contain {{{0}}}")]
    RequiredPlaceholder(&'static str),
    #[error("unterminated placeholder starting at byte {0}")]
    Unterminated(usize),
    #[error("cannot read template {path}: {reason}")]
    Io { path: String, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Piece {
    Text(String),
    Slot(String),
}

/// A parsed template. `{{` and `}}` produce literal braces.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    pieces: Vec<Piece>,
}

impl PromptTemplate {
    pub fn parse(source: &str) -> Result<Self, TemplateError> {
        let mut pieces = Vec::new();
        let mut text = String::new();
        let mut chars = source.char_indices().peekable();
        while let Some((i, c)) = chars.next() {
            match c {
                '{' if chars.peek().map(|&(_, n)| n) == Some('{') => {
                    chars.next();
                    text.push('{');
                }
                '}' if chars.peek().map(|&(_, n)| n) == Some('}') => {
                    chars.next();
                    text.push('}');
                }
                '{' => {
                    let mut name = String::new();
                    loop {
                        match chars.next() {
                            Some((_, '}')) => break,
                            Some((_, ch)) => name.push(ch),
                            None => return Err(TemplateError::Unterminated(i)),
                        }
                    }
                    if !text.is_empty() {
                        pieces.push(Piece::Text(std::mem::take(&mut text)));
                    }
                    pieces.push(Piece::Slot(name.trim().to_string()));
                }
                _ => text.push(c),
            }
        }
        if !text.is_empty() {
            pieces.push(Piece::Text(text));
        }
        Ok(Self { pieces })
    }

    /// Parses a template meant for debating agents: only known placeholders,
    /// and the stance and output format must both appear.
    pub fn agent(source: &str) -> Result<Self, TemplateError> {
        let t = Self::parse(source)?;
        let used = t.placeholders();
        if let Some(bad) = used.iter().find(|p| !PLACEHOLDERS.contains(&p.as_str())) {
            return Err(TemplateError::UnknownPlaceholder(bad.clone()));
        }
        for required in ["stance", "format"] {
            if !used.contains(required) {
                return Err(TemplateError::RequiredPlaceholder(required));
            }
        }
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self, TemplateError> {
        let source = std::fs::read_to_string(path).map_err(|e| TemplateError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::agent(&source)
    }

    pub fn default_agent() -> Self {
        Self::agent(DEFAULT_TEMPLATE).expect("bundled template is valid")
    }

    pub fn placeholders(&self) -> BTreeSet<String> {
        self.pieces
            .iter()
            .filter_map(|p| match p {
                Piece::Slot(name) => Some(name.clone()),
                Piece::Text(_) => None,
            })
            .collect()
    }

    /// Substitutes every placeholder. A placeholder bound to an empty string
    /// that sits alone on its line removes the whole line.
    pub fn render(&self, bindings: &HashMap<&str, String>) -> Result<String, TemplateError> {
        let mut out = String::new();
        for piece in &self.pieces {
            match piece {
                Piece::Text(t) => out.push_str(t),
                Piece::Slot(name) => {
                    let value = bindings
                        .get(name.as_str())
                        .ok_or_else(|| TemplateError::MissingBinding(name.clone()))?;
                    if value.is_empty() {
                        out.push('\u{0}');
                    } else {
                        out.push_str(value);
                    }
                }
            }
        }
        let mut lines: Vec<&str> = Vec::new();
        for line in out.split('\n') {
            if line.trim() == "\u{0}" {
                // Drop the line and collapse the blank line it leaves behind.
                if lines.last().is_some_and(|l| l.trim().is_empty()) {
                    lines.pop();
                }
                continue;
            }
            lines.push(line);
        }
        Ok(lines.join("\n").replace('\u{0}', ""))
    }
}

/// Tone guidance for a contentiousness level, taken from the nearest of five
/// calibrated levels.
pub fn tone_directive(delta: f64) -> &'static str {
    const LEVELS: [(f64, &str); 5] = [
        (
            0.9,
            "Tone: highly confrontational. Raise strong objections to the opposing reading, \
             stress its weaknesses and risks, and use definitive language.",
        ),
        (
            0.7,
            "Tone: still confrontational but open to the other side's points. Concede what the \
             evidence clearly shows while keeping your main concerns in front.",
        ),
        (
            0.5,
            "Tone: balanced. Give equal weight to points for and against and look for middle ground.",
        ),
        (
            0.3,
            "Tone: more agreeable than confrontational. Support the points you find convincing \
             while stating the reservations you still hold.",
        ),
        (
            0.0,
            "Tone: completely agreeable and supportive. Work with the other analyst toward a \
             shared conclusion.",
        ),
    ];
    LEVELS
        .iter()
        .min_by(|a, b| (a.0 - delta).abs().total_cmp(&(b.0 - delta).abs()))
        .map(|l| l.1)
        .unwrap_or(LEVELS[2].1)
}

pub fn stance_reminder(ctx: &AgentTurnContext<'_>) -> String {
    let verb = match ctx.stance.position {
        Position::Support => "defend",
        Position::Oppose => "challenge",
    };
    let mut s = format!(
        "{STANCE_MARKER}: {verb} the label \"{}\".",
        ctx.stance.target_label
    );
    if !ctx.stance.description.trim().is_empty() {
        s.push(' ');
        s.push_str(ctx.stance.description.trim());
    }
    s.push_str(" Keep to this stance unless the other analyst's arguments genuinely persuade you.");
    s
}

pub fn format_instructions(ctx: &AgentTurnContext<'_>) -> String {
    let mut s = String::from(
        "Reply in exactly this format, with one line per label and percentages summing to 100:\nDistribution:\n",
    );
    for label in ctx.scale.labels() {
        s.push_str(&format!("{label}: <percent>%\n"));
    }
    s.push_str("Argument:\n<the reasoning behind your distribution>");
    s
}

pub fn history_digest(ctx: &AgentTurnContext<'_>) -> String {
    if ctx.history.is_empty() {
        return String::new();
    }
    let mut s = String::from("Previous rounds:\n");
    for round in ctx.history {
        let (mine, theirs, my_arg, their_arg) = match ctx.side {
            Side::A => (
                &round.dist_a,
                &round.dist_b,
                &round.argument_a,
                &round.argument_b,
            ),
            Side::B => (
                &round.dist_b,
                &round.dist_a,
                &round.argument_b,
                &round.argument_a,
            ),
        };
        s.push_str(&format!("Round {}:\n", round.index));
        s.push_str("Your distribution:\n");
        s.push_str(&format_short(mine));
        s.push_str(&format!("Your argument: {}\n", my_arg.trim()));
        s.push_str("Other analyst's distribution:\n");
        s.push_str(&format_short(theirs));
        s.push_str(&format!("Other analyst's argument: {}\n", their_arg.trim()));
    }
    s.trim_end().to_string()
}

fn format_short(d: &crate::metrics::Distribution) -> String {
    let full = format_distribution(d);
    full.lines()
        .zip(d.probs())
        .map(|(line, p)| {
            let label = line.rsplit_once(':').map_or(line, |(l, _)| l);
            format!("  {label}: {:.0}%\n", p * 100.0)
        })
        .collect()
}

pub fn render_prompt(
    ctx: &AgentTurnContext<'_>,
    template: &PromptTemplate,
) -> Result<String, TemplateError> {
    let bindings: HashMap<&str, String> = HashMap::from([
        ("subject", ctx.subject.trim().to_string()),
        ("stance", stance_reminder(ctx)),
        ("delta", format!("{:.2}", ctx.delta)),
        ("phase", ctx.phase.to_string()),
        ("tone", tone_directive(ctx.delta).to_string()),
        ("labels", ctx.scale.labels().join(", ")),
        ("history", history_digest(ctx)),
        ("format", format_instructions(ctx)),
        ("round", ctx.round_index.to_string()),
    ]);
    template.render(&bindings)
}
