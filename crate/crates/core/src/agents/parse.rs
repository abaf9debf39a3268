//! Extracting a label distribution and an argument from free-form model output.

use std::sync::{Arc, OnceLock};

use regex::Regex;
use thiserror::Error;

use crate::metrics::{Distribution, LabelScale};

/// How far a parsed total may stray from 100% before the reply is rejected.
/// Models routinely print percentages that sum to 99 or 101.
pub const PARSE_SLACK: f64 = 0.02;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("found {found} probability values, expected {expected}")]
    WrongCount { found: usize, expected: usize },
    #[error("label {0:?} has no value")]
    MissingLabel(String),
    #[error("values sum to {0:.4} after scaling, outside tolerance")]
    BadTotal(f64),
    #[error("negative or non-finite value {0}")]
    BadValue(f64),
}

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(-?\d+(?:\.\d+)?)\s*(%)?").unwrap())
}

fn header(name: &str) -> Regex {
    Regex::new(&format!(
        r"(?im)^[ \t#*>-]*{name}\**[ \t]*(?::\**|\**[ \t]*$)"
    ))
    .unwrap()
}

fn distribution_header() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| header("distribution"))
}

fn argument_header() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| header("argument"))
}

#[derive(Debug, Clone, Copy)]
struct Value {
    number: f64,
    percent: bool,
}

/// Parses one value per scale label, first by label name, then by position.
pub fn parse_distribution(raw: &str, scale: &Arc<LabelScale>) -> Result<Distribution, ParseError> {
    let section = distribution_section(raw);
    let values = match labeled_values(section, scale) {
        Ok(v) => v,
        Err(labeled_err) => positional_values(section, scale.len()).map_err(|e| match e {
            ParseError::WrongCount { found: 0, .. } => labeled_err,
            other => other,
        })?,
    };
    to_distribution(&values, scale)
}

/// The text between a "Distribution" header and an "Argument" header, or the
/// whole reply when there is no distribution header.
fn distribution_section(raw: &str) -> &str {
    let start = distribution_header().find(raw).map_or(0, |m| m.end());
    let rest = &raw[start..];
    match argument_header().find(rest) {
        Some(m) if start > 0 || m.start() > 0 => &rest[..m.start()],
        _ => rest,
    }
}

/// Finds the longest label spelling occurring as a whole word in `segment`.
/// Returns the label index and the byte range of the match.
fn match_label(segment: &str, scale: &LabelScale) -> Option<(usize, usize, usize)> {
    let lower = segment.to_lowercase();
    let mut best: Option<(usize, usize, usize)> = None;
    for i in 0..scale.len() {
        for name in scale.names_for(i) {
            let needle = name.to_lowercase();
            let mut from = 0;
            while let Some(pos) = lower[from..].find(&needle) {
                let start = from + pos;
                let end = start + needle.len();
                let before_ok = lower[..start]
                    .chars()
                    .next_back()
                    .is_none_or(|c| !c.is_alphanumeric());
                let after_ok = lower[end..]
                    .chars()
                    .next()
                    .is_none_or(|c| !c.is_alphanumeric());
                if before_ok && after_ok && best.is_none_or(|(_, s, e)| end - start > e - s) {
                    best = Some((i, start, end));
                }
                from = start + 1;
                while !lower.is_char_boundary(from) {
                    from += 1;
                }
            }
        }
    }
    best
}

fn labeled_values(section: &str, scale: &LabelScale) -> Result<Vec<Value>, ParseError> {
    let mut found: Vec<Option<Value>> = vec![None; scale.len()];
    for segment in section.split(['\n', ',', ';', '|']) {
        let Some((label, start, end)) = match_label(segment, scale) else {
            continue;
        };
        let lower = segment.to_lowercase();
        // Prefer a number after the label; fall back to one before it.
        let after = number_re().captures(&lower[end..]);
        let caps = after.or_else(|| number_re().captures(&lower[..start]));
        let Some(caps) = caps else { continue };
        let number: f64 = caps[1]
            .parse()
            .map_err(|_| ParseError::BadValue(f64::NAN))?;
        let value = Value {
            number,
            percent: caps.get(2).is_some(),
        };
        if found[label].is_none() {
            found[label] = Some(value);
        }
    }
    found
        .iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| ParseError::MissingLabel(scale.labels()[i].clone())))
        .collect()
}

fn positional_values(section: &str, n: usize) -> Result<Vec<Value>, ParseError> {
    let all: Vec<Value> = number_re()
        .captures_iter(section)
        .map(|c| Value {
            number: c[1].parse().unwrap_or(f64::NAN),
            percent: c.get(2).is_some(),
        })
        .collect();
    if all.len() == n {
        return Ok(all);
    }
    let percents: Vec<Value> = all.iter().copied().filter(|v| v.percent).collect();
    if percents.len() == n {
        return Ok(percents);
    }
    Err(ParseError::WrongCount {
        found: all.len(),
        expected: n,
    })
}

fn to_distribution(values: &[Value], scale: &Arc<LabelScale>) -> Result<Distribution, ParseError> {
    if let Some(v) = values
        .iter()
        .find(|v| !v.number.is_finite() || v.number < 0.0)
    {
        return Err(ParseError::BadValue(v.number));
    }
    let raw_total: f64 = values.iter().map(|v| v.number).sum();
    let as_percent = values.iter().any(|v| v.percent) || raw_total > 1.0 + PARSE_SLACK;
    let probs: Vec<f64> = values
        .iter()
        .map(|v| {
            if as_percent {
                v.number / 100.0
            } else {
                v.number
            }
        })
        .collect();
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PARSE_SLACK {
        return Err(ParseError::BadTotal(total));
    }
    Distribution::normalized(scale.clone(), probs).map_err(|_| ParseError::BadTotal(total))
}

/// Renders a distribution as one `label: pct%` line per label.
pub fn format_distribution(dist: &Distribution) -> String {
    dist.scale()
        .labels()
        .iter()
        .zip(dist.probs())
        .map(|(label, p)| format!("{label}: {:.9}%\n", p * 100.0))
        .collect()
}

/// The reply's argument: everything after an "Argument" header, or the whole
/// reply when no header is present.
pub fn extract_argument(raw: &str) -> String {
    match argument_header().find(raw) {
        Some(m) => raw[m.end()..].trim().to_string(),
        None => raw.trim().to_string(),
    }
}
