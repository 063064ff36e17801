//! Extraction of the bracketed assignment vector from a model reply.

use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseFailure {
    #[error("no bracketed integer vector in response")]
    NoVector,
    #[error("bracketed vector is empty")]
    EmptyVector,
    #[error("expected {expected} entries, got {got}")]
    WrongArity { expected: usize, got: usize },
    #[error("entry {position} = {value} outside 1..={n_targets}")]
    OutOfRange { position: usize, value: i64, n_targets: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseOptions {
    /// Reject out-of-range entries instead of clipping them.
    pub strict: bool,
}

/// One-based target ids, one per interceptor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedVector {
    pub ids: Vec<usize>,
    /// Zero-based positions whose value was clipped into range.
    pub clipped: Vec<usize>,
    /// Zero-based line the vector came from.
    pub line: usize,
}

fn bracket_group() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\[([^\[\]]*)\]").expect("valid regex"))
}

fn int_list() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*-?\d+(?:[ ,]+-?\d+)*\s*$").expect("valid regex"))
}

fn stray() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[^0-9 ,\-]").expect("valid regex"))
}

fn parse_int(tok: &str) -> i64 {
    tok.parse().unwrap_or(if tok.starts_with('-') { i64::MIN } else { i64::MAX })
}

/// First bracketed integer vector on the earliest line that has one.
///
/// Characters other than digits, spaces, commas and minus signs are dropped
/// from the bracket contents before matching, so `[2, 1, 3]`, `[2 1 3]` and
/// `["2","1","3"]` all read as `2 1 3`.
pub fn extract_vector(raw: &str) -> Result<(Vec<i64>, usize), ParseFailure> {
    let mut saw_empty = false;
    for (line_no, line) in raw.lines().enumerate() {
        for cap in bracket_group().captures_iter(line) {
            let body = stray().replace_all(&cap[1], "");
            if body.trim().is_empty() {
                saw_empty = true;
                continue;
            }
            if int_list().is_match(&body) {
                let values = body
                    .split(|c| c == ' ' || c == ',')
                    .filter(|t| !t.is_empty())
                    .map(parse_int)
                    .collect();
                return Ok((values, line_no));
            }
        }
    }
    Err(if saw_empty {
        ParseFailure::EmptyVector
    } else {
        ParseFailure::NoVector
    })
}

/// Parses a reply into `n_agents` target ids in `1..=n_targets`.
pub fn parse_response(
    raw: &str,
    n_agents: usize,
    n_targets: usize,
    opts: ParseOptions,
) -> Result<ParsedVector, ParseFailure> {
    let (values, line) = extract_vector(raw)?;
    if values.len() != n_agents {
        return Err(ParseFailure::WrongArity {
            expected: n_agents,
            got: values.len(),
        });
    }
    let hi = n_targets.max(1) as i64;
    let mut clipped = Vec::new();
    let mut ids = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        if (1..=hi).contains(&v) {
            ids.push(v as usize);
            continue;
        }
        if opts.strict {
            return Err(ParseFailure::OutOfRange {
                position: i,
                value: v,
                n_targets,
            });
        }
        clipped.push(i);
        ids.push(v.clamp(1, hi) as usize);
    }
    Ok(ParsedVector { ids, clipped, line })
}
