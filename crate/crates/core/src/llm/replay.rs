//! JSON-lines log of every prompt and reply, one record per epoch.

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::parse::{parse_response, ParseFailure, ParseOptions, ParsedVector};
use super::OutcomeSource;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub h: usize,
    pub t: f64,
    pub n_agents: usize,
    pub n_targets: usize,
    pub prompt: String,
    /// Replies in attempt order; failed queries are omitted.
    pub responses: Vec<String>,
    pub source: OutcomeSource,
    pub latency: f64,
    /// One-based target ids applied for the epoch.
    pub assignment: Vec<usize>,
}

pub fn write_replay(path: &Path, records: &[ReplayRecord]) -> io::Result<()> {
    let mut out = io::BufWriter::new(fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_replay(path: &Path) -> io::Result<Vec<ReplayRecord>> {
    let file = io::BufReader::new(fs::File::open(path)?);
    let mut records = Vec::new();
    for (n, line) in file.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", n + 1)))?;
        records.push(rec);
    }
    Ok(records)
}

/// Parses every logged reply again.
pub fn reparse(record: &ReplayRecord, opts: ParseOptions) -> Vec<Result<ParsedVector, ParseFailure>> {
    record
        .responses
        .iter()
        .map(|r| parse_response(r, record.n_agents, record.n_targets, opts))
        .collect()
}
