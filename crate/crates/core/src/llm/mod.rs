//! LLM-in-the-loop assignment: prompt, query, parse, validate, and fall back
//! to a classical solver when the model does not produce a usable answer.

mod backend;
mod parse;
mod prompt;
mod replay;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::CostMatrix;
use crate::geometry::SceneSnapshot;
use crate::num::Real;
use crate::solvers::{solve_hungarian, solve_milp, Assignment, MilpConstraints, SolverError};

pub use backend::{
    message_text, request_body, Backend, BackendConfig, BackendError, FallbackSolver, HttpBackend, MockMode,
    QueryRequest, Reply, MALFORMED_REPLY, MOCK_SCHEME,
};
pub use parse::{extract_vector, parse_response, ParseFailure, ParseOptions, ParsedVector};
pub use prompt::{
    format_prompt, format_prompt_with, render_assignment, render_matrix, render_number, render_vector, PromptDocument,
    PromptPrecision,
};
pub use replay::{read_replay, reparse, write_replay, ReplayRecord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("fallback solver failed: {0}")]
    Fallback(#[from] SolverError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeSource {
    Llm,
    Fallback,
}

/// What happened on one query attempt.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub attempt: usize,
    /// Raw reply, absent when the query itself failed.
    pub response: Option<String>,
    /// Reason the attempt was rejected.
    pub failure: Option<String>,
    /// Zero-based positions clipped into range.
    pub clipped: Vec<usize>,
    pub latency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct AssignerOutcome<T = f64> {
    pub assignment: Assignment<T>,
    pub source: OutcomeSource,
    pub attempts: usize,
    /// Summed over attempts, seconds.
    pub latency: f64,
    /// Last reply received, empty if none arrived.
    pub raw_response: String,
    pub prompt: PromptDocument,
    pub records: Vec<AttemptRecord>,
}

/// Checks a one-based target vector against the assignment rules.
///
/// Every interceptor needs a target in range; coverage is checked only when
/// requested and `N >= N_T`. Returns the assignment with its objective under
/// `costs`, or the list of violations.
pub fn validate_assignment<T: Real>(
    ids: &[usize],
    costs: &CostMatrix<T>,
    coverage: bool,
) -> Result<Assignment<T>, Vec<String>> {
    let (rows, cols) = costs.shape();
    let mut violations = Vec::new();
    if ids.len() != rows {
        violations.push(format!("{} entries for {rows} interceptors", ids.len()));
        return Err(violations);
    }
    for (i, &k) in ids.iter().enumerate() {
        if k == 0 || k > cols {
            violations.push(format!("interceptor {} assigned to invalid target {k}", i + 1));
        }
    }
    if coverage && rows >= cols {
        for k in 1..=cols {
            if !ids.contains(&k) {
                violations.push(format!("target {k} uncovered"));
            }
        }
    }
    if violations.is_empty() {
        Ok(Assignment::new(&costs.values, ids.iter().map(|k| k - 1).collect()))
    } else {
        Err(violations)
    }
}

fn fallback_solve<T: Real>(
    costs: &CostMatrix<T>,
    coverage: bool,
    solver: FallbackSolver,
) -> Result<Assignment<T>, SolverError> {
    let (rows, cols) = costs.shape();
    match solver {
        FallbackSolver::Hungarian => solve_hungarian(costs),
        FallbackSolver::Milp => solve_milp(costs, &MilpConstraints::for_mission(coverage, rows, cols)),
    }
}

/// One decision epoch of the LLM assigner.
///
/// Sends the same prompt up to `max_retries + 1` times. Transport errors,
/// timeouts, parse failures and rule violations all count as failed attempts;
/// once they are exhausted the configured classical solver decides over
/// `costs`, so the result is always feasible.
pub fn assign_with_fallback<T: Real>(
    snapshot: &SceneSnapshot<T>,
    costs: &CostMatrix<T>,
    coverage: bool,
    cfg: &BackendConfig,
    backend: &Backend,
) -> Result<AssignerOutcome<T>, LlmError> {
    let prompt = format_prompt(snapshot, coverage);
    let opts = ParseOptions {
        strict: cfg.strict_parse,
    };
    let mut records = Vec::new();
    let mut latency = 0.0;
    let mut raw_response = String::new();
    for attempt in 1..=cfg.max_retries + 1 {
        let req = QueryRequest {
            prompt: &prompt,
            snapshot,
            costs,
            attempt,
        };
        let mut rec = AttemptRecord {
            attempt,
            response: None,
            failure: None,
            clipped: Vec::new(),
            latency: 0.0,
        };
        match backend.query(&req) {
            Err(e) => rec.failure = Some(e.to_string()),
            Ok(reply) => {
                rec.latency = reply.latency;
                latency += reply.latency;
                raw_response = reply.text.clone();
                rec.response = Some(reply.text);
                let parsed = parse_response(&raw_response, snapshot.n_interceptors(), snapshot.n_targets(), opts);
                match parsed {
                    Err(e) => rec.failure = Some(e.to_string()),
                    Ok(p) => {
                        rec.clipped = p.clipped;
                        match validate_assignment(&p.ids, costs, coverage) {
                            Err(v) => rec.failure = Some(v.join("; ")),
                            Ok(assignment) => {
                                records.push(rec);
                                return Ok(AssignerOutcome {
                                    assignment,
                                    source: OutcomeSource::Llm,
                                    attempts: attempt,
                                    latency,
                                    raw_response,
                                    prompt,
                                    records,
                                });
                            }
                        }
                    }
                }
            }
        }
        records.push(rec);
    }
    let assignment = fallback_solve(costs, coverage, cfg.fallback_solver)?;
    Ok(AssignerOutcome {
        assignment,
        source: OutcomeSource::Fallback,
        attempts: cfg.max_retries + 1,
        latency,
        raw_response,
        prompt,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{surrogate_cost_matrix, CostOptions};
    use crate::geometry::{build_snapshot, initial_agents};
    use crate::scenario::Scenario;

    fn scene() -> (SceneSnapshot<f64>, CostMatrix<f64>) {
        let s = Scenario::<f64>::baseline();
        let (m, t) = initial_agents(&s);
        let snap = build_snapshot(&s, &m, &t, 1, 2.0, &[None; 10]).unwrap();
        let cm = surrogate_cost_matrix(&snap, &s.cost_weights, CostOptions::default());
        (snap, cm)
    }

    fn run(mode: MockMode) -> AssignerOutcome<f64> {
        let (snap, cm) = scene();
        let cfg = BackendConfig {
            timeout: 0.01,
            ..BackendConfig::mock(mode)
        };
        let backend = Backend::from_config(&cfg).unwrap();
        assign_with_fallback(&snap, &cm, true, &cfg, &backend).unwrap()
    }

    #[test]
    fn echo_hungarian_is_accepted_first_time() {
        let (_, cm) = scene();
        let out = run(MockMode::EchoHungarian);
        assert_eq!(out.source, OutcomeSource::Llm);
        assert_eq!(out.attempts, 1);
        assert_eq!(out.assignment, solve_hungarian(&cm).unwrap());
        assert_eq!(out.latency, 0.0);
    }

    #[test]
    fn malformed_falls_back_after_all_attempts() {
        let (_, cm) = scene();
        let out = run(MockMode::Malformed);
        assert_eq!(out.source, OutcomeSource::Fallback);
        assert_eq!(out.attempts, 3);
        assert_eq!(out.records.len(), 3);
        assert_eq!(out.assignment, solve_hungarian(&cm).unwrap());
        assert_eq!(out.raw_response, MALFORMED_REPLY);
    }

    #[test]
    fn single_retry_path() {
        let out = run(MockMode::MalformedOnceThenValid);
        assert_eq!(out.source, OutcomeSource::Llm);
        assert_eq!(out.attempts, 2);
        assert!(out.records[0].failure.is_some());
    }

    #[test]
    fn timeouts_are_retried_then_fall_back() {
        let out = run(MockMode::Timeout);
        assert_eq!(out.source, OutcomeSource::Fallback);
        assert!(out.records.iter().all(|r| r.failure.as_deref().unwrap().contains("timed out")));
    }

    #[test]
    fn clipped_duplicate_breaks_coverage() {
        let (_, cm) = scene();
        let first = solve_hungarian(&cm).unwrap().ids()[0];
        let out = run(MockMode::OutOfRange);
        assert_eq!(out.records[0].clipped, vec![0]);
        if first == 10 {
            // clipping lands on the solver's own choice
            assert_eq!(out.source, OutcomeSource::Llm);
        } else {
            assert_eq!(out.source, OutcomeSource::Fallback);
            assert!(out.records[0].failure.as_deref().unwrap().contains("uncovered"));
        }
    }

    #[test]
    fn milp_fallback() {
        let (snap, cm) = scene();
        let cfg = BackendConfig {
            fallback_solver: FallbackSolver::Milp,
            max_retries: 0,
            ..BackendConfig::mock(MockMode::Malformed)
        };
        let out = assign_with_fallback(&snap, &cm, true, &cfg, &Backend::from_config(&cfg).unwrap()).unwrap();
        assert_eq!(out.attempts, 1);
        assert_eq!(out.assignment.target_of, solve_hungarian(&cm).unwrap().target_of);
    }

    #[test]
    fn scripted_replies_follow_attempts() {
        let (snap, cm) = scene();
        let cfg = BackendConfig::mock(MockMode::Malformed);
        let ids = solve_hungarian(&cm).unwrap().ids();
        let backend = Backend::Scripted(vec!["[1 1]".into(), "[]".into(), render_assignment(&ids)]);
        let out = assign_with_fallback(&snap, &cm, true, &cfg, &backend).unwrap();
        assert_eq!(out.source, OutcomeSource::Llm);
        assert_eq!(out.attempts, 3);
        assert!(out.records[0].failure.as_deref().unwrap().contains("expected 10 entries"));
        assert!(out.records[1].failure.as_deref().unwrap().contains("empty"));
    }

    #[test]
    fn validation_rules() {
        let cm = CostMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(validate_assignment(&[2, 1], &cm, true).unwrap().objective, 5.0);
        assert_eq!(validate_assignment(&[1, 1], &cm, true), Err(vec!["target 2 uncovered".to_string()]));
        assert!(validate_assignment(&[1, 1], &cm, false).is_ok());
        assert!(validate_assignment(&[1, 3], &cm, false).is_err());
        assert!(validate_assignment(&[1], &cm, false).is_err());
        // fewer interceptors than targets: coverage cannot apply
        let wide = CostMatrix::from_rows(&[vec![1.0, 2.0, 3.0]]);
        assert!(validate_assignment(&[3], &wide, true).is_ok());
    }
}
