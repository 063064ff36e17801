//! Chat-completion backends: a live HTTP client and an offline mock.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use super::prompt::{render_assignment, PromptDocument};
use crate::cost::CostMatrix;
use crate::geometry::SceneSnapshot;
use crate::num::Real;
use crate::solvers::solve_hungarian;

pub const MOCK_SCHEME: &str = "mock://";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("request timed out after {0} s")]
    Timeout(f64),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("backend returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected response body: {0}")]
    BadBody(String),
    #[error("environment variable {0} is not set")]
    MissingKey(String),
    #[error("unknown mock mode {0:?}")]
    UnknownMock(String),
    #[error("invalid backend configuration: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FallbackSolver {
    #[default]
    Hungarian,
    Milp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    /// Chat-completion URL, or `mock://<mode>`.
    pub endpoint_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env_var: String,
    /// Seconds.
    pub timeout: f64,
    pub temperature: f64,
    /// Re-queries after the first attempt.
    pub max_retries: usize,
    pub fallback_solver: FallbackSolver,
    /// Reject out-of-range indices instead of clipping.
    pub strict_parse: bool,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            endpoint_url: "https://api.openai.com/v1/chat/completions".into(),
            model_name: "gpt-4o-mini".into(),
            api_key_env_var: "OPENAI_API_KEY".into(),
            timeout: 30.0,
            temperature: 0.0,
            max_retries: 2,
            fallback_solver: FallbackSolver::Hungarian,
            strict_parse: false,
        }
    }
}

impl BackendConfig {
    pub fn mock(mode: MockMode) -> Self {
        Self {
            endpoint_url: format!("{MOCK_SCHEME}{mode}"),
            ..Self::default()
        }
    }

    pub fn mock_mode(&self) -> Option<Result<MockMode, BackendError>> {
        self.endpoint_url.strip_prefix(MOCK_SCHEME).map(str::parse)
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if !(self.timeout > 0.0 && self.timeout.is_finite()) {
            return Err(BackendError::Config(format!("timeout must be > 0, got {}", self.timeout)));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(BackendError::Config(format!("temperature must be ≥ 0, got {}", self.temperature)));
        }
        match self.mock_mode() {
            Some(mode) => mode.map(|_| ()),
            None if self.endpoint_url.starts_with("http://") || self.endpoint_url.starts_with("https://") => Ok(()),
            None => Err(BackendError::Config(format!(
                "endpoint {:?} is neither http(s):// nor {MOCK_SCHEME}<mode>",
                self.endpoint_url
            ))),
        }
    }
}

/// Scripted replies for offline runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockMode {
    /// The Hungarian solution of the cost matrix.
    EchoHungarian,
    /// The previous assignment, with gaps filled from the Hungarian solution.
    EchoPrevious,
    /// Prose without a vector.
    Malformed,
    /// Malformed on the first attempt of each epoch, then `EchoHungarian`.
    MalformedOnceThenValid,
    /// The Hungarian solution with its first entry pushed past `N_t`.
    OutOfRange,
    /// Sleeps for the configured timeout and fails.
    Timeout,
}

impl MockMode {
    pub const ALL: [MockMode; 6] = [
        MockMode::EchoHungarian,
        MockMode::EchoPrevious,
        MockMode::Malformed,
        MockMode::MalformedOnceThenValid,
        MockMode::OutOfRange,
        MockMode::Timeout,
    ];

    fn name(self) -> &'static str {
        match self {
            MockMode::EchoHungarian => "echo_hungarian",
            MockMode::EchoPrevious => "echo_previous",
            MockMode::Malformed => "malformed",
            MockMode::MalformedOnceThenValid => "malformed_once_then_valid",
            MockMode::OutOfRange => "out_of_range",
            MockMode::Timeout => "timeout",
        }
    }
}

impl fmt::Display for MockMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MockMode {
    type Err = BackendError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| BackendError::UnknownMock(s.to_string()))
    }
}

pub const MALFORMED_REPLY: &str = "I think agent 1 should intercept the closest target first, then the others.";

/// Everything a backend may look at for one attempt.
pub struct QueryRequest<'a, T> {
    pub prompt: &'a PromptDocument,
    pub snapshot: &'a SceneSnapshot<T>,
    pub costs: &'a CostMatrix<T>,
    /// One-based attempt number within the epoch.
    pub attempt: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reply {
    pub text: String,
    /// Wall-clock seconds; zero for the mock.
    pub latency: f64,
}

pub enum Backend {
    Mock { mode: MockMode, timeout: f64 },
    /// Fixed replies by attempt number; the last one repeats.
    Scripted(Vec<String>),
    Http(HttpBackend),
}

impl Backend {
    /// Resolves the configured endpoint; the live backend also needs its key.
    pub fn from_config(cfg: &BackendConfig) -> Result<Self, BackendError> {
        cfg.validate()?;
        if let Some(mode) = cfg.mock_mode() {
            return Ok(Backend::Mock {
                mode: mode?,
                timeout: cfg.timeout,
            });
        }
        Ok(Backend::Http(HttpBackend::new(cfg)?))
    }

    pub fn query<T: Real>(&self, req: &QueryRequest<'_, T>) -> Result<Reply, BackendError> {
        match self {
            Backend::Mock { mode, timeout } => mock_reply(*mode, *timeout, req),
            Backend::Scripted(replies) => replies
                .get(req.attempt - 1)
                .or(replies.last())
                .map(|t| Reply {
                    text: t.clone(),
                    latency: 0.0,
                })
                .ok_or_else(|| BackendError::Transport("no scripted reply".into())),
            Backend::Http(h) => h.query(req.prompt),
        }
    }
}

fn hungarian_ids<T: Real>(costs: &CostMatrix<T>) -> Result<Vec<usize>, BackendError> {
    solve_hungarian(costs)
        .map(|a| a.ids())
        .map_err(|e| BackendError::Transport(format!("mock solver failed: {e}")))
}

fn mock_reply<T: Real>(mode: MockMode, timeout: f64, req: &QueryRequest<'_, T>) -> Result<Reply, BackendError> {
    let text = match mode {
        MockMode::EchoHungarian => render_assignment(&hungarian_ids(req.costs)?),
        MockMode::EchoPrevious => {
            let fill = hungarian_ids(req.costs)?;
            let ids: Vec<usize> = req
                .snapshot
                .previous_assignment
                .iter()
                .zip(fill)
                .map(|(p, f)| p.map_or(f, |k| k + 1))
                .collect();
            render_assignment(&ids)
        }
        MockMode::Malformed => MALFORMED_REPLY.to_string(),
        MockMode::MalformedOnceThenValid if req.attempt == 1 => MALFORMED_REPLY.to_string(),
        MockMode::MalformedOnceThenValid => render_assignment(&hungarian_ids(req.costs)?),
        MockMode::OutOfRange => {
            let mut ids = hungarian_ids(req.costs)?;
            if let Some(first) = ids.first_mut() {
                *first = req.snapshot.n_targets() + 5;
            }
            format!("{}\nEntry 1 deliberately exceeds the target count.", render_assignment(&ids))
        }
        MockMode::Timeout => {
            std::thread::sleep(Duration::from_secs_f64(timeout));
            return Err(BackendError::Timeout(timeout));
        }
    };
    Ok(Reply { text, latency: 0.0 })
}

/// Chat-completion client over blocking HTTP.
pub struct HttpBackend {
    client: reqwest::blocking::Client,
    url: String,
    model: String,
    temperature: f64,
    timeout: f64,
    api_key: String,
}

impl HttpBackend {
    pub fn new(cfg: &BackendConfig) -> Result<Self, BackendError> {
        let api_key = std::env::var(&cfg.api_key_env_var)
            .map_err(|_| BackendError::MissingKey(cfg.api_key_env_var.clone()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(cfg.timeout))
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(Self {
            client,
            url: cfg.endpoint_url.clone(),
            model: cfg.model_name.clone(),
            temperature: cfg.temperature,
            timeout: cfg.timeout,
            api_key,
        })
    }

    pub fn query(&self, prompt: &PromptDocument) -> Result<Reply, BackendError> {
        let body = request_body(&self.model, self.temperature, prompt);
        let start = Instant::now();
        let resp = self
            .client
            .post(&self.url)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    BackendError::Timeout(self.timeout)
                } else {
                    BackendError::Transport(e.to_string())
                }
            })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| BackendError::Transport(e.to_string()))?;
        let latency = start.elapsed().as_secs_f64();
        if !status.is_success() {
            return Err(BackendError::Status {
                status: status.as_u16(),
                body: text.chars().take(200).collect(),
            });
        }
        Ok(Reply {
            text: message_text(&text)?,
            latency,
        })
    }
}

/// JSON body of a single-turn chat-completion request.
pub fn request_body(model: &str, temperature: f64, prompt: &PromptDocument) -> serde_json::Value {
    json!({
        "model": model,
        "temperature": temperature,
        "messages": [{ "role": "user", "content": prompt.text() }],
    })
}

/// First choice's message content.
pub fn message_text(body: &str) -> Result<String, BackendError> {
    let v: serde_json::Value = serde_json::from_str(body).map_err(|e| BackendError::BadBody(e.to_string()))?;
    v.pointer("/choices/0/message/content")
        .and_then(|c| c.as_str())
        .map(str::to_string)
        .ok_or_else(|| BackendError::BadBody("missing choices[0].message.content".into()))
}
