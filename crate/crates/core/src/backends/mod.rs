//! Summarizer, embedding and tokenizer protocols.
//!
//! A summarizer backend is anything that turns a batch of
//! [`SummarizeRequest`]s into [`SummarizeResponse`]s. Three transports are
//! provided: deterministic in-process mocks, a subprocess speaking JSON lines
//! over stdin/stdout, and an HTTP service (`POST /v1/summarize`).

pub mod conformance;
mod embed;
mod http;
mod mock;
mod subprocess;
mod tokenizer;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use embed::{cosine_similarity, EmbeddingProvider, HashingEmbedder, HttpEmbedder};
pub use http::HttpSummarizer;
pub(crate) use http::{agent as http_agent, post_json};
pub use mock::{MockKind, MockSummarizer};
pub use subprocess::SubprocessSummarizer;
pub use tokenizer::{truncate_to_limit, Tokenizer, WordRatioTokenizer};

use crate::metrics::Lexicon;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("transport failure talking to {backend}: {message}")]
    Transport { backend: String, message: String },
    #[error("backend returned status {status}: {message}")]
    Server { status: u16, message: String },
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("duplicate request id {0:?} in batch")]
    DuplicateRequestId(String),
    #[error("backend configuration: {0}")]
    Config(String),
}

impl BackendError {
    /// Transport failures and 5xx responses may succeed on retry.
    pub fn is_retriable(&self) -> bool {
        match self {
            BackendError::Transport { .. } => true,
            BackendError::Server { status, .. } => *status >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummarizeRequest {
    pub id: String,
    pub input: String,
    pub max_new_tokens: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix: Option<String>,
}

impl SummarizeRequest {
    pub fn new(id: impl Into<String>, input: impl Into<String>, max_new_tokens: usize) -> Self {
        Self {
            id: id.into(),
            input: input.into(),
            max_new_tokens,
            prefix: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummarizeResponse {
    pub id: String,
    pub summary: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Subprocess,
    Http,
    BuiltinMock,
}

fn default_token_limit() -> usize {
    1024
}

fn default_concurrency() -> usize {
    1
}

/// How to reach a summarizer. `endpoint` is a command line for subprocess
/// backends, a base URL for HTTP backends and a mock spec (see
/// [`MockKind::parse`]) for builtin mocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendDescriptor {
    pub kind: BackendKind,
    pub endpoint: String,
    #[serde(default = "default_token_limit")]
    pub token_limit: usize,
    #[serde(default = "default_concurrency")]
    pub max_concurrency: usize,
}

impl BackendDescriptor {
    pub fn mock(spec: &str) -> Self {
        Self {
            kind: BackendKind::BuiltinMock,
            endpoint: spec.to_string(),
            token_limit: default_token_limit(),
            max_concurrency: default_concurrency(),
        }
    }

    /// Parses the short form used on the command line: `mock:<spec>`,
    /// `http://...`/`https://...` or `cmd:<command line>`.
    pub fn parse_short(s: &str) -> Result<Self, BackendError> {
        let (kind, endpoint) = if let Some(spec) = s.strip_prefix("mock:") {
            (BackendKind::BuiltinMock, spec)
        } else if let Some(cmd) = s.strip_prefix("cmd:") {
            (BackendKind::Subprocess, cmd)
        } else if s.starts_with("http://") || s.starts_with("https://") {
            (BackendKind::Http, s)
        } else {
            return Err(BackendError::Config(format!(
                "cannot parse backend {s:?}; use mock:<spec>, cmd:<command> or an http(s) URL"
            )));
        };
        Ok(Self {
            kind,
            endpoint: endpoint.to_string(),
            token_limit: default_token_limit(),
            max_concurrency: default_concurrency(),
        })
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.token_limit == 0 {
            return Err(BackendError::Config("token_limit must be >= 1".into()));
        }
        if self.max_concurrency == 0 {
            return Err(BackendError::Config("max_concurrency must be >= 1".into()));
        }
        if self.endpoint.trim().is_empty() {
            return Err(BackendError::Config("endpoint is empty".into()));
        }
        Ok(())
    }
}

/// A summarizer transport. `call` may return responses in any order;
/// callers go through [`summarize_batch`], which validates and reorders.
pub trait Summarizer: Send + Sync {
    fn descriptor(&self) -> &BackendDescriptor;

    fn call(&self, requests: &[SummarizeRequest]) -> Result<Vec<SummarizeResponse>, BackendError>;
}

/// Sends `requests` over up to `max_concurrency` concurrent calls and
/// returns exactly one response per request, in request order.
pub fn summarize_batch(
    backend: &dyn Summarizer,
    requests: &[SummarizeRequest],
) -> Result<Vec<SummarizeResponse>, BackendError> {
    if requests.is_empty() {
        return Ok(Vec::new());
    }
    let mut seen = HashSet::with_capacity(requests.len());
    for req in requests {
        if !seen.insert(req.id.as_str()) {
            return Err(BackendError::DuplicateRequestId(req.id.clone()));
        }
    }

    let workers = backend
        .descriptor()
        .max_concurrency
        .clamp(1, requests.len());
    let per_call = requests.len().div_ceil(workers);
    let responses: Vec<SummarizeResponse> = if workers == 1 {
        backend.call(requests)?
    } else {
        let results: Vec<Result<Vec<SummarizeResponse>, BackendError>> =
            std::thread::scope(|scope| {
                let handles: Vec<_> = requests
                    .chunks(per_call)
                    .map(|group| scope.spawn(move || backend.call(group)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("backend worker panicked"))
                    .collect()
            });
        let mut all = Vec::with_capacity(requests.len());
        for r in results {
            all.extend(r?);
        }
        all
    };

    let mut by_id: HashMap<String, SummarizeResponse> = HashMap::with_capacity(responses.len());
    for resp in responses {
        if !seen.contains(resp.id.as_str()) {
            return Err(BackendError::Protocol(format!(
                "response for unknown id {:?}",
                resp.id
            )));
        }
        if by_id.contains_key(&resp.id) {
            return Err(BackendError::Protocol(format!(
                "duplicate response for id {:?}",
                resp.id
            )));
        }
        by_id.insert(resp.id.clone(), resp);
    }
    requests
        .iter()
        .map(|req| {
            by_id.remove(&req.id).ok_or_else(|| {
                BackendError::Protocol(format!("missing response for id {:?}", req.id))
            })
        })
        .collect()
}

/// Instantiates the transport described by `desc`. The keyword mock needs a
/// lexicon.
pub fn open_summarizer(
    desc: &BackendDescriptor,
    lexicon: Option<&Lexicon>,
) -> Result<Box<dyn Summarizer>, BackendError> {
    desc.validate()?;
    Ok(match desc.kind {
        BackendKind::BuiltinMock => {
            let kind = MockKind::parse(&desc.endpoint)?;
            Box::new(MockSummarizer::new(desc.clone(), kind, lexicon.cloned())?)
        }
        BackendKind::Subprocess => Box::new(SubprocessSummarizer::new(desc.clone())?),
        BackendKind::Http => Box::new(HttpSummarizer::new(desc.clone())),
    })
}
