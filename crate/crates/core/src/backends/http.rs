//! HTTP transport: `POST {endpoint}/v1/summarize`.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{BackendDescriptor, BackendError, SummarizeRequest, SummarizeResponse, Summarizer};

pub(crate) fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(Duration::from_secs(600)))
        .build()
        .into()
}

pub(crate) fn join_url(base: &str, path: &str) -> String {
    format!("{}{}", base.trim_end_matches('/'), path)
}

/// POSTs `body` as JSON; non-200 statuses become [`BackendError::Server`]
/// carrying the `{"error": ...}` message when present.
pub(crate) fn post_json<B: Serialize, T: DeserializeOwned>(
    agent: &ureq::Agent,
    url: &str,
    body: &B,
) -> Result<T, BackendError> {
    let transport = |message: String| BackendError::Transport {
        backend: url.to_string(),
        message,
    };
    let mut resp = agent
        .post(url)
        .send_json(body)
        .map_err(|e| transport(e.to_string()))?;
    let status = resp.status().as_u16();
    let value: Value = resp.body_mut().read_json().map_err(|e| {
        if status == 200 {
            BackendError::Protocol(format!("invalid JSON body: {e}"))
        } else {
            BackendError::Server {
                status,
                message: format!("unreadable error body: {e}"),
            }
        }
    })?;
    if status != 200 {
        let message = value
            .get("error")
            .and_then(Value::as_str)
            .unwrap_or("no error message")
            .to_string();
        return Err(BackendError::Server { status, message });
    }
    serde_json::from_value(value)
        .map_err(|e| BackendError::Protocol(format!("unexpected body: {e}")))
}

#[derive(Serialize)]
struct SummarizeBody<'a> {
    requests: &'a [SummarizeRequest],
}

#[derive(Deserialize)]
struct SummarizeReply {
    responses: Vec<SummarizeResponse>,
}

pub struct HttpSummarizer {
    descriptor: BackendDescriptor,
    agent: ureq::Agent,
}

impl HttpSummarizer {
    pub fn new(descriptor: BackendDescriptor) -> Self {
        Self {
            descriptor,
            agent: agent(),
        }
    }
}

impl Summarizer for HttpSummarizer {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    fn call(&self, requests: &[SummarizeRequest]) -> Result<Vec<SummarizeResponse>, BackendError> {
        let url = join_url(&self.descriptor.endpoint, "/v1/summarize");
        let reply: SummarizeReply = post_json(&self.agent, &url, &SummarizeBody { requests })?;
        Ok(reply.responses)
    }
}
