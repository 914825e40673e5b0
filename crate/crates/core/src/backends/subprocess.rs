//! JSON-lines summarizer over a child process: one request object per stdin
//! line, one response object per stdout line, EOF on stdin ends the session.

use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};

use serde_json::Value;

use super::{BackendDescriptor, BackendError, SummarizeRequest, SummarizeResponse, Summarizer};

pub struct SubprocessSummarizer {
    descriptor: BackendDescriptor,
}

impl SubprocessSummarizer {
    pub fn new(descriptor: BackendDescriptor) -> Result<Self, BackendError> {
        descriptor.validate()?;
        Ok(Self { descriptor })
    }

    fn transport(&self, message: impl Into<String>) -> BackendError {
        BackendError::Transport {
            backend: self.descriptor.endpoint.clone(),
            message: message.into(),
        }
    }
}

pub(crate) fn parse_response_line(line: &str) -> Result<SummarizeResponse, BackendError> {
    let value: Value = serde_json::from_str(line)
        .map_err(|e| BackendError::Protocol(format!("malformed response line: {e}")))?;
    if let Some(msg) = value.get("error").and_then(Value::as_str) {
        return Err(BackendError::Server {
            status: 500,
            message: msg.to_string(),
        });
    }
    serde_json::from_value(value)
        .map_err(|e| BackendError::Protocol(format!("malformed response object: {e}")))
}

impl Summarizer for SubprocessSummarizer {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    fn call(&self, requests: &[SummarizeRequest]) -> Result<Vec<SummarizeResponse>, BackendError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.descriptor.endpoint)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| self.transport(format!("spawn failed: {e}")))?;

        let mut stdin = child.stdin.take().expect("piped stdin");
        let mut payload = Vec::new();
        for req in requests {
            serde_json::to_writer(&mut payload, req).expect("request serializes");
            payload.push(b'\n');
        }
        // write on a separate thread so a chatty child cannot deadlock us
        let writer = std::thread::spawn(move || {
            let res = stdin.write_all(&payload);
            drop(stdin);
            res
        });

        let stdout = child.stdout.take().expect("piped stdout");
        let mut responses = Vec::with_capacity(requests.len());
        let mut first_error = None;
        for line in BufReader::new(stdout).lines() {
            let line = line.map_err(|e| self.transport(format!("read failed: {e}")))?;
            if line.trim().is_empty() {
                continue;
            }
            match parse_response_line(&line) {
                Ok(r) => responses.push(r),
                Err(e) => {
                    first_error.get_or_insert(e);
                }
            }
        }
        let output = child
            .wait_with_output()
            .map_err(|e| self.transport(format!("wait failed: {e}")))?;
        let write_result = writer.join().expect("writer thread panicked");

        if !output.status.success() {
            let stderr = String::from_utf8_lossy(&output.stderr);
            return Err(self.transport(format!(
                "process exited with {}: {}",
                output.status,
                stderr.trim()
            )));
        }
        if let Err(e) = write_result {
            return Err(self.transport(format!("write failed: {e}")));
        }
        match first_error {
            Some(e) => Err(e),
            None => Ok(responses),
        }
    }
}
