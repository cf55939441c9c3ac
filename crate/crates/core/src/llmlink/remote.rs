//! Chat-completions client over blocking HTTP.

use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use serde::Serialize;
use ureq::Agent;

use super::backend::{BackendError, ChatBackend, ChatMessage};

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    temperature: f64,
    messages: &'a [ChatMessage],
}

/// Wire body sent to the endpoint.
pub fn request_body(model: &str, temperature: f64, messages: &[ChatMessage]) -> serde_json::Value {
    serde_json::to_value(ChatRequest { model, temperature, messages }).expect("request serializes")
}

/// Pull `choices[0].message.content` out of a chat-completions response.
pub fn extract_content(body: &serde_json::Value) -> Result<String, BackendError> {
    body.pointer("/choices/0/message/content")
        .and_then(|v| v.as_str())
        .map(str::to_string)
        .ok_or_else(|| BackendError::Malformed("missing choices[0].message.content".into()))
}

pub struct RemoteBackend {
    agent: Agent,
    endpoint: String,
    model: String,
    temperature: f64,
    api_key: String,
}

impl RemoteBackend {
    pub fn new(endpoint: &str, model: &str, temperature: f64, timeout_s: f64, api_key: &str) -> Self {
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(timeout_s)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            temperature,
            api_key: api_key.to_string(),
        }
    }
}

/// TCP reachability check against the endpoint's host and port.
pub fn probe_endpoint(endpoint: &str, timeout: Duration) -> Result<(), String> {
    let uri: ureq::http::Uri = endpoint.parse().map_err(|e| format!("invalid endpoint {endpoint:?}: {e}"))?;
    let host = uri.host().ok_or_else(|| format!("endpoint {endpoint:?} has no host"))?;
    let port = uri.port_u16().unwrap_or(match uri.scheme_str() {
        Some("http") => 80,
        _ => 443,
    });
    let addrs: Vec<_> = (host, port)
        .to_socket_addrs()
        .map_err(|e| format!("cannot resolve {host}: {e}"))?
        .collect();
    let mut last = format!("no address for {host}");
    for addr in addrs {
        match TcpStream::connect_timeout(&addr, timeout) {
            Ok(_) => return Ok(()),
            Err(e) => last = format!("{addr}: {e}"),
        }
    }
    Err(last)
}

impl ChatBackend for RemoteBackend {
    fn complete(&mut self, messages: &[ChatMessage]) -> Result<String, BackendError> {
        let body = request_body(&self.model, self.temperature, messages);
        let response = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| match e {
                ureq::Error::Timeout(t) => BackendError::Timeout(t.to_string()),
                other => BackendError::Transport(other.to_string()),
            })?;
        let status = response.status().as_u16();
        let mut body = response.into_body();
        if !(200..300).contains(&status) {
            let text = body.read_to_string().unwrap_or_default();
            return Err(BackendError::Status { status, body: text });
        }
        let json: serde_json::Value = body
            .read_json()
            .map_err(|e| BackendError::Malformed(e.to_string()))?;
        extract_content(&json)
    }

    fn describe(&self) -> String {
        format!("remote {} ({})", self.endpoint, self.model)
    }
}
