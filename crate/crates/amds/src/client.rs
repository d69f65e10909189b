//! Chat-completions endpoints and the single-sample query.

use std::path::Path;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::prompt::{build_prompt, parse_reply, REPROMPT_TEXT};
use crate::scenario::Scenario;
use crate::transcript::SampleResult;

pub const ENDPOINTS_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEndpoint {
    pub base_url: String,
    pub model_id: String,
    /// Name of the environment variable holding the bearer credential.
    pub credential_env: String,
    #[serde(rename = "timeout_s", default = "default_timeout")]
    pub timeout: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
}

fn default_timeout() -> f64 {
    30.0
}

fn default_max_tokens() -> u32 {
    512
}

impl ModelEndpoint {
    pub fn validate(&self) -> Result<()> {
        if self.base_url.trim().is_empty() {
            return Err(Error::Config(format!("{}: base_url is empty", self.model_id)));
        }
        if self.model_id.trim().is_empty() {
            return Err(Error::Config("endpoint model_id is empty".into()));
        }
        if !(self.timeout > 0.0) || !self.timeout.is_finite() {
            return Err(Error::Config(format!(
                "{}: timeout must be positive, got {}",
                self.model_id, self.timeout
            )));
        }
        Ok(())
    }

    pub fn credential(&self) -> Result<String> {
        match std::env::var(&self.credential_env) {
            Ok(v) if !v.is_empty() => Ok(v),
            _ => Err(Error::Config(format!(
                "credential variable {} is not set for {}",
                self.credential_env, self.model_id
            ))),
        }
    }

    pub fn completions_url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct EndpointFile {
    schema_version: u32,
    endpoints: Vec<ModelEndpoint>,
}

pub fn parse_endpoints(text: &str) -> Result<Vec<ModelEndpoint>> {
    let file: EndpointFile = serde_json::from_str(text)?;
    if file.schema_version != ENDPOINTS_SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "endpoint config schema_version {} unsupported",
            file.schema_version
        )));
    }
    if file.endpoints.is_empty() {
        return Err(Error::Config("endpoint config lists no endpoints".into()));
    }
    for e in &file.endpoints {
        e.validate()?;
    }
    Ok(file.endpoints)
}

pub fn load_endpoints(path: &Path) -> Result<Vec<ModelEndpoint>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_endpoints(&text)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatMessage {
    pub role: &'static str,
    pub content: String,
}

#[derive(Debug, Clone)]
pub struct ChatRequest<'a> {
    pub endpoint: &'a ModelEndpoint,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

/// Anything that turns a chat request into reply text.
pub trait ChatBackend: Sync {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<String>;
}

/// Blocking HTTP client for chat-completions servers.
pub struct HttpBackend {
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new() -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        Ok(Self { client })
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<String> {
        let ep = request.endpoint;
        let key = ep.credential()?;
        let messages: Vec<_> = request
            .messages
            .iter()
            .map(|m| json!({"role": m.role, "content": m.content}))
            .collect();
        let body = json!({
            "model": ep.model_id,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": ep.max_tokens,
        });
        let resp = self
            .client
            .post(ep.completions_url())
            .bearer_auth(key)
            .timeout(Duration::from_secs_f64(ep.timeout))
            .json(&body)
            .send()
            .map_err(|e| Error::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| Error::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(Error::Transport(format!("HTTP {status}: {}", truncate(&text, 200))));
        }
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::Transport(format!("bad response body: {e}")))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| Error::Transport("response has no choices[0].message.content".into()))
    }
}

fn truncate(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

fn now_unix() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Send with one retry on transport failure. Configuration errors are not retried.
fn send(backend: &dyn ChatBackend, req: &ChatRequest<'_>) -> Result<String> {
    match backend.complete(req) {
        Err(Error::Transport(_)) => backend.complete(req),
        other => other,
    }
}

/// One sample for one (endpoint, scenario, temperature) cell.
///
/// Per-call failures come back as records with `decision == None`; only
/// configuration errors are returned as `Err`.
pub fn query_model(
    backend: &dyn ChatBackend,
    endpoint: &ModelEndpoint,
    scenario: &Scenario,
    temperature: f64,
    sample_index: u32,
) -> Result<SampleResult> {
    let (system, user) = build_prompt(scenario);
    let mut req = ChatRequest {
        endpoint,
        messages: vec![
            ChatMessage { role: "system", content: system },
            ChatMessage { role: "user", content: user },
        ],
        temperature,
    };
    let mut record = SampleResult {
        model_id: endpoint.model_id.clone(),
        scenario_id: scenario.id.clone(),
        temperature,
        sample_index,
        decision: None,
        failure: None,
        confidence: 0.0,
        reasoning: String::new(),
        autonomy_justified: false,
        latency: 0.0,
        raw_response: String::new(),
        timestamp_unix_s: now_unix(),
    };
    let started = Instant::now();
    let first = match send(backend, &req) {
        Ok(text) => text,
        Err(Error::Transport(msg)) => {
            record.latency = started.elapsed().as_secs_f64();
            record.failure = Some(format!("transport: {msg}"));
            return Ok(record);
        }
        Err(e) => return Err(e),
    };
    let mut reply = first;
    let mut parsed = parse_reply(&reply, &scenario.options);
    if parsed.is_err() {
        req.messages.push(ChatMessage { role: "assistant", content: reply.clone() });
        req.messages.push(ChatMessage { role: "user", content: REPROMPT_TEXT.to_string() });
        match send(backend, &req) {
            Ok(text) => {
                reply = text;
                parsed = parse_reply(&reply, &scenario.options);
            }
            Err(Error::Transport(msg)) => parsed = Err(format!("transport on re-prompt: {msg}")),
            Err(e) => return Err(e),
        }
    }
    record.latency = started.elapsed().as_secs_f64();
    record.raw_response = reply;
    match parsed {
        Ok(p) => {
            record.decision = Some(p.decision);
            record.confidence = p.confidence;
            record.reasoning = p.reasoning;
            record.autonomy_justified = p.autonomy_justified;
        }
        Err(msg) => record.failure = Some(format!("parse: {msg}")),
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::shipped_scenarios;
    use std::sync::Mutex;

    struct Scripted(Mutex<Vec<Result<String>>>);

    impl ChatBackend for Scripted {
        fn complete(&self, _: &ChatRequest<'_>) -> Result<String> {
            self.0.lock().unwrap().remove(0)
        }
    }

    fn endpoint() -> ModelEndpoint {
        ModelEndpoint {
            base_url: "http://localhost:1/v1/".into(),
            model_id: "m".into(),
            credential_env: "AMDS_TEST_UNSET_VARIABLE".into(),
            timeout: 30.0,
            max_tokens: 256,
        }
    }

    fn s08() -> Scenario {
        shipped_scenarios().into_iter().find(|s| s.id == "S08").unwrap()
    }

    const GOOD: &str = r#"{"decision":"tolerate_drift","confidence":0.8,"reasoning":"ok","autonomy_justified":true}"#;

    #[test]
    fn url_joins_cleanly() {
        assert_eq!(endpoint().completions_url(), "http://localhost:1/v1/chat/completions");
    }

    #[test]
    fn happy_path() {
        let b = Scripted(Mutex::new(vec![Ok(GOOD.into())]));
        let r = query_model(&b, &endpoint(), &s08(), 0.05, 0).unwrap();
        assert_eq!(r.decision.as_deref(), Some("tolerate_drift"));
        assert_eq!(r.confidence, 0.8);
        assert!(r.autonomy_justified);
    }

    #[test]
    fn reprompts_once_then_marks_failure() {
        let b = Scripted(Mutex::new(vec![Ok("nonsense".into()), Ok(GOOD.into())]));
        let r = query_model(&b, &endpoint(), &s08(), 0.05, 0).unwrap();
        assert!(r.is_parsed());

        let bad = r#"{"decision":"reboot","confidence":0.9,"autonomy_justified":true}"#;
        let b = Scripted(Mutex::new(vec![Ok(bad.into()), Ok(bad.into())]));
        let r = query_model(&b, &endpoint(), &s08(), 0.05, 0).unwrap();
        assert!(r.decision.is_none());
        assert!(r.failure.unwrap().starts_with("parse"));
    }

    #[test]
    fn transport_retry_then_error_record() {
        let b = Scripted(Mutex::new(vec![Err(Error::Transport("reset".into())), Ok(GOOD.into())]));
        assert!(query_model(&b, &endpoint(), &s08(), 0.3, 1).unwrap().is_parsed());

        let b = Scripted(Mutex::new(vec![
            Err(Error::Transport("reset".into())),
            Err(Error::Transport("reset".into())),
        ]));
        let r = query_model(&b, &endpoint(), &s08(), 0.3, 1).unwrap();
        assert!(r.failure.unwrap().starts_with("transport"));
    }

    #[test]
    fn missing_credential_is_config_error() {
        let b = HttpBackend::new().unwrap();
        let err = query_model(&b, &endpoint(), &s08(), 0.05, 0).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn endpoint_validation() {
        let mut e = endpoint();
        e.timeout = 0.0;
        assert!(e.validate().is_err());
        let mut e = endpoint();
        e.base_url = " ".into();
        assert!(e.validate().is_err());
        let text = include_str!("../../../data/endpoints.example.json");
        assert_eq!(parse_endpoints(text).unwrap().len(), 3);
    }
}
