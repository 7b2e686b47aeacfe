use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::PromptError;

pub const DEFAULT_MAX_TOKENS: u32 = 256;
/// Environment variable holding the bearer token for [`HttpClient`].
pub const API_KEY_ENV: &str = "MORAG_LLM_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub prompt: String,
    pub max_tokens: u32,
    pub model: String,
    /// Extra sampling parameters, sent as-is.
    #[serde(default)]
    pub params: Map<String, Value>,
}

impl LlmRequest {
    pub fn new(prompt: impl Into<String>, model: impl Into<String>) -> Self {
        Self { prompt: prompt.into(), max_tokens: DEFAULT_MAX_TOKENS, model: model.into(), params: Map::new() }
    }

    /// `{model, prompt, max_tokens}` plus the pass-through parameters.
    pub fn body(&self) -> Value {
        let mut m = self.params.clone();
        m.insert("model".into(), Value::from(self.model.clone()));
        m.insert("prompt".into(), Value::from(self.prompt.clone()));
        m.insert("max_tokens".into(), Value::from(self.max_tokens));
        Value::Object(m)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmResponse {
    pub completion: String,
    pub usage: Option<Usage>,
}

impl LlmResponse {
    /// Reads the completion from `choices[0].text`,
    /// `choices[0].message.content`, `completion` or `text`, in that order.
    pub fn from_json(v: &Value) -> Result<Self, PromptError> {
        let first = v.get("choices").and_then(|c| c.get(0));
        let completion = first
            .and_then(|c| c.get("text"))
            .or_else(|| first.and_then(|c| c.pointer("/message/content")))
            .or_else(|| v.get("completion"))
            .or_else(|| v.get("text"))
            .and_then(Value::as_str)
            .ok_or_else(|| PromptError::Endpoint(format!("response has no completion text: {v}")))?;
        let usage = v.get("usage").map(|u| Usage {
            prompt_tokens: u.get("prompt_tokens").and_then(Value::as_u64).unwrap_or(0),
            completion_tokens: u.get("completion_tokens").and_then(Value::as_u64).unwrap_or(0),
        });
        Ok(Self { completion: completion.to_owned(), usage })
    }
}

/// A text-completion backend.
pub trait LlmClient: Send + Sync {
    fn complete(&self, req: &LlmRequest) -> Result<LlmResponse, PromptError>;
}

/// JSON-over-HTTP completion endpoint.
#[derive(Debug, Clone)]
pub struct HttpClient {
    endpoint: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpClient {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
        Self { endpoint: endpoint.into(), api_key, agent }
    }

    /// API key taken from [`API_KEY_ENV`] if set.
    pub fn from_env(endpoint: impl Into<String>, timeout: Duration) -> Self {
        Self::new(endpoint, std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()), timeout)
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

impl LlmClient for HttpClient {
    fn complete(&self, req: &LlmRequest) -> Result<LlmResponse, PromptError> {
        let body = serde_json::to_vec(&req.body()).expect("request body serializes");
        let mut r = self.agent.post(&self.endpoint).header("Content-Type", "application/json");
        if let Some(k) = &self.api_key {
            r = r.header("Authorization", format!("Bearer {k}"));
        }
        let mut resp = r.send(&body[..]).map_err(|e| PromptError::Endpoint(format!("{}: {e}", self.endpoint)))?;
        let text = resp.body_mut().read_to_string().map_err(|e| PromptError::Endpoint(e.to_string()))?;
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| PromptError::Endpoint(format!("response is not JSON ({e}): {text}")))?;
        LlmResponse::from_json(&v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    #[test]
    fn response_shapes() {
        let a = LlmResponse::from_json(&json!({"choices": [{"text": "x"}], "usage": {"prompt_tokens": 3}})).unwrap();
        assert_eq!(a.completion, "x");
        assert_eq!(a.usage.unwrap().prompt_tokens, 3);
        assert_eq!(
            LlmResponse::from_json(&json!({"choices": [{"message": {"content": "y"}}]})).unwrap().completion,
            "y"
        );
        assert_eq!(LlmResponse::from_json(&json!({"completion": "z"})).unwrap().completion, "z");
        assert_eq!(LlmResponse::from_json(&json!({"text": "w"})).unwrap().completion, "w");
        assert!(LlmResponse::from_json(&json!({"other": 1})).is_err());
    }

    #[test]
    fn body_carries_params() {
        let mut r = LlmRequest::new("p", "m");
        r.params.insert("temperature".into(), json!(0.0));
        assert_eq!(r.body(), json!({"model": "m", "prompt": "p", "max_tokens": 256, "temperature": 0.0}));
    }

    fn serve_once(status: &str, body: &str) -> (String, std::thread::JoinHandle<(String, String)>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/completions", listener.local_addr().unwrap());
        let reply = format!("HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}", body.len());
        let h = std::thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut head = String::new();
            let mut len = 0usize;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                if line == "\r\n" {
                    break;
                }
                head.push_str(&line);
            }
            let mut buf = vec![0u8; len];
            reader.read_exact(&mut buf).unwrap();
            (&stream).write_all(reply.as_bytes()).unwrap();
            (head, String::from_utf8(buf).unwrap())
        });
        (url, h)
    }

    #[test]
    fn http_round_trip() {
        let (url, h) = serve_once("200 OK", r#"{"choices":[{"text":"Torso: a Hands: b Legs: c"}]}"#);
        let c = HttpClient::new(url, Some("secret".into()), Duration::from_secs(5));
        let resp = c.complete(&LlmRequest::new("hello", "test-model")).unwrap();
        assert_eq!(resp.completion, "Torso: a Hands: b Legs: c");
        let (head, body) = h.join().unwrap();
        assert!(head.contains("Bearer secret"));
        let sent: Value = serde_json::from_str(&body).unwrap();
        assert_eq!(sent, json!({"model": "test-model", "prompt": "hello", "max_tokens": 256}));
    }

    #[test]
    fn http_status_error() {
        let (url, h) = serve_once("500 Internal Server Error", "{}");
        let c = HttpClient::new(url, None, Duration::from_secs(5));
        assert!(matches!(c.complete(&LlmRequest::new("p", "m")), Err(PromptError::Endpoint(_))));
        h.join().unwrap();
    }

    #[test]
    fn connection_refused() {
        let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
        let c = HttpClient::new(format!("http://127.0.0.1:{port}/"), None, Duration::from_secs(2));
        assert!(matches!(c.complete(&LlmRequest::new("p", "m")), Err(PromptError::Endpoint(_))));
    }
}
