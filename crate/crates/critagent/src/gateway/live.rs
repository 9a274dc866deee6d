//! Live provider backends: an OpenAI-compatible chat-completions client, a
//! Serper-style Google search client and a plain HTTP page fetcher. All three
//! classify failures into the gateway's transient/quota/fatal scheme; the
//! gateway owns retries, so none of these retry on their own.

use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::extract;
use super::{
    ChatProvider, CompletionRequest, DocumentFetcher, FetchFailure, FetchedPage, ProviderFailure,
    SearchHit, SearchProvider,
};

const HTTP_TIMEOUT: Duration = Duration::from_secs(60);
const USER_AGENT: &str = "Mozilla/5.0 (compatible; critagent/0.1; +https://example.invalid)";

fn classify_status(status: reqwest::StatusCode, body: &str) -> ProviderFailure {
    if status.as_u16() == 429 && body.contains("insufficient_quota") {
        return ProviderFailure::Quota(format!("http 429: {body}"));
    }
    if status.as_u16() == 402 {
        return ProviderFailure::Quota(format!("http 402: {body}"));
    }
    if status.as_u16() == 429 || status.is_server_error() {
        return ProviderFailure::Transient(format!("http {status}: {body}"));
    }
    ProviderFailure::Fatal(format!("http {status}: {body}"))
}

fn truncate_for_log(body: &str) -> String {
    body.chars().take(300).collect()
}

/// Chat client for any endpoint speaking the `/chat/completions` protocol.
pub struct OpenAiCompatChat {
    client: reqwest::blocking::Client,
    base_url: String,
    api_key: String,
}

impl OpenAiCompatChat {
    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>) -> OpenAiCompatChat {
        let client = reqwest::blocking::Client::builder()
            .timeout(HTTP_TIMEOUT)
            .build()
            .expect("http client");
        OpenAiCompatChat {
            client,
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key: api_key.into(),
        }
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: Option<String>,
}

impl ChatProvider for OpenAiCompatChat {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderFailure> {
        let payload = json!({
            "model": request.model,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "messages": [{"role": "user", "content": request.prompt}],
        });
        let response = self
            .client
            .post(format!("{}/chat/completions", self.base_url))
            .bearer_auth(&self.api_key)
            .json(&payload)
            .send()
            .map_err(|e| ProviderFailure::Transient(e.to_string()))?;
        let status = response.status();
        let body = response
            .text()
            .map_err(|e| ProviderFailure::Transient(e.to_string()))?;
        if !status.is_success() {
            return Err(classify_status(status, &truncate_for_log(&body)));
        }
        let parsed: ChatResponse = serde_json::from_str(&body)
            .map_err(|e| ProviderFailure::Fatal(format!("bad chat response: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| ProviderFailure::Fatal("chat response had no content".into()))
    }
}

/// Search client for a Serper-style JSON API (`POST {base}/search`).
pub struct SerperSearch {
    client: reqwest::blocking::Client,
    base_url: String,
    api_key: String,
}

impl SerperSearch {
    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>) -> SerperSearch {
        let client = reqwest::blocking::Client::builder()
            .timeout(HTTP_TIMEOUT)
            .build()
            .expect("http client");
        SerperSearch {
            client,
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key: api_key.into(),
        }
    }
}

#[derive(Deserialize)]
struct SerperResponse {
    #[serde(default)]
    organic: Vec<SerperHit>,
}

#[derive(Deserialize)]
struct SerperHit {
    link: String,
    #[serde(default)]
    title: String,
}

impl SearchProvider for SerperSearch {
    fn search(&self, query: &str, n: usize) -> Result<Vec<SearchHit>, ProviderFailure> {
        let response = self
            .client
            .post(format!("{}/search", self.base_url))
            .header("X-API-KEY", &self.api_key)
            .json(&json!({"q": query, "num": n}))
            .send()
            .map_err(|e| ProviderFailure::Transient(e.to_string()))?;
        let status = response.status();
        let body = response
            .text()
            .map_err(|e| ProviderFailure::Transient(e.to_string()))?;
        if !status.is_success() {
            return Err(classify_status(status, &truncate_for_log(&body)));
        }
        let parsed: SerperResponse = serde_json::from_str(&body)
            .map_err(|e| ProviderFailure::Fatal(format!("bad search response: {e}")))?;
        Ok(parsed
            .organic
            .into_iter()
            .enumerate()
            .map(|(i, hit)| SearchHit { url: hit.link, title: hit.title, rank: (i + 1) as u32 })
            .collect())
    }
}

/// Fetches a page over HTTP and extracts readable text. Content types other
/// than HTML/plain text are refused rather than garbled.
pub struct HttpFetcher {
    client: reqwest::blocking::Client,
}

impl HttpFetcher {
    pub fn new() -> HttpFetcher {
        let client = reqwest::blocking::Client::builder()
            .timeout(HTTP_TIMEOUT)
            .user_agent(USER_AGENT)
            .build()
            .expect("http client");
        HttpFetcher { client }
    }
}

impl Default for HttpFetcher {
    fn default() -> Self {
        HttpFetcher::new()
    }
}

impl DocumentFetcher for HttpFetcher {
    fn fetch(&self, url: &str) -> Result<FetchedPage, FetchFailure> {
        let response = self
            .client
            .get(url)
            .send()
            .map_err(|e| FetchFailure::Unreachable(e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            return Err(FetchFailure::Unreachable(format!("http {status}")));
        }
        let content_type = response
            .headers()
            .get(reqwest::header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .unwrap_or("")
            .to_string();
        let is_text = content_type.is_empty()
            || content_type.contains("text/html")
            || content_type.contains("text/plain")
            || content_type.contains("application/xhtml");
        if !is_text {
            return Err(FetchFailure::NonText { content_type });
        }
        let body = response
            .text()
            .map_err(|e| FetchFailure::Unreachable(e.to_string()))?;
        let (title, body_text) = if content_type.contains("text/plain") {
            (String::new(), body.trim().to_string())
        } else {
            (
                extract::extract_title(&body).unwrap_or_default(),
                extract::extract_text(&body),
            )
        };
        if body_text.trim().is_empty() {
            return Err(FetchFailure::Empty);
        }
        Ok(FetchedPage { title, body_text })
    }
}
