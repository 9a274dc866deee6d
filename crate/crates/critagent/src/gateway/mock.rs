//! Recorded-fixture providers for offline runs and tests. Completions are
//! keyed by the same digest the cache uses, so a fixture answers exactly the
//! requests it was recorded for; searches and documents are keyed by query and
//! url. A fixture bundle round-trips through JSON for use with the CLI's
//! `--mock-fixtures` flag.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::cache::CacheKey;
use super::{
    ChatProvider, CompletionRequest, DocumentFetcher, FetchFailure, FetchedPage, ModelParams,
    ProviderFailure, SearchHit, SearchProvider,
};

/// Shared, inspectable log of the completion requests a mock served. Lets
/// tests count how many provider calls a pipeline stage actually issued.
#[derive(Debug, Clone, Default)]
pub struct CallLog {
    entries: Arc<Mutex<Vec<CompletionRequest>>>,
}

impl CallLog {
    pub fn new() -> CallLog {
        CallLog::default()
    }

    pub fn record(&self, request: &CompletionRequest) {
        self.entries.lock().unwrap().push(request.clone());
    }

    pub fn snapshot(&self) -> Vec<CompletionRequest> {
        self.entries.lock().unwrap().clone()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of logged requests whose prompt contains `marker`.
    pub fn count_containing(&self, marker: &str) -> usize {
        self.entries
            .lock()
            .unwrap()
            .iter()
            .filter(|r| r.prompt.contains(marker))
            .count()
    }
}

/// Fixture-backed chat provider. Unknown prompts are a fatal error unless a
/// default response is configured.
pub struct MockChat {
    responses: HashMap<String, String>,
    default_response: Option<String>,
    log: CallLog,
}

impl MockChat {
    pub fn new() -> MockChat {
        MockChat { responses: HashMap::new(), default_response: None, log: CallLog::new() }
    }

    pub fn stub(&mut self, params: &ModelParams, prompt: &str, response: impl Into<String>) {
        let key = CacheKey::completion(&params.model, params.temperature, prompt);
        self.responses.insert(key.digest().to_string(), response.into());
    }

    /// Fallback reply for prompts without a recorded fixture. Handy for
    /// property tests that only care about one stage's behavior.
    pub fn with_default_response(mut self, response: impl Into<String>) -> MockChat {
        self.default_response = Some(response.into());
        self
    }

    /// Handle onto the call log; clones observe the same underlying log.
    pub fn log(&self) -> CallLog {
        self.log.clone()
    }
}

impl Default for MockChat {
    fn default() -> Self {
        MockChat::new()
    }
}

impl ChatProvider for MockChat {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderFailure> {
        self.log.record(request);
        let key = CacheKey::completion(&request.model, request.temperature, &request.prompt);
        if let Some(response) = self.responses.get(key.digest()) {
            return Ok(response.clone());
        }
        if let Some(default) = &self.default_response {
            return Ok(default.clone());
        }
        let head: String = request.prompt.chars().take(120).collect();
        Err(ProviderFailure::Fatal(format!("no fixture for prompt starting: {head:?}")))
    }
}

/// Closure-backed chat provider for tests that need programmable behavior
/// (failure injection, randomized verdicts, ...).
pub struct FnChat<F> {
    f: F,
    log: CallLog,
}

impl<F> FnChat<F>
where
    F: Fn(&CompletionRequest) -> Result<String, ProviderFailure> + Send + Sync,
{
    pub fn new(f: F) -> FnChat<F> {
        FnChat { f, log: CallLog::new() }
    }

    pub fn log(&self) -> CallLog {
        self.log.clone()
    }
}

impl<F> ChatProvider for FnChat<F>
where
    F: Fn(&CompletionRequest) -> Result<String, ProviderFailure> + Send + Sync,
{
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderFailure> {
        self.log.record(request);
        (self.f)(request)
    }
}

/// Fixture-backed search provider keyed by the query string.
pub struct MockSearch {
    results: HashMap<String, Vec<SearchHit>>,
}

impl MockSearch {
    pub fn new() -> MockSearch {
        MockSearch { results: HashMap::new() }
    }

    pub fn stub(&mut self, query: &str, hits: Vec<SearchHit>) {
        self.results.insert(query.to_string(), hits);
    }
}

impl Default for MockSearch {
    fn default() -> Self {
        MockSearch::new()
    }
}

impl SearchProvider for MockSearch {
    fn search(&self, query: &str, _n: usize) -> Result<Vec<SearchHit>, ProviderFailure> {
        match self.results.get(query) {
            Some(hits) => Ok(hits.clone()),
            None => Err(ProviderFailure::Fatal(format!("no search fixture for query {query:?}"))),
        }
    }
}

/// Fixture-backed document fetcher keyed by url.
pub struct MockFetcher {
    pages: HashMap<String, FetchedPage>,
}

impl MockFetcher {
    pub fn new() -> MockFetcher {
        MockFetcher { pages: HashMap::new() }
    }

    pub fn stub(&mut self, url: &str, title: &str, body_text: &str) {
        self.pages.insert(
            url.to_string(),
            FetchedPage { title: title.to_string(), body_text: body_text.to_string() },
        );
    }
}

impl Default for MockFetcher {
    fn default() -> Self {
        MockFetcher::new()
    }
}

impl DocumentFetcher for MockFetcher {
    fn fetch(&self, url: &str) -> Result<FetchedPage, FetchFailure> {
        match self.pages.get(url) {
            Some(page) => Ok(page.clone()),
            None => Err(FetchFailure::Unreachable("no fixture for url".into())),
        }
    }
}

/// Serializable bundle of recorded provider interactions.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FixtureBundle {
    #[serde(default)]
    pub completions: Vec<CompletionFixture>,
    #[serde(default)]
    pub searches: Vec<SearchFixture>,
    #[serde(default)]
    pub documents: Vec<DocumentFixture>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompletionFixture {
    pub model: String,
    pub temperature: f64,
    pub prompt: String,
    pub response: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchFixture {
    pub query: String,
    pub hits: Vec<SearchHit>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DocumentFixture {
    pub url: String,
    pub title: String,
    pub body_text: String,
}

impl FixtureBundle {
    pub fn record_completion(&mut self, params: &ModelParams, prompt: &str, response: &str) {
        self.completions.push(CompletionFixture {
            model: params.model.clone(),
            temperature: params.temperature,
            prompt: prompt.to_string(),
            response: response.to_string(),
        });
    }

    pub fn record_search(&mut self, query: &str, hits: Vec<SearchHit>) {
        self.searches.push(SearchFixture { query: query.to_string(), hits });
    }

    pub fn record_document(&mut self, url: &str, title: &str, body_text: &str) {
        self.documents.push(DocumentFixture {
            url: url.to_string(),
            title: title.to_string(),
            body_text: body_text.to_string(),
        });
    }

    pub fn load(path: &Path) -> crate::error::Result<FixtureBundle> {
        let raw = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&raw)?)
    }

    pub fn save(&self, path: &Path) -> crate::error::Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    /// Builds the three mock providers plus a handle on the chat call log.
    pub fn into_providers(self) -> (MockChat, MockSearch, MockFetcher, CallLog) {
        let mut chat = MockChat::new();
        for c in &self.completions {
            let params = ModelParams {
                model: c.model.clone(),
                temperature: c.temperature,
                // max_tokens does not participate in fixture identity.
                max_tokens: 0,
            };
            chat.stub(&params, &c.prompt, c.response.clone());
        }
        let log = chat.log();
        let mut search = MockSearch::new();
        for s in self.searches {
            search.stub(&s.query, s.hits);
        }
        let mut fetcher = MockFetcher::new();
        for d in self.documents {
            fetcher.stub(&d.url, &d.title, &d.body_text);
        }
        (chat, search, fetcher, log)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams { model: "m".into(), temperature: 0.0, max_tokens: 64 }
    }

    #[test]
    fn mock_chat_serves_stubbed_prompt_and_logs_calls() {
        let mut chat = MockChat::new();
        chat.stub(&params(), "hello", "world");
        let log = chat.log();
        let reply = chat.complete(&params().request("hello")).unwrap();
        assert_eq!(reply, "world");
        assert_eq!(log.len(), 1);
    }

    #[test]
    fn mock_chat_unknown_prompt_is_fatal() {
        let chat = MockChat::new();
        assert!(matches!(
            chat.complete(&params().request("unknown")),
            Err(ProviderFailure::Fatal(_))
        ));
    }

    #[test]
    fn default_response_answers_unknown_prompts() {
        let chat = MockChat::new().with_default_response("fallback");
        assert_eq!(chat.complete(&params().request("anything")).unwrap(), "fallback");
    }

    #[test]
    fn fixture_identity_ignores_max_tokens() {
        let mut chat = MockChat::new();
        chat.stub(&params(), "p", "r");
        let mut req = params().request("p");
        req.max_tokens = 9999;
        assert_eq!(chat.complete(&req).unwrap(), "r");
    }

    #[test]
    fn bundle_roundtrips_through_json() {
        let dir = tempfile::tempdir().unwrap();
        let mut bundle = FixtureBundle::default();
        bundle.record_completion(&params(), "p", "r");
        bundle.record_search(
            "q",
            vec![SearchHit { url: "https://a.example".into(), title: "A".into(), rank: 1 }],
        );
        bundle.record_document("https://a.example", "A", "body");
        let path = dir.path().join("fixtures.json");
        bundle.save(&path).unwrap();
        let loaded = FixtureBundle::load(&path).unwrap();
        let (chat, search, fetcher, _log) = loaded.into_providers();
        assert_eq!(chat.complete(&params().request("p")).unwrap(), "r");
        assert_eq!(search.search("q", 30).unwrap().len(), 1);
        assert!(fetcher.fetch("https://a.example").is_ok());
    }
}
