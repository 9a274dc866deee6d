//! The provider gateway: one narrow seam between the pipeline and the outside
//! world. Everything that talks to a model, a search index or the open web
//! goes through [`Gateway`], which layers caching, bounded retries and a
//! global in-flight permit budget on top of swappable provider backends.

pub mod cache;
pub mod extract;
pub mod live;
pub mod mock;
pub mod parse;

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use cache::{CacheKey, CacheStats, DiskCache};

use crate::error::GatewayError;

/// One chat-completion request. These four fields are the entire identity of
/// a request: they are exactly what the cache key is derived from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

/// Model/decoding parameters threaded through the pipeline stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ModelParams {
    pub fn request(&self, prompt: impl Into<String>) -> CompletionRequest {
        CompletionRequest {
            prompt: prompt.into(),
            model: self.model.clone(),
            temperature: self.temperature,
            max_tokens: self.max_tokens,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub url: String,
    pub title: String,
    /// 1-based position in the result list.
    pub rank: u32,
}

/// A fetched page after text extraction, before any rating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FetchedPage {
    pub title: String,
    pub body_text: String,
}

/// A candidate expert document flowing through retrieval. Ratings start out
/// unset and are filled in by the rating stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WebDocument {
    pub url: String,
    pub title: String,
    pub body_text: String,
    /// Source quality on a 1-5 scale.
    pub goodness: Option<u8>,
    /// Instruction relevance on a 0-2 scale.
    pub relevance: Option<u8>,
    /// 1-based search result position.
    pub search_rank: u32,
}

/// How a provider call failed. `Transient` is the only retryable class.
#[derive(Debug, Clone)]
pub enum ProviderFailure {
    Transient(String),
    Quota(String),
    Fatal(String),
}

pub trait ChatProvider: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderFailure>;
}

pub trait SearchProvider: Send + Sync {
    fn search(&self, query: &str, n: usize) -> Result<Vec<SearchHit>, ProviderFailure>;
}

/// Fetch failure classes the retriever branches on.
#[derive(Debug, Clone)]
pub enum FetchFailure {
    Unreachable(String),
    NonText { content_type: String },
    Empty,
}

pub trait DocumentFetcher: Send + Sync {
    fn fetch(&self, url: &str) -> Result<FetchedPage, FetchFailure>;
}

/// Counting semaphore bounding concurrent provider calls.
struct Permits {
    available: Mutex<usize>,
    signal: Condvar,
}

impl Permits {
    fn new(max: usize) -> Permits {
        Permits { available: Mutex::new(max.max(1)), signal: Condvar::new() }
    }

    fn acquire(&self) -> PermitGuard<'_> {
        let mut available = self.available.lock().unwrap();
        while *available == 0 {
            available = self.signal.wait(available).unwrap();
        }
        *available -= 1;
        PermitGuard { permits: self }
    }
}

struct PermitGuard<'a> {
    permits: &'a Permits,
}

impl Drop for PermitGuard<'_> {
    fn drop(&mut self) {
        let mut available = self.permits.available.lock().unwrap();
        *available += 1;
        self.permits.signal.notify_one();
    }
}

pub struct GatewayBuilder {
    chat: Option<Box<dyn ChatProvider>>,
    search: Option<Box<dyn SearchProvider>>,
    fetcher: Option<Box<dyn DocumentFetcher>>,
    cache: Option<DiskCache>,
    retries: u32,
    backoff: Duration,
    parallelism: usize,
    doc_char_budget: usize,
}

impl GatewayBuilder {
    pub fn chat(mut self, provider: impl ChatProvider + 'static) -> Self {
        self.chat = Some(Box::new(provider));
        self
    }

    pub fn search(mut self, provider: impl SearchProvider + 'static) -> Self {
        self.search = Some(Box::new(provider));
        self
    }

    pub fn fetcher(mut self, provider: impl DocumentFetcher + 'static) -> Self {
        self.fetcher = Some(Box::new(provider));
        self
    }

    pub fn cache(mut self, cache: DiskCache) -> Self {
        self.cache = Some(cache);
        self
    }

    /// Total attempts per provider call (first try included).
    pub fn retries(mut self, retries: u32) -> Self {
        self.retries = retries.max(1);
        self
    }

    pub fn backoff(mut self, base: Duration) -> Self {
        self.backoff = base;
        self
    }

    pub fn parallelism(mut self, permits: usize) -> Self {
        self.parallelism = permits;
        self
    }

    /// Maximum characters of extracted document text handed to prompts.
    pub fn doc_char_budget(mut self, budget: usize) -> Self {
        self.doc_char_budget = budget.max(1);
        self
    }

    pub fn build(self) -> Gateway {
        Gateway {
            chat: self.chat.expect("gateway requires a chat provider"),
            search: self.search,
            fetcher: self.fetcher,
            cache: self.cache,
            permits: Permits::new(self.parallelism),
            retries: self.retries,
            backoff: self.backoff,
            doc_char_budget: self.doc_char_budget,
        }
    }
}

/// Default cap on extracted document characters fed into prompts.
pub const DEFAULT_DOC_CHAR_BUDGET: usize = 24_000;

pub struct Gateway {
    chat: Box<dyn ChatProvider>,
    search: Option<Box<dyn SearchProvider>>,
    fetcher: Option<Box<dyn DocumentFetcher>>,
    cache: Option<DiskCache>,
    permits: Permits,
    retries: u32,
    backoff: Duration,
    doc_char_budget: usize,
}

impl Gateway {
    pub fn builder() -> GatewayBuilder {
        GatewayBuilder {
            chat: None,
            search: None,
            fetcher: None,
            cache: None,
            retries: 3,
            backoff: Duration::from_millis(250),
            parallelism: 4,
            doc_char_budget: DEFAULT_DOC_CHAR_BUDGET,
        }
    }

    pub fn doc_char_budget(&self) -> usize {
        self.doc_char_budget
    }

    pub fn cache_stats(&self) -> Option<Result<CacheStats, GatewayError>> {
        self.cache.as_ref().map(DiskCache::stats)
    }

    /// Runs one chat completion: cache lookup, then the provider with bounded
    /// exponential backoff on transient failures. Quota exhaustion aborts
    /// immediately and is surfaced distinctly.
    pub fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        if request.prompt.trim().is_empty() {
            return Err(GatewayError::InvalidRequest("empty prompt".into()));
        }
        let key = CacheKey::completion(&request.model, request.temperature, &request.prompt);
        if let Some(cached) = self.cached(&key) {
            return Ok(cached);
        }
        let mut last_message = String::new();
        for attempt in 0..self.retries {
            if attempt > 0 {
                std::thread::sleep(self.backoff * 2u32.pow(attempt - 1));
            }
            let outcome = {
                let _permit = self.permits.acquire();
                self.chat.complete(request)
            };
            match outcome {
                Ok(reply) => {
                    self.store(&key, &reply);
                    return Ok(reply);
                }
                Err(ProviderFailure::Transient(message)) => {
                    log::warn!("chat attempt {} failed: {message}", attempt + 1);
                    last_message = message;
                }
                Err(ProviderFailure::Quota(message)) => {
                    return Err(GatewayError::QuotaExhausted(message));
                }
                Err(ProviderFailure::Fatal(message)) => {
                    return Err(GatewayError::ProviderRejected(message));
                }
            }
        }
        Err(GatewayError::ProviderUnreachable { attempts: self.retries, message: last_message })
    }

    /// Web search returning at most `n` hits with ranks normalized to 1..=len.
    pub fn search(&self, query: &str, n: usize) -> Result<Vec<SearchHit>, GatewayError> {
        let provider = self
            .search
            .as_ref()
            .ok_or_else(|| GatewayError::InvalidRequest("no search provider configured".into()))?;
        let key = CacheKey::search(query, n);
        if let Some(cached) = self.cached(&key) {
            if let Ok(hits) = serde_json::from_str::<Vec<SearchHit>>(&cached) {
                return Ok(hits);
            }
        }
        let mut last_message = String::new();
        for attempt in 0..self.retries {
            if attempt > 0 {
                std::thread::sleep(self.backoff * 2u32.pow(attempt - 1));
            }
            let outcome = {
                let _permit = self.permits.acquire();
                provider.search(query, n)
            };
            match outcome {
                Ok(mut hits) => {
                    hits.truncate(n);
                    for (i, hit) in hits.iter_mut().enumerate() {
                        hit.rank = (i + 1) as u32;
                    }
                    if let Ok(body) = serde_json::to_string(&hits) {
                        self.store(&key, &body);
                    }
                    return Ok(hits);
                }
                Err(ProviderFailure::Transient(message)) => {
                    log::warn!("search attempt {} failed: {message}", attempt + 1);
                    last_message = message;
                }
                Err(ProviderFailure::Quota(message)) => {
                    return Err(GatewayError::QuotaExhausted(message));
                }
                Err(ProviderFailure::Fatal(message)) => {
                    return Err(GatewayError::ProviderRejected(message));
                }
            }
        }
        Err(GatewayError::ProviderUnreachable { attempts: self.retries, message: last_message })
    }

    /// Fetches one search hit and extracts readable text, truncated to the
    /// document character budget. The untruncated extraction is cached, so a
    /// budget change does not invalidate the cache.
    pub fn fetch_and_extract(&self, hit: &SearchHit) -> Result<WebDocument, GatewayError> {
        let fetcher = self
            .fetcher
            .as_ref()
            .ok_or_else(|| GatewayError::InvalidRequest("no document fetcher configured".into()))?;
        let key = CacheKey::fetch(&hit.url);
        let page = match self.cached(&key).and_then(|c| serde_json::from_str(&c).ok()) {
            Some(page) => page,
            None => {
                let page = {
                    let _permit = self.permits.acquire();
                    fetcher.fetch(&hit.url)
                };
                let page: FetchedPage = match page {
                    Ok(p) => p,
                    Err(FetchFailure::Unreachable(message)) => {
                        return Err(GatewayError::UnreachableUrl { url: hit.url.clone(), message })
                    }
                    Err(FetchFailure::NonText { content_type }) => {
                        return Err(GatewayError::NonTextContent {
                            url: hit.url.clone(),
                            content_type,
                        })
                    }
                    Err(FetchFailure::Empty) => {
                        return Err(GatewayError::ExtractionEmpty { url: hit.url.clone() })
                    }
                };
                if page.body_text.trim().is_empty() {
                    return Err(GatewayError::ExtractionEmpty { url: hit.url.clone() });
                }
                if let Ok(body) = serde_json::to_string(&page) {
                    self.store(&key, &body);
                }
                page
            }
        };
        let mut body_text = page.body_text;
        if body_text.chars().count() > self.doc_char_budget {
            body_text = body_text.chars().take(self.doc_char_budget).collect();
        }
        let title = if page.title.trim().is_empty() { hit.url.clone() } else { page.title };
        Ok(WebDocument {
            url: hit.url.clone(),
            title,
            body_text,
            goodness: None,
            relevance: None,
            search_rank: hit.rank,
        })
    }

    fn cached(&self, key: &CacheKey) -> Option<String> {
        self.cache.as_ref().and_then(|c| c.get(key))
    }

    fn store(&self, key: &CacheKey, value: &str) {
        if let Some(cache) = &self.cache {
            if let Err(e) = cache.put(key, value) {
                log::warn!("cache write failed: {e}");
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::mock::{FnChat, MockChat, MockFetcher, MockSearch};
    use super::*;
    use std::sync::atomic::{AtomicU32, Ordering};
    use std::sync::Arc;

    fn zero_backoff() -> GatewayBuilder {
        Gateway::builder().backoff(Duration::ZERO)
    }

    #[test]
    fn complete_rejects_empty_prompt() {
        let gw = zero_backoff().chat(MockChat::new()).build();
        let req = CompletionRequest {
            prompt: "  ".into(),
            model: "m".into(),
            temperature: 0.0,
            max_tokens: 16,
        };
        assert!(matches!(gw.complete(&req), Err(GatewayError::InvalidRequest(_))));
    }

    #[test]
    fn transient_failures_exhaust_into_unreachable() {
        let calls = Arc::new(AtomicU32::new(0));
        let counter = calls.clone();
        let chat = FnChat::new(move |_req| {
            counter.fetch_add(1, Ordering::SeqCst);
            Err(ProviderFailure::Transient("http 500".into()))
        });
        let gw = zero_backoff().chat(chat).retries(3).build();
        let req = ModelParams { model: "m".into(), temperature: 0.0, max_tokens: 8 }.request("p");
        match gw.complete(&req) {
            Err(GatewayError::ProviderUnreachable { attempts, .. }) => assert_eq!(attempts, 3),
            other => panic!("expected unreachable, got {other:?}"),
        }
        assert_eq!(calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn quota_exhaustion_is_not_retried() {
        let calls = Arc::new(AtomicU32::new(0));
        let counter = calls.clone();
        let chat = FnChat::new(move |_req| {
            counter.fetch_add(1, Ordering::SeqCst);
            Err(ProviderFailure::Quota("insufficient_quota".into()))
        });
        let gw = zero_backoff().chat(chat).retries(5).build();
        let req = ModelParams { model: "m".into(), temperature: 0.0, max_tokens: 8 }.request("p");
        assert!(matches!(gw.complete(&req), Err(GatewayError::QuotaExhausted(_))));
        assert_eq!(calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn transient_then_success_recovers() {
        let calls = Arc::new(AtomicU32::new(0));
        let counter = calls.clone();
        let chat = FnChat::new(move |_req| {
            if counter.fetch_add(1, Ordering::SeqCst) == 0 {
                Err(ProviderFailure::Transient("http 503".into()))
            } else {
                Ok("recovered".into())
            }
        });
        let gw = zero_backoff().chat(chat).retries(3).build();
        let req = ModelParams { model: "m".into(), temperature: 0.0, max_tokens: 8 }.request("p");
        assert_eq!(gw.complete(&req).unwrap(), "recovered");
    }

    #[test]
    fn cache_short_circuits_the_provider() {
        let dir = tempfile::tempdir().unwrap();
        let params = ModelParams { model: "m".into(), temperature: 0.0, max_tokens: 8 };
        let mut mock = MockChat::new();
        mock.stub(&params, "p", "cached answer");
        let gw = zero_backoff()
            .chat(mock)
            .cache(DiskCache::open(dir.path()).unwrap())
            .build();
        let req = params.request("p");
        assert_eq!(gw.complete(&req).unwrap(), "cached answer");

        // Second gateway over the same cache dir with a provider that knows
        // nothing: the cache must answer.
        let empty = MockChat::new();
        let gw2 = zero_backoff()
            .chat(empty)
            .cache(DiskCache::open(dir.path()).unwrap())
            .build();
        assert_eq!(gw2.complete(&req).unwrap(), "cached answer");
    }

    #[test]
    fn search_truncates_and_normalizes_ranks() {
        let mut search = MockSearch::new();
        search.stub(
            "how to write",
            (1..=8)
                .map(|i| SearchHit { url: format!("https://e{i}.example"), title: format!("t{i}"), rank: 99 })
                .collect(),
        );
        let gw = zero_backoff().chat(MockChat::new()).search(search).build();
        let hits = gw.search("how to write", 5).unwrap();
        assert_eq!(hits.len(), 5);
        assert_eq!(hits[0].rank, 1);
        assert_eq!(hits[4].rank, 5);
    }

    #[test]
    fn fetch_truncates_to_char_budget_exactly() {
        let mut fetcher = MockFetcher::new();
        fetcher.stub("https://long.example", "t", &"x".repeat(50_000));
        let gw = zero_backoff()
            .chat(MockChat::new())
            .fetcher(fetcher)
            .doc_char_budget(1000)
            .build();
        let hit = SearchHit { url: "https://long.example".into(), title: "t".into(), rank: 1 };
        let doc = gw.fetch_and_extract(&hit).unwrap();
        assert_eq!(doc.body_text.chars().count(), 1000);
    }

    #[test]
    fn fetch_failures_surface_distinctly() {
        let fetcher = MockFetcher::new(); // knows no urls -> unreachable
        let gw = zero_backoff().chat(MockChat::new()).fetcher(fetcher).build();
        let hit = SearchHit { url: "https://gone.example".into(), title: "t".into(), rank: 1 };
        assert!(matches!(
            gw.fetch_and_extract(&hit),
            Err(GatewayError::UnreachableUrl { .. })
        ));

        let mut fetcher = MockFetcher::new();
        fetcher.stub("https://empty.example", "t", "   ");
        let gw = zero_backoff().chat(MockChat::new()).fetcher(fetcher).build();
        let hit = SearchHit { url: "https://empty.example".into(), title: "t".into(), rank: 1 };
        assert!(matches!(
            gw.fetch_and_extract(&hit),
            Err(GatewayError::ExtractionEmpty { .. })
        ));
    }

    #[test]
    fn permits_bound_concurrent_calls() {
        let in_flight = Arc::new(AtomicU32::new(0));
        let peak = Arc::new(AtomicU32::new(0));
        let (inf, pk) = (in_flight.clone(), peak.clone());
        let chat = FnChat::new(move |_req| {
            let now = inf.fetch_add(1, Ordering::SeqCst) + 1;
            pk.fetch_max(now, Ordering::SeqCst);
            std::thread::sleep(Duration::from_millis(5));
            inf.fetch_sub(1, Ordering::SeqCst);
            Ok("ok".into())
        });
        let gw = zero_backoff().chat(chat).parallelism(2).build();
        let params = ModelParams { model: "m".into(), temperature: 0.0, max_tokens: 8 };
        std::thread::scope(|scope| {
            for i in 0..8 {
                let req = params.request(format!("p{i}"));
                let gw = &gw;
                scope.spawn(move || gw.complete(&req).unwrap());
            }
        });
        assert!(peak.load(Ordering::SeqCst) <= 2, "peak {}", peak.load(Ordering::SeqCst));
    }
}
