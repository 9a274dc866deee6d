//! Error types. Gateway and parser failures get their own enums because
//! callers branch on them (retry vs. skip vs. degrade); everything else rolls
//! up into [`Error`].

use thiserror::Error;

/// Failures while decoding structured content out of free-form model output.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no 'therefore, the answer is yes/no' marker in model output")]
    MarkerAbsent,
    #[error("no integer found in model output")]
    NoIntegerFound,
    #[error("integer {value} outside expected range [{lo}, {hi}]")]
    OutOfRange { value: i64, lo: i64, hi: i64 },
    #[error("no list entries found in model output")]
    EmptyList,
    #[error("no JSON object found in model output")]
    NoJsonFound,
    #[error("malformed JSON in model output: {0}")]
    MalformedJson(String),
}

/// Failures raised by the provider gateway. Unreachable-after-retries and
/// quota exhaustion are distinct so callers can tell a flaky network from a
/// spent budget.
#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("provider unreachable after {attempts} attempt(s): {message}")]
    ProviderUnreachable { attempts: u32, message: String },
    #[error("provider quota exhausted: {0}")]
    QuotaExhausted(String),
    #[error("provider rejected request: {0}")]
    ProviderRejected(String),
    #[error("could not reach url {url}: {message}")]
    UnreachableUrl { url: String, message: String },
    #[error("non-text content at {url} ({content_type})")]
    NonTextContent { url: String, content_type: String },
    #[error("extracted no text from {url}")]
    ExtractionEmpty { url: String },
    #[error("cache error: {0}")]
    Cache(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("query generation failed for instruction '{instruction_id}': {reason}")]
    QueryGenerationFailed { instruction_id: String, reason: String },
    #[error("retrieval failed for query '{query}': {reason}")]
    RetrievalFailed { query: String, reason: String },
    #[error("no usable answers to summarize for query '{query}'")]
    AllAnswersEmpty { query: String },
    #[error("pipeline stage '{stage}' failed: {reason}")]
    StageFailed { stage: &'static str, reason: String },
    #[error("criteria pool is empty")]
    EmptyPool,
    #[error("criterion has no content tokens: '{0}'")]
    UndefinedSpecificity(String),
    #[error("judge failed for criterion '{criterion}': {reason}")]
    JudgeFailed { criterion: String, reason: String },
    #[error("edit failed for criterion '{criterion}': {reason}")]
    EditFailed { criterion: String, reason: String },
    #[error("invalid {kind}: {reason}")]
    InvalidData { kind: &'static str, reason: String },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
