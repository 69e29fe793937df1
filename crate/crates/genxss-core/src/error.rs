use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: malformed line: {reason}")]
    MalformedLine {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("duplicate payload id {id:?}")]
    DuplicateId { id: String },

    #[error("payload {id:?} violates invariant: {reason}")]
    InvalidPayload { id: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("ruleset line {line}: {reason}")]
    RuleSyntax { line: usize, reason: String },

    #[error("no SecRule lines found in response")]
    NoRulesFound,

    #[error("extracted ruleset failed to parse: {0}")]
    ExtractedRulesetInvalid(Box<Error>),

    #[error("prompt error: {0}")]
    Prompt(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("API key environment variable {var} is not set")]
    MissingApiKey { var: String },

    #[error("no mock fixture for prompt hash {hash}")]
    MissingMockFixture { hash: String, prompt: String },

    #[error("provider returned no parsable payloads")]
    EmptyLlmOutput,

    #[error("HTTP {status} from provider (not retryable)")]
    HttpStatus { status: u16 },

    #[error("retries exhausted after {attempts} attempts (last status {last_status})")]
    RetriesExhausted { attempts: u32, last_status: u16 },

    #[error("request timed out")]
    Timeout,

    #[error("network error: {0}")]
    Network(String),

    #[error("malformed provider response: {0}")]
    BadResponse(String),

    #[error("payload {id:?} has waf_outcome untested")]
    UntestedPayload { id: String },

    #[error("confusion matrix is all zeros")]
    EmptyConfusionMatrix,

    #[error("nothing to refine: feedback report is empty")]
    EmptyFeedback,

    #[error("annotations file {path}: {reason}")]
    BadAnnotations { path: String, reason: String },

    #[error("server bind failed on {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
