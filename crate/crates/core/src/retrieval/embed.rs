//! Text embedding providers and the caching front end used by retrieval.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::graph::{EmbeddingError, EmbeddingVector};
use crate::http::{is_retryable_status, Transport, TransportError, UreqTransport};
use crate::retry::RetryPolicy;

/// Hex SHA-256 of the text, the cache and fixture key.
pub fn text_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum ProviderError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("provider returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed provider response: {0}")]
    Malformed(String),
    #[error("no fixture vector for text hash {0}")]
    MissingFixture(String),
}

impl ProviderError {
    pub fn is_retryable(&self) -> bool {
        match self {
            ProviderError::Transport(_) => true,
            ProviderError::Status { status, .. } => is_retryable_status(*status),
            _ => false,
        }
    }
}

pub trait EmbeddingProvider: Send + Sync {
    fn id(&self) -> String;
    fn embed(&self, text: &str) -> Result<Vec<f32>, ProviderError>;
}

/// OpenAI-compatible `/embeddings` endpoint.
pub struct HttpEmbeddingProvider {
    transport: Arc<dyn Transport>,
    base_url: String,
    model: String,
    api_key: Option<String>,
}

#[derive(Deserialize)]
struct EmbeddingsResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f64>,
}

impl HttpEmbeddingProvider {
    pub fn new(transport: Arc<dyn Transport>, base_url: impl Into<String>, model: impl Into<String>, api_key: Option<String>) -> Self {
        HttpEmbeddingProvider {
            transport,
            base_url: base_url.into().trim_end_matches('/').to_string(),
            model: model.into(),
            api_key,
        }
    }

    /// Reads `EMBEDDING_BASE_URL`, `EMBEDDING_MODEL` and `EMBEDDING_API_KEY`
    /// (falling back to `OPENAI_API_KEY`).
    pub fn from_env() -> Self {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        Self::new(
            Arc::new(UreqTransport::default()),
            var("EMBEDDING_BASE_URL").unwrap_or_else(|| "https://api.openai.com/v1".into()),
            var("EMBEDDING_MODEL").unwrap_or_else(|| "text-embedding-3-large".into()),
            var("EMBEDDING_API_KEY").or_else(|| var("OPENAI_API_KEY")),
        )
    }
}

impl EmbeddingProvider for HttpEmbeddingProvider {
    fn id(&self) -> String {
        format!("http:{}", self.model)
    }

    fn embed(&self, text: &str) -> Result<Vec<f32>, ProviderError> {
        let url = format!("{}/embeddings", self.base_url);
        let body = serde_json::json!({ "model": self.model, "input": [text] });
        let response = self.transport.post_json(&url, self.api_key.as_deref(), &body)?;
        if response.status != 200 {
            return Err(ProviderError::Status {
                status: response.status,
                body: response.body.chars().take(500).collect(),
            });
        }
        let parsed: EmbeddingsResponse =
            serde_json::from_str(&response.body).map_err(|e| ProviderError::Malformed(e.to_string()))?;
        let first = parsed
            .data
            .into_iter()
            .next()
            .ok_or_else(|| ProviderError::Malformed("empty data array".into()))?;
        Ok(first.embedding.into_iter().map(|v| v as f32).collect())
    }
}

/// One line of a mock embeddings fixture.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureVector {
    pub text_hash: String,
    pub vector: Vec<f32>,
}

/// Looks vectors up by text hash in a fixture table.
#[derive(Debug, Clone, Default)]
pub struct MockEmbeddingProvider {
    table: HashMap<String, Vec<f32>>,
}

impl MockEmbeddingProvider {
    pub fn load(path: &Path) -> std::io::Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut table = HashMap::new();
        for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: FixtureVector = serde_json::from_str(&line).map_err(|e| {
                std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{}:{}: {e}", path.display(), n + 1))
            })?;
            table.insert(row.text_hash, row.vector);
        }
        Ok(MockEmbeddingProvider { table })
    }

    pub fn insert(&mut self, text: &str, vector: Vec<f32>) {
        self.table.insert(text_hash(text), vector);
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl EmbeddingProvider for MockEmbeddingProvider {
    fn id(&self) -> String {
        "mock".into()
    }

    fn embed(&self, text: &str) -> Result<Vec<f32>, ProviderError> {
        let hash = text_hash(text);
        self.table
            .get(&hash)
            .cloned()
            .ok_or(ProviderError::MissingFixture(hash))
    }
}

/// Local feature-hashing embedder: each lowercase word is hashed to a signed
/// bucket and the result is L2-normalized. Offline and deterministic, which
/// makes it useful for fixtures and demos. It captures word overlap only.
#[derive(Debug, Clone, Copy)]
pub struct HashingEmbedder {
    pub dimension: usize,
}

impl HashingEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        HashingEmbedder { dimension }
    }

    fn bucket(&self, token: &str) -> (usize, f32) {
        let digest = Sha256::digest(token.as_bytes());
        let mut idx = [0u8; 8];
        idx.copy_from_slice(&digest[..8]);
        let index = (u64::from_le_bytes(idx) % self.dimension as u64) as usize;
        let sign = if digest[8] & 1 == 0 { 1.0 } else { -1.0 };
        (index, sign)
    }

    pub fn vector(&self, text: &str) -> Vec<f32> {
        let mut v = vec![0f64; self.dimension];
        let lower = text.to_lowercase();
        let mut any = false;
        for token in lower.split(|c: char| !c.is_alphanumeric()).filter(|t| t.len() > 1) {
            let (i, sign) = self.bucket(token);
            v[i] += f64::from(sign);
            any = true;
        }
        if !any || v.iter().all(|x| *x == 0.0) {
            let (i, _) = self.bucket(&lower);
            v[i] = 1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| (x / norm) as f32).collect()
    }
}

impl EmbeddingProvider for HashingEmbedder {
    fn id(&self) -> String {
        format!("hashing:{}", self.dimension)
    }

    fn embed(&self, text: &str) -> Result<Vec<f32>, ProviderError> {
        Ok(self.vector(text))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("provider returned dimension {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("provider returned an invalid vector: {0}")]
    Invalid(#[from] EmbeddingError),
    #[error("embedding provider failed after {retries} retries: {source}")]
    Provider {
        #[source]
        source: ProviderError,
        retries: u32,
    },
}

impl EmbedError {
    pub fn is_transient(&self) -> bool {
        matches!(self, EmbedError::Provider { source, .. } if source.is_retryable())
    }
}

type Slot = Arc<Mutex<Option<EmbeddingVector>>>;

/// Caching, retrying front end to an [`EmbeddingProvider`].
///
/// Results are cached by text hash. Each key has its own lock, so
/// concurrent misses on the same text result in a single provider call.
pub struct Embedder {
    provider: Arc<dyn EmbeddingProvider>,
    dimension: Option<usize>,
    retry: RetryPolicy,
    cache: Mutex<HashMap<String, Slot>>,
    calls: AtomicUsize,
}

impl Embedder {
    pub fn new(provider: Arc<dyn EmbeddingProvider>) -> Self {
        Embedder {
            provider,
            dimension: None,
            retry: RetryPolicy::default(),
            cache: Mutex::new(HashMap::new()),
            calls: AtomicUsize::new(0),
        }
    }

    /// Rejects vectors whose length differs from `dimension`.
    pub fn with_dimension(mut self, dimension: usize) -> Self {
        self.dimension = Some(dimension);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn provider_id(&self) -> String {
        self.provider.id()
    }

    /// Provider calls made so far, including retries.
    pub fn provider_calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        if text.trim().is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let slot = {
            let mut cache = self.cache.lock().expect("embedding cache poisoned");
            cache.entry(text_hash(text)).or_default().clone()
        };
        let mut slot = slot.lock().expect("embedding slot poisoned");
        if let Some(v) = slot.as_ref() {
            return Ok(v.clone());
        }
        let (values, _) = self
            .retry
            .run(
                || {
                    self.calls.fetch_add(1, Ordering::SeqCst);
                    self.provider.embed(text)
                },
                ProviderError::is_retryable,
            )
            .map_err(|(source, retries)| EmbedError::Provider { source, retries })?;
        if let Some(expected) = self.dimension {
            if values.len() != expected {
                return Err(EmbedError::Dimension {
                    expected,
                    found: values.len(),
                });
            }
        }
        let vector = EmbeddingVector::new(values)?;
        *slot = Some(vector.clone());
        Ok(vector)
    }
}
