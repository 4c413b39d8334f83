//! Wiring services from a JSON config file or a directory of mock scripts.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::gateway::{HttpChatBackend, MockChatBackend, ModelGateway};
use crate::graph::{GraphError, GraphStore};
use crate::http::UreqTransport;
use crate::pipeline::Services;
use crate::retrieval::{EmbeddingProvider, Embedder, HashingEmbedder, HttpEmbeddingProvider, MockEmbeddingProvider, Retriever};
use crate::retry::RetryPolicy;
use crate::verifier::{LeanVerifier, MockVerifier, Verifier};

pub const MOCK_CHAT_FILE: &str = "chat.jsonl";
pub const MOCK_VERIFIER_FILE: &str = "verifier.jsonl";
pub const MOCK_EMBEDDINGS_FILE: &str = "embeddings.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("graph has no embeddings; run `embed` first")]
    NotEmbedded,
}

/// An OpenAI-compatible endpoint. The key is read from the environment
/// variable named by `api_key_env`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    pub api_key_env: String,
    pub timeout_secs: u64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            base_url: "https://api.openai.com/v1".into(),
            model: String::new(),
            api_key_env: "OPENAI_API_KEY".into(),
            timeout_secs: 120,
        }
    }
}

impl EndpointConfig {
    fn api_key(&self) -> Option<String> {
        std::env::var(&self.api_key_env).ok().filter(|k| !k.is_empty())
    }

    fn transport(&self) -> Arc<UreqTransport> {
        Arc::new(UreqTransport::new(Duration::from_secs(self.timeout_secs)))
    }
}

/// Which embedding source to use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EmbeddingConfig {
    Http(EndpointConfig),
    /// Offline feature hashing with the given dimension.
    Hashing { dimension: usize },
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig::Http(EndpointConfig {
            model: "text-embedding-3-large".into(),
            ..EndpointConfig::default()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LeanConfig {
    /// Program and arguments with a `{file}` placeholder.
    pub command: Vec<String>,
    pub project_dir: Option<PathBuf>,
}

impl Default for LeanConfig {
    fn default() -> Self {
        let v = LeanVerifier::default();
        LeanConfig {
            command: v.command,
            project_dir: v.project_dir,
        }
    }
}

/// Live backend settings, loaded from a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub chat: EndpointConfig,
    pub embedding: EmbeddingConfig,
    pub lean: LeanConfig,
    pub workers: usize,
    /// Concurrent chat requests across all workers.
    pub max_in_flight: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            chat: EndpointConfig {
                model: "gpt-4o".into(),
                ..EndpointConfig::default()
            },
            embedding: EmbeddingConfig::default(),
            lean: LeanConfig::default(),
            workers: 4,
            max_in_flight: 8,
        }
    }
}

impl ServiceConfig {
    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path).map_err(|source| ServiceError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| ServiceError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn embedding_provider(&self) -> Arc<dyn EmbeddingProvider> {
        match &self.embedding {
            EmbeddingConfig::Http(e) => Arc::new(HttpEmbeddingProvider::new(e.transport(), &e.base_url, &e.model, e.api_key())),
            EmbeddingConfig::Hashing { dimension } => Arc::new(HashingEmbedder::new(*dimension)),
        }
    }

    pub fn verifier(&self) -> LeanVerifier {
        LeanVerifier {
            command: self.lean.command.clone(),
            project_dir: self.lean.project_dir.clone(),
            workspace_root: None,
        }
    }

    /// Live services over `store`.
    pub fn services(&self, store: Option<Arc<GraphStore>>) -> Result<Services, ServiceError> {
        let backend = HttpChatBackend::new(self.chat.transport(), &self.chat.base_url, &self.chat.model, self.chat.api_key());
        let gateway = ModelGateway::new(Arc::new(backend)).with_max_in_flight(self.max_in_flight);
        let embedder = Arc::new(Embedder::new(self.embedding_provider()));
        Ok(Services {
            retriever: store.map(|s| retriever(s, embedder)).transpose()?,
            gateway: Arc::new(gateway),
            verifier: Arc::new(self.verifier()),
        })
    }
}

fn retriever(store: Arc<GraphStore>, embedder: Arc<Embedder>) -> Result<Arc<Retriever>, ServiceError> {
    if store.dimension().is_none() {
        return Err(ServiceError::NotEmbedded);
    }
    Ok(Arc::new(Retriever::new(store, embedder)))
}

/// Loads and seals a graph directory (nodes.jsonl, edges.csv and an
/// optional embeddings.bin).
pub fn load_graph(dir: &Path) -> Result<Arc<GraphStore>, ServiceError> {
    if !dir.is_dir() {
        return Err(ServiceError::Io {
            path: dir.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "graph directory not found"),
        });
    }
    let mut store = GraphStore::load_dir(dir)?;
    store.seal();
    Ok(Arc::new(store))
}

fn load_script<T>(dir: &Path, name: &str, load: impl FnOnce(&Path) -> std::io::Result<T>) -> Result<T, ServiceError> {
    let path = dir.join(name);
    load(&path).map_err(|source| ServiceError::Io { path, source })
}

/// Mock chat and verifier scripts plus an embeddings table read from
/// `dir`. Without embeddings.jsonl, query vectors come from the hashing
/// embedder at the graph's dimension. Retries never sleep.
pub fn mock_services(dir: &Path, store: Option<Arc<GraphStore>>) -> Result<Services, ServiceError> {
    let chat = load_script(dir, MOCK_CHAT_FILE, MockChatBackend::load)?;
    let verifier: Arc<dyn Verifier> = Arc::new(load_script(dir, MOCK_VERIFIER_FILE, MockVerifier::load)?);
    let gateway = ModelGateway::new(Arc::new(chat)).with_retry(RetryPolicy::immediate(0));
    let retriever = match store {
        Some(store) => {
            let dim = store.dimension().ok_or(ServiceError::NotEmbedded)?;
            let table = dir.join(MOCK_EMBEDDINGS_FILE);
            let provider: Arc<dyn EmbeddingProvider> = if table.exists() {
                Arc::new(load_script(dir, MOCK_EMBEDDINGS_FILE, MockEmbeddingProvider::load)?)
            } else {
                Arc::new(HashingEmbedder::new(dim))
            };
            let embedder = Embedder::new(provider).with_retry(RetryPolicy::immediate(0));
            Some(retriever(store, Arc::new(embedder))?)
        }
        None => None,
    };
    Ok(Services {
        retriever,
        gateway: Arc::new(gateway),
        verifier,
    })
}
