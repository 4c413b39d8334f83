use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::gateway::{ModelGateway, SamplingParams};
use crate::retrieval::Retriever;
use crate::verifier::{Verifier, DEFAULT_TIMEOUT};

/// How context is gathered before generating a proof.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// No retrieval.
    Base,
    /// Flat top-k similarity search.
    Rag,
    /// Top-k seeds expanded through the graph, one hop deeper per attempt.
    Graph,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Base, Method::Rag, Method::Graph];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Base => "base",
            Method::Rag => "rag",
            Method::Graph => "graph",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "base" => Ok(Method::Base),
            "rag" => Ok(Method::Rag),
            "graph" | "graphs" => Ok(Method::Graph),
            other => Err(ConfigError(format!("unknown method `{other}` (expected base, rag or graph)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid configuration: {0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub method: Method,
    /// Attempts per problem.
    pub attempts: u32,
    /// Deepest graph expansion used by the graph method.
    pub max_depth: usize,
    pub top_k: usize,
    pub sampling: SamplingParams,
    /// Enables shuffled seed selection during retrieval.
    pub seed: Option<u64>,
    pub beam_width: usize,
    pub search_depth: usize,
    pub n_candidates: usize,
    pub verify_timeout_secs: u64,
    /// Below this many retrieved nodes a failure counts as missing knowledge.
    pub context_floor: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            method: Method::Graph,
            attempts: 3,
            max_depth: 2,
            top_k: 5,
            sampling: SamplingParams::default(),
            seed: None,
            beam_width: 3,
            search_depth: 2,
            n_candidates: 5,
            verify_timeout_secs: DEFAULT_TIMEOUT.as_secs(),
            context_floor: 1,
        }
    }
}

impl RunConfig {
    pub fn for_method(method: Method) -> Self {
        RunConfig {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("attempts", self.attempts as usize),
            ("top_k", self.top_k),
            ("beam_width", self.beam_width),
            ("search_depth", self.search_depth),
            ("n_candidates", self.n_candidates),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(ConfigError(format!("{name} must be at least 1")));
            }
        }
        self.sampling.validate().map_err(ConfigError)
    }

    /// Retrieval depth for 1-based attempt `t`, or `None` when the method
    /// does not retrieve.
    pub fn depth_for_attempt(&self, t: u32) -> Option<usize> {
        match self.method {
            Method::Base => None,
            Method::Rag => Some(0),
            Method::Graph => Some((t.saturating_sub(1) as usize).min(self.max_depth)),
        }
    }

    /// Retrieval depth for single-shot searches (best-of-N, tree search).
    pub fn search_context_depth(&self) -> Option<usize> {
        match self.method {
            Method::Base => None,
            Method::Rag => Some(0),
            Method::Graph => Some(self.max_depth),
        }
    }

    pub fn verify_timeout(&self) -> Duration {
        Duration::from_secs(self.verify_timeout_secs)
    }
}

/// Everything a proof run talks to.
#[derive(Clone)]
pub struct Services {
    /// Required unless the method is [`Method::Base`].
    pub retriever: Option<Arc<Retriever>>,
    pub gateway: Arc<ModelGateway>,
    pub verifier: Arc<dyn Verifier>,
}

impl Services {
    pub fn check(&self, config: &RunConfig) -> Result<(), ConfigError> {
        config.validate()?;
        if config.method != Method::Base && self.retriever.is_none() {
            return Err(ConfigError(format!("method {} needs a retriever", config.method)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_schedule() {
        let graph = RunConfig::for_method(Method::Graph);
        let depths: Vec<_> = (1..=5).map(|t| graph.depth_for_attempt(t)).collect();
        assert_eq!(depths, vec![Some(0), Some(1), Some(2), Some(2), Some(2)]);
        assert_eq!(RunConfig::for_method(Method::Rag).depth_for_attempt(3), Some(0));
        assert_eq!(RunConfig::for_method(Method::Base).depth_for_attempt(3), None);
    }

    #[test]
    fn defaults_and_validation() {
        let c = RunConfig::default();
        assert_eq!((c.attempts, c.max_depth, c.top_k), (3, 2, 5));
        assert!(c.validate().is_ok());
        assert!(RunConfig { attempts: 0, ..c.clone() }.validate().is_err());
        assert_eq!("Graphs".parse::<Method>().unwrap(), Method::Graph);
        assert!("hybrid".parse::<Method>().is_err());
        let partial: RunConfig = serde_json::from_str(r#"{"method":"rag","attempts":2}"#).unwrap();
        assert_eq!((partial.method, partial.attempts, partial.top_k), (Method::Rag, 2, 5));
    }
}
