//! Chat model access: prompt templates, backends, retry and rate limiting,
//! and parsers for the model's answers.

mod backend;
mod parse;
mod prompt;

use std::sync::{Arc, Condvar, Mutex};

use serde::{Deserialize, Serialize};

pub use backend::{BackendError, ChatBackend, ChatReply, HttpChatBackend, MockChatBackend, ScriptEntry, Usage};
pub use parse::{extract_lean_block, parse_judge_score, wrap_lean_block, ExtractError, JudgeScore, ScoreError};
pub use prompt::{
    fill, render_formal_prompt, render_informal_prompt, render_judge_prompt, FormalInputs, PromptBundle, TemplateId,
    EMPTY_PROOF, NO_CONTEXT,
};

use crate::retry::RetryPolicy;

/// Temperatures cycled across best-of-N candidates.
pub const TEMPERATURE_LADDER: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    /// Zero means greedy decoding.
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for SamplingParams {
    fn default() -> Self {
        SamplingParams {
            temperature: 0.0,
            top_p: 1.0,
            max_tokens: 2048,
            seed: None,
        }
    }
}

impl SamplingParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(format!("top_p must be in (0, 1], got {}", self.top_p));
        }
        if self.max_tokens == 0 {
            return Err("max_tokens must be positive".into());
        }
        Ok(())
    }

    /// Copy with the temperature of ladder position `index`.
    pub fn with_ladder(&self, index: usize) -> Self {
        SamplingParams {
            temperature: TEMPERATURE_LADDER[index % TEMPERATURE_LADDER.len()],
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelResponse {
    pub text: String,
    pub usage: Usage,
    pub backend_id: String,
    pub retries: u32,
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("chat completion failed after {retries} retries: {source}")]
pub struct GatewayError {
    #[source]
    pub source: BackendError,
    pub retries: u32,
}

/// Counting semaphore bounding concurrent backend calls.
struct Limiter {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Limiter {
    fn acquire(&self) -> LimiterGuard<'_> {
        let mut free = self.free.lock().expect("limiter poisoned");
        while *free == 0 {
            free = self.cv.wait(free).expect("limiter poisoned");
        }
        *free -= 1;
        LimiterGuard(self)
    }
}

struct LimiterGuard<'a>(&'a Limiter);

impl Drop for LimiterGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("limiter poisoned") += 1;
        self.0.cv.notify_one();
    }
}

/// Front end to a [`ChatBackend`] with bounded retries and an in-flight cap.
pub struct ModelGateway {
    backend: Arc<dyn ChatBackend>,
    retry: RetryPolicy,
    limiter: Limiter,
}

impl ModelGateway {
    pub fn new(backend: Arc<dyn ChatBackend>) -> Self {
        ModelGateway {
            backend,
            retry: RetryPolicy::default(),
            limiter: Limiter {
                free: Mutex::new(8),
                cv: Condvar::new(),
            },
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_max_in_flight(self, n: usize) -> Self {
        *self.limiter.free.lock().expect("limiter poisoned") = n.max(1);
        self
    }

    pub fn backend_id(&self) -> String {
        self.backend.id()
    }

    pub fn complete(&self, problem_id: &str, prompt: &PromptBundle, params: &SamplingParams) -> Result<ModelResponse, GatewayError> {
        let _slot = self.limiter.acquire();
        let (reply, retries) = self
            .retry
            .run(|| self.backend.complete(problem_id, prompt, params), BackendError::is_retryable)
            .map_err(|(source, retries)| GatewayError { source, retries })?;
        Ok(ModelResponse {
            text: reply.text,
            usage: reply.usage,
            backend_id: self.backend.id(),
            retries,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::http::{HttpResponse, Transport, TransportError};

    struct Flaky {
        failures: Mutex<u32>,
    }

    impl Transport for Flaky {
        fn post_json(&self, url: &str, _bearer: Option<&str>, _body: &serde_json::Value) -> Result<HttpResponse, TransportError> {
            let mut left = self.failures.lock().unwrap();
            if *left > 0 {
                *left -= 1;
                return Err(TransportError {
                    url: url.into(),
                    message: "timed out".into(),
                });
            }
            Ok(HttpResponse {
                status: 200,
                body: r#"{"choices":[{"message":{"content":"ok"}}],"usage":{"prompt_tokens":3,"completion_tokens":1}}"#.into(),
            })
        }
    }

    fn prompt() -> PromptBundle {
        PromptBundle {
            template_id: TemplateId::Informal,
            role_header: String::new(),
            body: "x".into(),
        }
    }

    #[test]
    fn timeouts_then_success_records_retries() {
        let transport = Arc::new(Flaky {
            failures: Mutex::new(2),
        });
        let backend = HttpChatBackend::new(transport, "http://h", "m", None);
        let gw = ModelGateway::new(Arc::new(backend)).with_retry(RetryPolicy::immediate(3));
        let r = gw.complete("p", &prompt(), &SamplingParams::default()).unwrap();
        assert_eq!(r.text, "ok");
        assert_eq!(r.retries, 2);
        assert_eq!(r.usage.prompt_tokens, 3);
    }

    #[test]
    fn exhausted_retries_surface_transport_error() {
        let transport = Arc::new(Flaky {
            failures: Mutex::new(10),
        });
        let backend = HttpChatBackend::new(transport, "http://h", "m", None);
        let gw = ModelGateway::new(Arc::new(backend)).with_retry(RetryPolicy::immediate(3));
        let err = gw.complete("p", &prompt(), &SamplingParams::default()).unwrap_err();
        assert_eq!(err.retries, 3);
        assert!(matches!(err.source, BackendError::Transport(_)));
    }

    #[test]
    fn ladder_cycles() {
        let base = SamplingParams::default();
        let temps: Vec<f64> = (0..6).map(|i| base.with_ladder(i).temperature).collect();
        assert_eq!(temps, vec![0.2, 0.4, 0.6, 0.8, 1.0, 0.2]);
        assert!(SamplingParams { top_p: 0.0, ..base }.validate().is_err());
    }
}
