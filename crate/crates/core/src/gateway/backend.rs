//! Chat backends: an OpenAI-compatible HTTP client and a scripted mock.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::{PromptBundle, SamplingParams, TemplateId};
use crate::http::{is_retryable_status, Transport, TransportError, UreqTransport};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatReply {
    pub text: String,
    pub usage: Usage,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum BackendError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("chat backend returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed chat response: {0}")]
    Malformed(String),
    #[error("mock script has no response for problem `{problem_id}`, template {template_id}, turn {turn}")]
    ScriptExhausted {
        problem_id: String,
        template_id: TemplateId,
        turn: u32,
    },
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        match self {
            BackendError::Transport(_) => true,
            BackendError::Status { status, .. } => is_retryable_status(*status),
            _ => false,
        }
    }
}

pub trait ChatBackend: Send + Sync {
    fn id(&self) -> String;
    fn complete(&self, problem_id: &str, prompt: &PromptBundle, params: &SamplingParams) -> Result<ChatReply, BackendError>;
}

/// OpenAI-compatible `/chat/completions` client.
pub struct HttpChatBackend {
    transport: Arc<dyn Transport>,
    base_url: String,
    model: String,
    api_key: Option<String>,
}

#[derive(Deserialize)]
struct ChatCompletion {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    #[serde(default)]
    content: Option<String>,
}

impl HttpChatBackend {
    pub fn new(transport: Arc<dyn Transport>, base_url: impl Into<String>, model: impl Into<String>, api_key: Option<String>) -> Self {
        HttpChatBackend {
            transport,
            base_url: base_url.into().trim_end_matches('/').to_string(),
            model: model.into(),
            api_key,
        }
    }

    /// Reads `CHAT_BASE_URL`, `CHAT_MODEL` and `CHAT_API_KEY` (falling back
    /// to `OPENAI_API_KEY`).
    pub fn from_env() -> Self {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        Self::new(
            Arc::new(UreqTransport::default()),
            var("CHAT_BASE_URL").unwrap_or_else(|| "https://api.openai.com/v1".into()),
            var("CHAT_MODEL").unwrap_or_else(|| "gpt-4o".into()),
            var("CHAT_API_KEY").or_else(|| var("OPENAI_API_KEY")),
        )
    }

    pub fn request_body(&self, prompt: &PromptBundle, params: &SamplingParams) -> serde_json::Value {
        let mut body = serde_json::json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": prompt.role_header},
                {"role": "user", "content": prompt.body},
            ],
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_tokens,
        });
        if let Some(seed) = params.seed {
            body["seed"] = seed.into();
        }
        body
    }
}

impl ChatBackend for HttpChatBackend {
    fn id(&self) -> String {
        format!("http:{}", self.model)
    }

    fn complete(&self, _problem_id: &str, prompt: &PromptBundle, params: &SamplingParams) -> Result<ChatReply, BackendError> {
        let url = format!("{}/chat/completions", self.base_url);
        let response = self
            .transport
            .post_json(&url, self.api_key.as_deref(), &self.request_body(prompt, params))?;
        if response.status != 200 {
            return Err(BackendError::Status {
                status: response.status,
                body: response.body.chars().take(500).collect(),
            });
        }
        let parsed: ChatCompletion =
            serde_json::from_str(&response.body).map_err(|e| BackendError::Malformed(e.to_string()))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| BackendError::Malformed("no choices".into()))?;
        Ok(ChatReply {
            text: choice.message.content.unwrap_or_default(),
            usage: parsed.usage.unwrap_or_default(),
        })
    }
}

/// One line of a mock chat script.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    /// A problem name, or `*` for any problem.
    pub problem_id: String,
    pub template_id: TemplateId,
    /// 1-based call index per (problem, template); absent matches any turn.
    #[serde(default)]
    pub turn: Option<u32>,
    pub response_text: String,
}

/// Replays scripted responses keyed by (problem, template, turn).
///
/// Each (problem, template) pair has its own turn counter, so problems
/// running in parallel never consume each other's entries. Lookup prefers
/// an exact problem over `*`, and an exact turn over a turnless entry.
#[derive(Debug, Default)]
pub struct MockChatBackend {
    exact: HashMap<(String, TemplateId, Option<u32>), String>,
    cursors: Mutex<HashMap<(String, TemplateId), u32>>,
    calls: AtomicUsize,
}

impl MockChatBackend {
    pub fn new(entries: impl IntoIterator<Item = ScriptEntry>) -> Self {
        let mut exact = HashMap::new();
        for e in entries {
            exact.entry((e.problem_id, e.template_id, e.turn)).or_insert(e.response_text);
        }
        MockChatBackend {
            exact,
            ..Default::default()
        }
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut entries = Vec::new();
        for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            entries.push(serde_json::from_str(&line).map_err(|e| {
                std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{}:{}: {e}", path.display(), n + 1))
            })?);
        }
        Ok(Self::new(entries))
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn lookup(&self, problem_id: &str, template: TemplateId, turn: u32) -> Option<&String> {
        [
            (problem_id, Some(turn)),
            (problem_id, None),
            ("*", Some(turn)),
            ("*", None),
        ]
        .into_iter()
        .find_map(|(p, t)| self.exact.get(&(p.to_string(), template, t)))
    }
}

impl ChatBackend for MockChatBackend {
    fn id(&self) -> String {
        "mock".into()
    }

    fn complete(&self, problem_id: &str, prompt: &PromptBundle, _params: &SamplingParams) -> Result<ChatReply, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let turn = {
            let mut cursors = self.cursors.lock().expect("mock cursor poisoned");
            let c = cursors.entry((problem_id.to_string(), prompt.template_id)).or_insert(0);
            *c += 1;
            *c
        };
        let text = self
            .lookup(problem_id, prompt.template_id, turn)
            .ok_or_else(|| BackendError::ScriptExhausted {
                problem_id: problem_id.to_string(),
                template_id: prompt.template_id,
                turn,
            })?;
        Ok(ChatReply {
            text: text.clone(),
            usage: Usage {
                prompt_tokens: prompt.body.chars().count().div_ceil(4) as u64,
                completion_tokens: text.chars().count().div_ceil(4) as u64,
            },
        })
    }
}
