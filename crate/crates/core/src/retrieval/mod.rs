//! Semantic search over the graph: cosine top-k seeds, breadth-first
//! expansion scored against the query, and prompt-ready rendering.

mod embed;

use std::collections::HashSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use embed::{
    text_hash, EmbedError, Embedder, EmbeddingProvider, FixtureVector, HashingEmbedder, HttpEmbeddingProvider,
    MockEmbeddingProvider, ProviderError,
};

use crate::graph::{Direction, EmbeddingVector, GraphStore};
use crate::model::{Node, NodeId, RelType};

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("cosine of a zero-norm vector")]
    ZeroNorm,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("store has no embeddings attached")]
    NoEmbeddings,
    #[error("node {0} has no embedding")]
    MissingEmbedding(NodeId),
    #[error("node {0} not in store")]
    UnknownNode(NodeId),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

/// Cosine similarity computed in double precision.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, RetrievalError> {
    cosine_slices(a.values(), b.values())
}

pub fn cosine_slices(a: &[f32], b: &[f32]) -> Result<f64, RetrievalError> {
    if a.len() != b.len() {
        return Err(RetrievalError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let (mut dot, mut na, mut nb) = (0f64, 0f64, 0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (f64::from(x), f64::from(y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(RetrievalError::ZeroNorm);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

fn score(store: &GraphStore, query: &EmbeddingVector, id: NodeId) -> Result<f64, RetrievalError> {
    if !store.contains(id) {
        return Err(RetrievalError::UnknownNode(id));
    }
    let v = store.embedding(id).ok_or(RetrievalError::MissingEmbedding(id))?;
    cosine(query, v)
}

/// Descending score, then ascending id.
fn rank(scored: &mut [(NodeId, f64)]) {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
}

/// The `k` nodes most similar to `query`, best first. Ties go to the lower id.
pub fn top_k_seed(store: &GraphStore, query: &EmbeddingVector, k: usize) -> Result<Vec<(NodeId, f64)>, RetrievalError> {
    if !store.fully_embedded() {
        return Err(RetrievalError::NoEmbeddings);
    }
    let mut scored = store
        .embeddings()
        .map(|(id, v)| cosine(query, v).map(|s| (id, s)))
        .collect::<Result<Vec<_>, _>>()?;
    rank(&mut scored);
    scored.truncate(k);
    Ok(scored)
}

/// Takes the deterministic top-`k`, shuffles it with a seeded generator and
/// keeps the first `keep` ids.
pub fn shuffled_top_k(
    store: &GraphStore,
    query: &EmbeddingVector,
    k: usize,
    seed: u64,
    keep: usize,
) -> Result<Vec<NodeId>, RetrievalError> {
    let mut ids: Vec<NodeId> = top_k_seed(store, query, k)?.into_iter().map(|(id, _)| id).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    ids.truncate(keep);
    Ok(ids)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContextEntry {
    pub node_id: NodeId,
    pub score: f64,
    pub hop: usize,
}

/// Breadth-first expansion from `seeds`, ignoring edge direction.
///
/// At each hop the unvisited neighbors of the previous hop are scored
/// against `query` and the best `per_hop_k` are kept. Seeds stay in the
/// given order at hop 0; later hops are ordered by score.
pub fn expand(
    store: &GraphStore,
    query: &EmbeddingVector,
    seeds: &[NodeId],
    depth: usize,
    per_hop_k: usize,
    types: Option<&[RelType]>,
) -> Result<Vec<ContextEntry>, RetrievalError> {
    let mut visited = HashSet::new();
    let mut entries = Vec::new();
    for &id in seeds {
        if visited.insert(id) {
            entries.push(ContextEntry {
                node_id: id,
                score: score(store, query, id)?,
                hop: 0,
            });
        }
    }
    let mut frontier: Vec<NodeId> = entries.iter().map(|e| e.node_id).collect();
    for hop in 1..=depth {
        let mut candidates = HashSet::new();
        for &id in &frontier {
            let neighbors: Vec<NodeId> = match types {
                None => store
                    .neighbor_ids(id, Direction::Both)
                    .map_err(|_| RetrievalError::UnknownNode(id))?,
                Some(t) => store
                    .neighbors(id, Direction::Both, Some(t))
                    .map_err(|_| RetrievalError::UnknownNode(id))?
                    .into_iter()
                    .map(|(n, _)| n.id)
                    .collect(),
            };
            candidates.extend(neighbors.into_iter().filter(|n| !visited.contains(n)));
        }
        let mut scored = candidates
            .into_iter()
            .map(|id| score(store, query, id).map(|s| (id, s)))
            .collect::<Result<Vec<_>, _>>()?;
        rank(&mut scored);
        scored.truncate(per_hop_k);
        if scored.is_empty() {
            break;
        }
        frontier.clear();
        for (id, s) in scored {
            visited.insert(id);
            frontier.push(id);
            entries.push(ContextEntry {
                node_id: id,
                score: s,
                hop,
            });
        }
    }
    Ok(entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderBudget {
    pub per_node_chars: usize,
    pub total_chars: usize,
}

impl Default for RenderBudget {
    fn default() -> Self {
        RenderBudget {
            per_node_chars: 4000,
            total_chars: 24000,
        }
    }
}

fn truncate_chars(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

/// Renders each node as `## {title}\n{content}`, blocks separated by a
/// blank line, within the character budget.
pub fn render_nodes<'a>(nodes: impl IntoIterator<Item = &'a Node>, budget: RenderBudget) -> String {
    let blocks: Vec<String> = nodes
        .into_iter()
        .map(|n| truncate_chars(&format!("## {}\n{}", n.title, n.content), budget.per_node_chars).to_string())
        .collect();
    truncate_chars(&blocks.join("\n\n"), budget.total_chars).trim_end().to_string()
}

/// Rough token count: one token per four characters, rounded up.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalQuery {
    pub query_text: String,
    pub k: usize,
    pub depth: usize,
    /// Enables shuffled seed selection.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Seeds kept after shuffling; defaults to half of `k`, rounded up.
    #[serde(default)]
    pub shuffle_keep: Option<usize>,
}

impl RetrievalQuery {
    pub fn new(query_text: impl Into<String>, k: usize, depth: usize) -> Self {
        RetrievalQuery {
            query_text: query_text.into(),
            k,
            depth,
            seed: None,
            shuffle_keep: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RetrievalContext {
    pub entries: Vec<ContextEntry>,
    pub rendered: String,
    pub token_estimate: usize,
}

impl RetrievalContext {
    pub fn node_ids(&self) -> Vec<NodeId> {
        self.entries.iter().map(|e| e.node_id).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Text embedded for a node: its title, a newline, then its content.
pub fn node_embedding_text(node: &Node) -> String {
    format!("{}\n{}", node.title, node.content)
}

/// Embeds every node of `store` in id order.
pub fn embed_nodes(store: &GraphStore, embedder: &Embedder) -> Result<Vec<(NodeId, EmbeddingVector)>, EmbedError> {
    store
        .nodes()
        .map(|n| embedder.embed(&node_embedding_text(n)).map(|v| (n.id, v)))
        .collect()
}

/// Query-time entry point over a sealed, embedded store.
pub struct Retriever {
    store: Arc<GraphStore>,
    embedder: Arc<Embedder>,
    budget: RenderBudget,
    types: Option<Vec<RelType>>,
}

impl Retriever {
    pub fn new(store: Arc<GraphStore>, embedder: Arc<Embedder>) -> Self {
        Retriever {
            store,
            embedder,
            budget: RenderBudget::default(),
            types: None,
        }
    }

    pub fn with_budget(mut self, budget: RenderBudget) -> Self {
        self.budget = budget;
        self
    }

    /// Restricts expansion to the given relationship types.
    pub fn with_types(mut self, types: Vec<RelType>) -> Self {
        self.types = Some(types);
        self
    }

    pub fn store(&self) -> &Arc<GraphStore> {
        &self.store
    }

    pub fn embedder(&self) -> &Arc<Embedder> {
        &self.embedder
    }

    /// Embeds the query, selects seeds, expands `depth` hops with `k` nodes
    /// per hop and renders the result.
    ///
    /// With a seed, the seed nodes are a shuffled subset of the top `k`;
    /// they are still listed best first.
    pub fn retrieve(&self, query: &RetrievalQuery) -> Result<RetrievalContext, RetrievalError> {
        if query.k == 0 {
            return Err(RetrievalError::InvalidQuery("k must be at least 1".into()));
        }
        let store = self.store.as_ref();
        let qv = self.embedder.embed(&query.query_text)?;
        if let Some(dim) = store.dimension() {
            if dim != qv.dimension() {
                return Err(RetrievalError::DimensionMismatch {
                    left: qv.dimension(),
                    right: dim,
                });
            }
        }
        let seeds: Vec<NodeId> = match query.seed {
            None => top_k_seed(store, &qv, query.k)?.into_iter().map(|(id, _)| id).collect(),
            Some(seed) => {
                let keep = query.shuffle_keep.unwrap_or(query.k.div_ceil(2)).max(1);
                let ids = shuffled_top_k(store, &qv, query.k, seed, keep)?;
                let mut scored = ids
                    .into_iter()
                    .map(|id| score(store, &qv, id).map(|s| (id, s)))
                    .collect::<Result<Vec<_>, _>>()?;
                rank(&mut scored);
                scored.into_iter().map(|(id, _)| id).collect()
            }
        };
        let entries = expand(store, &qv, &seeds, query.depth, query.k, self.types.as_deref())?;
        let rendered = render_nodes(entries.iter().filter_map(|e| store.node(e.node_id)), self.budget);
        tracing::debug!(nodes = entries.len(), chars = rendered.len(), "context retrieved");
        Ok(RetrievalContext {
            token_estimate: estimate_tokens(&rendered),
            entries,
            rendered,
        })
    }
}
