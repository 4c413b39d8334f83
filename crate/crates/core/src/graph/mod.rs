//! File-backed typed property graph.
//!
//! A [`GraphStore`] is built by a single writer, then sealed and shared
//! behind an `Arc`. After sealing every method takes `&self`, so any number
//! of workers can read it concurrently.

mod embedding;
pub mod io;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;

pub use embedding::{EmbeddingError, EmbeddingVector};

use crate::model::{Edge, Node, NodeId, RelType};

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("nodes file line {line}: {message}")]
    NodesLine { line: usize, message: String },
    #[error("edges file line {line}: {message}")]
    EdgesLine { line: usize, message: String },
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("edge {from} -> {to} references an unknown node")]
    DanglingEdge { from: NodeId, to: NodeId },
    #[error("node {0} not found")]
    NotFound(NodeId),
    #[error("store is sealed")]
    Sealed,
    #[error("embedding for node {id}: dimension {found}, store dimension is {expected}")]
    DimensionMismatch { id: NodeId, expected: usize, found: usize },
    #[error("embedding for node {id}: {source}")]
    InvalidEmbedding {
        id: NodeId,
        #[source]
        source: EmbeddingError,
    },
    #[error("embedding for node {0} has zero norm")]
    ZeroNorm(NodeId),
    #[error("embeddings sidecar record for node {id}: {message}")]
    Sidecar { id: NodeId, message: String },
}

/// Which incident edges a neighbor query follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Adjacent {
    neighbor: NodeId,
    rel_type: RelType,
    outgoing: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StoreStats {
    pub node_count: usize,
    pub edge_count: usize,
    pub per_type: BTreeMap<RelType, usize>,
}

#[derive(Debug, Default)]
pub struct GraphStore {
    nodes: BTreeMap<NodeId, Node>,
    edges: Vec<Edge>,
    adjacency: BTreeMap<NodeId, Vec<Adjacent>>,
    embeddings: BTreeMap<NodeId, EmbeddingVector>,
    dimension: Option<usize>,
    sealed: bool,
}

impl GraphStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a store from in-memory parts, checking referential integrity.
    pub fn from_parts(nodes: impl IntoIterator<Item = Node>, edges: impl IntoIterator<Item = Edge>) -> Result<Self, GraphError> {
        let mut store = Self::new();
        for node in nodes {
            store.add_node(node)?;
        }
        for edge in edges {
            store.add_edge(edge)?;
        }
        Ok(store)
    }

    /// Loads a nodes JSONL file and an edges CSV file.
    pub fn load(nodes_path: &Path, edges_path: &Path) -> Result<Self, GraphError> {
        let mut store = Self::new();
        for (idx, node) in io::read_nodes(nodes_path)?.into_iter().enumerate() {
            store.add_node(node).map_err(|e| GraphError::NodesLine {
                line: idx + 1,
                message: e.to_string(),
            })?;
        }
        for (line, edge) in io::read_edges(edges_path)? {
            store.add_edge(edge).map_err(|e| GraphError::EdgesLine {
                line,
                message: e.to_string(),
            })?;
        }
        tracing::debug!(nodes = store.nodes.len(), edges = store.edges.len(), "graph loaded");
        Ok(store)
    }

    /// Loads `nodes.jsonl` and `edges.csv`, plus `embeddings.bin` when present.
    pub fn load_dir(dir: &Path) -> Result<Self, GraphError> {
        let mut store = Self::load(&dir.join(io::NODES_FILE), &dir.join(io::EDGES_FILE))?;
        let sidecar = dir.join(io::EMBEDDINGS_FILE);
        if sidecar.exists() {
            store.attach_embeddings(&sidecar)?;
        }
        Ok(store)
    }

    fn ensure_unsealed(&self) -> Result<(), GraphError> {
        if self.sealed {
            Err(GraphError::Sealed)
        } else {
            Ok(())
        }
    }

    pub fn add_node(&mut self, node: Node) -> Result<(), GraphError> {
        self.ensure_unsealed()?;
        if self.nodes.contains_key(&node.id) {
            return Err(GraphError::DuplicateNode(node.id));
        }
        self.adjacency.entry(node.id).or_default();
        self.nodes.insert(node.id, node);
        Ok(())
    }

    pub fn add_edge(&mut self, edge: Edge) -> Result<(), GraphError> {
        self.ensure_unsealed()?;
        if !self.nodes.contains_key(&edge.from_id) || !self.nodes.contains_key(&edge.to_id) {
            return Err(GraphError::DanglingEdge {
                from: edge.from_id,
                to: edge.to_id,
            });
        }
        self.adjacency.entry(edge.from_id).or_default().push(Adjacent {
            neighbor: edge.to_id,
            rel_type: edge.rel_type,
            outgoing: true,
        });
        self.adjacency.entry(edge.to_id).or_default().push(Adjacent {
            neighbor: edge.from_id,
            rel_type: edge.rel_type,
            outgoing: false,
        });
        self.edges.push(edge);
        Ok(())
    }

    pub fn set_embedding(&mut self, id: NodeId, values: Vec<f32>) -> Result<(), GraphError> {
        self.ensure_unsealed()?;
        if !self.nodes.contains_key(&id) {
            return Err(GraphError::NotFound(id));
        }
        let vector = EmbeddingVector::new(values).map_err(|source| GraphError::InvalidEmbedding { id, source })?;
        if let Some(expected) = self.dimension {
            if vector.dimension() != expected {
                return Err(GraphError::DimensionMismatch {
                    id,
                    expected,
                    found: vector.dimension(),
                });
            }
        }
        if vector.norm() == 0.0 {
            return Err(GraphError::ZeroNorm(id));
        }
        self.dimension = Some(vector.dimension());
        self.embeddings.insert(id, vector);
        Ok(())
    }

    /// Attaches every vector in a sidecar file. Returns the number attached.
    /// Nothing is attached if any record is rejected.
    pub fn attach_embeddings(&mut self, path: &Path) -> Result<usize, GraphError> {
        self.ensure_unsealed()?;
        let records = io::read_embeddings(path)?;
        let saved = (self.embeddings.clone(), self.dimension);
        for record in &records {
            if let Err(e) = self.set_embedding(record.id, record.values.clone()) {
                (self.embeddings, self.dimension) = saved;
                return Err(e);
            }
        }
        Ok(records.len())
    }

    pub fn seal(&mut self) {
        self.sealed = true;
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    /// Edges in insertion order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn embedding(&self, id: NodeId) -> Option<&EmbeddingVector> {
        self.embeddings.get(&id)
    }

    pub fn dimension(&self) -> Option<usize> {
        self.dimension
    }

    /// True when the store is non-empty and every node carries a vector.
    pub fn fully_embedded(&self) -> bool {
        !self.nodes.is_empty() && self.embeddings.len() == self.nodes.len()
    }

    pub fn embeddings(&self) -> impl Iterator<Item = (NodeId, &EmbeddingVector)> {
        self.embeddings.iter().map(|(id, v)| (*id, v))
    }

    /// Neighbors of `id` ordered by neighbor id, then relationship name.
    ///
    /// With [`Direction::Both`], an edge pair `a -> b` and `b -> a` of the
    /// same type yields one entry.
    pub fn neighbors(
        &self,
        id: NodeId,
        direction: Direction,
        types: Option<&[RelType]>,
    ) -> Result<Vec<(&Node, RelType)>, GraphError> {
        let adjacent = self.adjacency.get(&id).ok_or(GraphError::NotFound(id))?;
        let mut found: BTreeSet<(NodeId, &'static str, RelType)> = BTreeSet::new();
        for a in adjacent {
            let wanted = match direction {
                Direction::Out => a.outgoing,
                Direction::In => !a.outgoing,
                Direction::Both => true,
            };
            if wanted && types.is_none_or(|t| t.contains(&a.rel_type)) {
                found.insert((a.neighbor, a.rel_type.as_str(), a.rel_type));
            }
        }
        Ok(found
            .into_iter()
            .map(|(n, _, rel)| (&self.nodes[&n], rel))
            .collect())
    }

    /// Distinct neighbor ids in ascending order, ignoring relationship type.
    pub fn neighbor_ids(&self, id: NodeId, direction: Direction) -> Result<Vec<NodeId>, GraphError> {
        let adjacent = self.adjacency.get(&id).ok_or(GraphError::NotFound(id))?;
        let ids: BTreeSet<NodeId> = adjacent
            .iter()
            .filter(|a| match direction {
                Direction::Out => a.outgoing,
                Direction::In => !a.outgoing,
                Direction::Both => true,
            })
            .map(|a| a.neighbor)
            .collect();
        Ok(ids.into_iter().collect())
    }

    pub fn stats(&self) -> StoreStats {
        let mut per_type = BTreeMap::new();
        for e in &self.edges {
            *per_type.entry(e.rel_type).or_insert(0) += 1;
        }
        StoreStats {
            node_count: self.nodes.len(),
            edge_count: self.edges.len(),
            per_type,
        }
    }

    /// Writes the nodes JSONL and edges CSV files.
    pub fn export_csv(&self, nodes_path: &Path, edges_path: &Path) -> Result<(), GraphError> {
        io::write_nodes(nodes_path, self.nodes.values())?;
        io::write_edges(edges_path, &self.edges)
    }

    /// Writes `nodes.jsonl`, `edges.csv` and, if any vectors are attached,
    /// `embeddings.bin` into `dir`.
    pub fn export_dir(&self, dir: &Path) -> Result<(), GraphError> {
        std::fs::create_dir_all(dir).map_err(|source| GraphError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        self.export_csv(&dir.join(io::NODES_FILE), &dir.join(io::EDGES_FILE))?;
        if !self.embeddings.is_empty() {
            io::write_embeddings(&dir.join(io::EMBEDDINGS_FILE), self.embeddings())?;
        }
        Ok(())
    }

    /// Nodes and edges equal, ignoring embeddings and seal state.
    pub fn same_graph(&self, other: &GraphStore) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }
}
