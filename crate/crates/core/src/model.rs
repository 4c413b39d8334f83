//! Graph domain types shared by ingestion, storage and retrieval.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub type NodeId = u64;

/// Kind of mathematical page a node was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeType {
    Definition,
    Theorem,
    Proof,
    Axiom,
    Other,
}

impl NodeType {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeType::Definition => "definition",
            NodeType::Theorem => "theorem",
            NodeType::Proof => "proof",
            NodeType::Axiom => "axiom",
            NodeType::Other => "other",
        }
    }
}

impl fmt::Display for NodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One page of the knowledge graph.
///
/// Field order is the serialization order of the nodes file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    #[serde(rename = "type")]
    pub node_type: NodeType,
    pub title: String,
    pub name: String,
    pub content: String,
}

/// Typed relationship between two pages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RelType {
    Link,
    UsesDefinition,
    RelatedDefinition,
    UsesAxiom,
    SimilarProof,
    ProofDependency,
    ProofTechnique,
}

impl RelType {
    pub const ALL: [RelType; 7] = [
        RelType::Link,
        RelType::UsesDefinition,
        RelType::RelatedDefinition,
        RelType::UsesAxiom,
        RelType::SimilarProof,
        RelType::ProofDependency,
        RelType::ProofTechnique,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelType::Link => "LINK",
            RelType::UsesDefinition => "USES_DEFINITION",
            RelType::RelatedDefinition => "RELATED_DEFINITION",
            RelType::UsesAxiom => "USES_AXIOM",
            RelType::SimilarProof => "SIMILAR_PROOF",
            RelType::ProofDependency => "PROOF_DEPENDENCY",
            RelType::ProofTechnique => "PROOF_TECHNIQUE",
        }
    }
}

impl fmt::Display for RelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown relationship type `{0}`")]
pub struct UnknownRelType(pub String);

impl FromStr for RelType {
    type Err = UnknownRelType;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        RelType::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownRelType(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub from_id: NodeId,
    pub to_id: NodeId,
    pub rel_type: RelType,
}

impl Edge {
    pub fn new(from_id: NodeId, to_id: NodeId, rel_type: RelType) -> Self {
        Edge {
            from_id,
            to_id,
            rel_type,
        }
    }
}

/// One benchmark item: an informal statement plus the pieces of a Lean
/// theorem to complete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub name: String,
    #[serde(default)]
    pub informal_statement: String,
    #[serde(default)]
    pub header: String,
    #[serde(default)]
    pub informal_prefix: String,
    pub formal_statement: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<String>,
    #[serde(default)]
    pub split: String,
    /// Fields this crate does not interpret, kept for round-tripping.
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rel_type_parses_case_insensitively() {
        assert_eq!(" link ".parse::<RelType>().unwrap(), RelType::Link);
        assert_eq!(
            "PROOF_TECHNIQUE".parse::<RelType>().unwrap(),
            RelType::ProofTechnique
        );
        assert!("CITES".parse::<RelType>().is_err());
    }

    #[test]
    fn node_serializes_with_type_key() {
        let node = Node {
            id: 3,
            node_type: NodeType::Axiom,
            title: "Axiom:Axiom of Choice".into(),
            name: "Axiom of Choice".into(),
            content: "x".into(),
        };
        let json = serde_json::to_string(&node).unwrap();
        assert_eq!(
            json,
            r#"{"id":3,"type":"axiom","title":"Axiom:Axiom of Choice","name":"Axiom of Choice","content":"x"}"#
        );
    }
}
