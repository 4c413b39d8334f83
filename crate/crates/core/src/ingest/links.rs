//! Internal-link extraction and relationship classification.

use crate::model::{Node, NodeType, RelType};

use super::clean::math_end;

/// One internal link occurrence in cleaned content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkRef {
    pub target: String,
    /// The sentence the link appears in.
    pub context: String,
}

const SIMILARITY_CUES: &[&str] = &["similarly", "analogous", "mutatis mutandis"];

/// Extracts every `[[Target|label]]` occurrence from cleaned content, in
/// document order. Section anchors are stripped from targets.
pub fn extract_links(content: &str) -> Vec<LinkRef> {
    let mut links = Vec::new();
    let mut i = 0;
    while i < content.len() {
        if let Some(end) = math_end(content, i) {
            i = end;
            continue;
        }
        if !content[i..].starts_with("[[") {
            i += content[i..].chars().next().map_or(1, char::len_utf8);
            continue;
        }
        let Some(close) = link_close(content, i + 2) else {
            i += 2;
            continue;
        };
        let inner = &content[i + 2..close];
        let target = inner.split('|').next().unwrap_or("");
        let target = target.split('#').next().unwrap_or("").trim();
        if !target.is_empty() {
            links.push(LinkRef {
                target: target.to_string(),
                context: sentence_around(content, i, close + 2),
            });
        }
        i = close + 2;
    }
    links
}

fn link_close(s: &str, from: usize) -> Option<usize> {
    let mut i = from;
    while i < s.len() {
        if let Some(end) = math_end(s, i) {
            i = end;
            continue;
        }
        let rest = &s[i..];
        if rest.starts_with("]]") {
            return Some(i);
        }
        if rest.starts_with('\n') || rest.starts_with("[[") {
            return None;
        }
        i += rest.chars().next().map_or(1, char::len_utf8);
    }
    None
}

fn is_sentence_break(bytes: &[u8], i: usize) -> bool {
    match bytes[i] {
        b'\n' => true,
        b'.' | b'!' | b'?' => bytes.get(i + 1).is_none_or(|c| c.is_ascii_whitespace()),
        _ => false,
    }
}

fn sentence_around(content: &str, start: usize, end: usize) -> String {
    let bytes = content.as_bytes();
    let mut from = start;
    while from > 0 && !is_sentence_break(bytes, from - 1) {
        from -= 1;
    }
    let mut to = end;
    while to < bytes.len() && !is_sentence_break(bytes, to) {
        to += 1;
    }
    if to < bytes.len() && bytes[to] != b'\n' {
        to += 1;
    }
    content[from..to].trim().to_string()
}

/// Normalizes a title for lookup: underscores become spaces, whitespace is
/// collapsed and case is folded.
pub fn normalize_title(title: &str) -> String {
    title
        .replace('_', " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Resolves subpage links (`[[/Proof 2]]`) against the linking page.
pub fn resolve_relative(source_title: &str, target: &str) -> String {
    match target.strip_prefix('/') {
        Some(sub) => format!("{}/{}", source_title.trim_end_matches('/'), sub.trim()),
        None => target.to_string(),
    }
}

/// Strips the namespace prefix (up to the first `:`) from a title.
pub fn name_from_title(title: &str) -> String {
    match title.split_once(':') {
        Some((_, rest)) => rest.trim().to_string(),
        None => title.trim().to_string(),
    }
}

/// Node type implied by a title alone.
pub fn type_from_title(title: &str) -> NodeType {
    let lower = title.trim().to_lowercase();
    if lower.starts_with("definition:") {
        NodeType::Definition
    } else if lower.starts_with("axiom:") {
        NodeType::Axiom
    } else if lower.starts_with("proof:") || lower.contains("/proof") {
        NodeType::Proof
    } else if lower.contains(':') && !lower.starts_with("theorem:") {
        NodeType::Other
    } else {
        NodeType::Theorem
    }
}

fn names_method(title: &str) -> bool {
    let name = name_from_title(title).to_lowercase();
    name.starts_with("proof by ") || name.ends_with("technique") || name.starts_with("method of ")
}

/// Chooses the relationship type for a link from `source` to `target_title`.
///
/// Only the source node, the target title and the link's sentence are
/// consulted; the target page content is never needed.
pub fn classify_relationship(source: &Node, target_title: &str, context: &str) -> RelType {
    let target = type_from_title(target_title);
    let source_type = source.node_type;
    let proofish = matches!(source_type, NodeType::Proof | NodeType::Theorem);
    if target == NodeType::Axiom {
        return RelType::UsesAxiom;
    }
    if source_type == NodeType::Definition && target == NodeType::Definition {
        return RelType::RelatedDefinition;
    }
    if proofish && target == NodeType::Definition {
        return RelType::UsesDefinition;
    }
    if source_type != NodeType::Proof {
        return RelType::Link;
    }
    if names_method(target_title) {
        return RelType::ProofTechnique;
    }
    let ctx = context.to_lowercase();
    if target == NodeType::Proof && SIMILARITY_CUES.iter().any(|c| ctx.contains(c)) {
        return RelType::SimilarProof;
    }
    if target == NodeType::Theorem {
        return RelType::ProofDependency;
    }
    RelType::Link
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(title: &str) -> Node {
        Node {
            id: 0,
            node_type: type_from_title(title),
            title: title.to_string(),
            name: name_from_title(title),
            content: String::new(),
        }
    }

    #[test]
    fn single_link() {
        let links = extract_links("uses [[Axiom of Choice]]");
        assert_eq!(links.len(), 1);
        assert_eq!(links[0].target, "Axiom of Choice");
        assert_eq!(links[0].context, "uses [[Axiom of Choice]]");
    }

    #[test]
    fn no_links() {
        assert!(extract_links("just text $[[not a link]]$").is_empty());
    }

    #[test]
    fn context_is_the_enclosing_sentence() {
        let text = "First sentence. Then [[A|a]] is used. Last [[B#Sec|b]] here\nNext line.";
        let links = extract_links(text);
        assert_eq!(links.len(), 2);
        assert_eq!(links[0].context, "Then [[A|a]] is used.");
        assert_eq!(links[1].target, "B");
        assert_eq!(links[1].context, "Last [[B#Sec|b]] here");
    }

    #[test]
    fn title_normalization() {
        assert_eq!(normalize_title("  Lagrange's_Theorem "), "lagrange's theorem");
        assert_eq!(normalize_title("lagrange's  theorem"), "lagrange's theorem");
    }

    #[test]
    fn relative_links() {
        assert_eq!(resolve_relative("Foo", "/Proof 2"), "Foo/Proof 2");
        assert_eq!(resolve_relative("Foo", "Bar"), "Bar");
    }

    #[test]
    fn names_strip_prefix() {
        assert_eq!(name_from_title("Definition: Group "), "Group");
        assert_eq!(name_from_title("Zorn's Lemma"), "Zorn's Lemma");
    }

    #[test]
    fn rule_table() {
        let proof = node("Lagrange's Theorem/Proof 1");
        let def = node("Definition:Coset");
        let thm = node("Zorn's Lemma");
        assert_eq!(classify_relationship(&proof, "Definition:Group", ""), RelType::UsesDefinition);
        assert_eq!(classify_relationship(&thm, "Definition:Group", ""), RelType::UsesDefinition);
        assert_eq!(classify_relationship(&def, "Definition:Group", ""), RelType::RelatedDefinition);
        assert_eq!(classify_relationship(&def, "Axiom:Axiom of Choice", ""), RelType::UsesAxiom);
        assert_eq!(classify_relationship(&proof, "Proof by Induction", ""), RelType::ProofTechnique);
        assert_eq!(classify_relationship(&proof, "Diagonal Technique", ""), RelType::ProofTechnique);
        assert_eq!(
            classify_relationship(&proof, "Foo/Proof 1", "This goes similarly to [[Foo/Proof 1]]"),
            RelType::SimilarProof
        );
        assert_eq!(classify_relationship(&proof, "Foo/Proof 1", "See [[Foo/Proof 1]]"), RelType::Link);
        assert_eq!(classify_relationship(&proof, "Lagrange's Theorem", ""), RelType::ProofDependency);
        assert_eq!(classify_relationship(&thm, "Lagrange's Theorem", ""), RelType::Link);
        assert_eq!(classify_relationship(&def, "Lagrange's Theorem", ""), RelType::Link);
    }
}
