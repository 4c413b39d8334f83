//! Wiki dump ingestion: stream pages, keep the mathematical namespaces,
//! clean the wikitext and derive typed edges from internal links.

mod clean;
mod corpus;
mod dump;
mod links;

pub use clean::{clean_wikitext, outside_math};
pub use corpus::{build_corpus, build_corpus_from_path, write_corpus, Corpus, IngestStats};
pub use dump::{open_dump, parse_dump, DumpError, DumpReader, DumpWarning, RawPage};
pub use links::{
    classify_relationship, extract_links, name_from_title, normalize_title, resolve_relative, type_from_title,
    LinkRef,
};

use crate::model::NodeType;

/// Node type for a page, or `None` when its namespace is not ingested.
pub fn page_node_type(page: &RawPage) -> Option<NodeType> {
    match page.namespace.to_lowercase().as_str() {
        "definition" => Some(NodeType::Definition),
        "axiom" => Some(NodeType::Axiom),
        "proof" => Some(NodeType::Proof),
        "" => {
            if type_from_title(&page.title) == NodeType::Proof {
                Some(NodeType::Proof)
            } else {
                Some(NodeType::Theorem)
            }
        }
        _ => None,
    }
}

/// Pages that survived namespace filtering, paired with their node type.
#[derive(Debug, Default)]
pub struct FilteredPages {
    pub kept: Vec<(NodeType, RawPage)>,
    pub dropped: usize,
}

/// Keeps definition, axiom and theorem/proof pages; counts the rest.
pub fn filter_namespaces(pages: impl IntoIterator<Item = RawPage>) -> FilteredPages {
    let mut out = FilteredPages::default();
    for page in pages {
        match page_node_type(&page) {
            Some(t) => out.kept.push((t, page)),
            None => out.dropped += 1,
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn page(title: &str, ns: &str) -> RawPage {
        RawPage {
            title: title.into(),
            namespace: ns.into(),
            wikitext: String::new(),
            redirect: None,
        }
    }

    #[test]
    fn filter_keeps_math_namespaces() {
        let pages = vec![
            page("Definition:Group", "Definition"),
            page("User:SomeEditor", "User"),
            page("Talk:Group", "Talk"),
            page("Axiom:Axiom of Choice", "Axiom"),
            page("Lagrange's Theorem", ""),
            page("Lagrange's Theorem/Proof 1", ""),
        ];
        let filtered = filter_namespaces(pages);
        assert_eq!(filtered.dropped, 2);
        let types: Vec<NodeType> = filtered.kept.iter().map(|(t, _)| *t).collect();
        assert_eq!(
            types,
            vec![NodeType::Definition, NodeType::Axiom, NodeType::Theorem, NodeType::Proof]
        );
    }
}
