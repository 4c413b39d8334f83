//! Corpus assembly: pages to nodes, links to typed edges.

use std::collections::{HashMap, HashSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dump::{parse_dump, DumpError, DumpWarning};
use super::{clean_wikitext, classify_relationship, extract_links, name_from_title, normalize_title, page_node_type, resolve_relative};
use crate::graph::{io, GraphError};
use crate::model::{Edge, Node, NodeId};

pub const STATS_FILE: &str = "stats.json";

const MAX_REDIRECT_HOPS: usize = 8;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub pages_seen: usize,
    pub pages_kept: usize,
    pub pages_dropped_namespace: usize,
    pub pages_skipped_untitled: usize,
    pub redirects_collapsed: usize,
    pub duplicate_titles: usize,
    pub links_seen: usize,
    pub edges_kept: usize,
    pub edges_dropped_dangling: usize,
    pub edges_dropped_duplicate: usize,
    pub edges_dropped_self: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub stats: IngestStats,
    pub warnings: Vec<DumpWarning>,
}

pub fn build_corpus_from_path(path: impl AsRef<Path>) -> Result<Corpus, DumpError> {
    let file = std::fs::File::open(path)?;
    build_corpus(file)
}

/// Parses a dump and derives nodes and edges.
///
/// Node ids are dense from 0 in page order. Redirect pages become aliases
/// of their target instead of nodes. When two pages share a normalized title
/// the first one wins. Links that resolve to no node are counted and dropped.
pub fn build_corpus(input: impl Read) -> Result<Corpus, DumpError> {
    let mut reader = parse_dump(input)?;
    let mut stats = IngestStats::default();
    let mut nodes: Vec<Node> = Vec::new();
    let mut index: HashMap<String, NodeId> = HashMap::new();
    let mut aliases: HashMap<String, String> = HashMap::new();

    for page in reader.by_ref() {
        let page = page?;
        let Some(node_type) = page_node_type(&page) else {
            stats.pages_dropped_namespace += 1;
            continue;
        };
        let key = normalize_title(&page.title);
        if let Some(target) = &page.redirect {
            stats.redirects_collapsed += 1;
            aliases.entry(key).or_insert_with(|| normalize_title(target));
            continue;
        }
        if index.contains_key(&key) {
            tracing::warn!(title = %page.title, "duplicate title, keeping the first page");
            stats.duplicate_titles += 1;
            continue;
        }
        let id = nodes.len() as NodeId;
        let name = if page.namespace.is_empty() {
            page.title.trim().to_string()
        } else {
            name_from_title(&page.title)
        };
        index.insert(key, id);
        nodes.push(Node {
            id,
            node_type,
            title: page.title,
            name,
            content: clean_wikitext(&page.wikitext),
        });
    }
    stats.pages_seen = reader.pages_seen();
    stats.pages_skipped_untitled = reader.warnings().len();
    stats.pages_kept = nodes.len();

    let resolve = |source_title: &str, target: &str| -> Option<NodeId> {
        let mut key = normalize_title(&resolve_relative(source_title, target));
        for _ in 0..=MAX_REDIRECT_HOPS {
            if let Some(&id) = index.get(&key) {
                return Some(id);
            }
            key = aliases.get(&key)?.clone();
        }
        None
    };

    let mut edges = Vec::new();
    let mut seen: HashSet<Edge> = HashSet::new();
    for source in &nodes {
        for link in extract_links(&source.content) {
            stats.links_seen += 1;
            let Some(to) = resolve(&source.title, &link.target) else {
                stats.edges_dropped_dangling += 1;
                continue;
            };
            if to == source.id {
                stats.edges_dropped_self += 1;
                continue;
            }
            let target = &nodes[to as usize];
            let rel = classify_relationship(source, &target.title, &link.context);
            let edge = Edge::new(source.id, to, rel);
            if seen.insert(edge) {
                edges.push(edge);
            } else {
                stats.edges_dropped_duplicate += 1;
            }
        }
    }
    stats.edges_kept = edges.len();
    tracing::info!(nodes = nodes.len(), edges = edges.len(), "corpus built");

    Ok(Corpus {
        nodes,
        edges,
        stats,
        warnings: reader.warnings().to_vec(),
    })
}

/// Writes `nodes.jsonl`, `edges.csv` and `stats.json` into `dir`.
pub fn write_corpus(corpus: &Corpus, dir: &Path) -> Result<(), GraphError> {
    let io_err = |source| GraphError::Io {
        path: dir.display().to_string(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(io_err)?;
    io::write_nodes(&dir.join(io::NODES_FILE), &corpus.nodes)?;
    io::write_edges(&dir.join(io::EDGES_FILE), &corpus.edges)?;
    let mut stats = serde_json::to_string_pretty(&corpus.stats).expect("stats serialize");
    stats.push('\n');
    std::fs::write(dir.join(STATS_FILE), stats).map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RelType;

    fn dump(pages: &[(&str, &str)]) -> String {
        let mut xml = String::from("<mediawiki><siteinfo><namespaces><namespace key=\"102\">Definition</namespace></namespaces></siteinfo>");
        for (title, text) in pages {
            xml.push_str(&format!(
                "<page><title>{title}</title><revision><text>{text}</text></revision></page>"
            ));
        }
        xml.push_str("</mediawiki>");
        xml
    }

    #[test]
    fn empty_dump() {
        let corpus = build_corpus(dump(&[]).as_bytes()).unwrap();
        assert!(corpus.nodes.is_empty() && corpus.edges.is_empty());
        assert_eq!(corpus.stats, IngestStats::default());
    }

    #[test]
    fn redirects_collapse_to_target() {
        let xml = dump(&[
            ("Definition:Group", "A set."),
            ("Definition:Groups", "#REDIRECT [[Definition:Group]]"),
            ("Foo", "Uses [[Definition:Groups|groups]] and [[definition:group]]."),
        ]);
        let corpus = build_corpus(xml.as_bytes()).unwrap();
        assert_eq!(corpus.nodes.len(), 2);
        assert_eq!(corpus.stats.redirects_collapsed, 1);
        assert_eq!(corpus.edges, vec![Edge::new(1, 0, RelType::UsesDefinition)]);
        assert_eq!(corpus.stats.edges_dropped_duplicate, 1);
    }

    #[test]
    fn duplicate_titles_keep_first() {
        let xml = dump(&[("Foo", "one"), ("foo", "two"), ("Bar", "[[Foo]] [[Baz]] [[Bar]]")]);
        let corpus = build_corpus(xml.as_bytes()).unwrap();
        assert_eq!(corpus.nodes.len(), 2);
        assert_eq!(corpus.nodes[0].content, "one");
        assert_eq!(corpus.nodes[1].id, 1);
        assert_eq!(corpus.stats.duplicate_titles, 1);
        assert_eq!(corpus.stats.edges_dropped_dangling, 1);
        assert_eq!(corpus.stats.edges_dropped_self, 1);
        assert_eq!(corpus.edges, vec![Edge::new(1, 0, RelType::Link)]);
    }
}
