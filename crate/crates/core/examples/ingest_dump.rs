//! Build a graph from a wiki dump and write nodes, edges and stats.
//!
//! ```text
//! cargo run --example ingest_dump -- [dump.xml[.gz]] [out_dir]
//! ```

use std::path::PathBuf;

use proofgraph::ingest::{build_corpus_from_path, write_corpus};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dump = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/dump/proofwiki_sample.xml"));
    let corpus = build_corpus_from_path(&dump)?;

    for node in &corpus.nodes {
        println!("{:>3} {:<10} {}", node.id, node.node_type, node.title);
    }
    println!();
    for edge in &corpus.edges {
        let from = &corpus.nodes[edge.from_id as usize].title;
        let to = &corpus.nodes[edge.to_id as usize].title;
        println!("{from} -[{}]-> {to}", edge.rel_type);
    }
    println!("\n{}", serde_json::to_string_pretty(&corpus.stats)?);

    if let Some(out) = args.next() {
        write_corpus(&corpus, PathBuf::from(&out).as_path())?;
        println!("wrote {out}");
    }
    Ok(())
}
