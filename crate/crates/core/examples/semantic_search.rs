//! Similarity search and graph expansion over the fixture graph.
//!
//! The fixture embeddings come from the offline hashing embedder, so the
//! same embedder must be used for queries.
//!
//! ```text
//! cargo run --example semantic_search -- "order of a subgroup divides the order of the group"
//! ```

use std::path::PathBuf;
use std::sync::Arc;

use proofgraph::graph::GraphStore;
use proofgraph::retrieval::{Embedder, HashingEmbedder, RetrievalQuery, Retriever};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "every subgroup of a finite group has order dividing the group order".into());
    let mut store = GraphStore::load_dir(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/graph"))?;
    store.seal();
    let dim = store.dimension().ok_or("graph has no embeddings")?;
    let store = Arc::new(store);
    let retriever = Retriever::new(store.clone(), Arc::new(Embedder::new(Arc::new(HashingEmbedder::new(dim)))));

    for depth in 0..=2 {
        let ctx = retriever.retrieve(&RetrievalQuery::new(&text, 3, depth))?;
        println!("depth {depth}: {} nodes, ~{} tokens", ctx.entries.len(), ctx.token_estimate);
        for e in &ctx.entries {
            println!("  hop {} {:+.4} {}", e.hop, e.score, store.node(e.node_id).map_or("?", |n| &n.title));
        }
    }

    // A seed draws a shuffled half of the top k; the same seed gives the same draw.
    for seed in [1, 2, 3, 4, 1] {
        let ctx = retriever.retrieve(&RetrievalQuery::new(&text, 4, 0).with_seed(seed))?;
        println!("seed {seed}: {:?}", ctx.node_ids());
    }

    let ctx = retriever.retrieve(&RetrievalQuery::new(&text, 2, 1))?;
    println!("\nrendered context:\n{}", ctx.rendered);
    Ok(())
}
