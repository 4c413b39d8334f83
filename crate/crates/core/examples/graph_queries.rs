//! Load a graph directory, look at its shape and walk typed neighborhoods.
//!
//! ```text
//! cargo run --example graph_queries -- [graph_dir]
//! ```

use std::path::PathBuf;

use proofgraph::graph::{Direction, GraphStore};
use proofgraph::model::RelType;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/graph"));
    let mut store = GraphStore::load_dir(&dir)?;
    store.seal();

    let stats = store.stats();
    println!("{} nodes, {} edges, dimension {:?}", stats.node_count, stats.edge_count, store.dimension());
    for (rel, n) in &stats.per_type {
        println!("  {rel:<20} {n}");
    }

    // Everything a proof page leans on, and everything that leans on a theorem.
    for node in store.nodes().filter(|n| n.title.contains("/Proof")) {
        println!("\n{} uses:", node.title);
        for (dep, rel) in store.neighbors(node.id, Direction::Out, None)? {
            println!("  -[{rel}]-> {}", dep.title);
        }
    }
    for node in store.nodes().filter(|n| n.title == "Lagrange's Theorem") {
        let users = store.neighbors(node.id, Direction::In, Some(&[RelType::ProofDependency]))?;
        println!("\nproofs depending on {}: {:?}", node.title, users.iter().map(|(n, _)| &n.title).collect::<Vec<_>>());
    }

    let out = tempfile::tempdir()?;
    store.export_dir(out.path())?;
    let back = GraphStore::load_dir(out.path())?;
    println!("\nCSV round trip preserves the graph: {}", back.same_graph(&store));
    Ok(())
}
