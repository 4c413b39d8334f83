//! The attempt loop on one fixture problem, replayed from mock scripts.
//!
//! ```text
//! cargo run --example prove_loop -- [problem_name] [base|rag|graph]
//! ```

use std::path::PathBuf;

use proofgraph::bench::{load_dataset, load_graph, mock_services};
use proofgraph::pipeline::{prove, Method, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "prime_order_cyclic".into());
    let method: Method = args.next().as_deref().unwrap_or("graph").parse()?;

    let problems = load_dataset(&fixtures.join("bench/problems.jsonl"), None)?;
    let problem = problems.iter().find(|p| p.name == name).ok_or("unknown problem")?;
    let store = (method != Method::Base).then(|| load_graph(&fixtures.join("graph"))).transpose()?;
    let services = mock_services(&fixtures.join("mock"), store.clone())?;

    let outcome = prove(problem, &RunConfig::for_method(method), &services);
    for a in &outcome.attempts {
        let titles: Vec<&str> = a
            .context_node_ids
            .iter()
            .filter_map(|id| store.as_ref()?.node(*id).map(|n| n.title.as_str()))
            .collect();
        println!("attempt {} (depth {}): {:?}", a.attempt_index, a.context_depth_used, a.verification.status);
        println!("  context: {titles:?}");
        for e in &a.verification.errors {
            println!("  error {}:{} {}", e.line, e.column, e.message);
        }
    }
    println!("{:?}, winning attempt {:?}, class {:?}", outcome.status, outcome.winning_attempt, outcome.failure_class);
    Ok(())
}
