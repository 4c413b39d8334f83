//! Judge-ranked sampling and beam refinement, replayed from mock scripts.

use std::path::PathBuf;

use proofgraph::bench::{load_dataset, load_graph, mock_services};
use proofgraph::pipeline::{best_of_n, tree_search, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let problem = load_dataset(&fixtures.join("bench/lagrange.json"), None)?.remove(0);
    let mocks = || mock_services(&fixtures.join("mock_search"), Some(load_graph(&fixtures.join("graph"))?));

    let config = RunConfig {
        n_candidates: 2,
        ..RunConfig::default()
    };
    let sampled = best_of_n(&problem, &config, &mocks()?)?;
    println!("best of {}:", config.n_candidates);
    for c in &sampled.candidates {
        println!("  #{} t={} score {}: {}", c.index, c.temperature, c.judge_score, c.justification);
    }

    let config = RunConfig {
        beam_width: 2,
        search_depth: 3,
        ..RunConfig::default()
    };
    let search = tree_search(&problem, &config, &mocks()?)?;
    for it in &search.iterations {
        println!("iteration {}:", it.iteration);
        for c in &it.candidates {
            let status = c.verification.as_ref().map(|v| format!("{:?}", v.status)).unwrap_or_else(|| "-".into());
            println!("  #{} parent {:?} score {} check {status}", c.index, c.parent, c.judge_score);
        }
        println!("  kept {:?}", it.retained);
    }
    println!(
        "best #{} (verified: {}), {} checker calls",
        search.best.index,
        search.best.is_verified(),
        search.verifier_calls
    );
    Ok(())
}
