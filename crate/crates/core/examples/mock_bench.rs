//! Run the 20-problem fixture under all three methods with mock backends
//! and print a combined summary.
//!
//! ```text
//! cargo run --example mock_bench -- [out_dir]
//! ```

use std::path::PathBuf;

use proofgraph::bench::{emit_report, load_dataset, load_graph, mock_services, render_summary, run_bench, BenchOptions};
use proofgraph::pipeline::{Method, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let out = std::env::args().nth(1).map(PathBuf::from);
    let problems = load_dataset(&fixtures.join("bench/problems.jsonl"), None)?;
    let options = BenchOptions {
        workers: 4,
        freeze_clock: true,
    };

    let mut reports = Vec::new();
    for method in Method::ALL {
        let store = (method != Method::Base).then(|| load_graph(&fixtures.join("graph"))).transpose()?;
        let services = mock_services(&fixtures.join("mock"), store)?;
        let report = run_bench(&problems, &RunConfig::for_method(method), &services, options);
        if let Some(dir) = &out {
            emit_report(&report, &dir.join(method.as_str()))?;
        }
        reports.push(report);
    }
    print!("{}", render_summary(&reports.iter().collect::<Vec<_>>()));
    Ok(())
}
