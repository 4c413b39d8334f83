//! Benchmark harness: datasets, parallel runs over problems, reports.

mod dataset;
mod report;
mod services;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::model::Problem;
use crate::pipeline::{prove, ProofOutcome, RunConfig, Services};

pub use dataset::{
    load_dataset, mustard_subset, parse_dataset, DatasetError, DatasetFormat, FIELD_ALIASES, MUSTARD_SUBSET_SEED,
    MUSTARD_SUBSET_SIZE,
};
pub use report::{
    emit_report, percent, read_report, render_failures, render_summary, Report, ReportError, FAILURES_FILE, REPORT_FILE,
    SUMMARY_FILE, TRACES_FILE,
};
pub use services::{
    load_graph, mock_services, EmbeddingConfig, EndpointConfig, LeanConfig, ServiceConfig, ServiceError,
    MOCK_CHAT_FILE, MOCK_EMBEDDINGS_FILE, MOCK_VERIFIER_FILE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchOptions {
    pub workers: usize,
    /// Records a wall clock of zero so that reports are byte-stable.
    pub freeze_clock: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            workers: 4,
            freeze_clock: false,
        }
    }
}

/// Stable identifier derived from the configuration, the backends and the
/// problem names.
pub fn run_id(problems: &[Problem], config: &RunConfig, services: &Services) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(config).expect("config serializes"));
    h.update(services.gateway.backend_id().as_bytes());
    h.update(services.verifier.id().as_bytes());
    for p in problems {
        h.update(p.name.as_bytes());
        h.update([0]);
    }
    format!("{}-{}", config.method, &hex::encode(h.finalize())[..12])
}

/// Proves every problem on a pool of `options.workers` threads. Outcomes
/// are kept in dataset order whatever the scheduling, and a problem that
/// errors is recorded without stopping the run.
pub fn run_bench(problems: &[Problem], config: &RunConfig, services: &Services, options: BenchOptions) -> Report {
    let start = Instant::now();
    let slots: Vec<Mutex<Option<ProofOutcome>>> = problems.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = options.workers.clamp(1, problems.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(problem) = problems.get(i) else { break };
                let outcome = prove(problem, config, services);
                *slots[i].lock().expect("result slot poisoned") = Some(outcome);
            });
        }
    });
    let outcomes: Vec<ProofOutcome> = slots
        .into_iter()
        .map(|s| s.into_inner().expect("result slot poisoned").expect("every problem ran"))
        .collect();
    let wall_clock_ms = if options.freeze_clock { 0 } else { start.elapsed().as_millis() as u64 };
    let report = Report::from_outcomes(run_id(problems, config, services), config.clone(), outcomes, wall_clock_ms);
    tracing::info!(
        run = %report.run_id,
        problems = report.problem_count(),
        verified = report.verified_count(),
        "bench finished"
    );
    report
}
