mod common;

use std::time::Instant;

use common::fixture;
use proofgraph::bench::{
    emit_report, load_dataset, load_graph, mock_services, read_report, run_bench, BenchOptions, Report, FAILURES_FILE,
    REPORT_FILE, SUMMARY_FILE,
};
use proofgraph::pipeline::{AttemptTrace, FailureClass, Method, OutcomeStatus, ProofOutcome, RunConfig};
use proofgraph::verifier::{VerificationResult, VerificationStatus};
use proptest::prelude::*;

fn mock_run(method: Method, workers: usize) -> Report {
    let problems = load_dataset(&fixture("bench/problems.jsonl"), None).unwrap();
    let store = (method != Method::Base).then(|| load_graph(&fixture("graph")).unwrap());
    let services = mock_services(&fixture("mock"), store).unwrap();
    run_bench(
        &problems,
        &RunConfig::for_method(method),
        &services,
        BenchOptions {
            workers,
            freeze_clock: true,
        },
    )
}

#[test]
fn fixture_dataset_loads() {
    let problems = load_dataset(&fixture("bench/problems.jsonl"), None).unwrap();
    assert_eq!(problems.len(), 20);
    assert_eq!(problems[0].name, "lagrange_subgroup_card_dvd");
    assert!(problems.iter().all(|p| !p.formal_statement.is_empty()));
}

#[test]
fn mock_bench_matches_golden_reports() {
    let start = Instant::now();
    for method in Method::ALL {
        let report = mock_run(method, 4);
        let dir = tempfile::tempdir().unwrap();
        emit_report(&report, dir.path()).unwrap();
        let golden = fixture("golden/bench").join(method.as_str());
        for file in [REPORT_FILE, SUMMARY_FILE, FAILURES_FILE] {
            assert_eq!(
                std::fs::read_to_string(dir.path().join(file)).unwrap(),
                std::fs::read_to_string(golden.join(file)).unwrap(),
                "{method}: {file}"
            );
        }
        assert!(report.accuracy_by_attempt.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(report.accuracy_by_attempt.last().copied(), Some(report.accuracy));
        assert_eq!(read_report(&dir.path().join(REPORT_FILE)).unwrap(), report);
    }
    assert!(start.elapsed().as_secs() < 10);
}

#[test]
fn fixture_scores_and_classes() {
    let report = mock_run(Method::Graph, 3);
    assert_eq!(report.accuracy, 0.55);
    assert_eq!(report.accuracy_by_attempt, vec![0.3, 0.45, 0.55]);
    assert_eq!(report.failure_histogram[&FailureClass::FormalizationGap], 7);
    assert_eq!(report.failure_histogram[&FailureClass::ModelError], 1);
    assert_eq!(report.failure_histogram[&FailureClass::Other], 1);
    for o in &report.per_problem {
        let depths: Vec<usize> = o.attempts.iter().map(|a| a.context_depth_used).collect();
        let want: Vec<usize> = (0..depths.len()).map(|t| t.min(2)).collect();
        assert_eq!(depths, want, "{}", o.problem_name);
    }
    let rag = mock_run(Method::Rag, 2);
    assert!(rag.per_problem.iter().flat_map(|o| &o.attempts).all(|a| a.context_depth_used == 0));
    let base = mock_run(Method::Base, 2);
    assert!(base.per_problem.iter().flat_map(|o| &o.attempts).all(|a| a.context_node_ids.is_empty()));
}

#[test]
fn worker_count_does_not_change_output() {
    assert_eq!(mock_run(Method::Graph, 1).to_json(), mock_run(Method::Graph, 8).to_json());
}

#[test]
fn empty_dataset_report() {
    let services = mock_services(&fixture("mock"), None).unwrap();
    let report = run_bench(&[], &RunConfig::for_method(Method::Base), &services, BenchOptions::default());
    let dir = tempfile::tempdir().unwrap();
    emit_report(&report, dir.path()).unwrap();
    let summary = std::fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
    assert!(summary.contains("n=0"));
    assert!(summary.contains("| base | n=0 | 0 | 0 | — |"));
}

#[test]
fn errored_problems_do_not_abort_the_run() {
    let problems = load_dataset(&fixture("bench/problems.jsonl"), None).unwrap();
    // No verifier script at all: every check is a toolchain error.
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(fixture("mock/chat.jsonl"), dir.path().join("chat.jsonl")).unwrap();
    std::fs::write(dir.path().join("verifier.jsonl"), "").unwrap();
    let services = mock_services(dir.path(), None).unwrap();
    let report = run_bench(&problems[..4], &RunConfig::for_method(Method::Base), &services, BenchOptions::default());
    assert_eq!(report.problem_count(), 4);
    assert_eq!(report.error_count(), 4);
    assert_eq!(report.accuracy, 0.0);
}

fn outcome_strategy(attempts: u32) -> impl Strategy<Value = ProofOutcome> {
    (0..=attempts + 1, "[a-z]{1,8}", any::<bool>()).prop_map(move |(win, name, errored)| {
        let verified = win >= 1 && win <= attempts && !errored;
        let n = if verified { win } else { attempts };
        ProofOutcome {
            problem_name: name,
            status: if verified {
                OutcomeStatus::Verified
            } else if errored {
                OutcomeStatus::Error
            } else {
                OutcomeStatus::Failed
            },
            attempts: (1..=n)
                .map(|t| AttemptTrace {
                    attempt_index: t,
                    context_depth_used: (t as usize - 1).min(2),
                    context_node_ids: vec![1, 2, t as u64],
                    informal_proof: "p".into(),
                    formal_code: "c".into(),
                    verification: VerificationResult {
                        status: if verified && t == n { VerificationStatus::Verified } else { VerificationStatus::Failed },
                        errors: Vec::new(),
                        raw_output: String::new(),
                        elapsed_ms: 3,
                    },
                    model_error: None,
                })
                .collect(),
            winning_attempt: verified.then_some(win),
            failure_class: (!verified).then_some(FailureClass::Other),
            error: errored.then(|| "boom".to_string()),
            error_source: None,
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn report_json_round_trips(outcomes in prop::collection::vec(outcome_strategy(3), 0..12), t in 0.0f64..1.0) {
        let mut config = RunConfig::for_method(Method::Rag);
        config.sampling.temperature = t;
        let report = Report::from_outcomes("r".into(), config, outcomes, 17);
        let back: Report = serde_json::from_str(&report.to_json()).unwrap();
        prop_assert_eq!(back, report);
    }

    /// Problems verified within r' attempts are verified within r.
    #[test]
    fn accuracy_by_attempt_is_monotone(outcomes in prop::collection::vec(outcome_strategy(4), 0..30)) {
        let config = RunConfig { attempts: 4, ..RunConfig::default() };
        let report = Report::from_outcomes("r".into(), config, outcomes, 0);
        prop_assert_eq!(report.accuracy_by_attempt.len(), 4);
        prop_assert!(report.accuracy_by_attempt.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(*report.accuracy_by_attempt.last().unwrap(), report.accuracy);
    }
}
