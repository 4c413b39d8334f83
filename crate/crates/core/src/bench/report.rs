//! Run reports and their markdown/JSON renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::pipeline::{FailureClass, OutcomeStatus, ProofOutcome, RunConfig};

pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.md";
pub const FAILURES_FILE: &str = "failures.md";
pub const TRACES_FILE: &str = "traces.jsonl";

/// Problem names listed per failure class in failures.md.
const FAILURE_EXAMPLES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub run_id: String,
    pub config: RunConfig,
    pub per_problem: Vec<ProofOutcome>,
    pub accuracy: f64,
    /// Entry `t` is the share of problems verified within `t + 1` attempts.
    pub accuracy_by_attempt: Vec<f64>,
    pub failure_histogram: BTreeMap<FailureClass, usize>,
    /// Zero when the run was made with a frozen clock.
    pub wall_clock_ms: u64,
}

impl Report {
    /// Aggregates outcomes. Accuracy is over all problems, errored ones
    /// included.
    pub fn from_outcomes(run_id: String, config: RunConfig, per_problem: Vec<ProofOutcome>, wall_clock_ms: u64) -> Self {
        let n = per_problem.len();
        let share = |count: usize| if n == 0 { 0.0 } else { count as f64 / n as f64 };
        let verified = per_problem.iter().filter(|o| o.status == OutcomeStatus::Verified).count();
        let accuracy_by_attempt = (1..=config.attempts)
            .map(|t| share(per_problem.iter().filter(|o| o.winning_attempt.is_some_and(|w| w <= t)).count()))
            .collect();
        let mut failure_histogram = BTreeMap::new();
        for class in per_problem.iter().filter_map(|o| o.failure_class) {
            *failure_histogram.entry(class).or_insert(0) += 1;
        }
        Report {
            run_id,
            config,
            accuracy: share(verified),
            accuracy_by_attempt,
            failure_histogram,
            per_problem,
            wall_clock_ms,
        }
    }

    pub fn problem_count(&self) -> usize {
        self.per_problem.len()
    }

    pub fn verified_count(&self) -> usize {
        self.per_problem.iter().filter(|o| o.is_verified()).count()
    }

    pub fn error_count(&self) -> usize {
        self.per_problem.iter().filter(|o| o.status == OutcomeStatus::Error).count()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// A share as a percentage with two decimals, or a dash when there were no
/// problems.
pub fn percent(share: f64, n: usize) -> String {
    if n == 0 {
        "—".to_string()
    } else {
        format!("{:.2}%", share * 100.0)
    }
}

/// Method × accuracy table plus the per-attempt table, one row per report.
pub fn render_summary(reports: &[&Report]) -> String {
    let mut out = String::from("# Benchmark summary\n\n");
    for r in reports {
        let c = &r.config;
        let _ = writeln!(
            out,
            "- `{}`: method {}, r={}, d={}, k={}, n={}",
            r.run_id,
            c.method,
            c.attempts,
            c.max_depth,
            c.top_k,
            r.problem_count()
        );
    }
    out.push_str("\n## Accuracy\n\n| Method | n | Verified | Errors | Accuracy |\n|---|---|---|---|---|\n");
    for r in reports {
        let n = r.problem_count();
        let _ = writeln!(
            out,
            "| {} | n={} | {} | {} | {} |",
            r.config.method,
            n,
            r.verified_count(),
            r.error_count(),
            percent(r.accuracy, n)
        );
    }
    let attempts = reports.iter().map(|r| r.config.attempts).max().unwrap_or(0);
    out.push_str("\n## Accuracy by attempt\n\n| Method |");
    for t in 1..=attempts {
        let _ = write!(out, " Attempt {t} |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(attempts as usize));
    out.push('\n');
    for r in reports {
        let n = r.problem_count();
        let _ = write!(out, "| {} |", r.config.method);
        for t in 0..attempts as usize {
            let cell = r.accuracy_by_attempt.get(t).map_or_else(|| "—".to_string(), |a| percent(*a, n));
            let _ = write!(out, " {cell} |");
        }
        out.push('\n');
    }
    out
}

/// Failure classes with counts and example problem names.
pub fn render_failures(report: &Report) -> String {
    let mut out = format!(
        "# Failures\n\nRun `{}` (method {}): {} of {} problems not verified.\n\n| Class | Count | Examples |\n|---|---|---|\n",
        report.run_id,
        report.config.method,
        report.problem_count() - report.verified_count(),
        report.problem_count()
    );
    for class in FailureClass::ALL {
        let names: Vec<&str> = report
            .per_problem
            .iter()
            .filter(|o| o.failure_class == Some(class))
            .map(|o| o.problem_name.as_str())
            .collect();
        let mut examples = names.iter().take(FAILURE_EXAMPLES).copied().collect::<Vec<_>>().join(", ");
        if names.len() > FAILURE_EXAMPLES {
            let _ = write!(examples, ", … ({} more)", names.len() - FAILURE_EXAMPLES);
        }
        if examples.is_empty() {
            examples = "—".into();
        }
        let _ = writeln!(out, "| {} | {} | {} |", class.as_str(), names.len(), examples);
    }
    let errored: Vec<&ProofOutcome> = report.per_problem.iter().filter(|o| o.status == OutcomeStatus::Error).collect();
    if !errored.is_empty() {
        out.push_str("\n## Errors\n\n");
        for o in errored {
            let _ = writeln!(out, "- {}: {}", o.problem_name, o.error.as_deref().unwrap_or("unknown error"));
        }
    }
    out
}

#[derive(Debug, thiserror::Error)]
#[error("writing {path}: {source}")]
pub struct ReportError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), ReportError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| ReportError { path, source })
}

/// Writes report.json, summary.md, failures.md and one trace line per
/// problem into `out_dir`.
pub fn emit_report(report: &Report, out_dir: &Path) -> Result<(), ReportError> {
    std::fs::create_dir_all(out_dir).map_err(|source| ReportError {
        path: out_dir.to_path_buf(),
        source,
    })?;
    write_file(out_dir, REPORT_FILE, &report.to_json())?;
    write_file(out_dir, SUMMARY_FILE, &render_summary(&[report]))?;
    write_file(out_dir, FAILURES_FILE, &render_failures(report))?;
    let traces: String = report
        .per_problem
        .iter()
        .map(|o| serde_json::to_string(o).expect("outcome serializes") + "\n")
        .collect();
    write_file(out_dir, TRACES_FILE, &traces)?;
    tracing::info!(dir = %out_dir.display(), "report written");
    Ok(())
}

pub fn read_report(path: &Path) -> Result<Report, ReportError> {
    let text = std::fs::read_to_string(path).map_err(|source| ReportError {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| ReportError {
        path: path.to_path_buf(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
    })
}
