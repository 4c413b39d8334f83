//! The retrieve, generate, formalize, verify loop.

use serde::{Deserialize, Serialize};

use super::{RunConfig, Services};
use crate::gateway::{
    extract_lean_block, render_formal_prompt, render_informal_prompt, FormalInputs, GatewayError,
};
use crate::model::{NodeId, Problem};
use crate::retrieval::{RetrievalContext, RetrievalError, RetrievalQuery};
use crate::verifier::{
    assemble_submission, render_error_feedback, LeanError, VerificationResult, VerificationStatus, VerifyRequest,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptTrace {
    pub attempt_index: u32,
    pub context_depth_used: usize,
    pub context_node_ids: Vec<NodeId>,
    pub informal_proof: String,
    pub formal_code: String,
    pub verification: VerificationResult,
    /// Set when the model's answer could not be used, e.g. no code block.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeStatus {
    Verified,
    Failed,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureClass {
    FormalizationGap,
    MissingKnowledge,
    ModelError,
    Other,
}

impl FailureClass {
    pub const ALL: [FailureClass; 4] = [
        FailureClass::FormalizationGap,
        FailureClass::MissingKnowledge,
        FailureClass::ModelError,
        FailureClass::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FailureClass::FormalizationGap => "formalization_gap",
            FailureClass::MissingKnowledge => "missing_knowledge",
            FailureClass::ModelError => "model_error",
            FailureClass::Other => "other",
        }
    }
}

/// Where a run-ending error came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorSource {
    Retrieval,
    Model,
    Toolchain,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofOutcome {
    pub problem_name: String,
    pub status: OutcomeStatus,
    pub attempts: Vec<AttemptTrace>,
    pub winning_attempt: Option<u32>,
    pub failure_class: Option<FailureClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_source: Option<ErrorSource>,
}

impl ProofOutcome {
    pub fn is_verified(&self) -> bool {
        self.status == OutcomeStatus::Verified
    }
}

/// Text used to query the graph for a problem.
pub fn query_text(problem: &Problem) -> &str {
    if problem.informal_statement.trim().is_empty() {
        &problem.formal_statement
    } else {
        &problem.informal_statement
    }
}

/// Retrieves context at `depth`, or an empty context when `depth` is `None`.
pub(crate) fn gather_context(
    problem: &Problem,
    config: &RunConfig,
    services: &Services,
    depth: Option<usize>,
) -> Result<RetrievalContext, RetrievalError> {
    let (Some(depth), Some(retriever)) = (depth, services.retriever.as_ref()) else {
        return Ok(RetrievalContext::default());
    };
    let mut query = RetrievalQuery::new(query_text(problem), config.top_k, depth);
    query.seed = config.seed;
    retriever.retrieve(&query)
}

/// Result of turning one informal proof into checked Lean code.
pub(crate) struct Formalized {
    pub code: String,
    pub verification: VerificationResult,
    pub model_error: Option<String>,
    pub submission: String,
}

pub(crate) const NO_BLOCK: &str = "model response contained no fenced Lean code block";

/// Formalizes `informal` (with optional verifier feedback) and checks the
/// result. A response without a code block is recorded as a failed check
/// without running the checker.
pub(crate) fn formalize_and_verify(
    problem: &Problem,
    informal: &str,
    feedback: Option<&str>,
    attempt: u32,
    config: &RunConfig,
    services: &Services,
) -> Result<Formalized, GatewayError> {
    let prompt = render_formal_prompt(&FormalInputs::for_problem(problem, informal), feedback);
    let response = services.gateway.complete(&problem.name, &prompt, &config.sampling)?;
    Ok(verify_code(problem, &response.text, attempt, config, services))
}

pub(crate) fn verify_code(problem: &Problem, response: &str, attempt: u32, config: &RunConfig, services: &Services) -> Formalized {
    match extract_lean_block(response) {
        Ok(code) => {
            let submission = assemble_submission(&problem.header, &problem.informal_prefix, &code);
            let verification = services.verifier.verify(
                &VerifyRequest {
                    problem_id: problem.name.clone(),
                    attempt,
                    code: submission.clone(),
                },
                config.verify_timeout(),
            );
            Formalized {
                code,
                verification,
                model_error: None,
                submission,
            }
        }
        Err(e) => Formalized {
            code: String::new(),
            verification: VerificationResult {
                status: VerificationStatus::Failed,
                errors: vec![LeanError {
                    line: 0,
                    column: 0,
                    message: NO_BLOCK.into(),
                }],
                raw_output: e.raw,
                elapsed_ms: 0,
            },
            model_error: Some(NO_BLOCK.into()),
            submission: String::new(),
        },
    }
}

/// Feedback for the next formalization after a failed check.
pub(crate) fn feedback_for(f: &Formalized, config: &RunConfig) -> String {
    match f.verification.status {
        VerificationStatus::Timeout => format!(
            "The previous Lean code did not finish checking within {} seconds. Produce a simpler proof.",
            config.verify_timeout_secs
        ),
        _ if f.model_error.is_some() => {
            "The previous response contained no Lean code. Answer with exactly one ```lean4 code block.".into()
        }
        _ => render_error_feedback(&f.verification.errors, &f.submission),
    }
}

/// Runs up to `config.attempts` attempts on `problem`, stopping at the
/// first verified one.
///
/// Attempt `t` retrieves with depth `min(t - 1, max_depth)` (graph), depth
/// 0 (rag) or not at all (base). Verifier errors from attempt `t - 1` are
/// appended to the formalization prompt of attempt `t`.
pub fn prove(problem: &Problem, config: &RunConfig, services: &Services) -> ProofOutcome {
    let mut outcome = ProofOutcome {
        problem_name: problem.name.clone(),
        status: OutcomeStatus::Failed,
        attempts: Vec::new(),
        winning_attempt: None,
        failure_class: None,
        error: None,
        error_source: None,
    };
    let fail = |mut outcome: ProofOutcome, source: ErrorSource, message: String| {
        tracing::error!(problem = %outcome.problem_name, ?source, %message, "attempt aborted");
        outcome.status = OutcomeStatus::Error;
        outcome.error = Some(message);
        outcome.error_source = Some(source);
        outcome.failure_class = classify_failure(&outcome, config);
        outcome
    };
    if let Err(e) = services.check(config) {
        return fail(outcome, ErrorSource::Toolchain, e.to_string());
    }

    let mut feedback: Option<String> = None;
    for t in 1..=config.attempts {
        let depth = config.depth_for_attempt(t);
        let context = match gather_context(problem, config, services, depth) {
            Ok(c) => c,
            Err(e) => return fail(outcome, ErrorSource::Retrieval, e.to_string()),
        };
        let informal_prompt = render_informal_prompt(problem, &context);
        let informal = match services.gateway.complete(&problem.name, &informal_prompt, &config.sampling) {
            Ok(r) => r.text,
            Err(e) => return fail(outcome, ErrorSource::Model, e.to_string()),
        };
        let formalized = match formalize_and_verify(problem, &informal, feedback.as_deref(), t, config, services) {
            Ok(f) => f,
            Err(e) => return fail(outcome, ErrorSource::Model, e.to_string()),
        };
        let status = formalized.verification.status;
        let next_feedback = feedback_for(&formalized, config);
        outcome.attempts.push(AttemptTrace {
            attempt_index: t,
            context_depth_used: depth.unwrap_or(0),
            context_node_ids: context.node_ids(),
            informal_proof: informal,
            formal_code: formalized.code,
            verification: formalized.verification,
            model_error: formalized.model_error,
        });
        tracing::info!(problem = %problem.name, attempt = t, ?status, "attempt finished");
        match status {
            VerificationStatus::Verified => {
                outcome.status = OutcomeStatus::Verified;
                outcome.winning_attempt = Some(t);
                return outcome;
            }
            VerificationStatus::ToolchainError => {
                let raw = outcome.attempts.last().map(|a| a.verification.raw_output.clone()).unwrap_or_default();
                return fail(outcome, ErrorSource::Toolchain, format!("checker unavailable: {raw}"));
            }
            _ => feedback = Some(next_feedback),
        }
    }
    outcome.failure_class = classify_failure(&outcome, config);
    outcome
}

/// Assigns a failure class to a failed or errored outcome; `None` for
/// verified ones. Rules are checked in order against the last attempt:
/// unusable model output, too little retrieved context, checker errors on
/// an existing informal proof, then anything else.
pub fn classify_failure(outcome: &ProofOutcome, config: &RunConfig) -> Option<FailureClass> {
    if outcome.status == OutcomeStatus::Verified {
        return None;
    }
    match outcome.error_source {
        Some(ErrorSource::Model) => return Some(FailureClass::ModelError),
        Some(ErrorSource::Retrieval) | Some(ErrorSource::Toolchain) => return Some(FailureClass::Other),
        None => {}
    }
    let Some(last) = outcome.attempts.last() else {
        return Some(FailureClass::Other);
    };
    if last.model_error.is_some() {
        return Some(FailureClass::ModelError);
    }
    if config.method != super::Method::Base && last.context_node_ids.len() < config.context_floor {
        return Some(FailureClass::MissingKnowledge);
    }
    if !last.informal_proof.trim().is_empty() && !last.verification.errors.is_empty() {
        return Some(FailureClass::FormalizationGap);
    }
    Some(FailureClass::Other)
}
