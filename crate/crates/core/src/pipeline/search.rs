//! Judge-ranked candidate search: best-of-N sampling and beam refinement.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::prove::{feedback_for, formalize_and_verify, gather_context, verify_code, Formalized, NO_BLOCK};
use super::{RunConfig, Services};
use crate::gateway::{
    extract_lean_block, parse_judge_score, render_formal_prompt, render_informal_prompt, render_judge_prompt,
    wrap_lean_block, FormalInputs, GatewayError, SamplingParams,
};
use crate::model::{NodeId, Problem};
use crate::retrieval::{RetrievalContext, RetrievalError};
use crate::verifier::{assemble_submission, VerificationResult, VerificationStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// 1-based creation order within the search.
    pub index: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<u32>,
    pub temperature: f64,
    pub informal_proof: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formal_code: Option<String>,
    pub judge_score: u8,
    pub justification: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judge_warning: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationResult>,
}

impl Candidate {
    pub fn is_verified(&self) -> bool {
        self.verification.as_ref().is_some_and(VerificationResult::is_verified)
    }

    fn new(index: u32, parent: Option<u32>, temperature: f64, informal_proof: String) -> Self {
        Candidate {
            index,
            parent,
            temperature,
            informal_proof,
            formal_code: None,
            judge_score: 0,
            justification: String::new(),
            judge_warning: None,
            verification: None,
        }
    }

    /// Text shown to the judge: the informal proof, plus the Lean code once
    /// there is some.
    pub fn judged_text(&self) -> String {
        match &self.formal_code {
            Some(code) if !code.is_empty() => format!("{}\n\nLean 4 formalization:\n```lean4\n{code}\n```", self.informal_proof.trim()),
            _ => self.informal_proof.clone(),
        }
    }
}

/// Higher score first, verified before unverified, then lower index.
pub fn rank_candidates(a: &Candidate, b: &Candidate) -> Ordering {
    b.judge_score
        .cmp(&a.judge_score)
        .then(b.is_verified().cmp(&a.is_verified()))
        .then(a.index.cmp(&b.index))
}

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error(transparent)]
    Config(#[from] super::ConfigError),
    #[error("retrieval failed: {0}")]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Model(#[from] GatewayError),
    #[error("checker unavailable: {0}")]
    Toolchain(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestOfN {
    pub problem_name: String,
    pub context_node_ids: Vec<NodeId>,
    pub best: Candidate,
    /// All candidates, best first.
    pub candidates: Vec<Candidate>,
}

fn judge(problem: &Problem, candidate: &mut Candidate, services: &Services, sampling: &SamplingParams) -> Result<(), GatewayError> {
    let prompt = render_judge_prompt(problem, &candidate.judged_text());
    let greedy = SamplingParams {
        temperature: 0.0,
        ..sampling.clone()
    };
    let response = services.gateway.complete(&problem.name, &prompt, &greedy)?;
    match parse_judge_score(&response.text) {
        Ok(s) => {
            candidate.judge_score = s.score;
            candidate.justification = s.justification;
            candidate.judge_warning = s.warning;
        }
        Err(e) => {
            tracing::warn!(problem = %problem.name, candidate = candidate.index, "unparseable judge response, scoring 0");
            candidate.judge_score = 0;
            candidate.justification = response.text;
            candidate.judge_warning = Some(e.to_string());
        }
    }
    Ok(())
}

fn generate(
    problem: &Problem,
    context: &RetrievalContext,
    index: u32,
    config: &RunConfig,
    services: &Services,
) -> Result<Candidate, GatewayError> {
    let params = config.sampling.with_ladder(index as usize - 1);
    let prompt = render_informal_prompt(problem, context);
    let response = services.gateway.complete(&problem.name, &prompt, &params)?;
    Ok(Candidate::new(index, None, params.temperature, response.text))
}

/// Samples `n_candidates` informal proofs over the temperature ladder,
/// judges each one and returns them best first.
///
/// Candidates are produced in index order, so the result does not depend
/// on scheduling.
pub fn best_of_n(problem: &Problem, config: &RunConfig, services: &Services) -> Result<BestOfN, SearchError> {
    services.check(config)?;
    let context = gather_context(problem, config, services, config.search_context_depth())?;
    let mut candidates = Vec::with_capacity(config.n_candidates);
    for i in 1..=config.n_candidates as u32 {
        candidates.push(generate(problem, &context, i, config, services)?);
    }
    for c in &mut candidates {
        judge(problem, c, services, &config.sampling)?;
    }
    candidates.sort_by(rank_candidates);
    Ok(BestOfN {
        problem_name: problem.name.clone(),
        context_node_ids: context.node_ids(),
        best: candidates[0].clone(),
        candidates,
    })
}

fn checked(problem: &Problem, code: &str, verification: VerificationResult) -> Formalized {
    Formalized {
        code: code.to_string(),
        verification,
        model_error: code.is_empty().then(|| NO_BLOCK.to_string()),
        submission: assemble_submission(&problem.header, &problem.informal_prefix, code),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iteration: u32,
    /// Candidates judged or verified in this iteration, in creation order.
    pub candidates: Vec<Candidate>,
    /// Indices kept for the next iteration, best first.
    pub retained: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSearchResult {
    pub problem_name: String,
    pub context_node_ids: Vec<NodeId>,
    pub best: Candidate,
    pub iterations: Vec<IterationTrace>,
    /// True when a candidate verified and ended the search.
    pub verified_early: bool,
    pub verifier_calls: u32,
}

/// Beam search over candidate proofs.
///
/// Iteration 0 samples `beam_width` informal proofs. Each later iteration
/// checks every frontier candidate not checked before, derives one refinement
/// per candidate from the checker's feedback, judges the new candidates and
/// keeps the best `beam_width`. A candidate that verifies ends the search
/// at once.
pub fn tree_search(problem: &Problem, config: &RunConfig, services: &Services) -> Result<TreeSearchResult, SearchError> {
    services.check(config)?;
    let context = gather_context(problem, config, services, config.search_context_depth())?;
    let mut next_index = 1u32;
    let mut frontier = Vec::with_capacity(config.beam_width);
    for _ in 0..config.beam_width {
        frontier.push(generate(problem, &context, next_index, config, services)?);
        next_index += 1;
    }
    for c in &mut frontier {
        judge(problem, c, services, &config.sampling)?;
    }
    let created = frontier.clone();
    frontier.sort_by(rank_candidates);
    let mut iterations = vec![IterationTrace {
        iteration: 0,
        retained: frontier.iter().map(|c| c.index).collect(),
        candidates: created,
    }];
    let mut all: BTreeMap<u32, Candidate> = frontier.iter().map(|c| (c.index, c.clone())).collect();
    let mut verifier_calls = 0u32;
    let finish = |best: Candidate, iterations, verified_early, verifier_calls| TreeSearchResult {
        problem_name: problem.name.clone(),
        context_node_ids: context.node_ids(),
        best,
        iterations,
        verified_early,
        verifier_calls,
    };

    for iteration in 1..=config.search_depth as u32 {
        let mut trace = Vec::new();
        let mut refinements = Vec::new();
        for candidate in &mut frontier {
            let formalized = match (&candidate.formal_code, &candidate.verification) {
                // Checked in an earlier iteration and failed; only refine again.
                (Some(code), Some(v)) => checked(problem, code, v.clone()),
                (Some(code), None) => {
                    verifier_calls += 1;
                    verify_code(problem, &wrap_lean_block(code), verifier_calls, config, services)
                }
                (None, _) => {
                    verifier_calls += 1;
                    formalize_and_verify(problem, &candidate.informal_proof, None, verifier_calls, config, services)?
                }
            };
            if formalized.verification.status == VerificationStatus::ToolchainError {
                return Err(SearchError::Toolchain(formalized.verification.raw_output));
            }
            candidate.formal_code = Some(formalized.code.clone());
            candidate.verification = Some(formalized.verification.clone());
            trace.push(candidate.clone());
            if candidate.is_verified() {
                tracing::info!(problem = %problem.name, candidate = candidate.index, "candidate verified");
                let best = candidate.clone();
                iterations.push(IterationTrace {
                    iteration,
                    candidates: trace,
                    retained: vec![best.index],
                });
                return Ok(finish(best, iterations, true, verifier_calls));
            }
            let feedback = feedback_for(&formalized, config);
            let prompt = render_formal_prompt(
                &FormalInputs::for_problem(problem, &candidate.informal_proof),
                Some(&feedback),
            );
            let response = services.gateway.complete(&problem.name, &prompt, &config.sampling)?;
            let mut refined = Candidate::new(next_index, Some(candidate.index), config.sampling.temperature, candidate.informal_proof.clone());
            next_index += 1;
            refined.formal_code = extract_lean_block(&response.text).ok().filter(|c| !c.is_empty());
            refinements.push(refined);
        }
        for r in &mut refinements {
            judge(problem, r, services, &config.sampling)?;
        }
        trace.extend(refinements.iter().cloned());
        for c in &trace {
            all.insert(c.index, c.clone());
        }
        let mut pool: Vec<Candidate> = frontier.drain(..).chain(refinements).collect();
        pool.sort_by(rank_candidates);
        pool.truncate(config.beam_width);
        iterations.push(IterationTrace {
            iteration,
            candidates: trace,
            retained: pool.iter().map(|c| c.index).collect(),
        });
        frontier = pool;
    }
    let best = all.into_values().min_by(rank_candidates).expect("beam is non-empty");
    Ok(finish(best, iterations, false, verifier_calls))
}
