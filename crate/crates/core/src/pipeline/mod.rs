//! Proof search over a problem: the attempt loop with growing context,
//! plus judge-ranked best-of-N and beam search.

mod config;
mod prove;
mod search;

pub use config::{ConfigError, Method, RunConfig, Services};
pub use prove::{classify_failure, prove, query_text, AttemptTrace, ErrorSource, FailureClass, OutcomeStatus, ProofOutcome};
pub use search::{best_of_n, rank_candidates, tree_search, BestOfN, Candidate, IterationTrace, SearchError, TreeSearchResult};
