//! Knowledge-graph retrieval for LLM theorem proving.
//!
//! The crate turns a MediaWiki dump of mathematical pages into a typed
//! graph, retrieves related pages for a problem by embedding similarity and
//! graph expansion, and drives a generate/formalize/verify loop against a
//! chat model and a Lean checker.

pub mod bench;
pub mod cli;
pub mod gateway;
pub mod graph;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod http;
pub mod retrieval;
pub mod retry;
pub mod verifier;
