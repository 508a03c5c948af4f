//! Budgeted literature search over a synthetic interaction corpus.
//!
//! The library builds a small closed world end to end: a ground-truth
//! interaction graph, a document corpus whose co-mention structure mirrors
//! that graph, a boolean mention index, and a noisy black-box reader that
//! recovers interactions from retrieved documents. On top of that world an
//! iterative search engine tries to connect a source participant to a
//! destination participant while reading as few documents as it can, and a
//! small reinforcement-learned policy decides, each iteration, whether to
//! issue a narrow (conjunctive) or broad (disjunctive) query.
//!
//! Everything is deterministic given a master seed: per-subsystem seeds are
//! derived by hashing labels, so independent stages never share an rng
//! stream and parallel evaluation cannot reorder results.

pub mod corpus;
pub mod engine;
pub mod error;
pub mod eval;
pub mod extraction;
pub mod graph;
pub mod index;
pub mod manifest;
pub mod policy;
pub mod seeds;

pub mod cli;

pub use error::{Error, Result};
