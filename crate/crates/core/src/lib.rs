//! Exact simulation of one-shot LOCC state merging on small dense systems.
//!
//! The crate builds a tripartite state `|ψ>^{RAB}` from a family of three
//! orthogonal bipartite states, runs a two-way protocol that merges A's share
//! into B without consuming entanglement, runs a one-way protocol that spends
//! one ebit, and searches numerically over zero-cost one-way protocols.

pub mod correction;
pub mod error;
pub mod koashi_imoto;
pub mod linalg;
pub mod measure;
pub mod protocols;
pub mod search;
pub mod states;

pub use error::{Error, Result};
