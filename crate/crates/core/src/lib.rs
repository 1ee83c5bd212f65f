//! Probabilistic-method solvers for maximum clique and volume-constrained
//! local partitioning.
//!
//! A producer emits independent per-node inclusion probabilities. A penalty
//! loss over that distribution is minimized, its value is turned into a
//! tail-bound certificate, and an integral set is decoded deterministically
//! with the method of conditional expectation.

pub mod certificates;
pub mod datasets;
pub mod derandomize;
pub mod distribution;
pub mod error;
pub mod graph;
pub mod model;
pub mod parallel;
pub mod solver;

pub use error::{Error, Result};
pub use graph::{Graph, NodeSet};
