//! Variable length Markov chains over small alphabets.
//!
//! * [`tree`], [`comb`], [`model`]: context trees, the comb family and the
//!   JSON model format.
//! * [`analysis`]: stationary probabilities, loss-of-memory coefficients
//!   and the exponential error bounds.
//! * [`sampler`]: reproducible sample paths.
//! * [`counts`], [`estimator`]: substring counts and the algorithm Context.
//! * [`experiment`]: Monte Carlo checks of the bounds.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alphabet;
pub mod analysis;
pub mod comb;
pub mod counts;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod model;
pub mod sampler;
pub mod tree;

pub use alphabet::{Alphabet, Word};
pub use analysis::{Analyzer, BoundReport, ReportOptions};
pub use comb::CombSpec;
pub use counts::{build_counts, CountTrie};
pub use error::{Error, Result};
pub use estimator::{
    estimate, estimate_brute_force, trees_equal_truncated, EstimationParams, EstimationResult,
};
pub use model::{Model, ModelSpec};
pub use sampler::{sample_path, SamplePath, Sampler};
pub use tree::{
    context_of, truncate, validate_model, validate_tree, ContextOracle, ContextTree,
    ProbabilisticContextTree,
};
