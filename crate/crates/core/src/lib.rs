//! Exact training of binarized linear classifiers.
//!
//! A classifier scores class `c` as `sum_f W[f][c] x[f] + b[c]` with weights in
//! {-1, 0, 1} and integer biases, and predicts the highest-scoring class.
//! Training solves an integer program that rewards correct margins, penalizes
//! wrong ones and charges one unit per nonzero weight.
//!
//! Pipeline: [`dataset`] → [`encoder`] → [`branch_bound`] (over [`simplex`]
//! relaxations) → [`evaluator`], with [`emitters`] for file formats.

pub mod branch_bound;
pub mod dataset;
pub mod emitters;
pub mod encoder;
pub mod error;
pub mod evaluator;
pub mod model_ir;
pub mod ratio;
pub mod simplex;
pub mod suite;

pub use error::{Error, Result};
