//! Differentially private block-wise gradient shuffling.
//!
//! Instead of adding calibrated noise to gradients, the mechanism implemented
//! here partitions a flattened gradient into contiguous blocks and applies a
//! uniformly random permutation to the block order. Privacy comes from the
//! adversary's uncertainty about which block landed where; utility comes from
//! the fact that a permutation preserves the gradient's norm, mean, and
//! variance exactly.
//!
//! The crate is organised around that mechanism:
//!
//! * [`grad`] — gradient containers, clipping, the seeded block shuffle, and
//!   exact enumeration oracles for its distributional properties at small
//!   dimension.
//! * [`accountant`] — the per-group epsilon formulas, whole-run composition,
//!   and the nested binary search that picks block sizes for a target budget.
//! * [`composition`] — closed-form composition and subsampling-amplification
//!   calculators.
//! * [`bounds`] — utility, variance, information-theoretic, and
//!   optimal-parameter evaluators, plus small-instance diagnostics.
//! * [`mechanism`] — the generator that ties the accountant's plan to
//!   per-step gradient privatization.
//! * [`trainer`] — a deterministic toy SGD harness on synthetic convex
//!   problems with non-private and Gaussian baselines.
//!
//! All randomness flows through explicit 64-bit seeds (see [`rng`]); every
//! operation is a pure function of its inputs and is safe to call from
//! multiple threads. With the default `parallel` feature the Monte Carlo
//! sampling helpers and the block-size optimizer fan out over rayon; without
//! it they fall back to equivalent sequential loops.

pub mod accountant;
pub mod bounds;
pub mod composition;
pub mod error;
pub mod grad;
pub mod mechanism;
pub mod rng;
pub mod trainer;

pub use error::{Error, ErrorKind, Result};
