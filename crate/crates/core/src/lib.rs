//! Proximity-graph approximate nearest neighbor indexes that can be merged.
//!
//! - [`vecstore`]: vector sets, L2 kernels, fvecs/ivecs files, synthetic data.
//! - [`pgraph`]: the flat graph index, beam search, RNG pruning, index files.
//! - [`rnsm`]: two-index merging, naive and reverse-neighbor sliding.
//! - [`mos`]: merge-order planning over many partitions and multi-index merge.
//! - [`partition`]: random and k-means partitioning.
//! - [`eval`]: ground truth, recall, QPS benchmarks, strategy comparisons.
//! - [`cli`]: the `pgmerge` command line.

pub mod cli;
pub mod error;
pub mod eval;
pub mod fsutil;
pub mod mos;
pub mod partition;
pub mod pgraph;
pub mod rnsm;
pub mod vecstore;

pub use error::{Error, Result};
