//! Block-partitioning toolkit for parallel topic model training.
//!
//! The document–word matrix of a bag-of-words corpus is split into P×P
//! blocks; blocks on the same diagonal touch pairwise-disjoint document
//! rows and word columns, so P processes can run collapsed Gibbs sampling
//! on them concurrently against shared counting matrices. How evenly the
//! word tokens spread over those blocks decides the speedup, so the
//! partitioner offers two deterministic interleaving heuristics and a
//! tiered random shuffle, next to the plain random-permutation baseline.
//!
//! The crate bundles:
//! - [`corpus`]: UCI bag-of-words ingestion, timestamp tables, and a
//!   Zipfian synthetic generator for desk-scale experiments,
//! - [`workload`]: the workload matrix, block costs, and the
//!   load-balancing ratio eta,
//! - [`partitioner`]: the partitioning algorithms plus a brute-force
//!   optimum for tiny instances,
//! - [`scheduler`]: diagonal epoch schedules and the nonconflict check,
//! - [`sampler`]: sequential and partition-parallel collapsed Gibbs
//!   sampling for LDA and Bag-of-Timestamps,
//! - [`metrics`]: smoothed point estimates, training perplexity, topic
//!   summaries,
//! - [`cli`]: the `partition` / `train` / `report` subcommands.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod partitioner;
pub mod rng;
pub mod sampler;
pub mod scheduler;
pub mod workload;

pub use error::{Error, Result};
