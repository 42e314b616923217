//! Simulator for budgeted discovery of a hidden network.
//!
//! Starting from a small observed sample of an oracle graph, a policy picks
//! one node per step to probe; probing reveals that node's full neighborhood.
//! Learned policies fit a regression from node features to the probe reward
//! (newly observed nodes) online; heuristic baselines rank by degree or pick
//! at random. The harness runs trials, logs per-step traces, and aggregates.

pub mod config;
pub mod error;
pub mod features;
pub mod generators;
pub mod graph;
pub mod harness;
pub mod learners;
pub mod observed;
pub mod policies;
pub mod samplers;

pub use error::{Error, Result};
