//! Distributed continuous greedy for maximizing a monotone submodular set
//! function under a partition matroid, over a network of agents that talk only
//! to their graph neighbours.

pub mod algorithms;
pub mod error;
pub mod experiments;
pub mod ground;
pub mod multilinear;
pub mod network;
pub mod oracle;
pub mod scenario;
pub mod seed;

pub use error::{Error, Result};
