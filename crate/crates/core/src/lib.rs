//! Layered multimessage multicast networks with zero-delay nodes.
//!
//! The crate computes cut-set style rate regions for deterministic networks,
//! networks of independent DMCs and wireless erasure networks, and simulates
//! block codes under arbitrary feasible delay profiles.
//!
//! Nodes are 0-based in the API.  Variable names, file formats and printed
//! output use 1-based node labels.

pub mod channels;
pub mod error;
pub mod examples;
pub mod network;
pub mod prob;
pub mod random;
pub mod regions;
pub mod simulator;
pub mod specfile;

pub use error::{Error, Result};
pub use network::{DelayProfile, LayeredNetwork, NodeSet};
pub use prob::{ChannelKernel, JointPmf, Var};
