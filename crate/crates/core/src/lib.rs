//! Robustness certificates and W-MSR simulation for resilient leader-follower
//! consensus.
//!
//! * [`graph`]: digraphs on agents `1..=n`, circulant constructors, edge-list I/O.
//! * [`robustness`]: r-, (r,s)-, strong r- and TLF robustness checkers plus
//!   closed-form circulant certificates.
//! * [`protocol`]: W-MSR filter/update, leader and adversary behavior.
//! * [`simulation`]: synchronous round engine and envelope metrics.
//! * [`scenarios`]: canned experiments and counterexample generators.
//! * [`config`] / [`export`]: JSON scenario configs and CSV trajectory output.

pub mod config;
pub mod error;
pub mod export;
pub mod graph;
pub mod protocol;
pub mod robustness;
pub mod scenarios;
pub mod simulation;

pub use error::{Error, Result};
pub use graph::{AgentId, Digraph, VertexSet};
