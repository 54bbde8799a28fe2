//! Sinkhole-resistant RPL: trust-weighted DODAG construction, rank-rule and
//! probe-based sinkhole detection, quarantine, homomorphically encrypted data
//! transport, and a deterministic discrete-event simulator that runs them.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod detect;
pub mod dodag;
pub mod graph;
pub mod he;
pub mod metrics;
pub mod quarantine;
pub mod sim;
pub mod trust;
pub mod types;
pub mod wire;

pub use types::{EnergyLevel, NodeId, Rank, SimTime};
