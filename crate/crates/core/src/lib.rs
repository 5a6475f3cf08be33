//! Intent assurance for software-defined networks.
//!
//! This crate recovers the intents that are actually deployed in a network from its
//! flow tables, compares them against a repository of declared intents, and plans the
//! purges and reinstalls that bring the two back into agreement. It also ships a
//! deterministic data-plane simulator used as a forwarding oracle.
//!
//! The crate is `no_std` and only needs `alloc`. Parsing of documents, the CLI, and
//! wall-clock timing live in the `safla` companion crate.
//!
//! Module map:
//!
//! - [`flow`]: flow entries, tables, and single-table packet matching.
//! - [`nskg`]: the network state knowledge graph (topology, hosts, status).
//! - [`extract`]: clustering, semantic linking, and aggregation into meta-intent graphs.
//! - [`intent`]: declared intents and their repository.
//! - [`assurance`]: consistency check, intent compilation, remediation, and the assurance loop.
//! - [`sim`]: the simulated data plane, fault injection, and survival metrics.

#![no_std]
#![deny(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod id;

pub mod assurance;
pub mod extract;
pub mod flow;
pub mod intent;
pub mod nskg;
pub mod sim;

pub use id::{IntentId, NodeId, PortId};
