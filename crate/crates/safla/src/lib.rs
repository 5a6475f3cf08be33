//! Standard-library companion to [`safla_core`]: JSON document formats, event logs and
//! metrics, benchmark harnesses, and the `safla` command line.

pub mod bench;
pub mod cli;
pub mod output;
pub mod schema;

pub use safla_core as core;
