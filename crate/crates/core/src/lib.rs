//! Round-based modelling of collective communication (broadcast, gather,
//! all-to-all) on clusters of shared-memory multi-core machines.
//!
//! - [`topology`]: machines, NICs, links, generators and the topology file format
//! - [`model`]: problems, schedules and the classic/extended round semantics
//! - [`algorithms`]: schedule constructors
//! - [`search`]: exhaustive optimal-schedule search for small instances
//! - [`harness`]: experiment runner behind the `mccoll` binary

pub mod algorithms;
pub mod harness;
pub mod model;
pub mod search;
pub mod topology;
