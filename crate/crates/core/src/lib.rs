//! Exact simulation and verification of two-robot Look-Compute-Move systems.

pub mod adversaries;
pub mod engine;
pub mod exactgeom;
pub mod model;
pub mod problems;
pub mod protocols;
pub mod registry;
pub mod sched;
pub mod traceio;
