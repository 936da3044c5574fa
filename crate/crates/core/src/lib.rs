//! Coordination avoidance for transactional workloads.
//!
//! Transactions written in a small imperative language are analyzed into
//! symbolic tables; the tables yield global treaties, which are split into
//! per-site local treaties so that sites can run transactions without talking
//! to each other until a local treaty is violated. A discrete-event simulator
//! runs the resulting protocol and checks every run against serial execution.

pub mod analysis;
pub mod harness;
pub mod lang;
pub mod programs;
pub mod protocol;
pub mod rewrite;
pub mod treaty;
pub mod workload;
