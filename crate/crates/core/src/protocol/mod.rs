//! Discrete-event simulation of the homeostasis protocol and its baselines.
//!
//! Sites keep private copies of the database and run transactions against
//! their local treaty. A violation freezes the affected objects, sites
//! exchange state, one violator commits on the synchronized state, fresh
//! treaties are computed and blocked requests retry. Every run can be
//! replayed serially to check that clients saw a serializable execution.

mod config;
mod engine;
mod oracle;
mod source;
mod system;
mod trace;

pub use config::{InitStock, Mode, SimConfig, WorkloadKind, KEYS};
pub use engine::{run_simulation, OracleStatus, SimResult, Simulation};
pub use oracle::{compare, serial_oracle, Mismatch, OracleOutput};
pub use source::{microbench_system, mixed_system, MicrobenchSource, MixedSource, RequestSource};
pub use system::{CompId, CompiledSystem, Component, InstId, Instance, SystemSpec};
pub use trace::{percentile, Call, Metrics, Outcome, SimTrace, TxnRecord, CSV_HEADER};

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::lang::{EvalError, ObjectId};
use crate::rewrite::SiteId;
use crate::treaty::TreatyError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("object '{0}' has no location and is not replicated")]
    Unplaced(ObjectId),
    #[error("object '{0}' is written from site {1} but stored elsewhere without replication")]
    RemoteWrite(ObjectId, SiteId),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Treaty(#[from] TreatyError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("a committed transaction has no commit position")]
    IncompleteRound,
}

#[cfg(test)]
mod tests;
