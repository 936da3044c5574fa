//! Symbolic tables: for each transaction, a partition of database states
//! into guarded rows, each paired with the straight-line code the
//! transaction runs on states in that row.

mod formula;
mod sat;
mod table;

use thiserror::Error;

pub use formula::{Formula, LinCmp, LinExpr, Term};
pub use sat::{check_satisfiable, simplify_conjunction};
pub use table::{
    build_joint_table, build_table, matched_joint_guard, simplify_body, JointRow,
    JointSymbolicTable, PartialTxn, SymbolicTable, TableRow,
};

use crate::lang::EvalError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("no row matches the database state")]
    NoMatch,
    #[error("more than one row matches the database state")]
    MultiMatch,
    #[error("array '{0}' must be desugared before analysis")]
    NotDesugared(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}
