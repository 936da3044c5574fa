//! The transaction language: a loop-free imperative language over integer
//! objects, plus bounded arrays that desugar into it.

mod ast;
mod desugar;
mod eval;
mod parser;
mod pretty;

use thiserror::Error;

pub use ast::{CmpOp, Com, Cond, Database, Expr, Index, ObjectId, TransactionAst};
pub use desugar::{desugar_arrays, element, read_write_sets};
pub use eval::{bind_params, eval, eval_cond, eval_expr, eval_in_place, EvalResult, Env};
pub(crate) use eval::Machine;
pub use parser::{parse, parse_named};
pub use pretty::{com_to_string, cond_to_string, expr_to_string, print_ast};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("temporary '{0}' may be read before it is assigned")]
    UnboundTemp(String),
    #[error("'{0}' is neither a parameter nor an assigned temporary")]
    Undeclared(String),
    #[error("unknown array '{0}'")]
    UnknownArray(String),
    #[error("index {index} out of bounds for array '{array}' of length {len}")]
    BoundExceeded { array: String, index: i64, len: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("expected {expected} parameters, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("integer overflow")]
    Overflow,
    #[error("unknown parameter '{0}'")]
    UnknownParam(String),
    #[error("array '{0}' must be desugared before evaluation")]
    ArrayNotDesugared(String),
}

#[cfg(test)]
mod tests;
