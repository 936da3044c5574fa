use std::collections::HashMap;

use super::ast::{Com, Cond, Database, Expr, TransactionAst};
use super::EvalError;

/// Values visible to an expression: the database, parameter bindings and
/// temporaries. Unassigned temporaries read as 0, like absent objects.
pub struct Env<'a> {
    pub db: &'a Database,
    pub params: &'a HashMap<String, i64>,
    pub temps: &'a HashMap<String, i64>,
}

pub fn eval_expr(e: &Expr, env: &Env<'_>) -> Result<i64, EvalError> {
    Ok(match e {
        Expr::Const(n) => *n,
        Expr::Param(p) => *env
            .params
            .get(p)
            .ok_or_else(|| EvalError::UnknownParam(p.clone()))?,
        Expr::Temp(t) => env.temps.get(t).copied().unwrap_or(0),
        Expr::Read(o) => env.db.get(o),
        Expr::Add(a, b) => eval_expr(a, env)?
            .checked_add(eval_expr(b, env)?)
            .ok_or(EvalError::Overflow)?,
        Expr::Mul(a, b) => eval_expr(a, env)?
            .checked_mul(eval_expr(b, env)?)
            .ok_or(EvalError::Overflow)?,
        Expr::Neg(a) => eval_expr(a, env)?
            .checked_neg()
            .ok_or(EvalError::Overflow)?,
    })
}

pub fn eval_cond(c: &Cond, env: &Env<'_>) -> Result<bool, EvalError> {
    Ok(match c {
        Cond::True => true,
        Cond::False => false,
        Cond::Cmp(op, a, b) => op.holds(eval_expr(a, env)?, eval_expr(b, env)?),
        Cond::And(a, b) => eval_cond(a, env)? && eval_cond(b, env)?,
        Cond::Not(a) => !eval_cond(a, env)?,
    })
}

/// Final database plus the values printed, in order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalResult {
    pub db: Database,
    pub log: Vec<i64>,
}

pub(crate) struct Machine {
    pub db: Database,
    pub params: HashMap<String, i64>,
    pub temps: HashMap<String, i64>,
    pub log: Vec<i64>,
}

impl Machine {
    pub fn new(db: Database, params: HashMap<String, i64>) -> Self {
        Machine {
            db,
            params,
            temps: HashMap::new(),
            log: Vec::new(),
        }
    }

    fn env(&self) -> Env<'_> {
        Env {
            db: &self.db,
            params: &self.params,
            temps: &self.temps,
        }
    }

    pub fn expr(&self, e: &Expr) -> Result<i64, EvalError> {
        eval_expr(e, &self.env())
    }

    pub fn run(&mut self, c: &Com) -> Result<(), EvalError> {
        match c {
            Com::Skip => {}
            Com::Assign(t, e) => {
                let v = self.expr(e)?;
                self.temps.insert(t.clone(), v);
            }
            Com::Seq(cs) => {
                for c in cs {
                    self.run(c)?;
                }
            }
            Com::If(b, t, e) => {
                if eval_cond(b, &self.env())? {
                    self.run(t)?
                } else {
                    self.run(e)?
                }
            }
            Com::Write(o, e) => {
                let v = self.expr(e)?;
                self.db.set(o.clone(), v);
            }
            Com::Print(e) => {
                let v = self.expr(e)?;
                self.log.push(v);
            }
            Com::ArrayRead { array, .. } | Com::ArrayWrite { array, .. } => {
                return Err(EvalError::ArrayNotDesugared(array.clone()))
            }
        }
        Ok(())
    }
}

pub fn bind_params(ast: &TransactionAst, params: &[i64]) -> Result<HashMap<String, i64>, EvalError> {
    if params.len() != ast.params.len() {
        return Err(EvalError::ArityMismatch {
            expected: ast.params.len(),
            got: params.len(),
        });
    }
    Ok(ast.params.iter().cloned().zip(params.iter().copied()).collect())
}

/// Run a transaction of the base language against `db`.
pub fn eval(ast: &TransactionAst, params: &[i64], db: &Database) -> Result<EvalResult, EvalError> {
    let mut m = Machine::new(db.clone(), bind_params(ast, params)?);
    m.run(&ast.body)?;
    Ok(EvalResult {
        db: m.db,
        log: m.log,
    })
}

/// Run a transaction against `db` in place and return its log. On error
/// `db` keeps the writes made before the failing step.
pub fn eval_in_place(
    ast: &TransactionAst,
    params: &[i64],
    db: &mut Database,
) -> Result<Vec<i64>, EvalError> {
    let mut m = Machine::new(std::mem::take(db), bind_params(ast, params)?);
    let r = m.run(&ast.body);
    *db = m.db;
    r.map(|()| m.log)
}
