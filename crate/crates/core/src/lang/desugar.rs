use std::collections::{BTreeMap, BTreeSet};

use super::ast::{CmpOp, Com, Cond, Expr, Index, ObjectId, TransactionAst};
use super::LangError;

/// Object holding element `i` of array `a`.
pub fn element(array: &str, i: usize) -> ObjectId {
    ObjectId::new(format!("{array}_{i}"))
}

/// Rewrite bounded-array accesses into if-chains over per-element objects.
pub fn desugar_arrays(
    ast: &TransactionAst,
    bounds: &BTreeMap<String, usize>,
) -> Result<TransactionAst, LangError> {
    Ok(TransactionAst {
        name: ast.name.clone(),
        params: ast.params.clone(),
        body: go(&ast.body, bounds)?,
    })
}

fn bound(bounds: &BTreeMap<String, usize>, array: &str) -> Result<usize, LangError> {
    bounds
        .get(array)
        .copied()
        .ok_or_else(|| LangError::UnknownArray(array.to_string()))
}

fn chain(array: &str, n: usize, index: &Index, mk: impl Fn(usize) -> Com) -> Result<Com, LangError> {
    if let Index::Lit(k) = index {
        return match usize::try_from(*k) {
            Ok(k) if k < n => Ok(mk(k)),
            _ => Err(LangError::BoundExceeded {
                array: array.to_string(),
                index: *k,
                len: n,
            }),
        };
    }
    let ix = index.as_expr();
    let mut c = Com::Skip;
    for i in (0..n).rev() {
        c = Com::if_(
            Cond::cmp(CmpOp::Eq, ix.clone(), Expr::Const(i as i64)),
            mk(i),
            c,
        );
    }
    Ok(c)
}

fn go(c: &Com, bounds: &BTreeMap<String, usize>) -> Result<Com, LangError> {
    Ok(match c {
        Com::Seq(cs) => Com::Seq(cs.iter().map(|c| go(c, bounds)).collect::<Result<_, _>>()?),
        Com::If(b, t, e) => Com::if_(b.clone(), go(t, bounds)?, go(e, bounds)?),
        Com::ArrayRead { temp, array, index } => {
            let n = bound(bounds, array)?;
            chain(array, n, index, |i| {
                Com::Assign(temp.clone(), Expr::Read(element(array, i)))
            })?
        }
        Com::ArrayWrite {
            array,
            index,
            value,
        } => {
            let n = bound(bounds, array)?;
            chain(array, n, index, |i| Com::Write(element(array, i), value.clone()))?
        }
        other => other.clone(),
    })
}

/// Objects a transaction may read and may write. Array accesses with a
/// non-literal index are reported as `a[*]`.
pub fn read_write_sets(ast: &TransactionAst) -> (BTreeSet<ObjectId>, BTreeSet<ObjectId>) {
    let mut reads = BTreeSet::new();
    let mut writes = BTreeSet::new();
    let add_reads = |e: &Expr, reads: &mut BTreeSet<ObjectId>| {
        e.visit(&mut |x| {
            if let Expr::Read(o) = x {
                reads.insert(o.clone());
            }
        })
    };
    let arr = |a: &str, i: &Index| match i {
        Index::Lit(k) if *k >= 0 => element(a, *k as usize),
        _ => ObjectId::new(format!("{a}[*]")),
    };
    ast.body.visit(&mut |c| match c {
        Com::Assign(_, e) | Com::Print(e) => add_reads(e, &mut reads),
        Com::If(b, _, _) => b.exprs(&mut |e| add_reads(e, &mut reads)),
        Com::Write(o, e) => {
            add_reads(e, &mut reads);
            writes.insert(o.clone());
        }
        Com::ArrayRead { array, index, .. } => {
            reads.insert(arr(array, index));
        }
        Com::ArrayWrite {
            array,
            index,
            value,
        } => {
            add_reads(value, &mut reads);
            writes.insert(arr(array, index));
        }
        Com::Skip | Com::Seq(_) => {}
    });
    (reads, writes)
}
