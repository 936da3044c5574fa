use std::collections::{BTreeSet, HashMap};
use std::fmt;

use super::formula::Formula;
use super::sat::{check_satisfiable, simplify_conjunction};
use super::AnalysisError;
use crate::lang::{
    com_to_string, Com, Cond, Database, EvalError, EvalResult, Expr, Machine, ObjectId,
    TransactionAst,
};

/// Branch-free transaction: temporaries, writes and prints only.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartialTxn {
    pub params: Vec<String>,
    pub steps: Vec<Com>,
}

impl PartialTxn {
    pub fn eval(&self, params: &[i64], db: &Database) -> Result<EvalResult, EvalError> {
        if params.len() != self.params.len() {
            return Err(EvalError::ArityMismatch {
                expected: self.params.len(),
                got: params.len(),
            });
        }
        let env = self.params.iter().cloned().zip(params.iter().copied()).collect();
        self.eval_with(&env, db)
    }

    pub fn eval_with(
        &self,
        params: &HashMap<String, i64>,
        db: &Database,
    ) -> Result<EvalResult, EvalError> {
        let mut m = Machine::new(db.clone(), params.clone());
        for s in &self.steps {
            m.run(s)?;
        }
        Ok(EvalResult {
            db: m.db,
            log: m.log,
        })
    }

    pub fn reads(&self) -> BTreeSet<ObjectId> {
        let mut out = Vec::new();
        for s in &self.steps {
            match s {
                Com::Assign(_, e) | Com::Write(_, e) | Com::Print(e) => e.objects(&mut out),
                _ => {}
            }
        }
        out.into_iter().collect()
    }

    pub fn writes(&self) -> BTreeSet<ObjectId> {
        self.steps
            .iter()
            .filter_map(|s| match s {
                Com::Write(o, _) => Some(o.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn is_skip(&self) -> bool {
        self.steps.is_empty()
    }
}

impl fmt::Display for PartialTxn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.steps.is_empty() {
            return f.write_str("skip");
        }
        let parts: Vec<String> = self.steps.iter().map(com_to_string).collect();
        f.write_str(&parts.join("; "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableRow {
    pub guard: Formula,
    pub body: PartialTxn,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolicTable {
    pub source: String,
    pub params: Vec<String>,
    pub rows: Vec<TableRow>,
}

impl SymbolicTable {
    /// The unique row whose guard holds.
    pub fn lookup(&self, db: &Database, params: &[i64]) -> Result<&TableRow, AnalysisError> {
        let env = bind(&self.params, params)?;
        self.lookup_env(db, &env)
    }

    pub fn lookup_env(
        &self,
        db: &Database,
        env: &HashMap<String, i64>,
    ) -> Result<&TableRow, AnalysisError> {
        let mut found = None;
        for row in &self.rows {
            if row.guard.eval(db, env)? {
                if found.is_some() {
                    return Err(AnalysisError::MultiMatch);
                }
                found = Some(row);
            }
        }
        found.ok_or(AnalysisError::NoMatch)
    }

    /// Objects any guard or body mentions.
    pub fn footprint(&self) -> BTreeSet<ObjectId> {
        let mut out = BTreeSet::new();
        for r in &self.rows {
            out.extend(r.guard.objects());
            out.extend(r.body.reads());
            out.extend(r.body.writes());
        }
        out
    }
}

impl fmt::Display for SymbolicTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# table {}({})", self.source, self.params.join(", "))?;
        for r in &self.rows {
            writeln!(f, "{}  =>  {}", r.guard, r.body)?;
        }
        Ok(())
    }
}

fn bind(names: &[String], values: &[i64]) -> Result<HashMap<String, i64>, AnalysisError> {
    if names.len() != values.len() {
        return Err(AnalysisError::Eval(EvalError::ArityMismatch {
            expected: names.len(),
            got: values.len(),
        }));
    }
    Ok(names.iter().cloned().zip(values.iter().copied()).collect())
}

/// Working row during backward construction: guard conjuncts over program
/// expressions (temps still present) and the body built so far.
#[derive(Clone)]
struct Work {
    guard: Vec<Cond>,
    body: Vec<Com>,
}

fn subst_cond(c: &Cond, f: &impl Fn(&Expr) -> Expr) -> Cond {
    c.map_exprs(&mut |e| f(e))
}

fn backward(c: &Com, rows: Vec<Work>) -> Result<Vec<Work>, AnalysisError> {
    Ok(match c {
        Com::Skip => rows,
        Com::Seq(cs) => {
            let mut rows = rows;
            for c in cs.iter().rev() {
                rows = backward(c, rows)?;
            }
            rows
        }
        Com::If(b, t, e) => {
            let mut out = Vec::new();
            for mut r in backward(t, rows.clone())? {
                r.guard.push(b.clone());
                out.push(r);
            }
            for mut r in backward(e, rows)? {
                r.guard.push(Cond::not(b.clone()));
                out.push(r);
            }
            out
        }
        Com::Assign(t, e) => rows
            .into_iter()
            .map(|r| Work {
                guard: r.guard.iter().map(|g| subst_cond(g, &|x| x.subst_temp(t, e))).collect(),
                body: prepend(c, r.body),
            })
            .collect(),
        Com::Write(o, e) => rows
            .into_iter()
            .map(|r| Work {
                guard: r.guard.iter().map(|g| subst_cond(g, &|x| x.subst_object(o, e))).collect(),
                body: prepend(c, r.body),
            })
            .collect(),
        Com::Print(_) => rows
            .into_iter()
            .map(|r| Work {
                guard: r.guard,
                body: prepend(c, r.body),
            })
            .collect(),
        Com::ArrayRead { array, .. } | Com::ArrayWrite { array, .. } => {
            return Err(AnalysisError::NotDesugared(array.clone()))
        }
    })
}

fn prepend(c: &Com, mut body: Vec<Com>) -> Vec<Com> {
    // Bodies are kept reversed during construction.
    body.push(c.clone());
    body
}

/// Build the symbolic table of a base-language transaction.
pub fn build_table(ast: &TransactionAst) -> Result<SymbolicTable, AnalysisError> {
    let init = vec![Work {
        guard: Vec::new(),
        body: Vec::new(),
    }];
    let work = backward(&ast.body, init)?;
    let mut rows = Vec::new();
    for w in work {
        // Guard conjuncts were pushed innermost first; the outermost
        // condition reads first.
        let parts: Vec<Formula> = w.guard.iter().rev().map(Formula::from_cond).collect();
        let guard = simplify_conjunction(&Formula::and(parts));
        if !check_satisfiable(&guard) {
            continue;
        }
        let mut steps = w.body;
        steps.reverse();
        rows.push(TableRow {
            guard,
            body: PartialTxn {
                params: ast.params.clone(),
                steps: simplify_body(steps),
            },
        });
    }
    Ok(SymbolicTable {
        source: ast.name.clone(),
        params: ast.params.clone(),
        rows,
    })
}

/// Inline temporaries into later uses where that cannot change the value
/// read, then drop assignments nobody reads.
pub fn simplify_body(mut steps: Vec<Com>) -> Vec<Com> {
    let mut i = 0;
    while i < steps.len() {
        let Com::Assign(t, e) = steps[i].clone() else {
            i += 1;
            continue;
        };
        let later = &steps[i + 1..];
        let reassigned = later.iter().any(|s| matches!(s, Com::Assign(u, _) if *u == t));
        if reassigned || e.mentions_temp(&t) {
            i += 1;
            continue;
        }
        let uses: Vec<usize> = later
            .iter()
            .enumerate()
            .filter(|(_, s)| step_expr(s).is_some_and(|x| x.mentions_temp(&t)))
            .map(|(k, _)| i + 1 + k)
            .collect();
        let count: usize = uses
            .iter()
            .map(|k| {
                let mut n = 0;
                step_expr(&steps[*k]).unwrap().visit(&mut |x| {
                    if matches!(x, Expr::Temp(u) if *u == t) {
                        n += 1;
                    }
                });
                n
            })
            .sum();
        let atomic = matches!(e, Expr::Read(_) | Expr::Const(_) | Expr::Param(_));
        let mut reads = Vec::new();
        e.objects(&mut reads);
        let mut temps_in_e = Vec::new();
        e.visit(&mut |x| {
            if let Expr::Temp(u) = x {
                temps_in_e.push(u.clone());
            }
        });
        let last = uses.last().copied().unwrap_or(i);
        let clobbered = steps[i + 1..last.max(i + 1)].iter().any(|s| match s {
            Com::Write(o, _) => reads.contains(o),
            Com::Assign(u, _) => temps_in_e.contains(u),
            _ => false,
        });
        if clobbered || !(atomic || count <= 1) {
            i += 1;
            continue;
        }
        for k in uses {
            steps[k] = map_step_expr(&steps[k], |x| x.subst_temp(&t, &e));
        }
        steps.remove(i);
    }
    steps
}

fn step_expr(s: &Com) -> Option<&Expr> {
    match s {
        Com::Assign(_, e) | Com::Write(_, e) | Com::Print(e) => Some(e),
        _ => None,
    }
}

fn map_step_expr(s: &Com, f: impl Fn(&Expr) -> Expr) -> Com {
    match s {
        Com::Assign(t, e) => Com::Assign(t.clone(), f(e)),
        Com::Write(o, e) => Com::Write(o.clone(), f(e)),
        Com::Print(e) => Com::Print(f(e)),
        other => other.clone(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointRow {
    pub guard: Formula,
    pub bodies: Vec<PartialTxn>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointSymbolicTable {
    pub members: Vec<String>,
    pub member_params: Vec<Vec<String>>,
    pub rows: Vec<JointRow>,
}

/// Cross product of member tables with unsatisfiable rows pruned. Parameter
/// names shared by several members are qualified as `member.param`.
pub fn build_joint_table(tables: &[SymbolicTable]) -> JointSymbolicTable {
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for t in tables {
        for p in &t.params {
            *seen.entry(p.as_str()).or_default() += 1;
        }
    }
    let renamed: Vec<SymbolicTable> = tables
        .iter()
        .map(|t| {
            if t.params.iter().all(|p| seen[p.as_str()] == 1) {
                return t.clone();
            }
            qualify(t)
        })
        .collect();
    let mut rows = vec![JointRow {
        guard: Formula::True,
        bodies: Vec::new(),
    }];
    for t in &renamed {
        let mut next = Vec::new();
        for r in &rows {
            for tr in &t.rows {
                let guard =
                    simplify_conjunction(&Formula::and(vec![r.guard.clone(), tr.guard.clone()]));
                if !check_satisfiable(&guard) {
                    continue;
                }
                let mut bodies = r.bodies.clone();
                bodies.push(tr.body.clone());
                next.push(JointRow { guard, bodies });
            }
        }
        rows = next;
    }
    JointSymbolicTable {
        members: tables.iter().map(|t| t.source.clone()).collect(),
        member_params: renamed.iter().map(|t| t.params.clone()).collect(),
        rows,
    }
}

fn qualify(t: &SymbolicTable) -> SymbolicTable {
    let rename = |p: &str| format!("{}.{}", t.source, p);
    let fix_expr = |e: &Expr| {
        e.map_leaves(&mut |l| match l {
            Expr::Param(p) => Some(Expr::Param(rename(p))),
            _ => None,
        })
    };
    let fix_formula = |f: &Formula| rename_formula_params(f, &rename);
    SymbolicTable {
        source: t.source.clone(),
        params: t.params.iter().map(|p| rename(p)).collect(),
        rows: t
            .rows
            .iter()
            .map(|r| TableRow {
                guard: fix_formula(&r.guard),
                body: PartialTxn {
                    params: r.body.params.iter().map(|p| rename(p)).collect(),
                    steps: r.body.steps.iter().map(|s| map_step_expr(s, fix_expr)).collect(),
                },
            })
            .collect(),
    }
}

fn rename_formula_params(f: &Formula, rename: &impl Fn(&str) -> String) -> Formula {
    use super::formula::{LinCmp, Term};
    match f {
        Formula::Cmp(c) => Formula::Cmp(LinCmp {
            terms: c
                .terms
                .iter()
                .map(|(t, v)| {
                    let t = match t {
                        Term::Param(p) => Term::Param(rename(p)),
                        Term::Opaque(e) => Term::Opaque(e.map_leaves(&mut |l| match l {
                            Expr::Param(p) => Some(Expr::Param(rename(p))),
                            _ => None,
                        })),
                        other => other.clone(),
                    };
                    (t, *v)
                })
                .collect(),
            op: c.op,
            bound: c.bound,
        }),
        Formula::And(ps) => Formula::And(ps.iter().map(|p| rename_formula_params(p, rename)).collect()),
        Formula::Not(p) => Formula::Not(Box::new(rename_formula_params(p, rename))),
        other => other.clone(),
    }
}

impl JointSymbolicTable {
    /// The unique row whose guard holds; `params` has one list per member.
    pub fn lookup(&self, db: &Database, params: &[Vec<i64>]) -> Result<&JointRow, AnalysisError> {
        let mut env = HashMap::new();
        if params.len() != self.members.len() {
            return Err(AnalysisError::Eval(EvalError::ArityMismatch {
                expected: self.members.len(),
                got: params.len(),
            }));
        }
        for (names, vals) in self.member_params.iter().zip(params) {
            env.extend(bind(names, vals)?);
        }
        let mut found = None;
        for row in &self.rows {
            if row.guard.eval(db, &env)? {
                if found.is_some() {
                    return Err(AnalysisError::MultiMatch);
                }
                found = Some(row);
            }
        }
        found.ok_or(AnalysisError::NoMatch)
    }
}

impl fmt::Display for JointSymbolicTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# joint table {}", self.members.join(", "))?;
        for r in &self.rows {
            let bodies: Vec<String> = r.bodies.iter().map(|b| b.to_string()).collect();
            writeln!(f, "{}  =>  {}", r.guard, bodies.join("  |  "))?;
        }
        Ok(())
    }
}

/// Guard of the joint row matched by `db`, built from member lookups
/// without materializing the cross product.
pub fn matched_joint_guard<'a>(
    members: impl IntoIterator<Item = (&'a SymbolicTable, &'a HashMap<String, i64>)>,
    db: &Database,
) -> Result<(Formula, Vec<&'a PartialTxn>), AnalysisError> {
    let mut guards = Vec::new();
    let mut bodies = Vec::new();
    for (t, env) in members {
        let row = t.lookup_env(db, env)?;
        guards.push(row.guard.bind_params(env));
        bodies.push(&row.body);
    }
    Ok((simplify_conjunction(&Formula::and(guards)), bodies))
}
