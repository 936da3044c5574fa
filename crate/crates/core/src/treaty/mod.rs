//! Treaties: a global linear constraint that keeps the current symbolic-table
//! row matched, split into per-site local constraints with configuration
//! variables that can be tuned to the expected workload.

mod optimize;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::analysis::{AnalysisError, Formula, LinCmp, PartialTxn, Term};
use crate::lang::{CmpOp, Database, EvalError, ObjectId};
use crate::rewrite::{Placement, SiteId};

pub use optimize::{
    balance_slack, execute_sequence, optimize_config, sample_executions, satisfied_groups,
    soft_constraints, Optimized, SoftBound, SoftGroup, SolverLimits, Stepper,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreatyError {
    #[error("the guard does not hold on the starting database")]
    PsiViolated,
    #[error("the guard still mentions transaction parameters")]
    SymbolicParams,
    #[error("object '{0}' has no location")]
    UnplacedObject(ObjectId),
    #[error("integer overflow while computing a treaty")]
    Overflow,
    #[error("lookahead and sequence count must be at least 1")]
    InvalidLookahead,
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// `Σ dᵢ·xᵢ ⊙ n` over objects.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinearConstraint {
    pub terms: BTreeMap<ObjectId, i64>,
    pub op: CmpOp,
    pub bound: i64,
}

pub(crate) fn sum_on(terms: &BTreeMap<ObjectId, i64>, db: &Database) -> i128 {
    terms
        .iter()
        .map(|(x, d)| *d as i128 * db.get(x) as i128)
        .sum()
}

fn holds128(op: CmpOp, a: i128, b: i128) -> bool {
    match op {
        CmpOp::Lt => a < b,
        CmpOp::Eq => a == b,
        CmpOp::Le => a <= b,
    }
}

pub(crate) fn to_i64(v: i128) -> Result<i64, TreatyError> {
    i64::try_from(v).map_err(|_| TreatyError::Overflow)
}

impl LinearConstraint {
    pub fn pin(obj: ObjectId, value: i64) -> Self {
        LinearConstraint {
            terms: BTreeMap::from([(obj, 1)]),
            op: CmpOp::Eq,
            bound: value,
        }
    }

    pub fn holds(&self, db: &Database) -> bool {
        holds128(self.op, sum_on(&self.terms, db), self.bound as i128)
    }

    /// Same constraint with `<` turned into `<=` over the integers.
    pub fn normalized(&self) -> (CmpOp, i128) {
        match self.op {
            CmpOp::Lt => (CmpOp::Le, self.bound as i128 - 1),
            op => (op, self.bound as i128),
        }
    }
}

fn write_terms(
    f: &mut fmt::Formatter<'_>,
    terms: impl Iterator<Item = (String, i64)>,
) -> fmt::Result {
    let mut first = true;
    for (name, d) in terms {
        let (sign, mag) = if d < 0 { ("-", d.unsigned_abs()) } else { ("+", d as u64) };
        match (first, sign) {
            (true, "-") => f.write_str("-")?,
            (true, _) => {}
            (false, s) => write!(f, " {s} ")?,
        }
        if mag == 1 {
            f.write_str(&name)?;
        } else {
            write!(f, "{mag}*{name}")?;
        }
        first = false;
    }
    if first {
        f.write_str("0")?;
    }
    Ok(())
}

impl fmt::Display for LinearConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_terms(f, self.terms.iter().map(|(x, d)| (x.to_string(), *d)))?;
        write!(f, " {} {}", self.op.symbol(), self.bound)
    }
}

/// Conjunction of linear constraints holding on the round's start state.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GlobalTreaty {
    pub clauses: Vec<LinearConstraint>,
}

impl GlobalTreaty {
    pub fn holds(&self, db: &Database) -> bool {
        self.clauses.iter().all(|c| c.holds(db))
    }

    pub fn objects(&self) -> BTreeSet<ObjectId> {
        self.clauses
            .iter()
            .flat_map(|c| c.terms.keys().cloned())
            .collect()
    }

    fn push(&mut self, c: LinearConstraint) {
        if !self.clauses.contains(&c) {
            self.clauses.push(c);
        }
    }
}

impl fmt::Display for GlobalTreaty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.clauses.is_empty() {
            return f.write_str("true");
        }
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                f.write_str(" && ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Which constraint a local clause came from.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClauseOrigin {
    /// Index into the global treaty.
    Global(usize),
    /// Pin on a remotely read object.
    Pin(ObjectId),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConfigVar {
    pub origin: ClauseOrigin,
    pub site: SiteId,
}

impl fmt::Display for ConfigVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.origin {
            ClauseOrigin::Global(g) => write!(f, "c{g}_{}", self.site),
            ClauseOrigin::Pin(x) => write!(f, "c_{x}"),
        }
    }
}

/// `Σ_{local} dᵢ·xᵢ + c ⊙ n` with `⊙` either `=` or `<=`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalClause {
    pub terms: BTreeMap<ObjectId, i64>,
    pub var: ConfigVar,
    pub op: CmpOp,
    pub bound: i64,
}

impl LocalClause {
    pub fn holds(&self, db: &Database, c: i64) -> bool {
        holds128(self.op, sum_on(&self.terms, db) + c as i128, self.bound as i128)
    }

    /// The tightest value of `c` keeping the clause true on `db`, as an
    /// upper bound for `<=` and an exact value for `=`.
    pub fn limit(&self, db: &Database) -> i128 {
        self.bound as i128 - sum_on(&self.terms, db)
    }

    /// The clause with `c` fixed, over local objects only.
    pub fn instantiate(&self, c: i64) -> Result<LinearConstraint, TreatyError> {
        Ok(LinearConstraint {
            terms: self.terms.clone(),
            op: self.op,
            bound: to_i64(self.bound as i128 - c as i128)?,
        })
    }
}

impl fmt::Display for LocalClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_terms(
            f,
            self.terms
                .iter()
                .map(|(x, d)| (x.to_string(), *d))
                .chain(std::iter::once((self.var.to_string(), 1))),
        )?;
        write!(f, " {} {}", self.op.symbol(), self.bound)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalTreatyTemplate {
    pub site: SiteId,
    pub clauses: Vec<LocalClause>,
}

impl LocalTreatyTemplate {
    pub fn holds(&self, db: &Database, config: &TreatyConfiguration) -> bool {
        self.clauses
            .iter()
            .all(|c| config.get(&c.var).is_some_and(|v| c.holds(db, v)))
    }
}

impl fmt::Display for LocalTreatyTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "site {}:", self.site)?;
        if self.clauses.is_empty() {
            return f.write_str(" true");
        }
        for (i, c) in self.clauses.iter().enumerate() {
            f.write_str(if i == 0 { " " } else { " && " })?;
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TreatyConfiguration {
    pub assignment: BTreeMap<ConfigVar, i64>,
}

impl TreatyConfiguration {
    pub fn get(&self, v: &ConfigVar) -> Option<i64> {
        self.assignment.get(v).copied()
    }
}

impl fmt::Display for TreatyConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .assignment
            .iter()
            .map(|(v, c)| format!("{v} = {c}"))
            .collect();
        f.write_str(&parts.join(", "))
    }
}

/// Linearize a guard that holds on `db` into a global treaty implying it.
/// Comparisons with products pin the objects inside them; negated
/// equalities and negated conjunctions are replaced by a disjunct that
/// holds on `db`.
pub fn preprocess(psi: &Formula, db: &Database) -> Result<GlobalTreaty, TreatyError> {
    if psi.has_params() {
        return Err(TreatyError::SymbolicParams);
    }
    if !psi.eval_db(db)? {
        return Err(TreatyError::PsiViolated);
    }
    let mut gt = GlobalTreaty::default();
    for c in psi.conjuncts() {
        strengthen(c, db, &mut gt)?;
    }
    Ok(gt)
}

fn opaque_objects(f: &Formula) -> BTreeSet<ObjectId> {
    let mut out = BTreeSet::new();
    f.visit_terms(&mut |t| {
        if let Term::Opaque(_) = t {
            t.objects(&mut out);
        }
    });
    out
}

fn linear(c: &LinCmp) -> Option<LinearConstraint> {
    let mut terms = BTreeMap::new();
    for (t, d) in &c.terms {
        match t {
            Term::Obj(x) => {
                terms.insert(x.clone(), *d);
            }
            _ => return None,
        }
    }
    Some(LinearConstraint {
        terms,
        op: c.op,
        bound: c.bound,
    })
}

fn strengthen(f: &Formula, db: &Database, gt: &mut GlobalTreaty) -> Result<(), TreatyError> {
    let pinned = opaque_objects(f);
    if !pinned.is_empty() {
        let values: BTreeMap<ObjectId, i64> =
            pinned.iter().map(|x| (x.clone(), db.get(x))).collect();
        for (x, v) in &values {
            gt.push(LinearConstraint::pin(x.clone(), *v));
        }
        let bound = f.bind_objects(&values);
        if opaque_objects(&bound).is_empty() {
            return strengthen(&bound, db, gt);
        }
        // Products whose evaluation overflowed stay opaque; the pins alone
        // fix their value.
        return Ok(());
    }
    match f {
        Formula::True => Ok(()),
        Formula::False => Err(TreatyError::PsiViolated),
        Formula::And(ps) => ps.iter().try_for_each(|p| strengthen(p, db, gt)),
        Formula::Cmp(c) => {
            gt.push(linear(c).ok_or(TreatyError::SymbolicParams)?);
            Ok(())
        }
        Formula::Not(inner) => match &**inner {
            Formula::Cmp(c) => {
                let lc = linear(c).ok_or(TreatyError::SymbolicParams)?;
                let v = sum_on(&lc.terms, db);
                let b = lc.bound as i128;
                let out = if v < b {
                    LinearConstraint {
                        terms: lc.terms,
                        op: CmpOp::Lt,
                        bound: lc.bound,
                    }
                } else {
                    LinearConstraint {
                        terms: lc.terms.iter().map(|(x, d)| (x.clone(), -d)).collect(),
                        op: CmpOp::Lt,
                        bound: to_i64(-b)?,
                    }
                };
                gt.push(out);
                Ok(())
            }
            Formula::And(ps) => {
                for p in ps {
                    if !p.eval_db(db)? {
                        return strengthen(&p.clone().negate(), db, gt);
                    }
                }
                Err(TreatyError::PsiViolated)
            }
            other => strengthen(&other.clone().negate(), db, gt),
        },
    }
}

/// Split each global clause into one local clause per site.
pub fn make_templates(
    gt: &GlobalTreaty,
    placement: &Placement,
) -> Result<Vec<LocalTreatyTemplate>, TreatyError> {
    if gt.clauses.is_empty() {
        return Ok(Vec::new());
    }
    let mut out: Vec<LocalTreatyTemplate> = placement
        .site_ids()
        .map(|site| LocalTreatyTemplate {
            site,
            clauses: Vec::new(),
        })
        .collect();
    for (g, clause) in gt.clauses.iter().enumerate() {
        for x in clause.terms.keys() {
            if !placement.loc.contains_key(x) {
                return Err(TreatyError::UnplacedObject(x.clone()));
            }
        }
        let (op, n) = clause.normalized();
        let bound = to_i64(n)?;
        for t in out.iter_mut() {
            let terms = clause
                .terms
                .iter()
                .filter(|(x, _)| placement.loc.get(*x) == Some(&t.site))
                .map(|(x, d)| (x.clone(), *d))
                .collect();
            t.clauses.push(LocalClause {
                terms,
                var: ConfigVar {
                    origin: ClauseOrigin::Global(g),
                    site: t.site,
                },
                op,
                bound,
            });
        }
    }
    Ok(out)
}

/// Add `x = c_x` at the home of every object some body reads remotely.
pub fn pin_remote_reads<'a>(
    bodies: impl IntoIterator<Item = (SiteId, &'a PartialTxn)>,
    placement: &Placement,
    mut templates: Vec<LocalTreatyTemplate>,
) -> Result<Vec<LocalTreatyTemplate>, TreatyError> {
    let mut remote = BTreeSet::new();
    for (site, body) in bodies {
        for x in body.reads() {
            if !placement.is_local(&x, site) {
                remote.insert(x);
            }
        }
    }
    for x in remote {
        let site = *placement
            .loc
            .get(&x)
            .ok_or_else(|| TreatyError::UnplacedObject(x.clone()))?;
        if templates.is_empty() {
            templates = placement
                .site_ids()
                .map(|site| LocalTreatyTemplate {
                    site,
                    clauses: Vec::new(),
                })
                .collect();
        }
        let var = ConfigVar {
            origin: ClauseOrigin::Pin(x.clone()),
            site,
        };
        let t = templates
            .iter_mut()
            .find(|t| t.site == site)
            .ok_or_else(|| TreatyError::UnplacedObject(x.clone()))?;
        if t.clauses.iter().all(|c| c.var != var) {
            t.clauses.push(LocalClause {
                terms: BTreeMap::from([(x, -1)]),
                var,
                op: CmpOp::Eq,
                bound: 0,
            });
        }
    }
    Ok(templates)
}

/// Configuration fixing every site to its current contribution.
pub fn default_config(
    templates: &[LocalTreatyTemplate],
    gt: &GlobalTreaty,
    db: &Database,
) -> Result<TreatyConfiguration, TreatyError> {
    let mut cfg = TreatyConfiguration::default();
    for t in templates {
        for c in &t.clauses {
            let v = match (&c.var.origin, c.op) {
                (ClauseOrigin::Global(g), CmpOp::Eq) => {
                    let all = sum_on(&gt.clauses[*g].terms, db);
                    all - sum_on(&c.terms, db)
                }
                _ => c.limit(db),
            };
            cfg.assignment.insert(c.var.clone(), to_i64(v)?);
        }
    }
    Ok(cfg)
}

/// Per global clause: the sites' clauses and the normalized op and bound.
pub(crate) fn clause_families<'a>(
    templates: &'a [LocalTreatyTemplate],
    gt: &GlobalTreaty,
) -> Vec<(CmpOp, i128, Vec<&'a LocalClause>)> {
    gt.clauses
        .iter()
        .enumerate()
        .map(|(g, clause)| {
            let (op, n) = clause.normalized();
            let members = templates
                .iter()
                .flat_map(|t| t.clauses.iter())
                .filter(|c| c.var.origin == ClauseOrigin::Global(g))
                .collect();
            (op, n, members)
        })
        .collect()
}

/// Whether the local treaties hold on `db` and jointly imply `gt`.
pub fn check_valid(
    templates: &[LocalTreatyTemplate],
    config: &TreatyConfiguration,
    gt: &GlobalTreaty,
    db: &Database,
) -> bool {
    // H2
    for t in templates {
        if !t.holds(db, config) {
            return false;
        }
    }
    // H1
    let k = templates.len() as i128;
    for (g, (op, n, members)) in clause_families(templates, gt).into_iter().enumerate() {
        let mut seen = BTreeSet::new();
        let mut covered = BTreeMap::new();
        let mut sum = 0i128;
        for c in &members {
            if !seen.insert(c.var.site) || c.op != op || c.bound as i128 != n {
                return false;
            }
            for (x, d) in &c.terms {
                if covered.insert(x.clone(), *d).is_some() {
                    return false;
                }
            }
            sum += config.get(&c.var).unwrap_or(0) as i128;
        }
        if seen.len() as i128 != k || covered != gt.clauses[g].terms {
            return false;
        }
        let need = (k - 1) * n;
        let ok = match op {
            CmpOp::Eq => sum == need,
            _ => sum >= need,
        };
        if !ok {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests;
