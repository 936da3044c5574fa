use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::lang::{eval_expr, expr_to_string, CmpOp, Cond, Database, Env, EvalError, Expr, ObjectId};

/// A variable of a linear form. Products that cannot be linearized are kept
/// whole as `Opaque`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Obj(ObjectId),
    Param(String),
    Opaque(Expr),
}

impl Term {
    pub fn eval(
        &self,
        db: &Database,
        params: &HashMap<String, i64>,
    ) -> Result<i64, EvalError> {
        match self {
            Term::Obj(o) => Ok(db.get(o)),
            Term::Param(p) => params
                .get(p)
                .copied()
                .ok_or_else(|| EvalError::UnknownParam(p.clone())),
            Term::Opaque(e) => {
                let temps = HashMap::new();
                eval_expr(
                    e,
                    &Env {
                        db,
                        params,
                        temps: &temps,
                    },
                )
            }
        }
    }

    pub fn objects(&self, out: &mut BTreeSet<ObjectId>) {
        match self {
            Term::Obj(o) => {
                out.insert(o.clone());
            }
            Term::Param(_) => {}
            Term::Opaque(e) => e.visit(&mut |x| {
                if let Expr::Read(o) = x {
                    out.insert(o.clone());
                }
            }),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Obj(o) => write!(f, "{o}"),
            Term::Param(p) => write!(f, "{p}"),
            Term::Opaque(e) => {
                let bare = e.map_leaves(&mut |l| match l {
                    Expr::Read(o) => Some(Expr::Temp(o.to_string())),
                    _ => None,
                });
                write!(f, "({})", expr_to_string(&bare))
            }
        }
    }
}

/// Integer linear combination of terms plus a constant.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct LinExpr {
    pub terms: BTreeMap<Term, i64>,
    pub constant: i64,
}

impl LinExpr {
    pub fn constant(c: i64) -> Self {
        LinExpr {
            terms: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn term(t: Term) -> Self {
        LinExpr {
            terms: BTreeMap::from([(t, 1)]),
            constant: 0,
        }
    }

    pub fn add(&self, other: &LinExpr) -> Option<LinExpr> {
        let mut out = self.clone();
        out.constant = out.constant.checked_add(other.constant)?;
        for (t, c) in &other.terms {
            let e = out.terms.entry(t.clone()).or_insert(0);
            *e = e.checked_add(*c)?;
            if *e == 0 {
                out.terms.remove(t);
            }
        }
        Some(out)
    }

    pub fn scale(&self, k: i64) -> Option<LinExpr> {
        if k == 0 {
            return Some(LinExpr::default());
        }
        let mut terms = BTreeMap::new();
        for (t, c) in &self.terms {
            terms.insert(t.clone(), c.checked_mul(k)?);
        }
        Some(LinExpr {
            terms,
            constant: self.constant.checked_mul(k)?,
        })
    }

    /// Linearize an expression whose reads denote object values. Returns
    /// `None` on coefficient overflow.
    pub fn from_expr(e: &Expr) -> Option<LinExpr> {
        Some(match e {
            Expr::Const(n) => LinExpr::constant(*n),
            Expr::Param(p) => LinExpr::term(Term::Param(p.clone())),
            Expr::Read(o) => LinExpr::term(Term::Obj(o.clone())),
            // An unassigned temporary reads as 0.
            Expr::Temp(_) => LinExpr::constant(0),
            Expr::Add(a, b) => LinExpr::from_expr(a)?.add(&LinExpr::from_expr(b)?)?,
            Expr::Neg(a) => LinExpr::from_expr(a)?.scale(-1)?,
            Expr::Mul(a, b) => {
                let la = LinExpr::from_expr(a)?;
                let lb = LinExpr::from_expr(b)?;
                if la.terms.is_empty() {
                    lb.scale(la.constant)?
                } else if lb.terms.is_empty() {
                    la.scale(lb.constant)?
                } else {
                    LinExpr::term(Term::Opaque(Expr::mul(la.to_expr(), lb.to_expr())))
                }
            }
        })
    }

    /// Back to an expression, with objects as reads.
    pub fn to_expr(&self) -> Expr {
        let mut acc: Option<Expr> = None;
        for (t, c) in &self.terms {
            let base = match t {
                Term::Obj(o) => Expr::Read(o.clone()),
                Term::Param(p) => Expr::Param(p.clone()),
                Term::Opaque(e) => e.clone(),
            };
            let (neg, mag) = (*c < 0, c.unsigned_abs());
            let scaled = if mag == 1 {
                base
            } else {
                Expr::mul(Expr::Const(mag as i64), base)
            };
            acc = Some(match (acc, neg) {
                (None, false) => scaled,
                (None, true) => Expr::neg(scaled),
                (Some(a), false) => Expr::add(a, scaled),
                (Some(a), true) => Expr::sub(a, scaled),
            });
        }
        match (acc, self.constant) {
            (None, c) => Expr::Const(c),
            (Some(a), 0) => a,
            (Some(a), c) if c < 0 && c != i64::MIN => Expr::sub(a, Expr::Const(-c)),
            (Some(a), c) => Expr::add(a, Expr::Const(c)),
        }
    }

    pub fn eval(
        &self,
        db: &Database,
        params: &HashMap<String, i64>,
    ) -> Result<i64, EvalError> {
        let mut acc = self.constant;
        for (t, c) in &self.terms {
            let v = t.eval(db, params)?.checked_mul(*c).ok_or(EvalError::Overflow)?;
            acc = acc.checked_add(v).ok_or(EvalError::Overflow)?;
        }
        Ok(acc)
    }
}

/// Normalized comparison `Σ cᵢ·tᵢ ⊙ bound`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinCmp {
    pub terms: BTreeMap<Term, i64>,
    pub op: CmpOp,
    pub bound: i64,
}

impl LinCmp {
    pub fn eval(&self, db: &Database, params: &HashMap<String, i64>) -> Result<bool, EvalError> {
        let lhs = LinExpr {
            terms: self.terms.clone(),
            constant: 0,
        }
        .eval(db, params)?;
        Ok(self.op.holds(lhs, self.bound))
    }

    /// Logical negation when it stays a single comparison.
    pub fn negate(&self) -> Option<LinCmp> {
        let neg = |m: &BTreeMap<Term, i64>| -> Option<BTreeMap<Term, i64>> {
            m.iter()
                .map(|(t, c)| c.checked_neg().map(|c| (t.clone(), c)))
                .collect()
        };
        match self.op {
            CmpOp::Eq => None,
            // ¬(L < n)  ⇔  -L ≤ -n
            CmpOp::Lt => Some(LinCmp {
                terms: neg(&self.terms)?,
                op: CmpOp::Le,
                bound: self.bound.checked_neg()?,
            }),
            // ¬(L ≤ n)  ⇔  -L < -n
            CmpOp::Le => Some(LinCmp {
                terms: neg(&self.terms)?,
                op: CmpOp::Lt,
                bound: self.bound.checked_neg()?,
            }),
        }
    }

    pub fn is_linear(&self) -> bool {
        self.terms.keys().all(|t| !matches!(t, Term::Opaque(_)))
    }
}

impl fmt::Display for LinCmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Print with positive coefficients where possible: -x - y <= -10
        // reads better as x + y >= 10.
        let flip = !self.terms.is_empty() && self.terms.values().all(|c| *c < 0);
        let sign = if flip { -1i128 } else { 1 };
        let mut first = true;
        for (t, c) in &self.terms {
            let c = *c as i128 * sign;
            let mag = c.unsigned_abs();
            if first {
                if c < 0 {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if c < 0 { " - " } else { " + " })?;
            }
            first = false;
            if mag != 1 {
                write!(f, "{mag}*")?;
            }
            write!(f, "{t}")?;
        }
        if first {
            f.write_str("0")?;
        }
        let op = match (self.op, flip) {
            (CmpOp::Lt, false) => "<",
            (CmpOp::Le, false) => "<=",
            (CmpOp::Lt, true) => ">",
            (CmpOp::Le, true) => ">=",
            (CmpOp::Eq, _) => "=",
        };
        write!(f, " {op} {}", self.bound as i128 * sign)
    }
}

/// Guard formula. After normalization, conjunctions are flat, negations sit
/// only on equalities or on conjunctions, and comparisons are linear over
/// objects, parameters and opaque products.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Cmp(LinCmp),
    And(Vec<Formula>),
    Not(Box<Formula>),
}

impl Formula {
    /// Normalize a condition whose reads denote object values.
    pub fn from_cond(c: &Cond) -> Formula {
        match c {
            Cond::True => Formula::True,
            Cond::False => Formula::False,
            Cond::Cmp(op, a, b) => Formula::from_cmp(*op, a, b),
            Cond::And(a, b) => Formula::and(vec![Formula::from_cond(a), Formula::from_cond(b)]),
            Cond::Not(a) => Formula::from_cond(a).negate(),
        }
    }

    fn from_cmp(op: CmpOp, a: &Expr, b: &Expr) -> Formula {
        let diff = LinExpr::from_expr(a)
            .zip(LinExpr::from_expr(b))
            .and_then(|(la, lb)| la.add(&lb.scale(-1)?));
        match diff {
            Some(d) => {
                let Some(bound) = d.constant.checked_neg() else {
                    return Formula::opaque_cmp(op, a, b);
                };
                if d.terms.is_empty() {
                    return if op.holds(0, bound) {
                        Formula::True
                    } else {
                        Formula::False
                    };
                }
                Formula::Cmp(LinCmp {
                    terms: d.terms,
                    op,
                    bound,
                })
            }
            None => Formula::opaque_cmp(op, a, b),
        }
    }

    fn opaque_cmp(op: CmpOp, a: &Expr, b: &Expr) -> Formula {
        // Overflowing coefficients: keep the comparison as an opaque term.
        let d = Expr::sub(a.clone(), b.clone());
        Formula::Cmp(LinCmp {
            terms: BTreeMap::from([(Term::Opaque(d), 1)]),
            op,
            bound: 0,
        })
    }

    pub fn and(parts: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    pub fn negate(self) -> Formula {
        match self {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(inner) => *inner,
            Formula::Cmp(c) => match c.negate() {
                Some(n) => Formula::Cmp(n),
                None => Formula::Not(Box::new(Formula::Cmp(c))),
            },
            other => Formula::Not(Box::new(other)),
        }
    }

    /// Flat list of conjuncts.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::True => Vec::new(),
            Formula::And(ps) => ps.iter().collect(),
            other => vec![other],
        }
    }

    pub fn eval(&self, db: &Database, params: &HashMap<String, i64>) -> Result<bool, EvalError> {
        Ok(match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Cmp(c) => c.eval(db, params)?,
            Formula::And(ps) => {
                for p in ps {
                    if !p.eval(db, params)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::Not(p) => !p.eval(db, params)?,
        })
    }

    pub fn eval_db(&self, db: &Database) -> Result<bool, EvalError> {
        self.eval(db, &HashMap::new())
    }

    pub fn objects(&self) -> BTreeSet<ObjectId> {
        let mut out = BTreeSet::new();
        self.visit_terms(&mut |t| t.objects(&mut out));
        out
    }

    pub fn has_params(&self) -> bool {
        let mut found = false;
        self.visit_terms(&mut |t| {
            found |= match t {
                Term::Param(_) => true,
                Term::Opaque(e) => e.has_params(),
                Term::Obj(_) => false,
            }
        });
        found
    }

    pub fn visit_terms(&self, f: &mut impl FnMut(&Term)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Cmp(c) => c.terms.keys().for_each(|t| f(t)),
            Formula::And(ps) => ps.iter().for_each(|p| p.visit_terms(f)),
            Formula::Not(p) => p.visit_terms(f),
        }
    }

    /// Replace parameters by values and renormalize.
    pub fn bind_params(&self, params: &HashMap<String, i64>) -> Formula {
        self.map_terms(&mut |t| match t {
            Term::Param(p) => params.get(p).map(|v| LinExpr::constant(*v)),
            Term::Opaque(e) => {
                let bound = e.map_leaves(&mut |l| match l {
                    Expr::Param(p) => params.get(p).map(|v| Expr::Const(*v)),
                    _ => None,
                });
                Some(LinExpr::from_expr(&bound).unwrap_or_else(|| LinExpr::term(Term::Opaque(bound))))
            }
            Term::Obj(_) => None,
        })
    }

    /// Replace objects by constants and renormalize.
    pub fn bind_objects(&self, values: &BTreeMap<ObjectId, i64>) -> Formula {
        self.map_terms(&mut |t| match t {
            Term::Obj(o) => values.get(o).map(|v| LinExpr::constant(*v)),
            Term::Opaque(e) => {
                let bound = e.map_leaves(&mut |l| match l {
                    Expr::Read(o) => values.get(o).map(|v| Expr::Const(*v)),
                    _ => None,
                });
                Some(LinExpr::from_expr(&bound).unwrap_or_else(|| LinExpr::term(Term::Opaque(bound))))
            }
            Term::Param(_) => None,
        })
    }

    fn map_terms(&self, f: &mut impl FnMut(&Term) -> Option<LinExpr>) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Cmp(c) => {
                let mut lhs = LinExpr::default();
                for (t, k) in &c.terms {
                    let part = match f(t) {
                        Some(l) => l,
                        None => LinExpr::term(t.clone()),
                    };
                    match part.scale(*k).and_then(|p| lhs.add(&p)) {
                        Some(l) => lhs = l,
                        None => return self.clone(),
                    }
                }
                let Some(bound) = c.bound.checked_sub(lhs.constant) else {
                    return self.clone();
                };
                if lhs.terms.is_empty() {
                    if c.op.holds(0, bound) {
                        Formula::True
                    } else {
                        Formula::False
                    }
                } else {
                    Formula::Cmp(LinCmp {
                        terms: lhs.terms,
                        op: c.op,
                        bound,
                    })
                }
            }
            Formula::And(ps) => Formula::and(ps.iter().map(|p| p.map_terms(f)).collect()),
            Formula::Not(p) => p.map_terms(f).negate(),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Cmp(c) => write!(f, "{c}"),
            Formula::And(ps) => {
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" && ")?;
                    }
                    match p {
                        Formula::And(_) => write!(f, "({p})")?,
                        _ => write!(f, "{p}")?,
                    }
                }
                Ok(())
            }
            Formula::Not(p) => match p.as_ref() {
                Formula::Cmp(c) if c.op == CmpOp::Eq => {
                    let s = c.to_string();
                    write!(f, "{}", s.replacen(" = ", " != ", 1))
                }
                other => write!(f, "!({other})"),
            },
        }
    }
}
