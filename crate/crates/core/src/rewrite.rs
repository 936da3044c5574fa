//! Placement of objects on sites and the delta rewrite that turns writes to
//! remote or replicated objects into writes to site-local delta objects.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::lang::{Com, Cond, Expr, ObjectId, TransactionAst};

/// Sites are numbered from 1.
pub type SiteId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewriteError {
    #[error("transaction '{txn}' does not run on site {site}")]
    NotHome { txn: String, site: SiteId },
    #[error("no delta object for '{obj}' on site {site}")]
    NoDelta { obj: ObjectId, site: SiteId },
    #[error("array '{0}' must be desugared before rewriting")]
    NotDesugared(String),
}

/// Where objects live and where transactions run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Placement {
    pub sites: u32,
    pub loc: BTreeMap<ObjectId, SiteId>,
    pub home: BTreeMap<String, SiteId>,
    pub replicated: BTreeSet<ObjectId>,
}

impl Placement {
    pub fn new(sites: u32) -> Self {
        Placement {
            sites,
            ..Default::default()
        }
    }

    pub fn place(mut self, obj: &str, site: SiteId) -> Self {
        self.loc.insert(ObjectId::new(obj), site);
        self
    }

    pub fn home(mut self, txn: &str, site: SiteId) -> Self {
        self.home.insert(txn.to_string(), site);
        self
    }

    pub fn replicate(mut self, obj: &str) -> Self {
        self.replicated.insert(ObjectId::new(obj));
        self
    }

    pub fn site_ids(&self) -> impl Iterator<Item = SiteId> {
        1..=self.sites
    }

    /// Whether `site` may read `obj` without a remote snapshot.
    pub fn is_local(&self, obj: &ObjectId, site: SiteId) -> bool {
        self.replicated.contains(obj) || self.loc.get(obj) == Some(&site)
    }
}

/// Fresh per-site delta objects for tracked objects.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DeltaSchema {
    deltas: BTreeMap<ObjectId, BTreeMap<SiteId, ObjectId>>,
    bases: BTreeMap<ObjectId, (ObjectId, SiteId)>,
}

impl DeltaSchema {
    pub fn new() -> Self {
        Self::default()
    }

    /// Track `obj` with one delta per site in `sites`. Delta names avoid
    /// every name in `taken` and every delta already issued.
    pub fn track(
        &mut self,
        obj: &ObjectId,
        sites: impl IntoIterator<Item = SiteId>,
        taken: &BTreeSet<ObjectId>,
    ) {
        for s in sites {
            let mut prefix = String::from("d");
            let name = loop {
                let cand = ObjectId::new(format!("{prefix}{obj}_{s}"));
                if !taken.contains(&cand) && !self.bases.contains_key(&cand) {
                    break cand;
                }
                prefix.push('d');
            };
            self.deltas
                .entry(obj.clone())
                .or_default()
                .insert(s, name.clone());
            self.bases.insert(name, (obj.clone(), s));
        }
    }

    /// Schema covering every replicated object of `placement` on every site.
    pub fn for_replicated(placement: &Placement, taken: &BTreeSet<ObjectId>) -> Self {
        let mut schema = DeltaSchema::new();
        for x in &placement.replicated {
            schema.track(x, placement.site_ids(), taken);
        }
        schema
    }

    pub fn is_tracked(&self, obj: &ObjectId) -> bool {
        self.deltas.contains_key(obj)
    }

    pub fn delta(&self, obj: &ObjectId, site: SiteId) -> Option<&ObjectId> {
        self.deltas.get(obj).and_then(|m| m.get(&site))
    }

    pub fn deltas_of(&self, obj: &ObjectId) -> impl Iterator<Item = (SiteId, &ObjectId)> {
        self.deltas
            .get(obj)
            .into_iter()
            .flat_map(|m| m.iter().map(|(s, o)| (*s, o)))
    }

    /// The tracked object and site a delta belongs to.
    pub fn base_of(&self, delta: &ObjectId) -> Option<&(ObjectId, SiteId)> {
        self.bases.get(delta)
    }

    pub fn tracked(&self) -> impl Iterator<Item = &ObjectId> {
        self.deltas.keys()
    }

    /// Placement extended with each delta located at its site.
    pub fn extend_placement(&self, placement: &Placement) -> Placement {
        let mut p = placement.clone();
        for (d, (_, s)) in &self.bases {
            p.loc.insert(d.clone(), *s);
        }
        p
    }
}

/// Rewrite a transaction running on `site` so that it writes deltas instead
/// of tracked objects and reads each tracked object as base plus deltas.
pub fn delta_transform(
    ast: &TransactionAst,
    site: SiteId,
    placement: &Placement,
    schema: &DeltaSchema,
) -> Result<TransactionAst, RewriteError> {
    if placement.home.get(&ast.name) != Some(&site) {
        return Err(RewriteError::NotHome {
            txn: ast.name.clone(),
            site,
        });
    }
    Ok(TransactionAst {
        name: ast.name.clone(),
        params: ast.params.clone(),
        body: transform_com(&ast.body, site, schema)?,
    })
}

fn logical_read(x: &ObjectId, schema: &DeltaSchema, skip: Option<SiteId>) -> Vec<Expr> {
    schema
        .deltas_of(x)
        .filter(|(s, _)| Some(*s) != skip)
        .map(|(_, d)| Expr::Read(d.clone()))
        .collect()
}

fn transform_expr(e: &Expr, schema: &DeltaSchema) -> Expr {
    e.map_leaves(&mut |leaf| match leaf {
        Expr::Read(x) if schema.is_tracked(x) => Some(
            logical_read(x, schema, None)
                .into_iter()
                .fold(Expr::Read(x.clone()), Expr::add),
        ),
        _ => None,
    })
}

fn transform_com(c: &Com, site: SiteId, schema: &DeltaSchema) -> Result<Com, RewriteError> {
    let fe = |e: &Expr| transform_expr(e, schema);
    Ok(match c {
        Com::Skip => Com::Skip,
        Com::Assign(t, e) => Com::Assign(t.clone(), fe(e)),
        Com::Print(e) => Com::Print(fe(e)),
        Com::Seq(cs) => Com::Seq(
            cs.iter()
                .map(|c| transform_com(c, site, schema))
                .collect::<Result<_, _>>()?,
        ),
        Com::If(b, t, e) => Com::if_(
            b.map_exprs(&mut |x| fe(x)),
            transform_com(t, site, schema)?,
            transform_com(e, site, schema)?,
        ),
        Com::Write(x, e) if schema.is_tracked(x) => {
            let dx = schema.delta(x, site).ok_or_else(|| RewriteError::NoDelta {
                obj: x.clone(),
                site,
            })?;
            let value = logical_read(x, schema, Some(site))
                .into_iter()
                .fold(Expr::sub(fe(e), Expr::Read(x.clone())), Expr::sub);
            Com::Write(dx.clone(), value)
        }
        Com::Write(x, e) => Com::Write(x.clone(), fe(e)),
        Com::ArrayRead { array, .. } | Com::ArrayWrite { array, .. } => {
            return Err(RewriteError::NotDesugared(array.clone()))
        }
    })
}

/// Linear form over reads, temporaries and parameters, keeping atoms in
/// order of first appearance.
#[derive(Clone, Debug, Default)]
struct Linear {
    atoms: Vec<(Expr, i64)>,
    constant: i64,
}

impl Linear {
    fn of(e: &Expr) -> Option<Linear> {
        let mut l = Linear::default();
        l.add(e, 1)?;
        Some(l)
    }

    fn add(&mut self, e: &Expr, k: i64) -> Option<()> {
        match e {
            Expr::Const(n) => self.constant = self.constant.checked_add(n.checked_mul(k)?)?,
            Expr::Read(_) | Expr::Temp(_) | Expr::Param(_) => {
                match self.atoms.iter_mut().find(|(a, _)| a == e) {
                    Some((_, c)) => *c = c.checked_add(k)?,
                    None => self.atoms.push((e.clone(), k)),
                }
            }
            Expr::Add(a, b) => {
                self.add(a, k)?;
                self.add(b, k)?;
            }
            Expr::Neg(a) => self.add(a, k.checked_neg()?)?,
            Expr::Mul(a, b) => match (a.as_ref(), b.as_ref()) {
                (Expr::Const(n), other) | (other, Expr::Const(n)) => {
                    self.add(other, k.checked_mul(*n)?)?
                }
                _ => return None,
            },
        }
        Some(())
    }

    /// Some atom occurs in the expression but its coefficient sums to zero.
    fn cancels(&self) -> bool {
        self.atoms.iter().any(|(_, c)| *c == 0)
    }

    fn to_expr(&self) -> Expr {
        let mut acc: Option<Expr> = None;
        for (a, c) in self.atoms.iter().filter(|(_, c)| *c != 0) {
            let mag = c.unsigned_abs() as i64;
            let term = if mag == 1 {
                a.clone()
            } else {
                Expr::mul(Expr::Const(mag), a.clone())
            };
            acc = Some(match (acc, *c < 0) {
                (None, false) => term,
                (None, true) => Expr::neg(term),
                (Some(x), false) => Expr::add(x, term),
                (Some(x), true) => Expr::sub(x, term),
            });
        }
        let k = self.constant;
        match acc {
            None if k < 0 => Expr::neg(Expr::Const(-k)),
            None => Expr::Const(k),
            Some(x) if k == 0 => x,
            Some(x) if k < 0 => Expr::sub(x, Expr::Const(-k)),
            Some(x) => Expr::add(x, Expr::Const(k)),
        }
    }
}

/// Normalize `e` to a linear form if doing so cancels some read or temp.
fn cancel(e: &Expr) -> Option<Expr> {
    let l = Linear::of(e)?;
    l.cancels().then(|| l.to_expr())
}

fn each_expr(c: &Com, f: &mut impl FnMut(&Expr)) {
    c.visit(&mut |x| match x {
        Com::Assign(_, e) | Com::Write(_, e) | Com::Print(e) => f(e),
        Com::If(b, _, _) => b.exprs(f),
        Com::ArrayWrite { value, .. } => f(value),
        _ => {}
    });
}

/// Rewrite every expression of `c` reachable after a definition of `t`,
/// substituting `by` where no intervening write or reassignment could change
/// its value. Returns whether all uses were replaced.
fn inline_temp(
    c: &Com,
    t: &str,
    by: &Expr,
    reads: &[ObjectId],
    deps: &[String],
    valid: &mut bool,
    all: &mut bool,
) -> Com {
    let sub = |e: &Expr, valid: bool, all: &mut bool| -> Expr {
        if !e.mentions_temp(t) {
            return e.clone();
        }
        if !valid {
            *all = false;
            return e.clone();
        }
        let replaced = e.subst_temp(t, by);
        cancel(&replaced).unwrap_or(replaced)
    };
    match c {
        Com::Skip => Com::Skip,
        Com::Assign(u, e) => {
            let e2 = sub(e, *valid, all);
            if deps.contains(u) || u == t {
                *valid = false;
            }
            Com::Assign(u.clone(), e2)
        }
        Com::Print(e) => Com::Print(sub(e, *valid, all)),
        Com::Write(o, e) => {
            let e2 = sub(e, *valid, all);
            if reads.contains(o) {
                *valid = false;
            }
            Com::Write(o.clone(), e2)
        }
        Com::Seq(cs) => Com::Seq(
            cs.iter()
                .map(|c| inline_temp(c, t, by, reads, deps, valid, all))
                .collect(),
        ),
        Com::If(b, th, el) => {
            let v0 = *valid;
            let b2 = b.map_exprs(&mut |e| sub(e, v0, all));
            let mut vt = v0;
            let mut ve = v0;
            let th2 = inline_temp(th, t, by, reads, deps, &mut vt, all);
            let el2 = inline_temp(el, t, by, reads, deps, &mut ve, all);
            *valid = vt && ve;
            Com::if_(b2, th2, el2)
        }
        other => other.clone(),
    }
}

fn assign_count(c: &Com, t: &str) -> usize {
    let mut n = 0;
    c.visit(&mut |x| {
        if matches!(x, Com::Assign(u, _) | Com::ArrayRead { temp: u, .. } if u == t) {
            n += 1;
        }
    });
    n
}

/// Best-effort algebraic cleanup after the delta rewrite: temporaries whose
/// inlining lets a read cancel are inlined, and expressions in which terms
/// cancel are normalized. A program with nothing to cancel is unchanged.
pub fn simplify_remote_reads(ast: &TransactionAst) -> TransactionAst {
    let Com::Seq(top) = &ast.body else {
        return TransactionAst {
            body: cancel_all(&ast.body),
            ..ast.clone()
        };
    };
    let mut stmts = top.clone();
    let mut i = 0;
    while i < stmts.len() {
        let Com::Assign(t, e) = stmts[i].clone() else {
            i += 1;
            continue;
        };
        let whole = Com::Seq(stmts.clone());
        if assign_count(&whole, &t) != 1 || e.mentions_temp(&t) || Linear::of(&e).is_none() {
            i += 1;
            continue;
        }
        let mut reads = Vec::new();
        e.objects(&mut reads);
        let mut deps = Vec::new();
        e.visit(&mut |x| {
            if let Expr::Temp(u) = x {
                deps.push(u.clone());
            }
        });
        let rest = Com::Seq(stmts[i + 1..].to_vec());
        let mut beneficial = false;
        each_expr(&rest, &mut |x| {
            if x.mentions_temp(&t) {
                let y = x.subst_temp(&t, &e);
                beneficial |= Linear::of(&y).is_some_and(|l| l.cancels());
            }
        });
        if !beneficial {
            i += 1;
            continue;
        }
        let (mut valid, mut all) = (true, true);
        let new_rest = inline_temp(&rest, &t, &e, &reads, &deps, &mut valid, &mut all);
        let Com::Seq(new_rest) = new_rest else { unreachable!() };
        stmts.truncate(i + 1);
        stmts.extend(new_rest);
        if all {
            stmts.remove(i);
        } else {
            i += 1;
        }
    }
    TransactionAst {
        body: cancel_all(&Com::seq(stmts)),
        ..ast.clone()
    }
}

fn cancel_all(c: &Com) -> Com {
    let f = |e: &Expr| cancel(e).unwrap_or_else(|| e.clone());
    match c {
        Com::Assign(t, e) => Com::Assign(t.clone(), f(e)),
        Com::Write(o, e) => Com::Write(o.clone(), f(e)),
        Com::Print(e) => Com::Print(f(e)),
        Com::Seq(cs) => Com::Seq(cs.iter().map(cancel_all).collect()),
        Com::If(b, t, e) => Com::if_(cancel_cond(b), cancel_all(t), cancel_all(e)),
        other => other.clone(),
    }
}

fn cancel_cond(b: &Cond) -> Cond {
    b.map_exprs(&mut |e| cancel(e).unwrap_or_else(|| e.clone()))
}
