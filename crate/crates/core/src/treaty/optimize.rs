use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    clause_families, default_config, ConfigVar, GlobalTreaty, LocalTreatyTemplate,
    TreatyConfiguration, TreatyError,
};
use crate::analysis::{JointSymbolicTable, SymbolicTable};
use crate::lang::{CmpOp, Database};
use crate::workload::WorkloadModel;

/// Runs one transaction of a mix on a database.
pub trait Stepper {
    fn step(&self, member: usize, params: &[i64], db: &Database) -> Result<Database, TreatyError>;
}

impl Stepper for [SymbolicTable] {
    fn step(&self, member: usize, params: &[i64], db: &Database) -> Result<Database, TreatyError> {
        let row = self[member].lookup(db, params)?;
        Ok(row.body.eval(params, db)?.db)
    }
}

impl Stepper for Vec<SymbolicTable> {
    fn step(&self, member: usize, params: &[i64], db: &Database) -> Result<Database, TreatyError> {
        self.as_slice().step(member, params, db)
    }
}

impl Stepper for JointSymbolicTable {
    fn step(&self, member: usize, params: &[i64], db: &Database) -> Result<Database, TreatyError> {
        // Other members' parameters only select among their own rows, so
        // any values do.
        let all: Vec<Vec<i64>> = self
            .member_params
            .iter()
            .enumerate()
            .map(|(i, ps)| {
                if i == member {
                    params.to_vec()
                } else {
                    vec![0; ps.len()]
                }
            })
            .collect();
        let row = self.lookup(db, &all)?;
        Ok(row.bodies[member].eval(params, db)?.db)
    }
}

/// States visited by running `steps` from `db`, starting with `db`.
pub fn execute_sequence<S: Stepper + ?Sized>(
    tables: &S,
    db: &Database,
    steps: &[(usize, Vec<i64>)],
) -> Result<Vec<Database>, TreatyError> {
    let mut out = vec![db.clone()];
    for (m, p) in steps {
        let next = tables.step(*m, p, out.last().unwrap())?;
        out.push(next);
    }
    Ok(out)
}

/// `f` sampled futures of `l` transactions each.
pub fn sample_executions<S: Stepper + ?Sized>(
    model: &WorkloadModel,
    tables: &S,
    db: &Database,
    l: usize,
    f: usize,
    seed: u64,
) -> Result<Vec<Vec<Database>>, TreatyError> {
    if l == 0 || f == 0 {
        return Err(TreatyError::InvalidLookahead);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..f)
        .map(|_| {
            let steps: Vec<_> = (0..l).map(|_| model.sample(&mut rng)).collect();
            execute_sequence(tables, db, &steps)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SoftBound {
    AtMost(i64),
    Exactly(i64),
    Infeasible,
}

impl SoftBound {
    fn meet(self, other: SoftBound) -> SoftBound {
        use SoftBound::*;
        match (self, other) {
            (Infeasible, _) | (_, Infeasible) => Infeasible,
            (AtMost(a), AtMost(b)) => AtMost(a.min(b)),
            (Exactly(a), Exactly(b)) if a == b => Exactly(a),
            (Exactly(a), AtMost(b)) | (AtMost(b), Exactly(a)) if a <= b => Exactly(a),
            _ => Infeasible,
        }
    }

    pub fn admits(self, v: i64) -> bool {
        match self {
            SoftBound::AtMost(b) => v <= b,
            SoftBound::Exactly(b) => v == b,
            SoftBound::Infeasible => false,
        }
    }
}

/// Bounds on configuration variables that keep one sampled future free of
/// violations.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SoftGroup {
    pub bounds: BTreeMap<ConfigVar, SoftBound>,
}

impl SoftGroup {
    pub fn satisfied_by(&self, config: &TreatyConfiguration) -> bool {
        self.bounds
            .iter()
            .all(|(v, b)| config.get(v).is_some_and(|c| b.admits(c)))
    }
}

impl fmt::Display for SoftGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .bounds
            .iter()
            .map(|(v, b)| match b {
                SoftBound::AtMost(n) => format!("{v} <= {n}"),
                SoftBound::Exactly(n) => format!("{v} = {n}"),
                SoftBound::Infeasible => format!("{v} infeasible"),
            })
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// One group per sequence: every local clause must hold on every state.
pub fn soft_constraints(
    templates: &[LocalTreatyTemplate],
    sequences: &[Vec<Database>],
) -> Vec<SoftGroup> {
    sequences
        .iter()
        .map(|seq| {
            let mut g = SoftGroup::default();
            for db in seq {
                for t in templates {
                    for c in &t.clauses {
                        let lim = c.limit(db);
                        let b = match (c.op, i64::try_from(lim)) {
                            (CmpOp::Eq, Ok(v)) => SoftBound::Exactly(v),
                            (CmpOp::Eq, Err(_)) => SoftBound::Infeasible,
                            (_, Ok(v)) => SoftBound::AtMost(v),
                            (_, Err(_)) if lim > 0 => continue,
                            (_, Err(_)) => SoftBound::Infeasible,
                        };
                        let e = g.bounds.entry(c.var.clone()).or_insert(b);
                        *e = e.meet(b);
                    }
                }
            }
            g
        })
        .collect()
}

pub fn satisfied_groups(groups: &[SoftGroup], config: &TreatyConfiguration) -> usize {
    groups.iter().filter(|g| g.satisfied_by(config)).count()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolverLimits {
    /// Branch-and-bound nodes to explore before returning the incumbent.
    pub max_nodes: u64,
}

impl Default for SolverLimits {
    fn default() -> Self {
        SolverLimits { max_nodes: 100_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Optimized {
    pub config: TreatyConfiguration,
    pub satisfied: usize,
    pub default_satisfied: usize,
    pub nodes: u64,
    pub exhausted: bool,
}

struct Search<'a> {
    upper: Vec<i64>,
    /// Per variable: index of its global clause family when it has `<=`.
    family: Vec<Option<usize>>,
    need: Vec<i128>,
    groups: Vec<Vec<(usize, i64)>>,
    cap: Vec<i64>,
    sums: Vec<i128>,
    chosen: Vec<usize>,
    best: Vec<usize>,
    best_count: usize,
    nodes: u64,
    limits: &'a SolverLimits,
    exhausted: bool,
}

impl Search<'_> {
    fn value(&self, v: usize) -> i64 {
        self.upper[v].min(self.cap[v])
    }

    /// Tighten caps for group `g`; returns the undo log, or `None` if H1
    /// would break.
    fn apply(&mut self, g: usize) -> Option<Vec<(usize, i64)>> {
        let mut undo = Vec::new();
        let mut ok = true;
        for i in 0..self.groups[g].len() {
            let (v, b) = self.groups[g][i];
            if b >= self.cap[v] {
                continue;
            }
            let before = self.value(v);
            undo.push((v, self.cap[v]));
            self.cap[v] = b;
            let after = self.value(v);
            if let Some(f) = self.family[v] {
                self.sums[f] += after as i128 - before as i128;
                if self.sums[f] < self.need[f] {
                    ok = false;
                }
            }
        }
        if ok {
            Some(undo)
        } else {
            self.undo(undo);
            None
        }
    }

    fn undo(&mut self, undo: Vec<(usize, i64)>) {
        for (v, old) in undo.into_iter().rev() {
            let before = self.value(v);
            self.cap[v] = old;
            let after = self.value(v);
            if let Some(f) = self.family[v] {
                self.sums[f] += after as i128 - before as i128;
            }
        }
    }

    fn dfs(&mut self, g: usize) {
        if self.chosen.len() > self.best_count {
            self.best_count = self.chosen.len();
            self.best = self.chosen.clone();
        }
        if g == self.groups.len() || self.chosen.len() + (self.groups.len() - g) <= self.best_count {
            return;
        }
        if self.nodes >= self.limits.max_nodes {
            self.exhausted = true;
            return;
        }
        self.nodes += 1;
        if let Some(undo) = self.apply(g) {
            self.chosen.push(g);
            self.dfs(g + 1);
            self.chosen.pop();
            self.undo(undo);
        }
        self.dfs(g + 1);
    }
}

/// Configuration satisfying as many groups as possible while staying valid.
/// Exact branch and bound over group subsets with the default configuration
/// as incumbent; a group is satisfied by capping each of its variables at
/// the group's bound.
pub fn optimize_config(
    templates: &[LocalTreatyTemplate],
    gt: &GlobalTreaty,
    db: &Database,
    groups: &[SoftGroup],
    limits: &SolverLimits,
) -> Result<Optimized, TreatyError> {
    let default = default_config(templates, gt, db)?;
    let default_satisfied = satisfied_groups(groups, &default);
    let vars: Vec<ConfigVar> = default.assignment.keys().cloned().collect();
    let index: BTreeMap<&ConfigVar, usize> = vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let upper: Vec<i64> = default.assignment.values().copied().collect();
    let mut family = vec![None; vars.len()];
    let mut need = Vec::new();
    let mut sums = Vec::new();
    let k = templates.len() as i128;
    for (op, n, members) in clause_families(templates, gt) {
        if op == CmpOp::Eq {
            continue;
        }
        let f = need.len();
        need.push((k - 1) * n);
        let mut s = 0i128;
        for c in members {
            let v = index[&c.var];
            family[v] = Some(f);
            s += upper[v] as i128;
        }
        sums.push(s);
    }
    // Groups that can never hold under H2 or that pin an equality away
    // from its only valid value are dropped up front.
    let mut compiled = Vec::new();
    'groups: for g in groups {
        let mut bounds = Vec::new();
        for (var, b) in &g.bounds {
            let Some(&v) = index.get(var) else { continue 'groups };
            let is_eq = family[v].is_none();
            match *b {
                SoftBound::Infeasible => continue 'groups,
                SoftBound::Exactly(x) if x != upper[v] => continue 'groups,
                SoftBound::Exactly(_) => {}
                SoftBound::AtMost(x) if is_eq && x < upper[v] => continue 'groups,
                SoftBound::AtMost(x) if !is_eq && x < upper[v] => bounds.push((v, x)),
                SoftBound::AtMost(_) => {}
            }
        }
        compiled.push(bounds);
    }
    let mut s = Search {
        upper,
        family,
        need,
        groups: compiled,
        cap: vec![i64::MAX; vars.len()],
        sums,
        chosen: Vec::new(),
        best: Vec::new(),
        best_count: default_satisfied,
        nodes: 0,
        limits,
        exhausted: false,
    };
    s.dfs(0);
    let mut config = default.clone();
    if !s.best.is_empty() {
        for g in s.best.clone() {
            s.apply(g).expect("chosen groups were jointly feasible");
        }
        for (i, var) in vars.iter().enumerate() {
            config.assignment.insert(var.clone(), s.value(i));
        }
    }
    let satisfied = satisfied_groups(groups, &config);
    debug_assert!(satisfied >= default_satisfied);
    Ok(Optimized {
        config,
        satisfied,
        default_satisfied,
        nodes: s.nodes,
        exhausted: s.exhausted,
    })
}

/// Hand out unused slack of each `<=` clause evenly across the sites that
/// own objects in it; the first sites take the remainder.
pub fn balance_slack(
    templates: &[LocalTreatyTemplate],
    gt: &GlobalTreaty,
    config: &TreatyConfiguration,
) -> TreatyConfiguration {
    let mut out = config.clone();
    let k = templates.len() as i128;
    for (op, n, mut members) in clause_families(templates, gt) {
        if op == CmpOp::Eq {
            continue;
        }
        let sum: i128 = members
            .iter()
            .map(|c| config.get(&c.var).unwrap_or(0) as i128)
            .sum();
        let slack = sum - (k - 1) * n;
        members.retain(|c| !c.terms.is_empty());
        members.sort_by_key(|c| c.var.site);
        if slack <= 0 || members.is_empty() {
            continue;
        }
        let m = members.len() as i128;
        for (i, c) in members.iter().enumerate() {
            let share = slack / m + i128::from((i as i128) < slack % m);
            let cur = out.get(&c.var).unwrap_or(0) as i128;
            out.assignment
                .insert(c.var.clone(), (cur - share).max(i64::MIN as i128) as i64);
        }
    }
    out
}
