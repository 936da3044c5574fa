//! Random generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use homeostasis::lang::{CmpOp, Com, Cond, Database, Expr, ObjectId, TransactionAst};
use homeostasis::rewrite::{Placement, SiteId};
use homeostasis::treaty::{GlobalTreaty, LinearConstraint};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const OBJECTS: [&str; 4] = ["x", "y", "z", "w"];
const PARAMS: [&str; 2] = ["p", "q"];

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    params: Vec<String>,
    next_temp: usize,
}

impl Gen<'_> {
    fn leaf(&mut self, temps: &[String]) -> Expr {
        match self.rng.gen_range(0..4) {
            0 => Expr::Const(self.rng.gen_range(-5..=5)),
            1 if !self.params.is_empty() => Expr::param(self.params.choose(self.rng).unwrap()),
            2 if !temps.is_empty() => Expr::temp(temps.choose(self.rng).unwrap()),
            _ => Expr::read(*OBJECTS.choose(self.rng).unwrap()),
        }
    }

    fn expr(&mut self, temps: &[String], depth: u32) -> Expr {
        if depth == 0 || self.rng.gen_bool(0.4) {
            return self.leaf(temps);
        }
        match self.rng.gen_range(0..10) {
            0..=4 => Expr::add(self.expr(temps, depth - 1), self.expr(temps, depth - 1)),
            5..=6 => Expr::sub(self.expr(temps, depth - 1), self.expr(temps, depth - 1)),
            7 => Expr::neg(self.expr(temps, depth - 1)),
            // Products stay small: one side is a constant or a leaf.
            _ => Expr::mul(self.leaf(temps), self.leaf(temps)),
        }
    }

    fn cond(&mut self, temps: &[String], depth: u32) -> Cond {
        if depth > 0 && self.rng.gen_bool(0.25) {
            return match self.rng.gen_range(0..2) {
                0 => Cond::and(self.cond(temps, depth - 1), self.cond(temps, depth - 1)),
                _ => Cond::not(self.cond(temps, depth - 1)),
            };
        }
        let op = *[CmpOp::Lt, CmpOp::Le, CmpOp::Eq].choose(self.rng).unwrap();
        Cond::cmp(op, self.expr(temps, 2), self.expr(temps, 1))
    }

    fn block(&mut self, temps: &mut Vec<String>, depth: u32) -> Com {
        let n = self.rng.gen_range(1..=3);
        let mut cs = Vec::new();
        for _ in 0..n {
            cs.push(self.com(temps, depth));
        }
        Com::seq(cs)
    }

    fn com(&mut self, temps: &mut Vec<String>, depth: u32) -> Com {
        match self.rng.gen_range(0..10) {
            0..=2 => {
                let t = format!("t{}", self.next_temp);
                self.next_temp += 1;
                let e = if self.rng.gen_bool(0.6) {
                    Expr::read(*OBJECTS.choose(self.rng).unwrap())
                } else {
                    self.expr(temps, 2)
                };
                temps.push(t.clone());
                Com::Assign(t, e)
            }
            3..=5 => Com::Write(
                ObjectId::new(OBJECTS.choose(self.rng).unwrap()),
                self.expr(temps, 2),
            ),
            6 => Com::Print(self.expr(temps, 2)),
            7 => Com::Skip,
            _ if depth > 0 => {
                let c = self.cond(temps, 2);
                // Temporaries assigned inside a branch stay local to it.
                let mut tt = temps.clone();
                let t = self.block(&mut tt, depth - 1);
                let mut te = temps.clone();
                let e = self.block(&mut te, depth - 1);
                Com::if_(c, t, e)
            }
            _ => Com::Write(
                ObjectId::new(OBJECTS.choose(self.rng).unwrap()),
                self.expr(temps, 1),
            ),
        }
    }
}

/// A random array-free transaction over [`OBJECTS`] with up to two
/// parameters, nested conditionals, prints and occasional products.
pub fn random_txn(rng: &mut ChaCha8Rng, name: &str) -> TransactionAst {
    let nparams = rng.gen_range(0..=2);
    let params: Vec<String> = PARAMS[..nparams].iter().map(|s| s.to_string()).collect();
    let mut g = Gen {
        rng,
        params: params.clone(),
        next_temp: 0,
    };
    let mut temps = Vec::new();
    let mut cs = Vec::new();
    let n = g.rng.gen_range(1..=4);
    for _ in 0..n {
        cs.push(g.com(&mut temps, 2));
    }
    let ps: Vec<&str> = params.iter().map(String::as_str).collect();
    TransactionAst::new(name, &ps, Com::seq(cs))
}

pub fn random_db(rng: &mut ChaCha8Rng, range: i64) -> Database {
    OBJECTS
        .iter()
        .map(|o| (*o, rng.gen_range(-range..=range)))
        .collect()
}

pub fn random_params(rng: &mut ChaCha8Rng, n: usize) -> Vec<i64> {
    (0..n).map(|_| rng.gen_range(-6..=6)).collect()
}

/// Objects `o0..o{n}` spread over `sites` sites, each site holding one.
pub fn random_placement(rng: &mut ChaCha8Rng, sites: u32, objects: usize) -> (Placement, Vec<ObjectId>) {
    let mut p = Placement::new(sites);
    let mut objs = Vec::new();
    for i in 0..objects {
        let name = format!("o{i}");
        let s: SiteId = if (i as u32) < sites {
            i as u32 + 1
        } else {
            rng.gen_range(1..=sites)
        };
        p = p.place(&name, s);
        objs.push(ObjectId::new(&name));
    }
    (p, objs)
}

/// A random linear global treaty that holds on `db`.
pub fn random_treaty(rng: &mut ChaCha8Rng, objs: &[ObjectId], db: &Database) -> GlobalTreaty {
    let n = rng.gen_range(1..=4);
    let mut clauses = Vec::new();
    for _ in 0..n {
        let k = rng.gen_range(1..=objs.len().min(4));
        let mut terms = BTreeMap::new();
        let chosen: Vec<ObjectId> = objs.choose_multiple(rng, k).cloned().collect();
        for x in chosen {
            let c = loop {
                let c = rng.gen_range(-3..=3);
                if c != 0 {
                    break c;
                }
            };
            terms.insert(x, c);
        }
        let value: i64 = terms.iter().map(|(x, c)| c * db.get(x)).sum();
        let (op, bound) = match rng.gen_range(0..3) {
            0 => (CmpOp::Eq, value),
            1 => (CmpOp::Le, value + rng.gen_range(0..=6)),
            _ => (CmpOp::Lt, value + rng.gen_range(1..=6)),
        };
        clauses.push(LinearConstraint { terms, op, bound });
    }
    GlobalTreaty { clauses }
}

/// `db` with every object moved by at most `spread`.
pub fn perturb(rng: &mut ChaCha8Rng, db: &Database, spread: i64) -> Database {
    let mut out = Database::new();
    for (x, v) in db.iter() {
        out.set(x.clone(), v + rng.gen_range(-spread..=spread));
    }
    out
}
