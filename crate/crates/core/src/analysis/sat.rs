use std::collections::BTreeMap;

use super::formula::{Formula, LinCmp, Term};
use crate::lang::CmpOp;

/// Bounds implied by one comparison on its normalized linear form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Bound {
    Upper(i128),
    Lower(i128),
    Exact(i128),
    Never,
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn floor_div(a: i128, b: i128) -> i128 {
    a.div_euclid(b)
}

fn ceil_div(a: i128, b: i128) -> i128 {
    -(-a).div_euclid(b)
}

/// Split a comparison into a canonical form key (coefficients divided by
/// their gcd, first coefficient positive) and the integer bound it implies.
fn classify(c: &LinCmp) -> (Vec<(Term, i128)>, Bound) {
    let g = c.terms.values().fold(0i128, |g, v| gcd(g, *v as i128));
    let first = c.terms.values().next().copied().unwrap_or(1);
    let s: i128 = if first < 0 { -1 } else { 1 };
    let g = g.max(1);
    let key: Vec<(Term, i128)> = c
        .terms
        .iter()
        .map(|(t, v)| (t.clone(), *v as i128 * s / g))
        .collect();
    let n = c.bound as i128;
    // Σ = s·g·K, so the comparison constrains K.
    let bound = match (c.op, s) {
        (CmpOp::Le, 1) => Bound::Upper(floor_div(n, g)),
        (CmpOp::Lt, 1) => Bound::Upper(floor_div(n - 1, g)),
        (CmpOp::Le, _) => Bound::Lower(ceil_div(-n, g)),
        (CmpOp::Lt, _) => Bound::Lower(ceil_div(1 - n, g)),
        (CmpOp::Eq, s) => {
            if n % g == 0 {
                Bound::Exact(s * n / g)
            } else {
                Bound::Never
            }
        }
    };
    (key, bound)
}

/// Drop conjuncts implied by a tighter conjunct on the same linear form and
/// duplicate conjuncts. Returns `Formula::False` when two bounds on one form
/// contradict.
pub fn simplify_conjunction(f: &Formula) -> Formula {
    let parts: Vec<&Formula> = f.conjuncts();
    if parts.iter().any(|p| matches!(p, Formula::False)) {
        return Formula::False;
    }
    struct Group {
        lo: Option<(i128, usize)>,
        hi: Option<(i128, usize)>,
        exact: Option<(i128, usize)>,
    }
    let mut groups: BTreeMap<Vec<(Term, i128)>, Group> = BTreeMap::new();
    let mut keep = vec![false; parts.len()];
    let mut excluded: Vec<(Vec<(Term, i128)>, i128)> = Vec::new();
    for (i, p) in parts.iter().enumerate() {
        match p {
            Formula::Cmp(c) => {
                let (key, b) = classify(c);
                let g = groups.entry(key).or_insert(Group {
                    lo: None,
                    hi: None,
                    exact: None,
                });
                match b {
                    Bound::Never => return Formula::False,
                    Bound::Upper(u) => {
                        if g.hi.map_or(true, |(h, _)| u < h) {
                            g.hi = Some((u, i));
                        }
                    }
                    Bound::Lower(l) => {
                        if g.lo.map_or(true, |(h, _)| l > h) {
                            g.lo = Some((l, i));
                        }
                    }
                    Bound::Exact(v) => match g.exact {
                        Some((e, _)) if e != v => return Formula::False,
                        Some(_) => {}
                        None => g.exact = Some((v, i)),
                    },
                }
            }
            Formula::Not(inner) => {
                if let Formula::Cmp(c) = inner.as_ref() {
                    if c.op == CmpOp::Eq {
                        if let (key, Bound::Exact(v)) = classify(c) {
                            excluded.push((key, v));
                        }
                    }
                }
                if !parts[..i].contains(p) {
                    keep[i] = true;
                }
            }
            Formula::True => {}
            other => {
                if !parts[..i].contains(&other) {
                    keep[i] = true;
                }
            }
        }
    }
    for (key, g) in &groups {
        let lo = g.lo.map(|x| x.0);
        let hi = g.hi.map(|x| x.0);
        if let (Some(l), Some(h)) = (lo, hi) {
            if l > h {
                return Formula::False;
            }
        }
        if let Some((v, i)) = g.exact {
            if lo.is_some_and(|l| v < l) || hi.is_some_and(|h| v > h) {
                return Formula::False;
            }
            if excluded.iter().any(|(k, e)| k == key && *e == v) {
                return Formula::False;
            }
            keep[i] = true;
            continue;
        }
        if let (Some(l), Some(h)) = (lo, hi) {
            if l == h && excluded.iter().any(|(k, e)| k == key && *e == l) {
                return Formula::False;
            }
        }
        if let Some((_, i)) = g.lo {
            keep[i] = true;
        }
        if let Some((_, i)) = g.hi {
            keep[i] = true;
        }
    }
    Formula::and(
        parts
            .iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(p, _)| (*p).clone())
            .collect(),
    )
}

const MAX_ROWS: usize = 400;

/// Conservative satisfiability: `false` only when the formula has no integer
/// model. Bounds on a single linear form are decided exactly; other linear
/// conjunctions go through Fourier-Motzkin elimination with integer
/// tightening. Negated conjunctions and opaque products are treated as
/// unconstrained.
pub fn check_satisfiable(f: &Formula) -> bool {
    let simplified = simplify_conjunction(f);
    if simplified == Formula::False {
        return false;
    }
    let mut rows: Vec<(BTreeMap<Term, i128>, i128)> = Vec::new();
    for p in simplified.conjuncts() {
        if let Formula::Cmp(c) = p {
            let terms: BTreeMap<Term, i128> =
                c.terms.iter().map(|(t, v)| (t.clone(), *v as i128)).collect();
            let n = c.bound as i128;
            match c.op {
                CmpOp::Le => rows.push((terms, n)),
                CmpOp::Lt => rows.push((terms, n - 1)),
                CmpOp::Eq => {
                    let neg = terms.iter().map(|(t, v)| (t.clone(), -v)).collect();
                    rows.push((terms, n));
                    rows.push((neg, -n));
                }
            }
        }
    }
    fourier_motzkin(rows)
}

fn tighten(terms: BTreeMap<Term, i128>, n: i128) -> Option<(BTreeMap<Term, i128>, i128)> {
    let g = terms.values().fold(0, |g, v| gcd(g, *v));
    if g == 0 {
        return if n >= 0 { None } else { Some((terms, n)) };
    }
    Some((
        terms.into_iter().map(|(t, v)| (t, v / g)).collect(),
        floor_div(n, g),
    ))
}

fn fourier_motzkin(mut rows: Vec<(BTreeMap<Term, i128>, i128)>) -> bool {
    loop {
        let mut next = Vec::with_capacity(rows.len());
        for (t, n) in rows {
            match tighten(t, n) {
                None => {}
                Some((t, n)) if t.is_empty() => {
                    if n < 0 {
                        return false;
                    }
                }
                Some(r) => next.push(r),
            }
        }
        next.sort_by(|a, b| (&a.0, a.1).cmp(&(&b.0, b.1)));
        next.dedup();
        rows = next;
        if rows.is_empty() {
            return true;
        }
        if rows.len() > MAX_ROWS {
            return true;
        }
        // Eliminate the variable with the fewest generated combinations.
        let mut count: BTreeMap<&Term, (usize, usize)> = BTreeMap::new();
        for (t, _) in &rows {
            for (v, c) in t {
                let e = count.entry(v).or_default();
                if *c > 0 {
                    e.0 += 1
                } else {
                    e.1 += 1
                }
            }
        }
        let var = count
            .iter()
            .min_by_key(|(_, (p, n))| p * n)
            .map(|(v, _)| (*v).clone())
            .expect("non-empty rows mention a variable");
        let (with, without): (Vec<_>, Vec<_>) =
            rows.into_iter().partition(|(t, _)| t.contains_key(&var));
        let (pos, neg): (Vec<_>, Vec<_>) = with.into_iter().partition(|(t, _)| t[&var] > 0);
        let mut out = without;
        for (pt, pn) in &pos {
            for (nt, nn) in &neg {
                let a = pt[&var];
                let b = -nt[&var];
                let mut terms: BTreeMap<Term, i128> = BTreeMap::new();
                let mut overflow = false;
                for (t, v) in pt {
                    match v.checked_mul(b) {
                        Some(x) => *terms.entry(t.clone()).or_default() += x,
                        None => overflow = true,
                    }
                }
                for (t, v) in nt {
                    match v.checked_mul(a) {
                        Some(x) => *terms.entry(t.clone()).or_default() += x,
                        None => overflow = true,
                    }
                }
                let n = pn.checked_mul(b).zip(nn.checked_mul(a)).and_then(|(x, y)| x.checked_add(y));
                let Some(n) = n else { return true };
                if overflow || terms.values().any(|v| v.abs() > i64::MAX as i128) {
                    return true;
                }
                terms.retain(|_, v| *v != 0);
                out.push((terms, n));
            }
        }
        rows = out;
    }
}
