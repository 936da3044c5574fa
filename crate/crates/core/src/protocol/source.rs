use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lang::{element, parse, Database, TransactionAst};
use crate::rewrite::{Placement, SiteId};
use crate::workload::{microbench_txn, MicrobenchSpec, STOCK_ARRAY};

use super::config::InitStock;
use super::system::SystemSpec;
use super::trace::Call;

/// Draws the calls of a client's next request.
pub trait RequestSource: Sync {
    fn next(&self, site: SiteId, rng: &mut ChaCha8Rng) -> Vec<Call>;
}

pub struct MicrobenchSource {
    pub spec: MicrobenchSpec,
}

impl RequestSource for MicrobenchSource {
    fn next(&self, _site: SiteId, rng: &mut ChaCha8Rng) -> Vec<Call> {
        self.spec
            .sample_items(rng)
            .into_iter()
            .map(|i| (0, vec![i]))
            .collect()
    }
}

/// The stock system: one replicated order transaction over a replicated
/// stock array.
pub fn microbench_system(spec: &MicrobenchSpec, sites: u32, init: InitStock, seed: u64) -> SystemSpec {
    let mut placement = Placement::new(sites);
    let mut initial = Database::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x05ee_d0f5_7c0c);
    for i in 0..spec.items {
        let x = element(STOCK_ARRAY, i);
        placement.replicated.insert(x.clone());
        let v = match init {
            InitStock::Uniform => rng.gen_range(0..=spec.refill),
            InitStock::Refill => spec.refill,
        };
        initial.set(x, v);
    }
    SystemSpec {
        sites,
        txns: vec![microbench_txn(spec.refill)],
        homes: vec![None],
        domains: vec![(0..spec.items as i64).map(|i| vec![i]).collect()],
        arrays: BTreeMap::from([(STOCK_ARRAY.to_string(), spec.items)]),
        placement,
        initial,
    }
}

/// Uniform choice among the transactions a site may run, with uniform
/// parameters from each transaction's domain.
pub struct MixedSource {
    runnable: Vec<Vec<usize>>,
    domains: Vec<Vec<Vec<i64>>>,
}

impl RequestSource for MixedSource {
    fn next(&self, site: SiteId, rng: &mut ChaCha8Rng) -> Vec<Call> {
        let t = *self.runnable[site as usize - 1]
            .choose(rng)
            .expect("every site runs something");
        let params = self.domains[t].choose(rng).cloned().unwrap_or_default();
        vec![(t, params)]
    }
}

const COUNTERS: usize = 3;

fn shape(k: usize, i: usize, sites: u32, rng: &mut ChaCha8Rng) -> (String, Option<SiteId>, Vec<Vec<i64>>) {
    let s = rng.gen_range(1..=sites);
    let t = rng.gen_range(1..=sites);
    let r = rng.gen_range(0..2);
    let c = rng.gen_range(1..25);
    let none = vec![vec![]];
    match k {
        0 => (
            format!(
                "M{i} ::= {{ q := read(r{r}); if (q > {}) then write(r{r} = q - 1) else write(r{r} = q + {}) }}()",
                c % 3,
                rng.gen_range(5..30)
            ),
            None,
            none,
        ),
        1 => (
            format!(
                "M{i} ::= {{ u := read(a{s}); v := read(b{t}); if (u + v < {c}) then write(a{s} = u + 1) else write(a{s} = u - 1) }}()"
            ),
            Some(s),
            none,
        ),
        2 => (
            format!(
                "M{i} ::= {{ v := read(a{t}); print(v); if (v > {c}) then write(b{s} = v) else skip }}()"
            ),
            Some(s),
            none,
        ),
        3 => (
            format!(
                "M{i} ::= {{ x := read(cnt[j]); if (x < {c}) then write(cnt[j] = x + 1) else {{ print(x); write(cnt[j] = 0) }} }}(j)"
            ),
            None,
            (0..COUNTERS as i64).map(|j| vec![j]).collect(),
        ),
        4 => (
            format!(
                "M{i} ::= {{ u := read(a{s}); w := read(b{s}); if (u * w > {}) then write(b{s} = w - 1) else write(b{s} = w + 2) }}()",
                c * 4
            ),
            Some(s),
            none,
        ),
        5 => (
            format!(
                "M{i} ::= {{ q := read(r{r}); print(q); if (q < {c}) then write(r{r} = q + 1) else write(r{r} = 0) }}()"
            ),
            None,
            none,
        ),
        6 => (
            format!(
                "M{i} ::= {{ u := read(b{s}); if (u - p >= 0) then write(b{s} = u - p) else write(b{s} = u + 10) }}(p)"
            ),
            Some(s),
            vec![vec![1], vec![2], vec![3]],
        ),
        _ => (
            format!(
                "M{i} ::= {{ y := read(a{t}); if (y < {c}) then write(a{t} = y + 2) else write(a{t} = y - 3) }}()"
            ),
            Some(s),
            none,
        ),
    }
}

/// A random system over per-site objects `a{s}`, `b{s}`, replicated
/// counters `r0`, `r1` and a replicated array `cnt`, with three to eight
/// transactions drawn from a fixed set of shapes.
pub fn mixed_system(sites: u32, seed: u64) -> (SystemSpec, MixedSource) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x00a1_7ed5);
    let mut placement = Placement::new(sites);
    let mut initial = Database::new();
    for s in 1..=sites {
        for o in ["a", "b"] {
            let name = format!("{o}{s}");
            placement = placement.place(&name, s);
            initial.set(name.as_str().into(), rng.gen_range(0..10));
        }
    }
    for r in 0..2 {
        let name = format!("r{r}");
        placement = placement.replicate(&name);
        initial.set(name.as_str().into(), rng.gen_range(0..10));
    }
    for j in 0..COUNTERS {
        let x = element("cnt", j);
        placement.replicated.insert(x.clone());
        initial.set(x, rng.gen_range(0..10));
    }
    let n = rng.gen_range(3..=8);
    let mut txns: Vec<TransactionAst> = Vec::new();
    let mut homes = Vec::new();
    let mut domains = Vec::new();
    for i in 0..n {
        // The first transaction runs everywhere so every site has work.
        let k = if i == 0 {
            [0, 3, 5][rng.gen_range(0..3)]
        } else {
            rng.gen_range(0..8)
        };
        let (src, home, dom) = shape(k, i, sites, &mut rng);
        txns.push(parse(&src).expect("generated transaction parses"));
        homes.push(home);
        domains.push(dom);
    }
    let runnable = (1..=sites)
        .map(|s| {
            (0..n)
                .filter(|t| homes[*t].is_none_or(|h| h == s))
                .collect()
        })
        .collect();
    let source = MixedSource {
        runnable,
        domains: domains.clone(),
    };
    let spec = SystemSpec {
        sites,
        txns,
        homes,
        domains,
        arrays: BTreeMap::from([("cnt".to_string(), COUNTERS)]),
        placement,
        initial,
    };
    (spec, source)
}
