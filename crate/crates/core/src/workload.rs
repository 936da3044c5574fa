//! The stock-ordering microbenchmark and workload models used to sample
//! future executions.

use rand::Rng;
use thiserror::Error;

use crate::lang::{parse, TransactionAst};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorkloadError {
    #[error("invalid workload parameter: {0}")]
    Invalid(String),
}

/// Source of the order transaction for a given refill value.
pub fn microbench_source(refill: i64) -> String {
    format!(
        "order ::= {{
  qty := read(stock[item]);
  if (qty > 1) then
    write(stock[item] = qty - 1)
  else
    write(stock[item] = {})
}}(item)",
        refill - 1
    )
}

/// The order transaction. Stock is an array named `stock`.
pub fn microbench_txn(refill: i64) -> TransactionAst {
    parse(&microbench_source(refill)).expect("order transaction parses")
}

pub const STOCK_ARRAY: &str = "stock";

#[derive(Clone, Debug, PartialEq)]
pub struct MicrobenchSpec {
    pub items: usize,
    pub refill: i64,
    /// Fraction of items that are hot, in [0, 1].
    pub hot_fraction: f64,
    /// Fraction of picks that go to hot items, in [0, 1].
    pub hot_traffic: f64,
    pub items_per_txn: usize,
}

impl Default for MicrobenchSpec {
    fn default() -> Self {
        MicrobenchSpec {
            items: 10_000,
            refill: 100,
            hot_fraction: 0.01,
            hot_traffic: 0.0,
            items_per_txn: 1,
        }
    }
}

impl MicrobenchSpec {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        let bad = |m: &str| Err(WorkloadError::Invalid(m.to_string()));
        if self.items == 0 {
            return bad("items must be positive");
        }
        if self.refill < 2 {
            return bad("refill must be at least 2");
        }
        if !(0.0..=1.0).contains(&self.hot_fraction) {
            return bad("hot_fraction must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.hot_traffic) {
            return bad("hot traffic share must lie in [0, 1]");
        }
        if self.items_per_txn == 0 || self.items_per_txn > self.items {
            return bad("items_per_txn must lie in [1, items]");
        }
        Ok(())
    }

    /// Number of hot items: the lowest item ids.
    pub fn hot_items(&self) -> usize {
        ((self.items as f64 * self.hot_fraction).round() as usize).min(self.items)
    }

    /// Draw the item ids of one order. Items within an order are distinct.
    pub fn sample_items(&self, rng: &mut impl Rng) -> Vec<i64> {
        let hot = self.hot_items();
        let cold = self.items - hot;
        let mut out: Vec<i64> = Vec::with_capacity(self.items_per_txn);
        while out.len() < self.items_per_txn {
            let pick_hot = hot > 0 && (cold == 0 || rng.gen::<f64>() < self.hot_traffic);
            let item = if pick_hot {
                rng.gen_range(0..hot)
            } else {
                hot + rng.gen_range(0..cold)
            } as i64;
            if !out.contains(&item) {
                out.push(item);
            }
        }
        out
    }

    /// Probability that a single pick lands on `item`.
    pub fn pick_probability(&self, item: usize) -> f64 {
        let hot = self.hot_items();
        let cold = self.items - hot;
        let hot_share = if hot == 0 {
            0.0
        } else if cold == 0 {
            1.0
        } else {
            self.hot_traffic
        };
        if item < hot {
            hot_share / hot as f64
        } else {
            (1.0 - hot_share) / cold as f64
        }
    }
}

/// Reference semantics of one order: the new quantity.
pub fn order_reference(qty: i64, refill: i64) -> i64 {
    if qty > 1 {
        qty - 1
    } else {
        refill - 1
    }
}

/// How parameters of a transaction template are drawn.
#[derive(Clone, Debug, PartialEq)]
pub enum ParamSampler {
    /// Always the same parameters.
    Fixed(Vec<i64>),
    /// Weighted choice among parameter lists.
    Choice(Vec<(Vec<i64>, f64)>),
}

impl ParamSampler {
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<i64> {
        match self {
            ParamSampler::Fixed(p) => p.clone(),
            ParamSampler::Choice(opts) => {
                let i = weighted_index(opts.iter().map(|(_, w)| *w), rng);
                opts[i].0.clone()
            }
        }
    }
}

/// A transaction mix: member index into a transaction list, weight, and
/// parameter sampler.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkloadModel {
    pub entries: Vec<ModelEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelEntry {
    pub member: usize,
    pub weight: f64,
    pub params: ParamSampler,
}

impl WorkloadModel {
    pub fn uniform(members: usize) -> Self {
        WorkloadModel {
            entries: (0..members)
                .map(|m| ModelEntry {
                    member: m,
                    weight: 1.0,
                    params: ParamSampler::Fixed(Vec::new()),
                })
                .collect(),
        }
    }

    pub fn weighted(weights: &[f64]) -> Self {
        WorkloadModel {
            entries: weights
                .iter()
                .enumerate()
                .map(|(m, w)| ModelEntry {
                    member: m,
                    weight: *w,
                    params: ParamSampler::Fixed(Vec::new()),
                })
                .collect(),
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum()
    }

    /// Draw one (member, params) pair.
    pub fn sample(&self, rng: &mut impl Rng) -> (usize, Vec<i64>) {
        let i = weighted_index(self.entries.iter().map(|e| e.weight), rng);
        let e = &self.entries[i];
        (e.member, e.params.sample(rng))
    }
}

fn weighted_index(weights: impl Iterator<Item = f64> + Clone, rng: &mut impl Rng) -> usize {
    let total: f64 = weights.clone().sum();
    let mut x = rng.gen::<f64>() * total;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w <= 0.0 {
            continue;
        }
        last = i;
        if x < w {
            return i;
        }
        x -= w;
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{desugar_arrays, element, eval, Database};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn run_order(qty: i64) -> i64 {
        let ast = microbench_txn(100);
        let bounds = BTreeMap::from([(STOCK_ARRAY.to_string(), 4)]);
        let d = desugar_arrays(&ast, &bounds).unwrap();
        let mut db = Database::new();
        db.set(element(STOCK_ARRAY, 2), qty);
        eval(&d, &[2], &db).unwrap().db.get(&element(STOCK_ARRAY, 2))
    }

    #[test]
    fn order_semantics() {
        assert_eq!(run_order(5), 4);
        assert_eq!(run_order(1), 99);
        assert_eq!(run_order(2), 1);
        for q in -2..=101 {
            assert_eq!(run_order(q), order_reference(q, 100));
        }
    }

    #[test]
    fn cold_only_when_no_hot_traffic() {
        let spec = MicrobenchSpec {
            items: 1000,
            hot_traffic: 0.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let hot = spec.hot_items() as i64;
        for _ in 0..10_000 {
            assert!(spec.sample_items(&mut rng)[0] >= hot);
        }
    }

    #[test]
    fn hot_share_matches_setting() {
        let spec = MicrobenchSpec {
            hot_fraction: 0.01,
            hot_traffic: 0.10,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let hot = spec.hot_items() as i64;
        let hits = (0..n)
            .filter(|_| spec.sample_items(&mut rng)[0] < hot)
            .count();
        let share = hits as f64 / n as f64;
        assert!((share - 0.10).abs() <= 0.01, "{share}");
    }

    #[test]
    fn multi_item_orders_have_distinct_items() {
        let spec = MicrobenchSpec {
            items_per_txn: 5,
            items: 20,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let mut v = spec.sample_items(&mut rng);
            assert_eq!(v.len(), 5);
            v.sort();
            v.dedup();
            assert_eq!(v.len(), 5);
        }
    }

    #[test]
    fn pick_probabilities_sum_to_one() {
        let spec = MicrobenchSpec {
            items: 300,
            hot_traffic: 0.25,
            ..Default::default()
        };
        let total: f64 = (0..spec.items).map(|i| spec.pick_probability(i)).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn validation() {
        assert!(MicrobenchSpec::default().validate().is_ok());
        let bad = MicrobenchSpec {
            hot_traffic: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
