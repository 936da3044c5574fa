use std::fmt;
use std::str::FromStr;

use super::SimError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Homeostasis,
    TwoPc,
    Local,
    Opt,
}

impl FromStr for Mode {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self, SimError> {
        Ok(match s {
            "homeostasis" => Mode::Homeostasis,
            "twopc" | "2pc" => Mode::TwoPc,
            "local" => Mode::Local,
            "opt" => Mode::Opt,
            _ => return Err(SimError::Config(format!("unknown mode '{s}'"))),
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Homeostasis => "homeostasis",
            Mode::TwoPc => "twopc",
            Mode::Local => "local",
            Mode::Opt => "opt",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WorkloadKind {
    Microbench,
    /// Randomly generated system of mixed transaction shapes.
    Mixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitStock {
    /// Uniform in `[0, refill]`.
    Uniform,
    /// Every item starts at `refill`.
    Refill,
}

/// Simulation parameters. Times are in milliseconds unless named `_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub mode: Mode,
    pub workload: WorkloadKind,
    pub sites: u32,
    pub clients_per_site: u32,
    pub rtt_ms: f64,
    pub service_ms: f64,
    pub refill: i64,
    pub items: usize,
    pub hot_fraction: f64,
    /// Percentage of picks that target hot items, 0 to 100.
    pub hot_traffic_pct: f64,
    pub items_per_txn: usize,
    /// Transactions per sampled future; 0 skips optimization.
    pub lookahead: usize,
    /// Number of sampled futures.
    pub cost_factor: usize,
    /// Upper bound on treaty computation time per synchronization.
    pub solver_budget: f64,
    pub duration_s: f64,
    pub warmup_s: f64,
    pub seed: u64,
    pub init_stock: InitStock,
    /// Extra allowance handed to site 1 on every `<=` clause, breaking
    /// validity on purpose.
    pub fault_inflate: i64,
    /// Check the global treaty on the logical state after every commit.
    pub check_invariants: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            mode: Mode::Homeostasis,
            workload: WorkloadKind::Microbench,
            sites: 2,
            clients_per_site: 16,
            rtt_ms: 100.0,
            service_ms: 2.0,
            refill: 100,
            items: 10_000,
            hot_fraction: 0.01,
            hot_traffic_pct: 0.0,
            items_per_txn: 1,
            lookahead: 10,
            cost_factor: 5,
            solver_budget: 50.0,
            duration_s: 60.0,
            warmup_s: 5.0,
            seed: 1,
            init_stock: InitStock::Uniform,
            fault_inflate: 0,
            check_invariants: false,
        }
    }
}

pub const KEYS: &[&str] = &[
    "mode",
    "workload",
    "sites",
    "clients_per_site",
    "rtt_ms",
    "service_ms",
    "refill",
    "items",
    "hot_fraction",
    "hot_traffic_pct",
    "items_per_txn",
    "lookahead",
    "cost_factor",
    "solver_budget",
    "duration_s",
    "warmup_s",
    "seed",
    "init_stock",
    "fault_inflate",
    "check_invariants",
];

fn num<T: FromStr>(key: &str, v: &str) -> Result<T, SimError> {
    v.parse()
        .map_err(|_| SimError::Config(format!("bad value '{v}' for {key}")))
}

impl SimConfig {
    /// Set one key from its textual value.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), SimError> {
        match key {
            "mode" => self.mode = v.parse()?,
            "workload" => {
                self.workload = match v {
                    "microbench" => WorkloadKind::Microbench,
                    "mixed" => WorkloadKind::Mixed,
                    _ => return Err(SimError::Config(format!("unknown workload '{v}'"))),
                }
            }
            "sites" => self.sites = num(key, v)?,
            "clients_per_site" => self.clients_per_site = num(key, v)?,
            "rtt_ms" => self.rtt_ms = num(key, v)?,
            "service_ms" => self.service_ms = num(key, v)?,
            "refill" => self.refill = num(key, v)?,
            "items" => self.items = num(key, v)?,
            "hot_fraction" => self.hot_fraction = num(key, v)?,
            "hot_traffic_pct" => self.hot_traffic_pct = num(key, v)?,
            "items_per_txn" => self.items_per_txn = num(key, v)?,
            "lookahead" => self.lookahead = num(key, v)?,
            "cost_factor" => self.cost_factor = num(key, v)?,
            "solver_budget" => self.solver_budget = num(key, v)?,
            "duration_s" => self.duration_s = num(key, v)?,
            "warmup_s" => self.warmup_s = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "init_stock" => {
                self.init_stock = match v {
                    "uniform" => InitStock::Uniform,
                    "refill" => InitStock::Refill,
                    _ => return Err(SimError::Config(format!("unknown init_stock '{v}'"))),
                }
            }
            "fault_inflate" => self.fault_inflate = num(key, v)?,
            "check_invariants" => {
                self.check_invariants = match v {
                    "1" | "true" | "yes" => true,
                    "0" | "false" | "no" => false,
                    _ => return Err(SimError::Config(format!("bad value '{v}' for {key}"))),
                }
            }
            _ => return Err(SimError::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Parse `key=value` lines over the defaults. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self, SimError> {
        let mut cfg = SimConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| SimError::Config(format!("line {}: expected key=value", n + 1)))?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| SimError::Config(format!("line {}: {e}", n + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Config(m.to_string()));
        if self.sites == 0 {
            return bad("sites must be positive");
        }
        if self.clients_per_site == 0 {
            return bad("clients_per_site must be positive");
        }
        if !(self.rtt_ms >= 0.0 && self.service_ms > 0.0) {
            return bad("rtt_ms must be non-negative and service_ms positive");
        }
        if !(self.duration_s > 0.0 && self.warmup_s >= 0.0 && self.warmup_s < self.duration_s) {
            return bad("need 0 <= warmup_s < duration_s");
        }
        if !(0.0..=100.0).contains(&self.hot_traffic_pct) {
            return bad("hot_traffic_pct must lie in [0, 100]");
        }
        if self.solver_budget < 2.0 * self.service_ms {
            return bad("solver_budget must cover two service times");
        }
        if self.lookahead > 0 && self.cost_factor == 0 {
            return bad("cost_factor must be positive when lookahead is");
        }
        if self.mode == Mode::Opt && self.workload != WorkloadKind::Microbench {
            return bad("mode opt only supports the microbench workload");
        }
        if self.workload == WorkloadKind::Microbench {
            self.microbench()
                .validate()
                .map_err(|e| SimError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn microbench(&self) -> crate::workload::MicrobenchSpec {
        crate::workload::MicrobenchSpec {
            items: self.items,
            refill: self.refill,
            hot_fraction: self.hot_fraction,
            hot_traffic: self.hot_traffic_pct / 100.0,
            items_per_txn: self.items_per_txn,
        }
    }

    pub(crate) fn us(ms: f64) -> i64 {
        (ms * 1000.0).round() as i64
    }
}

impl fmt::Display for SimConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mode={}", self.mode)?;
        writeln!(
            f,
            "workload={}",
            match self.workload {
                WorkloadKind::Microbench => "microbench",
                WorkloadKind::Mixed => "mixed",
            }
        )?;
        writeln!(f, "sites={}", self.sites)?;
        writeln!(f, "clients_per_site={}", self.clients_per_site)?;
        writeln!(f, "rtt_ms={}", self.rtt_ms)?;
        writeln!(f, "service_ms={}", self.service_ms)?;
        writeln!(f, "refill={}", self.refill)?;
        writeln!(f, "items={}", self.items)?;
        writeln!(f, "hot_fraction={}", self.hot_fraction)?;
        writeln!(f, "hot_traffic_pct={}", self.hot_traffic_pct)?;
        writeln!(f, "items_per_txn={}", self.items_per_txn)?;
        writeln!(f, "lookahead={}", self.lookahead)?;
        writeln!(f, "cost_factor={}", self.cost_factor)?;
        writeln!(f, "solver_budget={}", self.solver_budget)?;
        writeln!(f, "duration_s={}", self.duration_s)?;
        writeln!(f, "warmup_s={}", self.warmup_s)?;
        writeln!(f, "seed={}", self.seed)?;
        writeln!(
            f,
            "init_stock={}",
            match self.init_stock {
                InitStock::Uniform => "uniform",
                InitStock::Refill => "refill",
            }
        )?;
        writeln!(f, "fault_inflate={}", self.fault_inflate)?;
        writeln!(f, "check_invariants={}", u8::from(self.check_invariants))
    }
}
