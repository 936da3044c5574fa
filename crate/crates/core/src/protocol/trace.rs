use std::fmt::{self, Write as _};

use crate::rewrite::SiteId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    /// Committed at its site without communication.
    CommittedLocal,
    /// Won the vote after a treaty violation and ran at every site.
    ViolationWinner,
    /// Lost the vote; its tentative writes were dropped and it reruns.
    AbortedLoser,
    /// Committed after waiting out a synchronization.
    Retried,
    /// Committed through two-phase commit.
    Coordinated,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::CommittedLocal => "committed-local",
            Outcome::ViolationWinner => "violation-winner",
            Outcome::AbortedLoser => "aborted-loser",
            Outcome::Retried => "retried",
            Outcome::Coordinated => "committed-2pc",
        }
    }

    pub fn is_commit(self) -> bool {
        self != Outcome::AbortedLoser
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One transaction's call: transaction index and parameters.
pub type Call = (usize, Vec<i64>);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TxnRecord {
    pub txn_id: u64,
    pub site: SiteId,
    pub round: u64,
    /// Simulated microseconds.
    pub start_us: i64,
    pub end_us: i64,
    pub outcome: Outcome,
    pub synced: bool,
    /// Calls making up the request, run in order as one transaction.
    pub calls: Vec<Call>,
    pub log: Vec<i64>,
    /// Position of the commit in the simulation's execution order.
    pub commit_seq: Option<u64>,
    /// Waited on a synchronization before its final attempt.
    pub waited: bool,
}

impl TxnRecord {
    pub fn latency_us(&self) -> i64 {
        self.end_us - self.start_us
    }
}

/// Append-only record of a simulation run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SimTrace {
    pub records: Vec<TxnRecord>,
}

fn ms(us: i64) -> String {
    let sign = if us < 0 { "-" } else { "" };
    let a = us.unsigned_abs();
    format!("{sign}{}.{:03}", a / 1000, a % 1000)
}

pub const CSV_HEADER: &str = "txn_id,site,round,start_ms,end_ms,outcome,synced";

impl SimTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.records.len() * 48);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.txn_id,
                r.site,
                r.round,
                ms(r.start_us),
                ms(r.end_us),
                r.outcome,
                u8::from(r.synced)
            );
        }
        out
    }

    pub fn commits(&self) -> impl Iterator<Item = &TxnRecord> {
        self.records.iter().filter(|r| r.outcome.is_commit())
    }
}

/// Aggregates over commits that end inside the measurement window.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metrics {
    pub committed: u64,
    pub throughput_per_site: f64,
    pub p50_ms: f64,
    pub p90_ms: f64,
    pub p95_ms: f64,
    pub p99_ms: f64,
    pub mean_ms: f64,
    /// Share of commits that waited for a synchronization.
    pub sync_ratio: f64,
    /// Share of commits whose first attempt broke a local treaty.
    pub violation_ratio: f64,
    pub winners: u64,
    pub min_winner_ms: f64,
    pub max_winner_ms: f64,
    pub syncs: u64,
    pub messages: u64,
    pub treaty_breaches: u64,
    pub invalid_configs: u64,
    pub solver_ms_max: f64,
}

/// Nearest-rank percentile of sorted values.
pub fn percentile(sorted: &[i64], p: f64) -> i64 {
    if sorted.is_empty() {
        return 0;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

impl Metrics {
    pub fn from_trace(
        trace: &SimTrace,
        sites: u32,
        warmup_us: i64,
        end_us: i64,
        violated: &dyn Fn(u64) -> bool,
    ) -> Metrics {
        let window: Vec<&TxnRecord> = trace
            .commits()
            .filter(|r| r.end_us >= warmup_us && r.end_us <= end_us)
            .collect();
        let mut lat: Vec<i64> = window.iter().map(|r| r.latency_us()).collect();
        lat.sort_unstable();
        let n = window.len();
        let secs = (end_us - warmup_us) as f64 / 1e6;
        let winners: Vec<i64> = window
            .iter()
            .filter(|r| r.outcome == Outcome::ViolationWinner && !r.waited)
            .map(|r| r.latency_us())
            .collect();
        let ratio = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
        Metrics {
            committed: n as u64,
            throughput_per_site: n as f64 / secs / sites as f64,
            p50_ms: percentile(&lat, 50.0) as f64 / 1000.0,
            p90_ms: percentile(&lat, 90.0) as f64 / 1000.0,
            p95_ms: percentile(&lat, 95.0) as f64 / 1000.0,
            p99_ms: percentile(&lat, 99.0) as f64 / 1000.0,
            mean_ms: if n == 0 {
                0.0
            } else {
                lat.iter().sum::<i64>() as f64 / n as f64 / 1000.0
            },
            sync_ratio: ratio(window.iter().filter(|r| r.synced).count()),
            violation_ratio: ratio(window.iter().filter(|r| violated(r.txn_id)).count()),
            winners: winners.len() as u64,
            min_winner_ms: winners.iter().min().map_or(0.0, |v| *v as f64 / 1000.0),
            max_winner_ms: winners.iter().max().map_or(0.0, |v| *v as f64 / 1000.0),
            ..Metrics::default()
        }
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "committed={}", self.committed);
        let _ = writeln!(s, "throughput_per_site={:.3}", self.throughput_per_site);
        let _ = writeln!(s, "p50_ms={:.3}", self.p50_ms);
        let _ = writeln!(s, "p90_ms={:.3}", self.p90_ms);
        let _ = writeln!(s, "p95_ms={:.3}", self.p95_ms);
        let _ = writeln!(s, "p99_ms={:.3}", self.p99_ms);
        let _ = writeln!(s, "mean_ms={:.3}", self.mean_ms);
        let _ = writeln!(s, "sync_ratio={:.5}", self.sync_ratio);
        let _ = writeln!(s, "violation_ratio={:.5}", self.violation_ratio);
        let _ = writeln!(s, "winners={}", self.winners);
        let _ = writeln!(s, "min_winner_ms={:.3}", self.min_winner_ms);
        let _ = writeln!(s, "max_winner_ms={:.3}", self.max_winner_ms);
        let _ = writeln!(s, "syncs={}", self.syncs);
        let _ = writeln!(s, "messages={}", self.messages);
        let _ = writeln!(s, "treaty_breaches={}", self.treaty_breaches);
        let _ = writeln!(s, "invalid_configs={}", self.invalid_configs);
        let _ = writeln!(s, "solver_ms_max={:.3}", self.solver_ms_max);
        s
    }
}
