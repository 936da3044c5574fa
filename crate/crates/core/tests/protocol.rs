use std::collections::BTreeMap;

use homeostasis::lang::Database;
use homeostasis::programs;
use homeostasis::protocol::{
    run_simulation, Call, CompiledSystem, InitStock, Mode, OracleStatus, Outcome, RequestSource,
    SimConfig, Simulation, SystemSpec, WorkloadKind,
};
use homeostasis::rewrite::{Placement, SiteId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_config(i: u64) -> SimConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(i);
    let mixed = i % 4 != 3;
    let mode = if mixed {
        Mode::Homeostasis
    } else {
        [Mode::Homeostasis, Mode::Opt, Mode::TwoPc][rng.gen_range(0..3)]
    };
    SimConfig {
        mode,
        workload: if mixed { WorkloadKind::Mixed } else { WorkloadKind::Microbench },
        sites: rng.gen_range(2..=5),
        clients_per_site: rng.gen_range(1..=6),
        rtt_ms: [10.0, 50.0, 100.0][rng.gen_range(0..3)],
        service_ms: 2.0,
        refill: rng.gen_range(3..=30),
        items: rng.gen_range(5..=40),
        hot_fraction: 0.2,
        hot_traffic_pct: rng.gen_range(0.0..=80.0),
        items_per_txn: rng.gen_range(1..=3),
        lookahead: rng.gen_range(0..=6),
        cost_factor: rng.gen_range(1..=4),
        duration_s: 2.0,
        warmup_s: 0.0,
        seed: i,
        init_stock: if rng.gen_bool(0.5) { InitStock::Uniform } else { InitStock::Refill },
        check_invariants: true,
        ..SimConfig::default()
    }
}

#[test]
fn randomized_runs_match_serial_replay() {
    let mut commits = 0;
    let mut syncs = 0;
    for i in 0..520 {
        let cfg = random_config(i);
        let r = run_simulation(&cfg).unwrap();
        assert_eq!(r.oracle, OracleStatus::Match, "run {i}: {cfg}");
        assert_eq!(r.metrics.treaty_breaches, 0, "run {i}: {cfg}");
        assert_eq!(r.metrics.invalid_configs, 0, "run {i}: {cfg}");
        commits += r.metrics.committed;
        syncs += r.metrics.syncs;
    }
    assert!(commits > 50_000 && syncs > 10_000, "{commits} commits, {syncs} syncs");
}

#[test]
fn invalid_configurations_are_caught() {
    for seed in 1..=5 {
        let cfg = SimConfig {
            fault_inflate: 2,
            items: 50,
            refill: 10,
            duration_s: 3.0,
            warmup_s: 0.0,
            seed,
            ..SimConfig::default()
        };
        let r = run_simulation(&cfg).unwrap();
        assert!(matches!(r.oracle, OracleStatus::Mismatch(_)), "seed {seed}");
    }
}

#[test]
fn no_messages_without_violations() {
    let cfg = SimConfig {
        items: 1000,
        refill: 1000,
        init_stock: InitStock::Refill,
        duration_s: 2.0,
        warmup_s: 0.0,
        ..SimConfig::default()
    };
    let r = run_simulation(&cfg).unwrap();
    assert!(r.metrics.committed > 10_000);
    assert_eq!((r.metrics.syncs, r.metrics.messages), (0, 0));
    assert!(r.trace.records.iter().all(|t| t.outcome == Outcome::CommittedLocal));
}

struct Always;

impl RequestSource for Always {
    fn next(&self, _site: SiteId, _rng: &mut ChaCha8Rng) -> Vec<Call> {
        vec![(0, vec![])]
    }
}

/// Countdown on a replicated `x` starting at 1: every site's first
/// decrement breaks its share of `x > 0`.
fn countdown_system(sites: u32) -> SystemSpec {
    SystemSpec {
        sites,
        txns: vec![programs::countdown()],
        homes: vec![None],
        domains: vec![vec![vec![]]],
        arrays: BTreeMap::new(),
        placement: Placement::new(sites).replicate("x"),
        initial: [("x", 1)].into_iter().collect::<Database>(),
    }
}

fn countdown_run(sites: u32) -> homeostasis::protocol::SimResult {
    let cfg = SimConfig {
        sites,
        clients_per_site: 1,
        duration_s: 1.0,
        warmup_s: 0.0,
        lookahead: 0,
        ..SimConfig::default()
    };
    let sys = CompiledSystem::new(countdown_system(sites)).unwrap();
    Simulation::new(&cfg, &sys, &Always).run().unwrap()
}

#[test]
fn simultaneous_violators_lowest_site_wins() {
    let r = countdown_run(2);
    assert_eq!(r.oracle, OracleStatus::Match);
    let first: Vec<_> = r.trace.records.iter().filter(|t| t.round == 0).collect();
    let winner = first.iter().find(|t| t.outcome == Outcome::ViolationWinner).unwrap();
    assert_eq!(winner.site, 1);
    assert_eq!(winner.latency_us(), winner.end_us - winner.start_us);
    assert!(winner.latency_us() >= 200_000 && winner.latency_us() <= 250_000);
    let loser = first.iter().find(|t| t.outcome == Outcome::AbortedLoser).unwrap();
    assert_eq!(loser.site, 2);
}

#[test]
fn every_loser_reruns_and_commits() {
    let r = countdown_run(4);
    assert_eq!(r.oracle, OracleStatus::Match);
    let losers: Vec<_> = r
        .trace
        .records
        .iter()
        .filter(|t| t.round == 0 && t.outcome == Outcome::AbortedLoser)
        .collect();
    let mut sites: Vec<SiteId> = losers.iter().map(|t| t.site).collect();
    sites.sort();
    assert_eq!(sites, vec![2, 3, 4]);
    for l in losers {
        let rerun = r
            .trace
            .commits()
            .find(|t| t.txn_id == l.txn_id)
            .expect("loser commits later");
        assert!(rerun.round >= 1 && rerun.synced);
    }
}

#[test]
fn two_phase_commit_latency_is_two_round_trips() {
    let cfg = SimConfig {
        mode: Mode::TwoPc,
        duration_s: 10.0,
        warmup_s: 1.0,
        ..SimConfig::default()
    };
    let r = run_simulation(&cfg).unwrap();
    assert_eq!(r.oracle, OracleStatus::Match);
    assert!(r.trace.commits().all(|t| t.latency_us() >= 200_000));
    assert_eq!(r.metrics.sync_ratio, 1.0);
}

#[test]
fn local_mode_runs_at_service_time() {
    let cfg = SimConfig {
        mode: Mode::Local,
        workload: WorkloadKind::Mixed,
        sites: 3,
        duration_s: 2.0,
        warmup_s: 0.0,
        ..SimConfig::default()
    };
    let r = run_simulation(&cfg).unwrap();
    assert_eq!(r.metrics.sync_ratio, 0.0);
    assert!(r.trace.records.iter().all(|t| t.latency_us() == 2_000));
}
