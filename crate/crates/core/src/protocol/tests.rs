use super::*;

fn small(mode: Mode) -> SimConfig {
    SimConfig {
        mode,
        sites: 2,
        clients_per_site: 4,
        items: 20,
        refill: 10,
        duration_s: 3.0,
        warmup_s: 0.5,
        lookahead: 4,
        cost_factor: 3,
        ..SimConfig::default()
    }
}

#[test]
fn microbench_run_matches_serial_replay() {
    let r = run_simulation(&small(Mode::Homeostasis)).unwrap();
    assert_eq!(r.oracle, OracleStatus::Match);
    assert!(r.metrics.committed > 100);
    assert!(r.metrics.syncs > 0);
    assert_eq!(r.metrics.invalid_configs, 0);
}

#[test]
fn runs_are_deterministic() {
    let a = run_simulation(&small(Mode::Homeostasis)).unwrap();
    let b = run_simulation(&small(Mode::Homeostasis)).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.final_db, b.final_db);
    let mut c = small(Mode::Homeostasis);
    c.seed = 2;
    assert_ne!(run_simulation(&c).unwrap().trace, a.trace);
}

#[test]
fn mixed_systems_match_serial_replay() {
    for seed in 0..12 {
        for sites in [1, 2, 3] {
            let cfg = SimConfig {
                workload: WorkloadKind::Mixed,
                sites,
                seed,
                check_invariants: true,
                ..small(Mode::Homeostasis)
            };
            let r = run_simulation(&cfg).unwrap();
            assert_eq!(r.oracle, OracleStatus::Match, "seed {seed}, {sites} sites");
            assert_eq!(r.metrics.treaty_breaches, 0, "seed {seed}, {sites} sites");
        }
    }
}

#[test]
fn inflated_treaty_is_caught() {
    let cfg = SimConfig {
        fault_inflate: 5,
        init_stock: InitStock::Refill,
        hot_fraction: 0.1,
        hot_traffic_pct: 90.0,
        ..small(Mode::Homeostasis)
    };
    let r = run_simulation(&cfg).unwrap();
    assert!(matches!(r.oracle, OracleStatus::Mismatch(_)), "{:?}", r.oracle);
}

#[test]
fn two_phase_commit_pays_two_round_trips() {
    let r = run_simulation(&small(Mode::TwoPc)).unwrap();
    assert_eq!(r.oracle, OracleStatus::Match);
    assert!(r.trace.commits().all(|t| t.latency_us() >= 202_000));
    assert_eq!(r.metrics.sync_ratio, 1.0);
}

#[test]
fn local_mode_never_synchronizes() {
    let r = run_simulation(&small(Mode::Local)).unwrap();
    assert_eq!(r.oracle, OracleStatus::Skipped);
    assert_eq!(r.metrics.sync_ratio, 0.0);
    assert_eq!(r.metrics.syncs, 0);
}

#[test]
fn hand_split_treaty_matches_serial_replay() {
    let r = run_simulation(&small(Mode::Opt)).unwrap();
    assert_eq!(r.oracle, OracleStatus::Match);
    assert!(r.metrics.syncs > 0);
}

#[test]
fn single_site_has_no_network_delay() {
    let cfg = SimConfig {
        sites: 1,
        ..small(Mode::Homeostasis)
    };
    let r = run_simulation(&cfg).unwrap();
    assert_eq!(r.oracle, OracleStatus::Match);
    assert!(r.metrics.p99_ms < 100.0);
    let r = run_simulation(&SimConfig { sites: 1, ..small(Mode::TwoPc) }).unwrap();
    // Requests queue on the item locks, so only the uncontended ones take
    // exactly one service time.
    assert!(r.trace.commits().all(|t| t.latency_us() >= 2_000));
    assert_eq!(r.trace.commits().map(|t| t.latency_us()).min(), Some(2_000));
}

#[test]
fn config_round_trips_through_text() {
    let mut cfg = small(Mode::Opt);
    cfg.init_stock = InitStock::Refill;
    let back = SimConfig::parse(&cfg.to_string()).unwrap();
    assert_eq!(back, cfg);
    assert!(SimConfig::parse("sites=0").is_err());
    assert!(SimConfig::parse("nope=1").is_err());
    assert!(SimConfig::parse("mode").is_err());
}

#[test]
fn csv_has_one_row_per_record() {
    let r = run_simulation(&small(Mode::Homeostasis)).unwrap();
    let csv = r.trace.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.count(), r.trace.records.len());
}
