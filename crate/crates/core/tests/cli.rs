use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_homeostasis"))
}

fn txn(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../txns").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn analyze_prints_tables_and_joint_table() {
    let (t1, t2) = (txn("t1.hst"), txn("t2.hst"));
    let o = run(&["analyze", t1.to_str().unwrap(), t2.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("x + y < 10  =>  write(x = read(x) + 1)"));
    assert!(out.contains("x + y >= 10 && x + y < 20  =>  write(x = read(x) - 1)  |  write(y = read(y) + 1)"));
}

#[test]
fn analyze_rejects_empty_source() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("empty.hst");
    fs::write(&f, "").unwrap();
    let o = run(&["analyze", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("syntax error"));
}

#[test]
fn analyze_replicated_rewrites_to_deltas() {
    let o = run(&["analyze", txn("order.hst").to_str().unwrap(), "--array", "stock=1", "--replicated"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("write(dstock_0_1 = "));
}

#[test]
fn treaty_reports_worked_configuration() {
    let (t1, t2) = (txn("t1.hst"), txn("t2.hst"));
    let o = run(&[
        "treaty",
        t1.to_str().unwrap(),
        t2.to_str().unwrap(),
        "--db",
        "x=10,y=13",
        "--place",
        "x=1,y=2",
        "--sequences",
        "0,0,1;0,0,0;0,1,0",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("site 1: -x <= -8"), "{out}");
    assert!(out.contains("site 2: -y <= -12"), "{out}");
    assert!(out.contains("satisfied: 2 of 3"));
}

#[test]
fn treaty_with_unplaced_object_is_an_input_error() {
    let (t1, t2) = (txn("t1.hst"), txn("t2.hst"));
    let o = run(&["treaty", t1.to_str().unwrap(), t2.to_str().unwrap(), "--db", "x=10,y=13", "--place", "x=1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn treaty_on_one_site_keeps_default() {
    let (t1, t2) = (txn("t1.hst"), txn("t2.hst"));
    let o = run(&["treaty", t1.to_str().unwrap(), t2.to_str().unwrap(), "--db", "x=10,y=13"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("site 1: -x - y + c0_1 <= -20"));
    assert!(out.contains("default: c0_1 = 3\n"));
    assert!(out.contains("config: c0_1 = 3\n"));
}

const QUICK: &str = "items=30,refill=8,duration_s=3,warmup_s=1,clients_per_site=4";

#[test]
fn simulate_writes_artifacts_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let o = run(&["simulate", "--set", QUICK, "--seed", "7", "--out", d.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let csv_a = fs::read(a.join("txns.csv")).unwrap();
    assert_eq!(csv_a, fs::read(b.join("txns.csv")).unwrap());
    let text = String::from_utf8(csv_a).unwrap();
    assert!(text.starts_with("txn_id,site,round,start_ms,end_ms,outcome,synced\n"));
    let summary = fs::read_to_string(a.join("summary.txt")).unwrap();
    for key in ["throughput_per_site=", "p50_ms=", "p90_ms=", "p95_ms=", "p99_ms=", "sync_ratio=", "oracle=match"] {
        assert!(summary.contains(key), "{key}");
    }
}

#[test]
fn simulate_sweep_with_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("local.cfg");
    fs::write(&cfg, "mode=local\nitems=30\nduration_s=2\nwarmup_s=0\n").unwrap();
    let out = dir.path().join("out");
    let o = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--sweep",
        "sites=1,2,3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rows = fs::read_to_string(out.join("runs.csv")).unwrap();
    assert_eq!(rows.lines().count(), 4);
    for s in 1..=3 {
        let csv = fs::read_to_string(out.join(format!("sites={s}/txns.csv"))).unwrap();
        assert!(csv.lines().skip(1).all(|l| l.ends_with(",0")));
    }
}

#[test]
fn simulate_exit_codes() {
    let o = run(&["simulate", "--set", QUICK, "--set", "fault_inflate=3"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["simulate", "--sweep", "bogus=1,2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["simulate", "--config", "/nonexistent/file.cfg"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["simulate", "--set", "mode=paxos"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
}
