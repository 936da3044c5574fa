//! Command-line front end: `analyze`, `treaty` and `simulate`.
//!
//! Every command returns its output as text so tests can drive the CLI
//! in-process; [`main_with_args`] maps errors onto exit codes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{build_joint_table, build_table, matched_joint_guard, SymbolicTable};
use crate::lang::{desugar_arrays, parse_named, read_write_sets, Database, TransactionAst};
use crate::protocol::{run_simulation, OracleStatus, SimConfig, SimResult, KEYS};
use crate::rewrite::{delta_transform, DeltaSchema, Placement, SiteId};
use crate::treaty::{
    balance_slack, check_valid, default_config, execute_sequence, make_templates,
    optimize_config, pin_remote_reads, preprocess, sample_executions, satisfied_groups,
    soft_constraints, SolverLimits,
};
use crate::workload::WorkloadModel;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("oracle mismatch: {0}")]
    Mismatch(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Mismatch(_) => 1,
            _ => 2,
        }
    }
}

fn input(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Input(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "homeostasis", version, about = "Treaty analysis and protocol simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the symbolic table of each transaction and, for several, their joint table.
    Analyze(AnalyzeArgs),
    /// Compute the global treaty, local templates and a configuration.
    Treaty(TreatyArgs),
    /// Run the simulator, optionally over a parameter sweep.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Transaction source files.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Replicate every object and print the delta-rewritten transactions.
    #[arg(long)]
    pub replicated: bool,
    /// Number of sites when replicating.
    #[arg(long, default_value_t = 2)]
    pub sites: u32,
    /// Site the rewritten transactions run on.
    #[arg(long, default_value_t = 1)]
    pub site: SiteId,
    /// Array bounds, `name=len`.
    #[arg(long = "array", value_name = "NAME=LEN")]
    pub arrays: Vec<String>,
}

#[derive(Debug, Args)]
pub struct TreatyArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Database snapshot, `x=10,y=13`.
    #[arg(long)]
    pub db: String,
    /// Object locations, `x=1,y=2`. Without it everything lives on site 1.
    #[arg(long)]
    pub place: Option<String>,
    /// Transaction homes, `T1=1,T2=2`; remote reads of homed transactions are pinned.
    #[arg(long)]
    pub home: Option<String>,
    /// Fixed futures as transaction indices, `0,0,1;0,0,0`.
    #[arg(long)]
    pub sequences: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub lookahead: usize,
    #[arg(long, default_value_t = 5)]
    pub cost_factor: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Spread each clause's slack evenly over sites.
    #[arg(long)]
    pub balance: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `key=value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one key, `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Run once per value, `key=v1,v2,...`.
    #[arg(long)]
    pub sweep: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Runs per configuration, with consecutive seeds.
    #[arg(long, default_value_t = 1)]
    pub runs: u64,
}

fn pairs(text: &str) -> Result<Vec<(String, String)>, HarnessError> {
    text.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| HarnessError::Usage(format!("expected key=value, got '{p}'")))
        })
        .collect()
}

fn int<T: std::str::FromStr>(k: &str, v: &str) -> Result<T, HarnessError> {
    v.parse()
        .map_err(|_| HarnessError::Usage(format!("bad number '{v}' for '{k}'")))
}

pub fn parse_db(text: &str) -> Result<Database, HarnessError> {
    let mut db = Database::new();
    for (k, v) in pairs(text)? {
        db.set(k.as_str().into(), int(&k, &v)?);
    }
    Ok(db)
}

/// Placement from `x=1,y=2`; the site count is the largest site named.
pub fn parse_placement(text: &str) -> Result<Placement, HarnessError> {
    let ps = pairs(text)?;
    let mut sites = Vec::new();
    for (k, v) in &ps {
        let s: SiteId = int(k, v)?;
        if s == 0 {
            return Err(HarnessError::Usage("sites are numbered from 1".into()));
        }
        sites.push(s);
    }
    let mut p = Placement::new(sites.iter().copied().max().unwrap_or(1));
    for ((k, _), s) in ps.iter().zip(sites) {
        p = p.place(k, s);
    }
    Ok(p)
}

fn read_sources(files: &[PathBuf], arrays: &BTreeMap<String, usize>) -> Result<Vec<TransactionAst>, HarnessError> {
    files
        .iter()
        .map(|f| {
            let src = fs::read_to_string(f).map_err(|e| input(format!("{}: {e}", f.display())))?;
            let stem = f.file_stem().and_then(|s| s.to_str()).unwrap_or("T");
            let ast = parse_named(&src, stem).map_err(|e| input(format!("{}: {e}", f.display())))?;
            desugar_arrays(&ast, arrays).map_err(|e| input(format!("{}: {e}", f.display())))
        })
        .collect()
}

fn tables(asts: &[TransactionAst]) -> Result<Vec<SymbolicTable>, HarnessError> {
    asts.iter()
        .map(|a| build_table(a).map_err(|e| input(format!("{}: {e}", a.name))))
        .collect()
}

pub fn analyze(args: &AnalyzeArgs) -> Result<String, HarnessError> {
    let mut arrays = BTreeMap::new();
    for spec in &args.arrays {
        for (k, v) in pairs(spec)? {
            let n = int(&k, &v)?;
            arrays.insert(k, n);
        }
    }
    let mut asts = read_sources(&args.files, &arrays)?;
    if args.replicated {
        if args.site == 0 || args.site > args.sites {
            return Err(HarnessError::Usage(format!("site {} is not among 1..={}", args.site, args.sites)));
        }
        let mut taken = BTreeSet::new();
        let mut placement = Placement::new(args.sites);
        for a in &asts {
            let (r, w) = read_write_sets(a);
            taken.extend(r.into_iter().chain(w));
            placement = placement.home(&a.name, args.site);
        }
        placement.replicated = taken.clone();
        let schema = DeltaSchema::for_replicated(&placement, &taken);
        asts = asts
            .iter()
            .map(|a| delta_transform(a, args.site, &placement, &schema).map_err(input))
            .collect::<Result<_, _>>()?;
    }
    let ts = tables(&asts)?;
    let mut out = String::new();
    for t in &ts {
        let _ = writeln!(out, "{t}");
    }
    if ts.len() > 1 {
        let _ = write!(out, "{}", build_joint_table(&ts));
    }
    Ok(out)
}

type Steps = Vec<(usize, Vec<i64>)>;

fn parse_sequences(text: &str, members: usize) -> Result<Vec<Steps>, HarnessError> {
    text.split(';')
        .map(|seq| {
            seq.split(',')
                .map(str::trim)
                .filter(|m| !m.is_empty())
                .map(|m| {
                    let i: usize = int("sequence", m)?;
                    if i >= members {
                        return Err(HarnessError::Usage(format!("no transaction with index {i}")));
                    }
                    Ok((i, Vec::new()))
                })
                .collect()
        })
        .collect()
}

pub fn treaty(args: &TreatyArgs) -> Result<String, HarnessError> {
    let asts = read_sources(&args.files, &BTreeMap::new())?;
    if let Some(a) = asts.iter().find(|a| !a.params.is_empty()) {
        return Err(HarnessError::Usage(format!("{} takes parameters; instantiate it first", a.name)));
    }
    let ts = tables(&asts)?;
    let db = parse_db(&args.db)?;
    let placement = match &args.place {
        Some(p) => parse_placement(p)?,
        None => {
            let mut p = Placement::new(1);
            for a in &asts {
                let (r, w) = read_write_sets(a);
                for x in r.into_iter().chain(w) {
                    p.loc.insert(x, 1);
                }
            }
            p
        }
    };
    let env = Default::default();
    let (psi, bodies) = matched_joint_guard(ts.iter().map(|t| (t, &env)), &db).map_err(input)?;
    let gt = preprocess(&psi, &db).map_err(input)?;
    let mut templates = make_templates(&gt, &placement).map_err(input)?;
    if let Some(h) = &args.home {
        let homes: BTreeMap<String, String> = pairs(h)?.into_iter().collect();
        let mut sited = Vec::new();
        for (a, b) in asts.iter().zip(&bodies) {
            if let Some(s) = homes.get(&a.name) {
                sited.push((int::<SiteId>(&a.name, s)?, *b));
            }
        }
        templates = pin_remote_reads(sited, &placement, templates).map_err(input)?;
    }
    let base = default_config(&templates, &gt, &db).map_err(input)?;
    let seqs = match &args.sequences {
        Some(s) => parse_sequences(s, ts.len())?
            .iter()
            .map(|steps| execute_sequence(&ts, &db, steps))
            .collect::<Result<Vec<_>, _>>()
            .map_err(input)?,
        None => sample_executions(
            &WorkloadModel::uniform(ts.len()),
            &ts,
            &db,
            args.lookahead,
            args.cost_factor,
            args.seed,
        )
        .map_err(input)?,
    };
    let groups = soft_constraints(&templates, &seqs);
    let opt = optimize_config(&templates, &gt, &db, &groups, &SolverLimits::default()).map_err(input)?;
    let mut config = opt.config.clone();
    if args.balance {
        config = balance_slack(&templates, &gt, &config);
    }
    let mut out = String::new();
    let _ = writeln!(out, "global treaty: {gt}");
    let _ = writeln!(out, "templates:");
    for t in &templates {
        let _ = writeln!(out, "  {t}");
    }
    let _ = writeln!(out, "default: {base}");
    let _ = writeln!(out, "soft groups:");
    for g in &groups {
        let _ = writeln!(out, "  {g}");
    }
    let _ = writeln!(
        out,
        "config: {config}\nsatisfied: {} of {} (default {})",
        satisfied_groups(&groups, &config),
        groups.len(),
        opt.default_satisfied
    );
    let _ = writeln!(out, "valid: {}", check_valid(&templates, &config, &gt, &db));
    let _ = writeln!(out, "local treaties:");
    for t in &templates {
        let clauses: Vec<String> = t
            .clauses
            .iter()
            .map(|c| {
                let v = config.get(&c.var).expect("total config");
                c.instantiate(v).map(|l| l.to_string())
            })
            .collect::<Result<_, _>>()
            .map_err(input)?;
        let _ = writeln!(out, "  site {}: {}", t.site, clauses.join(" && "));
    }
    Ok(out)
}

/// A base configuration and one key taking several values.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub base: SimConfig,
    pub key: String,
    pub values: Vec<String>,
}

impl SweepSpec {
    pub fn parse(base: SimConfig, text: &str) -> Result<Self, HarnessError> {
        let (key, vals) = text
            .split_once('=')
            .ok_or_else(|| HarnessError::Usage(format!("sweep must be key=v1,v2,..., got '{text}'")))?;
        let key = key.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(HarnessError::Usage(format!("unknown sweep key '{key}'")));
        }
        let values: Vec<String> = vals
            .split(',')
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect();
        if values.is_empty() {
            return Err(HarnessError::Usage("sweep needs at least one value".into()));
        }
        Ok(SweepSpec { base, key, values })
    }

    pub fn configs(&self) -> Result<Vec<SimConfig>, HarnessError> {
        self.values
            .iter()
            .map(|v| {
                let mut c = self.base.clone();
                c.set(&self.key, v).map_err(|e| HarnessError::Usage(e.to_string()))?;
                c.validate().map_err(|e| HarnessError::Usage(e.to_string()))?;
                Ok(c)
            })
            .collect()
    }
}

/// Run configurations in parallel, keeping their order.
pub fn run_all(configs: &[SimConfig]) -> Vec<Result<SimResult, HarnessError>> {
    configs
        .par_iter()
        .map(|c| run_simulation(c).map_err(input))
        .collect()
}

pub const SWEEP_HEADER: &str =
    "key,value,seed,committed,throughput_per_site,p50_ms,p90_ms,p95_ms,p99_ms,sync_ratio,oracle";

fn oracle_word(o: &OracleStatus) -> &'static str {
    match o {
        OracleStatus::Match => "match",
        OracleStatus::Mismatch(_) => "mismatch",
        OracleStatus::Skipped => "skipped",
    }
}

fn write_run(dir: &Path, cfg: &SimConfig, r: &SimResult) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| input(format!("{}: {e}", dir.display())))?;
    let mut summary = r.metrics.summary();
    let _ = writeln!(summary, "oracle={}", oracle_word(&r.oracle));
    let _ = write!(summary, "\n# config\n{cfg}");
    fs::write(dir.join("txns.csv"), r.trace.to_csv()).map_err(input)?;
    fs::write(dir.join("summary.txt"), summary).map_err(input)?;
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> Result<String, HarnessError> {
    let mut base = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| input(format!("{}: {e}", p.display())))?;
            SimConfig::parse(&text).map_err(|e| input(format!("{}: {e}", p.display())))?
        }
        None => SimConfig::default(),
    };
    for o in &args.overrides {
        for (k, v) in pairs(o)? {
            base.set(&k, &v).map_err(|e| HarnessError::Usage(e.to_string()))?;
        }
    }
    if let Some(s) = args.seed {
        base.seed = s;
    }
    base.validate().map_err(|e| HarnessError::Usage(e.to_string()))?;
    if args.runs == 0 {
        return Err(HarnessError::Usage("--runs must be positive".into()));
    }
    let sweep = match &args.sweep {
        Some(s) => Some(SweepSpec::parse(base.clone(), s)?),
        None => None,
    };
    let points: Vec<(Option<String>, SimConfig)> = match &sweep {
        Some(sw) => sw.values.iter().cloned().map(Some).zip(sw.configs()?).collect(),
        None => vec![(None, base.clone())],
    };
    let mut jobs = Vec::new();
    for (v, c) in &points {
        for i in 0..args.runs {
            let mut c = c.clone();
            c.seed = c.seed.wrapping_add(i);
            jobs.push((v.clone(), c));
        }
    }
    let configs: Vec<SimConfig> = jobs.iter().map(|(_, c)| c.clone()).collect();
    let results = run_all(&configs);
    let key = sweep.as_ref().map_or("-", |s| s.key.as_str());
    let mut table = format!("{SWEEP_HEADER}\n");
    let mut mismatches = Vec::new();
    for ((v, cfg), r) in jobs.iter().zip(results) {
        let r = r?;
        let m = &r.metrics;
        let _ = writeln!(
            table,
            "{key},{},{},{},{:.3},{:.3},{:.3},{:.3},{:.3},{:.5},{}",
            v.as_deref().unwrap_or("-"),
            cfg.seed,
            m.committed,
            m.throughput_per_site,
            m.p50_ms,
            m.p90_ms,
            m.p95_ms,
            m.p99_ms,
            m.sync_ratio,
            oracle_word(&r.oracle)
        );
        if let OracleStatus::Mismatch(msg) = &r.oracle {
            mismatches.push(format!("seed {}: {msg}", cfg.seed));
        }
        if let Some(out) = &args.out {
            let mut dir = out.clone();
            if let Some(v) = v {
                dir.push(format!("{key}={v}"));
            }
            if args.runs > 1 {
                dir.push(format!("seed={}", cfg.seed));
            }
            write_run(&dir, cfg, &r)?;
        }
    }
    if let Some(out) = &args.out {
        fs::create_dir_all(out).map_err(input)?;
        fs::write(out.join("runs.csv"), &table).map_err(input)?;
    }
    if !mismatches.is_empty() {
        return Err(HarnessError::Mismatch(mismatches.join("; ")));
    }
    Ok(table)
}

pub fn run(cli: &Cli) -> Result<String, HarnessError> {
    match &cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Treaty(a) => treaty(a),
        Command::Simulate(a) => simulate(a),
    }
}

/// Parse `args` (program name first), run, print, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_databases_and_placements() {
        let db = parse_db("x=10, y=-3").unwrap();
        assert_eq!(db.get(&"y".into()), -3);
        let p = parse_placement("x=1,y=3").unwrap();
        assert_eq!(p.sites, 3);
        assert!(parse_db("x").is_err());
        assert!(parse_placement("x=0").is_err());
    }

    #[test]
    fn sweep_rejects_unknown_keys() {
        let base = SimConfig::default();
        assert!(SweepSpec::parse(base.clone(), "nope=1,2").is_err());
        assert!(SweepSpec::parse(base.clone(), "rtt_ms=").is_err());
        let s = SweepSpec::parse(base, "rtt_ms=50,100").unwrap();
        let cs = s.configs().unwrap();
        assert_eq!(cs[1].rtt_ms, 100.0);
    }

    #[test]
    fn usage_and_mismatch_exit_codes() {
        assert_eq!(HarnessError::Usage(String::new()).exit_code(), 2);
        assert_eq!(HarnessError::Input(String::new()).exit_code(), 2);
        assert_eq!(HarnessError::Mismatch(String::new()).exit_code(), 1);
        assert_eq!(main_with_args(["homeostasis", "frobnicate"]), 2);
    }
}
