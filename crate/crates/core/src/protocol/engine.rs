use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{matched_joint_guard, SymbolicTable};
use crate::lang::{eval_in_place, CmpOp, Database, ObjectId};
use crate::rewrite::SiteId;
use crate::treaty::{
    balance_slack, check_valid, default_config, make_templates, optimize_config,
    pin_remote_reads, preprocess, sample_executions, soft_constraints, ClauseOrigin,
    GlobalTreaty, LinearConstraint, SolverLimits, Stepper, TreatyError,
};
use crate::workload::WorkloadModel;

use super::config::{Mode, SimConfig};
use super::oracle::{compare, serial_oracle};
use super::source::RequestSource;
use super::system::{CompId, CompiledSystem, InstId};
use super::trace::{Call, Metrics, Outcome, SimTrace, TxnRecord};
use super::SimError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleStatus {
    Match,
    Mismatch(String),
    /// Local mode gives no consistency guarantee to check.
    Skipped,
}

#[derive(Clone, Debug)]
pub struct SimResult {
    pub trace: SimTrace,
    pub metrics: Metrics,
    pub final_db: Database,
    pub oracle: OracleStatus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    Issue(usize),
    Exec(usize),
    SyncDone(usize, u64),
    Resume(usize),
    Commit2pc(usize),
}

#[derive(Default)]
struct CompState {
    round: u64,
    /// Instantiated local treaty per site.
    local: Option<Vec<Vec<LinearConstraint>>>,
    global: GlobalTreaty,
    session: Option<usize>,
    frozen_at: Vec<i64>,
}

struct Session {
    alive: bool,
    gen: u64,
    origin: SiteId,
    sync_done: i64,
    solving: bool,
    comps: Vec<CompId>,
    violators: Vec<(i64, SiteId, usize)>,
    blocked: Vec<usize>,
    winner: Option<usize>,
    losers: Vec<usize>,
}

struct Req {
    client: usize,
    site: SiteId,
    calls: Vec<Call>,
    insts: Vec<InstId>,
    comps: Vec<CompId>,
    start: i64,
    /// Waited for a synchronization before this attempt.
    waited: bool,
    violated: bool,
}

struct Client {
    site: SiteId,
    rng: ChaCha8Rng,
}

struct Tables<'a>(Vec<&'a SymbolicTable>);

impl Stepper for Tables<'_> {
    fn step(&self, member: usize, params: &[i64], db: &Database) -> Result<Database, TreatyError> {
        let row = self.0[member].lookup(db, params)?;
        Ok(row.body.eval(params, db)?.db)
    }
}

/// Cost model of treaty computation, in simulated microseconds.
fn solver_us(steps: usize, nodes: u64) -> i64 {
    5_000 + 50 * steps as i64 + 10 * nodes as i64
}

pub struct Simulation<'a> {
    cfg: &'a SimConfig,
    sys: &'a CompiledSystem,
    source: &'a dyn RequestSource,
    rtt: i64,
    half: i64,
    service: i64,
    sync_delay: i64,
    end: i64,
    now: i64,
    seq: u64,
    queue: BinaryHeap<Reverse<(i64, SiteId, u64, Event)>>,
    dbs: Vec<Database>,
    comps: Vec<CompState>,
    sessions: Vec<Session>,
    reqs: Vec<Req>,
    clients: Vec<Client>,
    trace: SimTrace,
    commit_seq: u64,
    locks: Vec<bool>,
    waiting: VecDeque<usize>,
    syncs: u64,
    messages: u64,
    breaches: u64,
    invalid: u64,
    solver_max: i64,
}

impl<'a> Simulation<'a> {
    pub fn new(cfg: &'a SimConfig, sys: &'a CompiledSystem, source: &'a dyn RequestSource) -> Self {
        let k = sys.sites();
        let rtt = SimConfig::us(cfg.rtt_ms);
        let mut clients = Vec::new();
        for s in 1..=k {
            for _ in 0..cfg.clients_per_site {
                let id = clients.len() as u64;
                clients.push(Client {
                    site: s,
                    rng: ChaCha8Rng::seed_from_u64(
                        cfg.seed ^ (id + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15),
                    ),
                });
            }
        }
        Simulation {
            cfg,
            sys,
            source,
            rtt,
            half: rtt / 2,
            service: SimConfig::us(cfg.service_ms),
            sync_delay: if k > 1 { 2 * rtt } else { 0 },
            end: SimConfig::us(cfg.duration_s * 1000.0),
            now: 0,
            seq: 0,
            queue: BinaryHeap::new(),
            dbs: vec![sys.spec.initial.clone(); k as usize],
            comps: (0..sys.components.len())
                .map(|_| CompState {
                    frozen_at: vec![0; k as usize],
                    ..CompState::default()
                })
                .collect(),
            sessions: Vec::new(),
            reqs: Vec::new(),
            clients,
            trace: SimTrace::default(),
            commit_seq: 0,
            locks: vec![false; sys.components.len()],
            waiting: VecDeque::new(),
            syncs: 0,
            messages: 0,
            breaches: 0,
            invalid: 0,
            solver_max: 0,
        }
    }

    fn k(&self) -> u32 {
        self.sys.sites()
    }

    fn schedule(&mut self, at: i64, site: SiteId, ev: Event) {
        self.seq += 1;
        self.queue.push(Reverse((at, site, self.seq, ev)));
    }

    pub fn run(mut self) -> Result<SimResult, SimError> {
        for c in 0..self.clients.len() {
            let site = self.clients[c].site;
            self.schedule(0, site, Event::Issue(c));
        }
        while let Some(Reverse((t, _, _, ev))) = self.queue.pop() {
            if t > self.end {
                break;
            }
            self.now = t;
            match ev {
                Event::Issue(c) => self.issue(c)?,
                Event::Exec(r) => match self.cfg.mode {
                    Mode::Local => self.exec_local_mode(r)?,
                    _ => self.attempt(r)?,
                },
                Event::SyncDone(s, gen) => self.sync_done(s, gen)?,
                Event::Resume(s) => self.resume(s)?,
                Event::Commit2pc(r) => self.commit_2pc(r)?,
            }
        }
        self.finish()
    }

    fn finish(self) -> Result<SimResult, SimError> {
        let final_db = self.logical_state();
        let oracle = if self.cfg.mode == Mode::Local {
            OracleStatus::Skipped
        } else {
            let out = serial_oracle(self.sys, &self.trace, &self.sys.spec.initial)?;
            match compare(&out, &self.trace, &final_db) {
                Ok(()) => OracleStatus::Match,
                Err(m) => OracleStatus::Mismatch(m.to_string()),
            }
        };
        let violated: Vec<bool> = self.reqs.iter().map(|r| r.violated).collect();
        let warm = SimConfig::us(self.cfg.warmup_s * 1000.0);
        let mut metrics = Metrics::from_trace(&self.trace, self.k(), warm, self.end, &|id| {
            violated[id as usize]
        });
        metrics.syncs = self.syncs;
        metrics.messages = self.messages;
        metrics.treaty_breaches = self.breaches;
        metrics.invalid_configs = self.invalid;
        metrics.solver_ms_max = self.solver_max as f64 / 1000.0;
        Ok(SimResult {
            trace: self.trace,
            metrics,
            final_db,
            oracle,
        })
    }

    /// Value every site would agree on after synchronizing `x`.
    fn authoritative(&self, x: &ObjectId) -> i64 {
        match self.sys.owner(x) {
            Some(s) => self.dbs[s as usize - 1].get(x),
            None => self.dbs[0].get(x),
        }
    }

    fn logical_state(&self) -> Database {
        let mut db = self.sys.spec.initial.clone();
        for comp in &self.sys.components {
            for x in &comp.logical {
                let v = match self.cfg.mode {
                    Mode::TwoPc => self.dbs[0].get(x),
                    Mode::Local => self.dbs[0].get(x),
                    _ => self
                        .sys
                        .logical_value(x, &|o: &ObjectId| self.authoritative(o)),
                };
                db.set(x.clone(), v);
            }
        }
        db
    }

    fn issue(&mut self, c: usize) -> Result<(), SimError> {
        let site = self.clients[c].site;
        let calls = self.source.next(site, &mut self.clients[c].rng);
        let mut insts = Vec::with_capacity(calls.len());
        for (t, p) in &calls {
            insts.push(
                self.sys
                    .instance_id(*t, site, p)
                    .ok_or_else(|| SimError::Config(format!("call {t}{p:?} not runnable at site {site}")))?,
            );
        }
        let comps: BTreeSet<CompId> = insts.iter().map(|i| self.sys.instances[*i].comp).collect();
        let r = self.reqs.len();
        self.reqs.push(Req {
            client: c,
            site,
            calls,
            insts,
            comps: comps.into_iter().collect(),
            start: self.now,
            waited: false,
            violated: false,
        });
        if self.cfg.mode == Mode::TwoPc {
            if !self.try_lock(r) {
                self.waiting.push_back(r);
            }
        } else {
            self.schedule(self.now + self.service, site, Event::Exec(r));
        }
        Ok(())
    }

    fn client_done(&mut self, r: usize) {
        let c = self.reqs[r].client;
        let site = self.clients[c].site;
        self.schedule(self.now, site, Event::Issue(c));
    }

    fn round_of(&self, r: usize) -> u64 {
        self.reqs[r]
            .comps
            .iter()
            .map(|c| self.comps[*c].round)
            .max()
            .unwrap_or(0)
    }

    fn record(&mut self, r: usize, end: i64, outcome: Outcome, log: Vec<i64>) {
        let commit_seq = if outcome.is_commit() {
            self.commit_seq += 1;
            Some(self.commit_seq)
        } else {
            None
        };
        let req = &self.reqs[r];
        let synced = match outcome {
            Outcome::CommittedLocal => false,
            Outcome::Coordinated => self.k() > 1,
            _ => true,
        };
        self.trace.records.push(TxnRecord {
            txn_id: r as u64,
            site: req.site,
            round: self.round_of(r),
            start_us: req.start,
            end_us: end,
            outcome,
            synced,
            calls: req.calls.clone(),
            log,
            commit_seq,
            waited: req.waited,
        });
    }

    fn run_originals(&self, r: usize, db: &mut Database) -> Result<Vec<i64>, SimError> {
        let mut log = Vec::new();
        for i in &self.reqs[r].insts {
            log.extend(eval_in_place(&self.sys.instances[*i].original, &[], db)?);
        }
        Ok(log)
    }

    fn exec_local_mode(&mut self, r: usize) -> Result<(), SimError> {
        let s = self.reqs[r].site as usize - 1;
        let mut db = std::mem::take(&mut self.dbs[s]);
        let log = self.run_originals(r, &mut db);
        self.dbs[s] = db;
        self.record(r, self.now, Outcome::CommittedLocal, log?);
        self.client_done(r);
        Ok(())
    }

    // Two-phase commit.

    fn try_lock(&mut self, r: usize) -> bool {
        if self.reqs[r].comps.iter().any(|c| self.locks[*c]) {
            return false;
        }
        for c in self.reqs[r].comps.clone() {
            self.locks[c] = true;
        }
        let delay = self.service + if self.k() > 1 { 2 * self.rtt } else { 0 };
        let site = self.reqs[r].site;
        self.schedule(self.now + delay, site, Event::Commit2pc(r));
        true
    }

    fn commit_2pc(&mut self, r: usize) -> Result<(), SimError> {
        let mut db = std::mem::take(&mut self.dbs[0]);
        let log = self.run_originals(r, &mut db);
        self.dbs[0] = db;
        self.messages += 4 * (self.k() as u64 - 1);
        self.record(r, self.now, Outcome::Coordinated, log?);
        for c in self.reqs[r].comps.clone() {
            self.locks[c] = false;
        }
        let mut still = VecDeque::new();
        while let Some(w) = self.waiting.pop_front() {
            if !self.try_lock(w) {
                still.push_back(w);
            }
        }
        self.waiting = still;
        self.client_done(r);
        Ok(())
    }

    // Homeostasis and the hand-crafted variant.

    fn comp_view(&self, comps: &[CompId], db: &Database) -> Database {
        let mut view = Database::new();
        for c in comps {
            for x in &self.sys.components[*c].objects {
                view.set(x.clone(), db.get(x));
            }
        }
        view
    }

    fn frozen_known(&self, c: CompId, site: SiteId) -> bool {
        let st = &self.comps[c];
        st.session.is_some() && self.now >= st.frozen_at[site as usize - 1]
    }

    fn attempt(&mut self, r: usize) -> Result<(), SimError> {
        let site = self.reqs[r].site;
        let comps = self.reqs[r].comps.clone();
        for &c in &comps {
            if self.comps[c].local.is_none() {
                self.compute_treaty(c)?;
            }
        }
        if let Some(&c) = comps.iter().find(|c| self.frozen_known(**c, site)) {
            let s = self.comps[c].session.expect("frozen component has a session");
            self.sessions[s].blocked.push(r);
            self.reqs[r].waited = true;
            return Ok(());
        }
        let si = site as usize - 1;
        let mut view = self.comp_view(&comps, &self.dbs[si]);
        let mut log = Vec::new();
        for i in self.reqs[r].insts.clone() {
            let row = self.sys.table(i)?.lookup(&view, &[])?;
            let out = row.body.eval(&[], &view)?;
            view = out.db;
            log.extend(out.log);
        }
        let ok = comps.iter().all(|c| {
            self.comps[*c].local.as_ref().expect("treaty computed")[si]
                .iter()
                .all(|lc| lc.holds(&view))
        });
        if !ok {
            self.violate(r);
            return Ok(());
        }
        for c in &comps {
            for x in &self.sys.components[*c].objects {
                self.dbs[si].set(x.clone(), view.get(x));
            }
        }
        let outcome = if self.reqs[r].waited {
            Outcome::Retried
        } else {
            Outcome::CommittedLocal
        };
        self.record(r, self.now, outcome, log);
        if self.cfg.check_invariants {
            for &c in &comps {
                let global = self.comp_view(&[c], &Database::new());
                let mut state = Database::new();
                for (x, _) in global.iter() {
                    state.set(x.clone(), self.authoritative(x));
                }
                for x in &self.sys.components[c].objects {
                    state.set(x.clone(), self.authoritative(x));
                }
                if !self.comps[c].global.holds(&state) {
                    self.breaches += 1;
                }
            }
        }
        self.client_done(r);
        Ok(())
    }

    fn freeze(&mut self, c: CompId, s: usize, origin: SiteId) {
        let k = self.k() as usize;
        let st = &mut self.comps[c];
        st.session = Some(s);
        for j in 0..k {
            st.frozen_at[j] = if j + 1 == origin as usize {
                self.now
            } else {
                self.now + self.half
            };
        }
    }

    fn violate(&mut self, r: usize) {
        let site = self.reqs[r].site;
        self.reqs[r].violated = true;
        self.messages += self.k() as u64 - 1;
        let comps = self.reqs[r].comps.clone();
        let existing: BTreeSet<usize> = comps.iter().filter_map(|c| self.comps[*c].session).collect();
        let target = match existing.iter().next() {
            None => {
                let s = self.sessions.len();
                self.sessions.push(Session {
                    alive: true,
                    gen: 0,
                    origin: site,
                    sync_done: self.now + self.sync_delay,
                    solving: false,
                    comps: Vec::new(),
                    violators: Vec::new(),
                    blocked: Vec::new(),
                    winner: None,
                    losers: Vec::new(),
                });
                s
            }
            Some(&t) => t,
        };
        for &other in existing.iter().skip(1) {
            let o = &mut self.sessions[other];
            debug_assert!(!o.solving);
            o.alive = false;
            let (comps_o, viol_o, blocked_o, done_o) = (
                std::mem::take(&mut o.comps),
                std::mem::take(&mut o.violators),
                std::mem::take(&mut o.blocked),
                o.sync_done,
            );
            for c in &comps_o {
                self.comps[*c].session = Some(target);
            }
            let t = &mut self.sessions[target];
            t.comps.extend(comps_o);
            t.violators.extend(viol_o);
            t.blocked.extend(blocked_o);
            t.sync_done = t.sync_done.max(done_o);
        }
        let mut added = false;
        for &c in &comps {
            if self.comps[c].session.is_none() {
                self.freeze(c, target, site);
                self.sessions[target].comps.push(c);
                added = true;
            }
        }
        let first = existing.is_empty();
        let t = &mut self.sessions[target];
        debug_assert!(!t.solving);
        if added && !first && self.sync_delay > 0 {
            t.sync_done = t.sync_done.max(self.now + self.rtt);
        }
        t.violators.push((self.now, site, r));
        if first || existing.len() > 1 || added {
            t.gen += 1;
            let (at, gen, origin) = (t.sync_done, t.gen, t.origin);
            self.schedule(at, origin, Event::SyncDone(target, gen));
        }
    }

    fn sync_done(&mut self, s: usize, gen: u64) -> Result<(), SimError> {
        if !self.sessions[s].alive || self.sessions[s].gen != gen {
            return Ok(());
        }
        self.sessions[s].solving = true;
        self.syncs += 1;
        let k = self.k() as u64;
        self.messages += k * (k - 1);
        let comps = self.sessions[s].comps.clone();
        // Every site takes the authoritative values, with deltas folded.
        for &c in &comps {
            let comp = &self.sys.components[c];
            let mut vals = Vec::new();
            for x in &comp.logical {
                let v = self.sys.logical_value(x, &|o: &ObjectId| self.authoritative(o));
                vals.push((x.clone(), v));
            }
            for db in &mut self.dbs {
                for x in &comp.objects {
                    db.set(x.clone(), 0);
                }
                for (x, v) in &vals {
                    db.set(x.clone(), *v);
                }
            }
        }
        let mut violators = self.sessions[s].violators.clone();
        violators.sort();
        let winner = violators[0].2;
        let losers: Vec<usize> = violators[1..].iter().map(|v| v.2).collect();
        // The winner runs at every site on the synchronized state.
        let mut view = self.comp_view(&comps, &self.dbs[0]);
        let log = self.run_originals(winner, &mut view)?;
        for db in &mut self.dbs {
            for &c in &comps {
                for x in &self.sys.components[c].logical {
                    db.set(x.clone(), view.get(x));
                }
            }
        }
        for &l in &losers {
            self.record(l, self.now, Outcome::AbortedLoser, Vec::new());
        }
        // Commit position and round are fixed now; the client hears back at
        // resume.
        self.record(winner, self.now, Outcome::ViolationWinner, log);
        let winner_rec = self.trace.records.len() - 1;
        let mut solver = 0;
        for &c in &comps {
            self.comps[c].round += 1;
            solver += self.compute_treaty(c)?;
        }
        let cap = SimConfig::us(self.cfg.solver_budget) - 2 * self.service;
        let solver = solver.min(cap);
        self.solver_max = self.solver_max.max(solver);
        let resume = self.now + self.service + solver;
        self.trace.records[winner_rec].end_us = resume;
        let ses = &mut self.sessions[s];
        ses.winner = Some(winner);
        ses.losers = losers;
        let origin = ses.origin;
        self.schedule(resume, origin, Event::Resume(s));
        Ok(())
    }

    fn resume(&mut self, s: usize) -> Result<(), SimError> {
        let ses = &mut self.sessions[s];
        ses.alive = false;
        let comps = std::mem::take(&mut ses.comps);
        let winner = ses.winner.take().expect("resumed session has a winner");
        let mut retry = std::mem::take(&mut ses.losers);
        retry.extend(std::mem::take(&mut ses.blocked));
        for c in comps {
            self.comps[c].session = None;
        }
        self.client_done(winner);
        for r in retry {
            self.reqs[r].waited = true;
            self.attempt(r)?;
        }
        Ok(())
    }

    /// Compute and install the treaty of a component from the state every
    /// site agrees on. Returns the modeled solver time.
    fn compute_treaty(&mut self, c: CompId) -> Result<i64, SimError> {
        let sys = self.sys;
        let comp = &sys.components[c];
        let view = self.comp_view(&[c], &self.dbs[0]);
        let k = self.k() as usize;
        if self.cfg.mode == Mode::Opt {
            let local = self.opt_treaty(c, &view);
            let st = &mut self.comps[c];
            st.local = Some(local);
            st.global = GlobalTreaty::default();
            return Ok(0);
        }
        let mut tables = Vec::with_capacity(comp.instances.len());
        for &i in &comp.instances {
            tables.push(sys.table(i)?);
        }
        let env = HashMap::new();
        let (psi, bodies) = matched_joint_guard(tables.iter().map(|t| (*t, &env)), &view)?;
        let bases: BTreeMap<ObjectId, i64> = comp
            .logical
            .iter()
            .filter(|x| sys.is_tracked(x))
            .map(|x| (x.clone(), view.get(x)))
            .collect();
        let psi = psi.bind_objects(&bases);
        let gt = preprocess(&psi, &view)?;
        let templates = make_templates(&gt, &sys.placement)?;
        let sites: Vec<SiteId> = comp.instances.iter().map(|i| sys.instances[*i].site).collect();
        let templates = pin_remote_reads(sites.iter().copied().zip(bodies), &sys.placement, templates)?;
        let mut config = default_config(&templates, &gt, &view)?;
        let mut steps = 0;
        let mut nodes = 0;
        if self.cfg.lookahead > 0 && !templates.is_empty() {
            let model = WorkloadModel::uniform(tables.len());
            let seed = self.cfg.seed
                ^ (c as u64).wrapping_mul(0x2545_f491_4f6c_dd1d)
                ^ self.comps[c].round.rotate_left(32);
            let seqs = sample_executions(
                &model,
                &Tables(tables.clone()),
                &view,
                self.cfg.lookahead,
                self.cfg.cost_factor,
                seed,
            )?;
            steps = self.cfg.lookahead * self.cfg.cost_factor;
            let groups = soft_constraints(&templates, &seqs);
            let limits = SolverLimits {
                max_nodes: (self.cfg.solver_budget * 1000.0) as u64,
            };
            let out = optimize_config(&templates, &gt, &view, &groups, &limits)?;
            nodes = out.nodes;
            config = out.config;
        }
        config = balance_slack(&templates, &gt, &config);
        if !check_valid(&templates, &config, &gt, &view) {
            self.invalid += 1;
        }
        if self.cfg.fault_inflate != 0 {
            for t in templates.iter().filter(|t| t.site == 1) {
                for cl in &t.clauses {
                    if cl.op == CmpOp::Le && matches!(cl.var.origin, ClauseOrigin::Global(_)) {
                        let v = config.assignment.get_mut(&cl.var).expect("total config");
                        *v = v.saturating_sub(self.cfg.fault_inflate);
                    }
                }
            }
        }
        let mut local = vec![Vec::new(); k];
        for t in &templates {
            for cl in &t.clauses {
                let v = config.get(&cl.var).expect("total config");
                local[t.site as usize - 1].push(cl.instantiate(v)?);
            }
        }
        let st = &mut self.comps[c];
        st.local = Some(local);
        st.global = gt;
        Ok(solver_us(steps, nodes))
    }

    /// Equal split of the remaining stock above 1 among sites.
    fn opt_treaty(&self, c: CompId, view: &Database) -> Vec<Vec<LinearConstraint>> {
        let k = self.k() as i64;
        let mut local = vec![Vec::new(); k as usize];
        for x in &self.sys.components[c].logical {
            let q = self.sys.logical_value(x, &|o: &ObjectId| view.get(o));
            for (s, d) in self.sys.schema.deltas_of(x) {
                let i = s as usize - 1;
                let terms = BTreeMap::from([(d.clone(), -1)]);
                if q >= 2 {
                    let slack = q - 2;
                    let share = slack / k + i64::from((i as i64) < slack % k);
                    local[i].push(LinearConstraint {
                        terms,
                        op: CmpOp::Le,
                        bound: share,
                    });
                } else {
                    local[i].push(LinearConstraint {
                        terms,
                        op: CmpOp::Eq,
                        bound: 0,
                    });
                }
            }
        }
        local
    }
}

/// Build the system for a configuration and run it.
pub fn run_simulation(cfg: &SimConfig) -> Result<SimResult, SimError> {
    cfg.validate()?;
    let (spec, source): (_, Box<dyn RequestSource>) = match cfg.workload {
        super::config::WorkloadKind::Microbench => {
            let mb = cfg.microbench();
            (
                super::source::microbench_system(&mb, cfg.sites, cfg.init_stock, cfg.seed),
                Box::new(super::source::MicrobenchSource { spec: mb }),
            )
        }
        super::config::WorkloadKind::Mixed => {
            let (spec, src) = super::source::mixed_system(cfg.sites, cfg.seed);
            (spec, Box::new(src))
        }
    };
    let sys = CompiledSystem::new(spec)?;
    Simulation::new(cfg, &sys, source.as_ref()).run()
}
