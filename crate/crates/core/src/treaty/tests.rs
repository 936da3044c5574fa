use super::*;
use crate::analysis::{build_joint_table, build_table, matched_joint_guard, SymbolicTable};
use crate::lang::parse;
use crate::programs;
use crate::workload::WorkloadModel;
use std::collections::HashMap;

fn db(pairs: &[(&str, i64)]) -> Database {
    pairs.iter().map(|(k, v)| (*k, *v)).collect()
}

fn xy_placement() -> Placement {
    Placement::new(2).place("x", 1).place("y", 2)
}

fn var(g: usize, site: SiteId) -> ConfigVar {
    ConfigVar {
        origin: ClauseOrigin::Global(g),
        site,
    }
}

fn tables() -> Vec<SymbolicTable> {
    vec![
        build_table(&programs::t1()).unwrap(),
        build_table(&programs::t2()).unwrap(),
    ]
}

fn worked_treaty() -> (GlobalTreaty, Vec<LocalTreatyTemplate>, Database) {
    let d = db(&[("x", 10), ("y", 13)]);
    let ts = tables();
    let env = HashMap::new();
    let (psi, _) = matched_joint_guard(ts.iter().map(|t| (t, &env)), &d).unwrap();
    let gt = preprocess(&psi, &d).unwrap();
    let templates = make_templates(&gt, &xy_placement()).unwrap();
    (gt, templates, d)
}

fn guard(src: &str) -> Formula {
    let ast = parse(&format!("{{ if ({src}) then skip else skip }}()")).unwrap();
    let crate::lang::Com::If(c, _, _) = ast.body else { panic!() };
    crate::analysis::simplify_conjunction(&Formula::from_cond(&c))
}

#[test]
fn preprocess_linear_guard_passes_through() {
    let (gt, _, _) = worked_treaty();
    assert_eq!(gt.to_string(), "-x - y <= -20");
    let t = preprocess(&Formula::True, &Database::new()).unwrap();
    assert!(t.clauses.is_empty());
}

#[test]
fn preprocess_pins_products() {
    let psi = guard("read(x) * read(y) < 50 && read(x) <= 9");
    let gt = preprocess(&psi, &db(&[("x", 3), ("y", 4)])).unwrap();
    assert_eq!(gt.to_string(), "x = 3 && y = 4 && x <= 9");
}

#[test]
fn preprocess_picks_true_side_of_disequalities() {
    let psi = guard("read(x) != 5");
    let gt = preprocess(&psi, &db(&[("x", 2)])).unwrap();
    assert_eq!(gt.to_string(), "x < 5");
    let gt = preprocess(&psi, &db(&[("x", 9)])).unwrap();
    assert_eq!(gt.to_string(), "-x < -5");
    let psi = guard("read(x) < 3 || read(y) < 3");
    let gt = preprocess(&psi, &db(&[("x", 7), ("y", 1)])).unwrap();
    assert!(gt.holds(&db(&[("x", 7), ("y", 1)])));
    assert!(!gt.holds(&db(&[("x", 1), ("y", 5)])));
}

#[test]
fn preprocess_rejects_false_guard() {
    let psi = guard("read(x) < 3");
    assert_eq!(
        preprocess(&psi, &db(&[("x", 3)])),
        Err(TreatyError::PsiViolated)
    );
}

#[test]
fn templates_for_worked_example() {
    let (_, templates, _) = worked_treaty();
    let shown: Vec<String> = templates.iter().map(|t| t.to_string()).collect();
    // x + c_y >= 20 at site 1 and c_x + y >= 20 at site 2.
    assert_eq!(
        shown,
        vec!["site 1: -x + c0_1 <= -20", "site 2: -y + c0_2 <= -20"]
    );
    assert!(make_templates(&GlobalTreaty::default(), &xy_placement())
        .unwrap()
        .is_empty());
}

#[test]
fn templates_reject_unplaced_objects() {
    let (gt, _, _) = worked_treaty();
    assert_eq!(
        make_templates(&gt, &Placement::new(2).place("x", 1)),
        Err(TreatyError::UnplacedObject(ObjectId::new("y")))
    );
}

#[test]
fn single_site_clause_gives_constant_clause_elsewhere() {
    let gt = GlobalTreaty {
        clauses: vec![LinearConstraint {
            terms: [(ObjectId::new("x"), 2)].into(),
            op: CmpOp::Lt,
            bound: 30,
        }],
    };
    let templates = make_templates(&gt, &xy_placement()).unwrap();
    assert_eq!(templates[1].to_string(), "site 2: c0_2 <= 29");
    let d = db(&[("x", 4)]);
    let cfg = default_config(&templates, &gt, &d).unwrap();
    assert_eq!(cfg.get(&var(0, 1)), Some(21));
    assert_eq!(cfg.get(&var(0, 2)), Some(29));
    assert!(check_valid(&templates, &cfg, &gt, &d));
}

#[test]
fn default_config_worked_example() {
    let (gt, templates, d) = worked_treaty();
    let cfg = default_config(&templates, &gt, &d).unwrap();
    assert_eq!(cfg.get(&var(0, 1)), Some(-10));
    assert_eq!(cfg.get(&var(0, 2)), Some(-7));
    assert!(check_valid(&templates, &cfg, &gt, &d));
    assert!(default_config(&[], &GlobalTreaty::default(), &d)
        .unwrap()
        .assignment
        .is_empty());
}

#[test]
fn default_config_equality_split() {
    let gt = GlobalTreaty {
        clauses: vec![LinearConstraint {
            terms: [(ObjectId::new("x"), 1), (ObjectId::new("y"), 1)].into(),
            op: CmpOp::Eq,
            bound: 23,
        }],
    };
    let templates = make_templates(&gt, &xy_placement()).unwrap();
    let d = db(&[("x", 10), ("y", 13)]);
    let cfg = default_config(&templates, &gt, &d).unwrap();
    assert_eq!(cfg.get(&var(0, 1)), Some(13));
    assert_eq!(cfg.get(&var(0, 2)), Some(10));
    assert!(check_valid(&templates, &cfg, &gt, &d));
    let mut off = cfg.clone();
    off.assignment.insert(var(0, 1), 14);
    assert!(!check_valid(&templates, &off, &gt, &d));
}

#[test]
fn check_valid_worked_configuration() {
    let (gt, templates, d) = worked_treaty();
    let mut cfg = TreatyConfiguration::default();
    cfg.assignment.insert(var(0, 1), -12);
    cfg.assignment.insert(var(0, 2), -8);
    assert!(check_valid(&templates, &cfg, &gt, &d));
    // Raising one variable keeps H1 but breaks H2 at site 2 (13 < 14).
    cfg.assignment.insert(var(0, 2), -6);
    assert!(!check_valid(&templates, &cfg, &gt, &d));
    // Lowering both breaks H1.
    cfg.assignment.insert(var(0, 1), -13);
    cfg.assignment.insert(var(0, 2), -8);
    assert!(!check_valid(&templates, &cfg, &gt, &d));
}

#[test]
fn fixed_sequences_and_soft_groups() {
    let ts = tables();
    let (_, templates, d) = worked_treaty();
    let run = |steps: &[usize]| {
        let steps: Vec<_> = steps.iter().map(|m| (*m, vec![])).collect();
        execute_sequence(&ts, &d, &steps).unwrap()
    };
    let s1 = run(&[0, 0, 1]);
    let pairs: Vec<(i64, i64)> = s1
        .iter()
        .map(|s| (s.get(&"x".into()), s.get(&"y".into())))
        .collect();
    assert_eq!(pairs, vec![(10, 13), (9, 13), (8, 13), (8, 12)]);
    let s2 = run(&[0, 0, 0]);
    let s3 = run(&[0, 1, 0]);
    let groups = soft_constraints(&templates, &[s1, s2, s3]);
    assert_eq!(groups[0].to_string(), "{c0_1 <= -12, c0_2 <= -8}");
    assert_eq!(groups[1].to_string(), "{c0_1 <= -13, c0_2 <= -7}");
    assert!(soft_constraints(&templates, &[]).is_empty());
}

#[test]
fn optimizer_reproduces_worked_example() {
    let ts = tables();
    let (gt, templates, d) = worked_treaty();
    let seqs: Vec<_> = [[0, 0, 1], [0, 0, 0], [0, 1, 0]]
        .iter()
        .map(|s| {
            let steps: Vec<_> = s.iter().map(|m| (*m, vec![])).collect();
            execute_sequence(&ts, &d, &steps).unwrap()
        })
        .collect();
    let groups = soft_constraints(&templates, &seqs);
    let out = optimize_config(&templates, &gt, &d, &groups, &SolverLimits::default()).unwrap();
    assert_eq!(out.satisfied, 2);
    assert_eq!(out.default_satisfied, 0);
    assert!(groups[0].satisfied_by(&out.config) && groups[2].satisfied_by(&out.config));
    assert_eq!(out.config.get(&var(0, 1)), Some(-12));
    assert_eq!(out.config.get(&var(0, 2)), Some(-8));
    assert!(check_valid(&templates, &out.config, &gt, &d));
}

#[test]
fn optimizer_without_groups_returns_default() {
    let (gt, templates, d) = worked_treaty();
    let out = optimize_config(&templates, &gt, &d, &[], &SolverLimits::default()).unwrap();
    assert_eq!(out.config, default_config(&templates, &gt, &d).unwrap());
}

/// Exhaustive oracle: every configuration on a small grid.
#[test]
fn optimizer_matches_exhaustive_search() {
    let (gt, templates, d) = worked_treaty();
    let ts = tables();
    let model = WorkloadModel::weighted(&[2.0, 1.0]);
    for seed in 0..20 {
        let seqs = sample_executions(&model, &ts, &d, 4, 5, seed).unwrap();
        let groups = soft_constraints(&templates, &seqs);
        let out = optimize_config(&templates, &gt, &d, &groups, &SolverLimits::default()).unwrap();
        let mut best = 0;
        for a in -30..=-10 {
            for b in -30..=-7 {
                let mut cfg = TreatyConfiguration::default();
                cfg.assignment.insert(var(0, 1), a);
                cfg.assignment.insert(var(0, 2), b);
                if check_valid(&templates, &cfg, &gt, &d) {
                    best = best.max(satisfied_groups(&groups, &cfg));
                }
            }
        }
        assert_eq!(out.satisfied, best, "seed {seed}");
        assert!(check_valid(&templates, &out.config, &gt, &d));
    }
}

#[test]
fn sampling_is_deterministic_and_rejects_zero_lookahead() {
    let (_, _, d) = worked_treaty();
    let ts = tables();
    let model = WorkloadModel::weighted(&[2.0, 1.0]);
    let a = sample_executions(&model, &ts, &d, 5, 3, 9).unwrap();
    let b = sample_executions(&model, &ts, &d, 5, 3, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 3);
    assert!(a.iter().all(|s| s.len() == 6 && s[0] == d));
    assert_eq!(
        sample_executions(&model, &ts, &d, 0, 3, 9),
        Err(TreatyError::InvalidLookahead)
    );
    let skip = vec![build_table(&programs::skip()).unwrap()];
    let s = sample_executions(&WorkloadModel::uniform(1), &skip, &d, 3, 2, 1).unwrap();
    assert!(s.iter().flatten().all(|x| *x == d));
}

#[test]
fn joint_table_steps_like_member_tables() {
    let ts = tables();
    let joint = build_joint_table(&ts);
    let d = db(&[("x", 10), ("y", 13)]);
    let steps = vec![(0, vec![]), (1, vec![]), (1, vec![]), (0, vec![])];
    assert_eq!(
        execute_sequence(&joint, &d, &steps).unwrap(),
        execute_sequence(&ts, &d, &steps).unwrap()
    );
}

#[test]
fn balance_splits_slack_evenly() {
    let gt = GlobalTreaty {
        clauses: vec![LinearConstraint {
            terms: [(ObjectId::new("x"), -1), (ObjectId::new("y"), -1)].into(),
            op: CmpOp::Le,
            bound: 7,
        }],
    };
    let templates = make_templates(&gt, &xy_placement()).unwrap();
    let d = Database::new();
    let cfg = default_config(&templates, &gt, &d).unwrap();
    let bal = balance_slack(&templates, &gt, &cfg);
    assert_eq!(bal.get(&var(0, 1)), Some(3));
    assert_eq!(bal.get(&var(0, 2)), Some(4));
    assert!(check_valid(&templates, &bal, &gt, &d));
    // Site 1 may now take x down to -4, site 2 only to -3.
    assert!(templates[0].holds(&db(&[("x", -4)]), &bal));
    assert!(!templates[0].holds(&db(&[("x", -5)]), &bal));
    assert!(!templates[1].holds(&db(&[("y", -4)]), &bal));
}

#[test]
fn remote_reads_are_pinned_at_their_home() {
    let copy = build_table(&parse("{ write(z = read(x) + read(y)) }()").unwrap()).unwrap();
    let p = Placement::new(2).place("x", 1).place("y", 2).place("z", 2);
    let d = db(&[("x", 10), ("y", 13)]);
    let row = copy.lookup(&d, &[]).unwrap();
    let pinned = pin_remote_reads([(2, &row.body)], &p, Vec::new()).unwrap();
    assert_eq!(pinned[0].to_string(), "site 1: -x + c_x = 0");
    assert!(pinned[1].clauses.is_empty());
    let cfg = default_config(&pinned, &GlobalTreaty::default(), &d).unwrap();
    assert_eq!(cfg.get(&pinned[0].clauses[0].var), Some(10));
    assert!(check_valid(&pinned, &cfg, &GlobalTreaty::default(), &d));
    assert!(!pinned[0].holds(&db(&[("x", 11)]), &cfg));

    let t1 = build_table(&programs::t1()).unwrap();
    let row = t1.lookup(&d, &[]).unwrap();
    let p1 = Placement::new(1).place("x", 1).place("y", 1);
    assert!(pin_remote_reads([(1, &row.body)], &p1, Vec::new())
        .unwrap()
        .is_empty());
}
