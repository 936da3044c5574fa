mod common;

use std::collections::HashMap;

use homeostasis::analysis::{build_table, matched_joint_guard};
use homeostasis::lang::{eval, Database};
use homeostasis::treaty::{
    check_valid, default_config, execute_sequence, make_templates, optimize_config, preprocess,
    soft_constraints, LocalTreatyTemplate, SolverLimits, TreatyConfiguration,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn local_holds(templates: &[LocalTreatyTemplate], cfg: &TreatyConfiguration, db: &Database) -> bool {
    templates.iter().all(|t| t.holds(db, cfg))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn table_lookup_agrees_with_direct_eval(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_txn(&mut rng, "T");
        let table = build_table(&t).unwrap();
        let db = random_db(&mut rng, 8);
        let params = random_params(&mut rng, t.params.len());
        let direct = eval(&t, &params, &db);
        // Exactly one row matches, or lookup reports which way it failed.
        let row = table.lookup(&db, &params).unwrap();
        match direct {
            Ok(out) => {
                let via = row.body.eval(&params, &db).unwrap();
                prop_assert_eq!(via.db, out.db);
                prop_assert_eq!(via.log, out.log);
            }
            Err(e) => prop_assert_eq!(row.body.eval(&params, &db).err(), Some(e)),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn default_configuration_is_valid_and_sound(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sites = rng.gen_range(2..=5);
        let extra = rng.gen_range(0..=3);
        let (placement, objs) = random_placement(&mut rng, sites, sites as usize + extra);
        let db: Database = objs.iter().map(|x| (x.as_str(), rng.gen_range(-20..=20))).collect();
        let gt = random_treaty(&mut rng, &objs, &db);
        let templates = make_templates(&gt, &placement).unwrap();
        let cfg = default_config(&templates, &gt, &db).unwrap();
        prop_assert!(check_valid(&templates, &cfg, &gt, &db));
        for i in 0..10_000 {
            let d = perturb(&mut rng, &db, if i % 2 == 0 { 2 } else { 15 });
            if local_holds(&templates, &cfg, &d) {
                prop_assert!(gt.holds(&d), "{} broken on {}", gt, d);
            }
        }
    }

    #[test]
    fn optimized_configuration_dominates_default(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sites = rng.gen_range(2..=4);
        let (placement, objs) = random_placement(&mut rng, sites, sites as usize + 1);
        let db: Database = objs.iter().map(|x| (x.as_str(), rng.gen_range(-20..=20))).collect();
        let gt = random_treaty(&mut rng, &objs, &db);
        let templates = make_templates(&gt, &placement).unwrap();
        let seqs: Vec<Vec<Database>> = (0..rng.gen_range(1..6))
            .map(|_| (0..4).map(|_| perturb(&mut rng, &db, 3)).collect())
            .collect();
        let groups = soft_constraints(&templates, &seqs);
        let out = optimize_config(&templates, &gt, &db, &groups, &SolverLimits::default()).unwrap();
        prop_assert!(out.satisfied >= out.default_satisfied);
        prop_assert!(check_valid(&templates, &out.config, &gt, &db));
        for _ in 0..2_000 {
            let d = perturb(&mut rng, &db, 6);
            if local_holds(&templates, &out.config, &d) {
                prop_assert!(gt.holds(&d));
            }
        }
    }

    #[test]
    fn global_treaty_implies_matched_guard(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=3);
        let txns: Vec<_> = (0..n)
            .map(|i| {
                let mut t = random_txn(&mut rng, &format!("T{i}"));
                if !t.params.is_empty() {
                    let ps = random_params(&mut rng, t.params.len());
                    t = t.instantiate(&ps).unwrap();
                }
                t
            })
            .collect();
        let tables: Vec<_> = txns.iter().map(|t| build_table(t).unwrap()).collect();
        let db = random_db(&mut rng, 8);
        let env = HashMap::new();
        let (psi, _) = matched_joint_guard(tables.iter().map(|t| (t, &env)), &db).unwrap();
        let gt = preprocess(&psi, &db).unwrap();
        prop_assert!(gt.holds(&db));
        for i in 0..500 {
            let d = perturb(&mut rng, &db, if i % 2 == 0 { 2 } else { 10 });
            if gt.holds(&d) {
                prop_assert!(psi.eval_db(&d).unwrap(), "{} holds but {} does not on {}", gt, psi, d);
            }
        }
        // Running the members' matched bodies keeps the walk well defined.
        let steps: Vec<_> = (0..n).map(|m| (m, Vec::new())).collect();
        execute_sequence(&tables, &db, &steps).unwrap();
    }
}
