use std::collections::BTreeMap;

use super::*;
use crate::programs;

fn db(pairs: &[(&str, i64)]) -> Database {
    pairs.iter().map(|(k, v)| (*k, *v)).collect()
}

fn oid(s: &str) -> ObjectId {
    ObjectId::new(s)
}

#[test]
fn parses_t1_guard_and_branches() {
    let t1 = programs::t1();
    assert!(t1.params.is_empty());
    let Com::Seq(cs) = &t1.body else { panic!("expected sequence") };
    assert_eq!(cs.len(), 3);
    let Com::If(guard, then_c, else_c) = &cs[2] else { panic!("expected if") };
    assert_eq!(
        *guard,
        Cond::cmp(
            CmpOp::Lt,
            Expr::add(Expr::temp("xh"), Expr::temp("yh")),
            Expr::Const(10)
        )
    );
    assert!(matches!(**then_c, Com::Write(ref o, _) if o.as_str() == "x"));
    assert!(matches!(**else_c, Com::Write(ref o, _) if o.as_str() == "x"));
}

#[test]
fn parses_skip_program() {
    let ast = parse("{ skip }()").unwrap();
    assert!(ast.params.is_empty());
    assert_eq!(ast.body, Com::Skip);
}

#[test]
fn parses_order_transaction() {
    let ast = parse(&crate::workload::microbench_source(100)).unwrap();
    assert_eq!(ast.params, vec!["item".to_string()]);
    let Com::Seq(cs) = &ast.body else { panic!() };
    assert_eq!(cs.len(), 2);
    assert!(matches!(cs[0], Com::ArrayRead { .. }));
    let Com::If(_, t, e) = &cs[1] else { panic!() };
    assert!(matches!(**t, Com::ArrayWrite { .. }));
    assert!(matches!(**e, Com::ArrayWrite { .. }));
}

#[test]
fn syntax_errors_carry_position() {
    match parse("{\n  x := ;\n}()") {
        Err(LangError::Syntax { line, col, .. }) => assert_eq!((line, col), (2, 8)),
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(parse(""), Err(LangError::Syntax { .. })));
    assert!(matches!(
        parse("{ while (true) then skip }()"),
        Err(LangError::Syntax { .. })
    ));
}

#[test]
fn rejects_unbound_and_undeclared() {
    assert_eq!(
        parse("{ if (read(x) < 1) then t := 1 else skip; write(y = t) }()"),
        Err(LangError::UnboundTemp("t".into()))
    );
    assert_eq!(
        parse("{ write(y = p) }()"),
        Err(LangError::Undeclared("p".into()))
    );
    assert!(parse("{ write(y = p) }(p)").is_ok());
    assert!(matches!(
        parse("{ p := 1 }(p)"),
        Err(LangError::Syntax { .. })
    ));
}

#[test]
fn sugar_desugars_into_core_comparisons() {
    let ast = parse("{ if (read(x) >= 3 || read(y) != 2) then print(1) else skip }()").unwrap();
    let Com::If(c, _, _) = ast.body else { panic!() };
    let ge = Cond::cmp(CmpOp::Le, Expr::Const(3), Expr::read("x"));
    let ne = Cond::not(Cond::cmp(CmpOp::Eq, Expr::read("y"), Expr::Const(2)));
    assert_eq!(c, Cond::not(Cond::and(Cond::not(ge), Cond::not(ne))));
}

#[test]
fn eval_examples() {
    let d = db(&[("x", 10), ("y", 13)]);
    let r = eval(&programs::t1(), &[], &d).unwrap();
    assert_eq!(r.db, db(&[("x", 9), ("y", 13)]));
    assert!(r.log.is_empty());
    // 10 + 13 is not below 20, so T2 takes its else branch.
    let r = eval(&programs::t2(), &[], &d).unwrap();
    assert_eq!(r.db, db(&[("x", 10), ("y", 12)]));
    let r = eval(&programs::t2(), &[], &db(&[("x", 3), ("y", 13)])).unwrap();
    assert_eq!(r.db, db(&[("x", 3), ("y", 14)]));
    let r = eval(&programs::skip(), &[], &d).unwrap();
    assert_eq!(r.db, d);
    assert!(r.log.is_empty());
}

#[test]
fn eval_errors() {
    assert_eq!(
        eval(&programs::skip(), &[1], &Database::new()),
        Err(EvalError::ArityMismatch {
            expected: 0,
            got: 1
        })
    );
    let big = parse("{ write(x = read(x) * read(x)) }()").unwrap();
    assert_eq!(
        eval(&big, &[], &db(&[("x", i64::MAX)])),
        Err(EvalError::Overflow)
    );
}

#[test]
fn print_collects_log_in_order() {
    let ast = parse("{ print(p); print(read(x) + 1); print(-p) }(p)").unwrap();
    let r = eval(&ast, &[7], &db(&[("x", 2)])).unwrap();
    assert_eq!(r.log, vec![7, 3, -7]);
}

#[test]
fn read_write_sets_examples() {
    let s = |v: &[&str]| v.iter().map(|x| oid(x)).collect::<std::collections::BTreeSet<_>>();
    assert_eq!(read_write_sets(&programs::t1()), (s(&["x", "y"]), s(&["x"])));
    assert_eq!(read_write_sets(&programs::skip()), (s(&[]), s(&[])));
    assert_eq!(read_write_sets(&programs::t4()), (s(&["x", "y"]), s(&["z"])));
}

#[test]
fn desugar_read_two_elements() {
    let ast = parse("{ xh := read(a[i]); write(y = xh) }(i)").unwrap();
    let bounds = BTreeMap::from([("a".to_string(), 2)]);
    let d = desugar_arrays(&ast, &bounds).unwrap();
    let guarded = |k: i64, rest: Com| {
        Com::if_(
            Cond::cmp(CmpOp::Eq, Expr::param("i"), Expr::Const(k)),
            Com::Assign("xh".into(), Expr::read(format!("a_{k}").as_str())),
            rest,
        )
    };
    let expected = Com::Seq(vec![
        guarded(0, guarded(1, Com::Skip)),
        Com::Write(oid("y"), Expr::temp("xh")),
    ]);
    assert_eq!(d.body, expected);
}

#[test]
fn desugar_single_element_and_literals() {
    let ast = parse("{ xh := read(a[t0]); print(xh) }()");
    assert!(ast.is_err(), "index temp must be assigned");
    let ast = parse("{ k := 0; xh := read(a[k]); print(xh) }()").unwrap();
    let bounds = BTreeMap::from([("a".to_string(), 1)]);
    let d = desugar_arrays(&ast, &bounds).unwrap();
    let Com::Seq(cs) = &d.body else { panic!() };
    assert_eq!(
        cs[1],
        Com::if_(
            Cond::cmp(CmpOp::Eq, Expr::temp("k"), Expr::Const(0)),
            Com::Assign("xh".into(), Expr::read("a_0")),
            Com::Skip
        )
    );
    let lit = parse("{ write(a[2] = 5) }()").unwrap();
    assert_eq!(
        desugar_arrays(&lit, &BTreeMap::from([("a".to_string(), 3)]))
            .unwrap()
            .body,
        Com::Write(oid("a_2"), Expr::Const(5))
    );
    assert_eq!(
        desugar_arrays(&lit, &BTreeMap::from([("a".to_string(), 2)])),
        Err(LangError::BoundExceeded {
            array: "a".into(),
            index: 2,
            len: 2
        })
    );
    assert_eq!(
        desugar_arrays(&lit, &BTreeMap::new()),
        Err(LangError::UnknownArray("a".into()))
    );
}

/// Direct array semantics, used as the oracle for desugaring.
fn array_interpreter(index: i64, value: i64, arr: &mut [i64]) {
    if (0..arr.len() as i64).contains(&index) {
        arr[index as usize] = value;
    }
}

#[test]
fn desugar_write_matches_array_interpreter() {
    let ast = parse("{ write(a[i] = v) }(i, v)").unwrap();
    let bounds = BTreeMap::from([("a".to_string(), 3)]);
    let d = desugar_arrays(&ast, &bounds).unwrap();
    for i in 0..3 {
        let mut arr = [4, 5, 6];
        array_interpreter(i, 42, &mut arr);
        let start = db(&[("a_0", 4), ("a_1", 5), ("a_2", 6)]);
        let r = eval(&d, &[i, 42], &start).unwrap();
        for (k, v) in arr.iter().enumerate() {
            assert_eq!(r.db.get(&element("a", k)), *v);
        }
    }
}

#[test]
fn pretty_print_round_trips_reference_programs() {
    for src in [
        programs::T1,
        programs::T2,
        programs::T3,
        programs::T4,
        programs::COUNTDOWN,
        programs::SKIP,
    ] {
        let ast = parse(src).unwrap();
        let printed = print_ast(&ast);
        assert_eq!(parse(&printed).unwrap(), ast, "{printed}");
    }
}

#[test]
fn expression_printing_keeps_structure() {
    for src in ["a - (b + c)", "a - b * c", "-(a + b) * c", "a + (b + c)", "a - -b", "--a"] {
        let ast = parse(&format!("{{ print({src}) }}(a, b, c)")).unwrap();
        let Com::Print(e) = &ast.body else { panic!() };
        let again = parse(&format!("{{ print({}) }}(a, b, c)", expr_to_string(e))).unwrap();
        assert_eq!(again, ast, "{src}");
    }
}

#[test]
fn instantiate_replaces_params() {
    let ast = parse("{ xh := read(a[i]); write(a[i] = xh + i) }(i)").unwrap();
    let inst = ast.instantiate(&[1]).unwrap();
    assert!(inst.params.is_empty());
    let d = desugar_arrays(&inst, &BTreeMap::from([("a".to_string(), 2)])).unwrap();
    let r = eval(&d, &[], &db(&[("a_1", 5)])).unwrap();
    assert_eq!(r.db, db(&[("a_1", 6)]));
}
