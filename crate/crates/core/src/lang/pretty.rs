use std::fmt::Write;

use super::ast::{Com, Cond, Expr, Index, TransactionAst};

const P_ADD: u8 = 1;
const P_MUL: u8 = 2;
const P_NEG: u8 = 3;

/// Render an expression in surface syntax. Parsing the result gives back the
/// same tree as long as constants are non-negative.
pub fn expr_to_string(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

fn write_expr(out: &mut String, e: &Expr, min: u8) {
    let (prec, body) = match e {
        Expr::Const(n) => (4, n.to_string()),
        Expr::Param(p) | Expr::Temp(p) => (4, p.clone()),
        Expr::Read(o) => (4, format!("read({o})")),
        Expr::Add(a, b) => {
            let mut s = String::new();
            write_expr(&mut s, a, P_ADD);
            match b.as_ref() {
                Expr::Neg(inner) => {
                    s.push_str(" - ");
                    write_expr(&mut s, inner, P_MUL);
                }
                _ => {
                    s.push_str(" + ");
                    write_expr(&mut s, b, P_MUL);
                }
            }
            (P_ADD, s)
        }
        Expr::Mul(a, b) => {
            let mut s = String::new();
            write_expr(&mut s, a, P_MUL);
            s.push_str(" * ");
            write_expr(&mut s, b, P_NEG);
            (P_MUL, s)
        }
        Expr::Neg(a) => {
            let mut s = String::from("-");
            write_expr(&mut s, a, P_NEG);
            (P_NEG, s)
        }
    };
    if prec < min {
        let _ = write!(out, "({body})");
    } else {
        out.push_str(&body);
    }
}

pub fn cond_to_string(c: &Cond) -> String {
    let mut s = String::new();
    write_cond(&mut s, c, 0);
    s
}

fn write_cond(out: &mut String, c: &Cond, min: u8) {
    match c {
        Cond::True => out.push_str("true"),
        Cond::False => out.push_str("false"),
        Cond::Cmp(op, a, b) => {
            let body = format!(
                "{} {} {}",
                expr_to_string(a),
                op.symbol(),
                expr_to_string(b)
            );
            if min > 1 {
                let _ = write!(out, "({body})");
            } else {
                out.push_str(&body);
            }
        }
        Cond::And(a, b) => {
            let mut s = String::new();
            write_cond(&mut s, a, 1);
            s.push_str(" && ");
            write_cond(&mut s, b, 2);
            if min > 1 {
                let _ = write!(out, "({s})");
            } else {
                out.push_str(&s);
            }
        }
        Cond::Not(a) => {
            out.push('!');
            write_cond(out, a, 2);
        }
    }
}

fn index_to_string(i: &Index) -> String {
    match i {
        Index::Lit(n) => n.to_string(),
        Index::Temp(t) | Index::Param(t) => t.clone(),
    }
}

/// One-line rendering of a branch-free command.
pub fn com_to_string(c: &Com) -> String {
    match c {
        Com::Skip => "skip".into(),
        Com::Assign(t, e) => format!("{t} := {}", expr_to_string(e)),
        Com::Write(o, e) => format!("write({o} = {})", expr_to_string(e)),
        Com::Print(e) => format!("print({})", expr_to_string(e)),
        Com::ArrayRead { temp, array, index } => {
            format!("{temp} := read({array}[{}])", index_to_string(index))
        }
        Com::ArrayWrite {
            array,
            index,
            value,
        } => format!(
            "write({array}[{}] = {})",
            index_to_string(index),
            expr_to_string(value)
        ),
        Com::Seq(cs) => format!(
            "{{ {} }}",
            cs.iter().map(com_to_string).collect::<Vec<_>>().join("; ")
        ),
        Com::If(b, t, e) => format!(
            "if {} then {} else {}",
            cond_to_string(b),
            block_inline(t),
            block_inline(e)
        ),
    }
}

fn block_inline(c: &Com) -> String {
    match c {
        Com::Seq(_) => com_to_string(c),
        _ => format!("{{ {} }}", com_to_string(c)),
    }
}

fn write_com(out: &mut String, c: &Com, indent: usize) {
    let pad = "  ".repeat(indent);
    match c {
        Com::Seq(cs) => {
            let _ = writeln!(out, "{pad}{{");
            write_seq(out, cs, indent + 1);
            let _ = write!(out, "\n{pad}}}");
        }
        Com::If(b, t, e) => {
            let _ = writeln!(out, "{pad}if {} then {{", cond_to_string(b));
            write_block_body(out, t, indent + 1);
            let _ = writeln!(out, "\n{pad}}} else {{");
            write_block_body(out, e, indent + 1);
            let _ = write!(out, "\n{pad}}}");
        }
        other => {
            let _ = write!(out, "{pad}{}", com_to_string(other));
        }
    }
}

fn write_block_body(out: &mut String, c: &Com, indent: usize) {
    match c {
        Com::Seq(cs) => {
            // A nested sequence inside a block needs its own braces to
            // survive a round trip.
            write_com(out, &Com::Seq(cs.clone()), indent)
        }
        other => write_com(out, other, indent),
    }
}

fn write_seq(out: &mut String, cs: &[Com], indent: usize) {
    for (i, c) in cs.iter().enumerate() {
        write_com(out, c, indent);
        if i + 1 < cs.len() {
            out.push_str(";\n");
        }
    }
}

/// Multi-line rendering of a whole transaction.
pub fn print_ast(ast: &TransactionAst) -> String {
    let mut out = format!("{} ::= {{\n", ast.name);
    match &ast.body {
        Com::Seq(cs) => write_seq(&mut out, cs, 1),
        other => write_com(&mut out, other, 1),
    }
    let _ = write!(out, "\n}}({})\n", ast.params.join(", "));
    out
}
