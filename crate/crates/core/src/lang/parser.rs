use std::collections::BTreeSet;

use super::ast::{CmpOp, Com, Cond, Expr, Index, ObjectId, TransactionAst};
use super::LangError;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: &[&str] = &[
    "::=", ":=", "<=", ">=", "!=", "&&", "||", "{", "}", "(", ")", "[", "]", ";", ",", "=", "<",
    ">", "+", "-", "*", "!",
];

fn lex(src: &str) -> Result<Vec<Token>, LangError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') || c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (sl, sc) = (line, col);
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let n = text.parse::<i64>().map_err(|_| LangError::Syntax {
                line: sl,
                col: sc,
                msg: format!("integer literal {text} out of range"),
            })?;
            col += i - start;
            out.push(Token {
                tok: Tok::Int(n),
                line: sl,
                col: sc,
            });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: sl,
                col: sc,
            });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                i += s.len();
                col += s.len();
                out.push(Token {
                    tok: Tok::Sym(s),
                    line: sl,
                    col: sc,
                });
            }
            None => {
                return Err(LangError::Syntax {
                    line: sl,
                    col: sc,
                    msg: format!("unexpected character '{c}'"),
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

const KEYWORDS: &[&str] = &[
    "skip", "if", "then", "else", "read", "write", "print", "true", "false", "and", "or", "not",
];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    params: Vec<String>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, LangError> {
        let t = &self.toks[self.pos];
        Err(LangError::Syntax {
            line: t.line,
            col: t.col,
            msg: msg.into(),
        })
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Int(n) => format!("'{n}'"),
            Tok::Sym(s) => format!("'{s}'"),
            Tok::Eof => "end of input".to_string(),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == kw)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), LangError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected '{s}', found {}", self.describe()))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), LangError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.err(format!("expected '{kw}', found {}", self.describe()))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, LangError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.pos += 1;
                Ok(s)
            }
            _ => self.err(format!("expected {what}, found {}", self.describe())),
        }
    }

    fn transaction(&mut self, default_name: &str) -> Result<TransactionAst, LangError> {
        let mut name = default_name.to_string();
        if matches!(self.peek(), Tok::Ident(_)) && self.peek_at(1) == &Tok::Sym("::=") {
            name = self.ident("transaction name")?;
            self.pos += 1;
        }
        // Parameters trail the body; find them first so the body can tell
        // parameters from temporaries.
        let body_start = self.pos;
        self.expect_sym("{")?;
        let mut depth = 1;
        while depth > 0 {
            match self.peek() {
                Tok::Sym("{") => depth += 1,
                Tok::Sym("}") => depth -= 1,
                Tok::Eof => return self.err("unterminated transaction body"),
                _ => {}
            }
            self.pos += 1;
        }
        self.expect_sym("(")?;
        let mut params = Vec::new();
        if !self.is_sym(")") {
            loop {
                let p = self.ident("parameter name")?;
                if params.contains(&p) {
                    return self.err(format!("duplicate parameter '{p}'"));
                }
                params.push(p);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        if self.peek() != &Tok::Eof {
            return self.err(format!("unexpected {} after transaction", self.describe()));
        }
        let end = self.pos;
        self.params = params.clone();
        self.pos = body_start + 1;
        let body = self.com_seq()?;
        self.expect_sym("}")?;
        self.pos = end;
        Ok(TransactionAst { name, params, body })
    }

    fn com_seq(&mut self) -> Result<Com, LangError> {
        let mut cs = Vec::new();
        while !self.is_sym("}") && self.peek() != &Tok::Eof {
            cs.push(self.com()?);
            if !self.eat_sym(";") {
                break;
            }
        }
        Ok(Com::seq(cs))
    }

    fn block(&mut self) -> Result<Com, LangError> {
        if self.eat_sym("{") {
            let c = self.com_seq()?;
            self.expect_sym("}")?;
            Ok(c)
        } else {
            self.com()
        }
    }

    fn com(&mut self) -> Result<Com, LangError> {
        if self.eat_kw("skip") {
            return Ok(Com::Skip);
        }
        if self.is_sym("{") {
            return self.block();
        }
        if self.eat_kw("if") {
            let b = self.cond()?;
            self.expect_kw("then")?;
            let t = self.block()?;
            let e = if self.eat_kw("else") {
                self.block()?
            } else {
                Com::Skip
            };
            return Ok(Com::if_(b, t, e));
        }
        if self.eat_kw("write") {
            self.expect_sym("(")?;
            let name = self.ident("object name")?;
            let index = self.opt_index()?;
            self.expect_sym("=")?;
            let value = self.expr()?;
            self.expect_sym(")")?;
            return Ok(match index {
                Some(index) => Com::ArrayWrite {
                    array: name,
                    index,
                    value,
                },
                None => Com::Write(ObjectId::new(name), value),
            });
        }
        if self.eat_kw("print") {
            self.expect_sym("(")?;
            let e = self.expr()?;
            self.expect_sym(")")?;
            return Ok(Com::Print(e));
        }
        if let Tok::Ident(s) = self.peek() {
            if matches!(s.as_str(), "while" | "for" | "loop" | "do") {
                return self.err("loops are not part of the language");
            }
        }
        if matches!(self.peek(), Tok::Ident(_)) && self.peek_at(1) == &Tok::Sym(":=") {
            let t = self.ident("temporary")?;
            if self.params.contains(&t) {
                return self.err(format!("cannot assign to parameter '{t}'"));
            }
            self.pos += 1;
            // `t := read(a[i])` is the only place an array read may appear.
            if self.is_kw("read")
                && self.peek_at(1) == &Tok::Sym("(")
                && self.peek_at(3) == &Tok::Sym("[")
            {
                self.pos += 2;
                let array = self.ident("array name")?;
                let index = self.opt_index()?.expect("bracket checked");
                self.expect_sym(")")?;
                return Ok(Com::ArrayRead {
                    temp: t,
                    array,
                    index,
                });
            }
            let e = self.expr()?;
            return Ok(Com::Assign(t, e));
        }
        self.err(format!("expected a command, found {}", self.describe()))
    }

    fn opt_index(&mut self) -> Result<Option<Index>, LangError> {
        if !self.eat_sym("[") {
            return Ok(None);
        }
        let idx = match self.peek().clone() {
            Tok::Int(n) => {
                self.pos += 1;
                Index::Lit(n)
            }
            Tok::Ident(_) => {
                let name = self.ident("index")?;
                if self.params.contains(&name) {
                    Index::Param(name)
                } else {
                    Index::Temp(name)
                }
            }
            _ => return self.err("array index must be a literal, temporary or parameter"),
        };
        self.expect_sym("]")?;
        Ok(Some(idx))
    }

    fn cond(&mut self) -> Result<Cond, LangError> {
        let mut c = self.conj()?;
        while self.eat_sym("||") || self.eat_kw("or") {
            let r = self.conj()?;
            c = Cond::not(Cond::and(Cond::not(c), Cond::not(r)));
        }
        Ok(c)
    }

    fn conj(&mut self) -> Result<Cond, LangError> {
        let mut c = self.cnot()?;
        while self.eat_sym("&&") || self.eat_kw("and") {
            let r = self.cnot()?;
            c = Cond::and(c, r);
        }
        Ok(c)
    }

    fn cnot(&mut self) -> Result<Cond, LangError> {
        if self.eat_sym("!") || self.eat_kw("not") {
            return Ok(Cond::not(self.cnot()?));
        }
        self.catom()
    }

    fn catom(&mut self) -> Result<Cond, LangError> {
        if self.eat_kw("true") {
            return Ok(Cond::True);
        }
        if self.eat_kw("false") {
            return Ok(Cond::False);
        }
        if self.is_sym("(") {
            let save = self.pos;
            self.pos += 1;
            if let Ok(c) = self.cond() {
                if self.eat_sym(")") && !self.at_cmp_or_arith() {
                    return Ok(c);
                }
            }
            self.pos = save;
        }
        let a = self.expr()?;
        let (op, flip, negate) = match self.peek() {
            Tok::Sym("<") => (CmpOp::Lt, false, false),
            Tok::Sym("<=") => (CmpOp::Le, false, false),
            Tok::Sym("=") => (CmpOp::Eq, false, false),
            Tok::Sym(">") => (CmpOp::Lt, true, false),
            Tok::Sym(">=") => (CmpOp::Le, true, false),
            Tok::Sym("!=") => (CmpOp::Eq, false, true),
            _ => return self.err(format!("expected a comparison, found {}", self.describe())),
        };
        self.pos += 1;
        let b = self.expr()?;
        let c = if flip {
            Cond::cmp(op, b, a)
        } else {
            Cond::cmp(op, a, b)
        };
        Ok(if negate { Cond::not(c) } else { c })
    }

    fn at_cmp_or_arith(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Sym("<" | "<=" | "=" | ">" | ">=" | "!=" | "+" | "-" | "*")
        )
    }

    fn expr(&mut self) -> Result<Expr, LangError> {
        let mut e = self.term()?;
        loop {
            if self.eat_sym("+") {
                e = Expr::add(e, self.term()?);
            } else if self.eat_sym("-") {
                e = Expr::sub(e, self.term()?);
            } else {
                return Ok(e);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, LangError> {
        let mut e = self.unary()?;
        while self.eat_sym("*") {
            e = Expr::mul(e, self.unary()?);
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<Expr, LangError> {
        if self.eat_sym("-") {
            return Ok(Expr::neg(self.unary()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, LangError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.pos += 1;
                Ok(Expr::Const(n))
            }
            Tok::Sym("(") => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(s) if s == "read" => {
                self.pos += 1;
                self.expect_sym("(")?;
                let o = self.ident("object name")?;
                if self.is_sym("[") {
                    return self.err("array reads must stand alone as 't := read(a[i])'");
                }
                self.expect_sym(")")?;
                Ok(Expr::Read(ObjectId::new(o)))
            }
            Tok::Ident(_) => {
                let name = self.ident("expression")?;
                if self.params.contains(&name) {
                    Ok(Expr::Param(name))
                } else {
                    Ok(Expr::Temp(name))
                }
            }
            _ => self.err(format!("expected an expression, found {}", self.describe())),
        }
    }
}

/// Parse one transaction. `default_name` is used when the source has no
/// `NAME ::=` prefix.
pub fn parse_named(src: &str, default_name: &str) -> Result<TransactionAst, LangError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        params: Vec::new(),
    };
    let ast = p.transaction(default_name)?;
    check_temps(&ast)?;
    Ok(ast)
}

pub fn parse(src: &str) -> Result<TransactionAst, LangError> {
    parse_named(src, "T")
}

/// Every temporary must be assigned on every path before it is read.
fn check_temps(ast: &TransactionAst) -> Result<(), LangError> {
    let mut all = BTreeSet::new();
    ast.body.visit(&mut |c| match c {
        Com::Assign(t, _) | Com::ArrayRead { temp: t, .. } => {
            all.insert(t.clone());
        }
        _ => {}
    });
    let check_expr = |e: &Expr, env: &BTreeSet<String>| -> Result<(), LangError> {
        let mut bad = None;
        e.visit(&mut |x| {
            if let Expr::Temp(t) = x {
                if !env.contains(t) && bad.is_none() {
                    bad = Some(t.clone());
                }
            }
        });
        match bad {
            None => Ok(()),
            Some(t) if all.contains(&t) => Err(LangError::UnboundTemp(t)),
            Some(t) => Err(LangError::Undeclared(t)),
        }
    };
    fn go(
        c: &Com,
        env: &mut BTreeSet<String>,
        ck: &impl Fn(&Expr, &BTreeSet<String>) -> Result<(), LangError>,
    ) -> Result<(), LangError> {
        match c {
            Com::Skip => Ok(()),
            Com::Assign(t, e) => {
                ck(e, env)?;
                env.insert(t.clone());
                Ok(())
            }
            Com::Seq(cs) => cs.iter().try_for_each(|c| go(c, env, ck)),
            Com::If(b, t, e) => {
                let mut r = Ok(());
                b.exprs(&mut |x| {
                    if r.is_ok() {
                        r = ck(x, env);
                    }
                });
                r?;
                let mut te = env.clone();
                let mut ee = env.clone();
                go(t, &mut te, ck)?;
                go(e, &mut ee, ck)?;
                *env = te.intersection(&ee).cloned().collect();
                Ok(())
            }
            Com::Write(_, e) | Com::Print(e) => ck(e, env),
            Com::ArrayRead { temp, index, .. } => {
                ck(&index.as_expr(), env)?;
                env.insert(temp.clone());
                Ok(())
            }
            Com::ArrayWrite { index, value, .. } => {
                ck(&index.as_expr(), env)?;
                ck(value, env)
            }
        }
    }
    go(&ast.body, &mut BTreeSet::new(), &check_expr)
}
