use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Name of a database object. Cheap to clone.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectId(Arc<str>);

impl ObjectId {
    pub fn new(name: impl AsRef<str>) -> Self {
        ObjectId(Arc::from(name.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ObjectId {
    fn from(s: &str) -> Self {
        ObjectId::new(s)
    }
}

/// Integer arithmetic expression. `Read` inside a guard formula denotes the
/// current value of the object.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Const(i64),
    Param(String),
    Temp(String),
    Read(ObjectId),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
}

impl Expr {
    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(Expr::Neg(Box::new(b))))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn neg(a: Expr) -> Expr {
        Expr::Neg(Box::new(a))
    }

    pub fn read(obj: impl Into<ObjectId>) -> Expr {
        Expr::Read(obj.into())
    }

    pub fn temp(name: &str) -> Expr {
        Expr::Temp(name.to_string())
    }

    pub fn param(name: &str) -> Expr {
        Expr::Param(name.to_string())
    }

    /// Visit every node, parents before children.
    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Add(a, b) | Expr::Mul(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Neg(a) => a.visit(f),
            _ => {}
        }
    }

    /// Rebuild the expression bottom-up, letting `f` replace leaves.
    pub fn map_leaves(&self, f: &mut impl FnMut(&Expr) -> Option<Expr>) -> Expr {
        match self {
            Expr::Add(a, b) => Expr::add(a.map_leaves(f), b.map_leaves(f)),
            Expr::Mul(a, b) => Expr::mul(a.map_leaves(f), b.map_leaves(f)),
            Expr::Neg(a) => Expr::neg(a.map_leaves(f)),
            leaf => f(leaf).unwrap_or_else(|| leaf.clone()),
        }
    }

    pub fn objects(&self, out: &mut Vec<ObjectId>) {
        self.visit(&mut |e| {
            if let Expr::Read(o) = e {
                if !out.contains(o) {
                    out.push(o.clone());
                }
            }
        });
    }

    pub fn mentions_temp(&self, name: &str) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if let Expr::Temp(t) = e {
                found |= t == name;
            }
        });
        found
    }

    pub fn has_temps(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e, Expr::Temp(_)));
        found
    }

    pub fn has_params(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e, Expr::Param(_)));
        found
    }

    pub fn subst_temp(&self, name: &str, by: &Expr) -> Expr {
        self.map_leaves(&mut |e| match e {
            Expr::Temp(t) if t == name => Some(by.clone()),
            _ => None,
        })
    }

    pub fn subst_object(&self, obj: &ObjectId, by: &Expr) -> Expr {
        self.map_leaves(&mut |e| match e {
            Expr::Read(o) if o == obj => Some(by.clone()),
            _ => None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Lt,
    Eq,
    Le,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Eq => "=",
            CmpOp::Le => "<=",
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Eq => a == b,
            CmpOp::Le => a <= b,
        }
    }
}

/// Boolean expression of the language.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Cond {
    True,
    False,
    Cmp(CmpOp, Expr, Expr),
    And(Box<Cond>, Box<Cond>),
    Not(Box<Cond>),
}

impl Cond {
    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Cond {
        Cond::Cmp(op, a, b)
    }

    pub fn and(a: Cond, b: Cond) -> Cond {
        Cond::And(Box::new(a), Box::new(b))
    }

    pub fn not(a: Cond) -> Cond {
        Cond::Not(Box::new(a))
    }

    pub fn exprs(&self, f: &mut impl FnMut(&Expr)) {
        match self {
            Cond::True | Cond::False => {}
            Cond::Cmp(_, a, b) => {
                f(a);
                f(b);
            }
            Cond::And(a, b) => {
                a.exprs(f);
                b.exprs(f);
            }
            Cond::Not(a) => a.exprs(f),
        }
    }

    pub fn map_exprs(&self, f: &mut impl FnMut(&Expr) -> Expr) -> Cond {
        match self {
            Cond::True => Cond::True,
            Cond::False => Cond::False,
            Cond::Cmp(op, a, b) => Cond::Cmp(*op, f(a), f(b)),
            Cond::And(a, b) => Cond::and(a.map_exprs(f), b.map_exprs(f)),
            Cond::Not(a) => Cond::not(a.map_exprs(f)),
        }
    }
}

/// Array index in the extended language.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Index {
    Lit(i64),
    Temp(String),
    Param(String),
}

impl Index {
    pub fn as_expr(&self) -> Expr {
        match self {
            Index::Lit(n) => Expr::Const(*n),
            Index::Temp(t) => Expr::Temp(t.clone()),
            Index::Param(p) => Expr::Param(p.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Com {
    Skip,
    Assign(String, Expr),
    Seq(Vec<Com>),
    If(Cond, Box<Com>, Box<Com>),
    Write(ObjectId, Expr),
    Print(Expr),
    ArrayRead {
        temp: String,
        array: String,
        index: Index,
    },
    ArrayWrite {
        array: String,
        index: Index,
        value: Expr,
    },
}

impl Com {
    pub fn seq(cs: Vec<Com>) -> Com {
        match cs.len() {
            0 => Com::Skip,
            1 => cs.into_iter().next().unwrap(),
            _ => Com::Seq(cs),
        }
    }

    pub fn if_(b: Cond, t: Com, e: Com) -> Com {
        Com::If(b, Box::new(t), Box::new(e))
    }

    /// Visit every command node, parents first.
    pub fn visit(&self, f: &mut impl FnMut(&Com)) {
        f(self);
        match self {
            Com::Seq(cs) => cs.iter().for_each(|c| c.visit(f)),
            Com::If(_, t, e) => {
                t.visit(f);
                e.visit(f);
            }
            _ => {}
        }
    }

    pub fn has_arrays(&self) -> bool {
        let mut found = false;
        self.visit(&mut |c| {
            found |= matches!(c, Com::ArrayRead { .. } | Com::ArrayWrite { .. })
        });
        found
    }
}

/// A parsed transaction `{ body }(params)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TransactionAst {
    pub name: String,
    pub params: Vec<String>,
    pub body: Com,
}

impl TransactionAst {
    pub fn new(name: &str, params: &[&str], body: Com) -> Self {
        TransactionAst {
            name: name.to_string(),
            params: params.iter().map(|p| p.to_string()).collect(),
            body,
        }
    }

    /// Replace every parameter by a constant. The result takes no parameters.
    pub fn instantiate(&self, values: &[i64]) -> Result<TransactionAst, super::EvalError> {
        if values.len() != self.params.len() {
            return Err(super::EvalError::ArityMismatch {
                expected: self.params.len(),
                got: values.len(),
            });
        }
        let env: BTreeMap<&str, i64> = self
            .params
            .iter()
            .map(|p| p.as_str())
            .zip(values.iter().copied())
            .collect();
        let mut fe = |e: &Expr| {
            e.map_leaves(&mut |leaf| match leaf {
                Expr::Param(p) => env.get(p.as_str()).map(|v| Expr::Const(*v)),
                _ => None,
            })
        };
        let fi = |i: &Index| match i {
            Index::Param(p) => Index::Lit(env[p.as_str()]),
            other => other.clone(),
        };
        fn go(
            c: &Com,
            fe: &mut impl FnMut(&Expr) -> Expr,
            fi: &impl Fn(&Index) -> Index,
        ) -> Com {
            match c {
                Com::Skip => Com::Skip,
                Com::Assign(t, e) => Com::Assign(t.clone(), fe(e)),
                Com::Seq(cs) => Com::Seq(cs.iter().map(|c| go(c, fe, fi)).collect()),
                Com::If(b, t, e) => {
                    let b = b.map_exprs(fe);
                    let t = go(t, fe, fi);
                    let e = go(e, fe, fi);
                    Com::if_(b, t, e)
                }
                Com::Write(o, e) => Com::Write(o.clone(), fe(e)),
                Com::Print(e) => Com::Print(fe(e)),
                Com::ArrayRead { temp, array, index } => Com::ArrayRead {
                    temp: temp.clone(),
                    array: array.clone(),
                    index: fi(index),
                },
                Com::ArrayWrite {
                    array,
                    index,
                    value,
                } => Com::ArrayWrite {
                    array: array.clone(),
                    index: fi(index),
                    value: fe(value),
                },
            }
        }
        Ok(TransactionAst {
            name: self.name.clone(),
            params: Vec::new(),
            body: go(&self.body, &mut fe, &fi),
        })
    }
}

/// Database state. Absent objects read as 0; storing 0 removes the entry so
/// that equality ignores explicit zeros.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Database {
    values: BTreeMap<ObjectId, i64>,
}

impl Database {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, obj: &ObjectId) -> i64 {
        self.values.get(obj).copied().unwrap_or(0)
    }

    pub fn set(&mut self, obj: ObjectId, value: i64) {
        if value == 0 {
            self.values.remove(&obj);
        } else {
            self.values.insert(obj, value);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ObjectId, i64)> {
        self.values.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl<S: AsRef<str>> FromIterator<(S, i64)> for Database {
    fn from_iter<I: IntoIterator<Item = (S, i64)>>(iter: I) -> Self {
        let mut db = Database::new();
        for (k, v) in iter {
            db.set(ObjectId::new(k), v);
        }
        db
    }
}

impl fmt::Display for Database {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}: {v}")?;
        }
        f.write_str("}")
    }
}
