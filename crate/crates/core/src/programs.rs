//! Small reference transactions used by tests, examples and the CLI.

use crate::lang::{parse, TransactionAst};

pub const T1: &str = "T1 ::= {
  xh := read(x);
  yh := read(y);
  if (xh + yh < 10) then
    write(x = xh + 1)
  else
    write(x = xh - 1)
}()";

pub const T2: &str = "T2 ::= {
  xh := read(x);
  yh := read(y);
  if (xh + yh < 20) then
    write(y = yh + 1)
  else
    write(y = yh - 1)
}()";

pub const T3: &str = "T3 ::= {
  xh := read(x);
  if (xh > 0) then
    write(y = 1)
  else
    write(y = -1)
}()";

/// Writes whether `x` exceeds a threshold that depends on `y`.
pub const T4: &str = "T4 ::= {
  xh := read(x);
  yh := read(y);
  if (yh = 1) then {
    if (xh > 10) then write(z = 1) else write(z = 0)
  } else {
    if (xh > 100) then write(z = 1) else write(z = 0)
  }
}()";

/// Decrement `x`, resetting it to 10 once it reaches 0.
pub const COUNTDOWN: &str = "countdown ::= {
  xh := read(x);
  if (0 < xh) then
    write(x = xh - 1)
  else
    write(x = 10)
}()";

pub const SKIP: &str = "{ skip }()";

pub fn t1() -> TransactionAst {
    parse(T1).expect("T1 parses")
}

pub fn t2() -> TransactionAst {
    parse(T2).expect("T2 parses")
}

pub fn t3() -> TransactionAst {
    parse(T3).expect("T3 parses")
}

pub fn t4() -> TransactionAst {
    parse(T4).expect("T4 parses")
}

pub fn countdown() -> TransactionAst {
    parse(COUNTDOWN).expect("countdown parses")
}

pub fn skip() -> TransactionAst {
    parse(SKIP).expect("skip parses")
}
