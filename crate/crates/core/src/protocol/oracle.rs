use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::lang::{eval_in_place, Database, ObjectId};

use super::system::CompiledSystem;
use super::trace::SimTrace;
use super::SimError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleOutput {
    pub db: Database,
    pub logs: HashMap<u64, Vec<i64>>,
}

/// Replay every committed request serially, in commit order, from `initial`
/// using the source transactions.
pub fn serial_oracle(
    sys: &CompiledSystem,
    trace: &SimTrace,
    initial: &Database,
) -> Result<OracleOutput, SimError> {
    let mut commits: Vec<_> = trace.commits().collect();
    if commits.iter().any(|r| r.commit_seq.is_none()) {
        return Err(SimError::IncompleteRound);
    }
    commits.sort_by_key(|r| r.commit_seq);
    let mut db = initial.clone();
    let mut logs = HashMap::new();
    for r in commits {
        let mut log = Vec::new();
        for (txn, params) in &r.calls {
            let id = sys
                .instance_id(*txn, r.site, params)
                .ok_or_else(|| SimError::Config(format!("unknown call {txn}{params:?}")))?;
            log.extend(eval_in_place(&sys.instances[id].original, &[], &mut db)?);
        }
        logs.insert(r.txn_id, log);
    }
    Ok(OracleOutput { db, logs })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mismatch {
    Database { expected: Database, actual: Database },
    Log { txn_id: u64, expected: Vec<i64>, actual: Vec<i64> },
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mismatch::Database { expected, actual } => {
                let keys: BTreeSet<&ObjectId> = expected.iter().chain(actual.iter()).map(|(x, _)| x).collect();
                let diff: Vec<String> = keys
                    .into_iter()
                    .filter(|x| expected.get(x) != actual.get(x))
                    .take(5)
                    .map(|x| format!("{x}: serial {} vs protocol {}", expected.get(x), actual.get(x)))
                    .collect();
                write!(f, "final database differs ({})", diff.join("; "))
            }
            Mismatch::Log {
                txn_id,
                expected,
                actual,
            } => write!(f, "txn {txn_id} logged {actual:?}, serial run logged {expected:?}"),
        }
    }
}

/// Compare a run's final logical state and logs with its serial replay.
pub fn compare(
    oracle: &OracleOutput,
    trace: &SimTrace,
    final_db: &Database,
) -> Result<(), Mismatch> {
    if &oracle.db != final_db {
        return Err(Mismatch::Database {
            expected: oracle.db.clone(),
            actual: final_db.clone(),
        });
    }
    for r in trace.commits() {
        let expected = oracle.logs.get(&r.txn_id).cloned().unwrap_or_default();
        if expected != r.log {
            return Err(Mismatch::Log {
                txn_id: r.txn_id,
                expected,
                actual: r.log.clone(),
            });
        }
    }
    Ok(())
}
