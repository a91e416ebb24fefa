//! Concrete execution: the term interpreter, Lift semantics, differential
//! fuzzing, the brute-force reference search and pipeline emission.

pub mod diff;
pub mod emit;
pub mod gen;
pub mod interp;
pub mod oracle;

pub use diff::{differential_check, DiffConfig, DiffReport};
pub use emit::emit_rewritten;
pub use oracle::{brute_force_optimal, OracleCaps, OracleError, OracleSolution};

use crate::dsl::PipelineTask;
use crate::term::{Term, Var};
use crate::value::Value;
use interp::{Env, Interp};

/// A fold's outcome: the accumulator, or ⊥ for the empty input and for a
/// rejected result. ⊥ fails every predicate.
#[derive(Clone, Debug, PartialEq)]
pub enum LiftResult {
    Defined(Value),
    Bottom,
}

/// Left fold of the step from `I` over the rows the program's own
/// pre-filter keeps; no rows gives ⊥.
pub fn eval_fold(task: &PipelineTask, rows: &[Value]) -> LiftResult {
    let rows = match &task.pre {
        Some(pre) => filter_rows(task, std::slice::from_ref(pre), rows),
        None => rows.to_vec(),
    };
    if rows.is_empty() {
        return LiftResult::Bottom;
    }
    let ctx = task.ctx();
    let it = Interp::new(Some(&task.body), &ctx);
    let mut a = task.init.clone();
    for r in rows {
        a = it.eval(&task.body, &Env::new().with(Var::Acc, a).with(Var::Row, r.clone()));
    }
    LiftResult::Defined(a)
}

/// `a` if the conjunction holds on it, ⊥ otherwise.
pub fn lift_eval(task: &PipelineTask, pred: &[Term], r: &LiftResult) -> LiftResult {
    match r {
        LiftResult::Bottom => LiftResult::Bottom,
        LiftResult::Defined(a) => {
            let ctx = task.ctx();
            let it = Interp::new(None, &ctx);
            let env = Env::new().with(Var::Acc, a.clone());
            if pred.iter().all(|p| it.eval_bool(p, &env)) {
                r.clone()
            } else {
                LiftResult::Bottom
            }
        }
    }
}

/// Rows satisfying every atom of `q`.
pub fn filter_rows(task: &PipelineTask, q: &[Term], rows: &[Value]) -> Vec<Value> {
    let ctx = task.ctx();
    let it = Interp::new(None, &ctx);
    rows.iter()
        .filter(|r| {
            let env = Env::new().with(Var::Row, (*r).clone());
            q.iter().all(|u| it.eval_bool(u, &env))
        })
        .cloned()
        .collect()
}

/// Both sides of the pushdown equation on one dataframe.
pub fn both_sides(task: &PipelineTask, q: &[Term], res: &[Term], rows: &[Value]) -> (LiftResult, LiftResult) {
    let original = lift_eval(task, &task.post_clauses, &eval_fold(task, rows));
    let optimized = lift_eval(task, res, &eval_fold(task, &filter_rows(task, q, rows)));
    (original, optimized)
}
